"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 simulation error,
3 acceptance failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import acceptance, config, dcdc, lcadc, scenarios
from .io import emit_csv, format_value
from .quantities import NonFiniteResultError
from .uwb import AliasingError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SIMULATION = 2
EXIT_ACCEPTANCE = 3
EXIT_USAGE = 64

OUTPUT_ENV = "WSNKIT_OUTPUT_DIR"

SIMULATION_ERRORS = (dcdc.SimulationError, AliasingError, NonFiniteResultError,
                     lcadc.PdmOverflowError, ArithmeticError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", "-c", type=Path, default=argparse.SUPPRESS,
                        help="YAML scenario file (merged over the defaults)")
    common.add_argument("--output-dir", "-o", type=Path, default=argparse.SUPPRESS,
                        help="directory for CSV outputs")
    p = _Parser(
        prog="wsnkit",
        description="Wireless sensor node energy/data chain simulations.",
        epilog="Config keys can be overridden with dotted flags, e.g. --dcdc.L 100e-6. "
               f"The output directory defaults to ${OUTPUT_ENV} or the config's output_dir.",
    )
    p.add_argument("--config", "-c", type=Path, help="YAML scenario file (merged over the defaults)")
    p.add_argument("--output-dir", "-o", type=Path, help="directory for CSV outputs")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "harvest-sweep": "rectifier PCE and output voltage over input power and load",
        "dcdc-eff": "converter efficiency at the 20 reference points, plus cycle ledgers",
        "mppt-run": "closed-loop MPPT trajectory",
        "lna-sweep": "noise figure over an interface-impedance grid",
        "uwb-pulse": "UWB pulse, PSD and mask verdict",
        "link-psd": "received PSD for each distance/height pair",
        "lcadc-encode": "level-crossing events, PDM pulses and backscatter envelope",
        "selftest": "run the acceptance checks",
    }
    for name, h in helps.items():
        sp = sub.add_parser(name, help=h, description=h, parents=[common])
        if name == "uwb-pulse":
            sp.add_argument("--mask", type=Path, help="mask CSV (frequency_hz,limit_dbm)")
    return p


def split_overrides(argv):
    """Separate ``--a.b value`` / ``--a.b=value`` pairs from ordinary arguments."""
    rest, overrides = [], []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a.startswith("--") and "." in a.split("=", 1)[0]:
            key = a[2:]
            if "=" in key:
                key, val = key.split("=", 1)
            else:
                if i + 1 >= len(argv):
                    raise UsageError(f"override {a} needs a value")
                val = argv[i + 1]
                i += 1
            overrides.append((key, val))
        else:
            rest.append(a)
        i += 1
    return rest, overrides


def _print_summary(summary: dict, out):
    for k, v in summary.items():
        print(f"{k}: {format_value(v) if isinstance(v, float) else v}", file=out)


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        rest, overrides = split_overrides(argv)
        args = parser.parse_args(rest)
        if args.command is None:
            raise UsageError("a command is required")
    except UsageError as exc:
        parser.print_usage(err)
        print(f"wsnkit: error: {exc}", file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK

    try:
        if getattr(args, "mask", None) is not None:
            overrides.append(("uwb.mask", str(args.mask)))
        cfg = config.load_config(args.config, overrides)
        sc = config.validate(cfg)
    except config.ConfigError as exc:
        print(f"wsnkit: config error: {exc}", file=err)
        return EXIT_CONFIG

    outdir = args.output_dir or os.environ.get(OUTPUT_ENV) or cfg["output_dir"]
    outdir = Path(outdir)

    if args.command == "selftest":
        results = acceptance.run_all(int(cfg["seed"]), sc)
        for r in results:
            print(r.line(), file=out)
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} criteria passed", file=out)
        return EXIT_ACCEPTANCE if failed else EXIT_OK

    try:
        res = scenarios.SCENARIOS[args.command](sc)
    except SIMULATION_ERRORS as exc:
        print(f"wsnkit: simulation error: {exc}", file=err)
        return EXIT_SIMULATION
    try:
        for t in res.tables:
            path = emit_csv(t.header, t.rows, outdir / t.name)
            print(f"wrote {path}", file=out)
    except OSError as exc:
        print(f"wsnkit: {exc}", file=err)
        return EXIT_SIMULATION
    _print_summary(res.summary, out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
