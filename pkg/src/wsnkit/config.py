"""Scenario configuration: YAML loading, dotted-path overrides and
validation into model objects."""

from __future__ import annotations

import copy
import dataclasses
import re
from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path

import yaml

from . import dcdc, interface, lcadc, link, lna, mppt, rectifier, uwb


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-6`` and ``3.3e6`` as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def _load(text):
    return yaml.load(text, Loader=_Loader)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def default_config() -> dict:
    text = (files("wsnkit.data") / "default.yaml").read_text()
    return _load(text)


def _merge(base: dict, new: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in new.items():
        path = f"{prefix}{k}"
        if k not in out:
            raise ConfigError(path, "unknown key")
        if isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v, path + ".")
        else:
            out[k] = v
    return out


def set_path(cfg: dict, dotted: str, raw: str) -> None:
    """Set ``cfg[a][b]... = yaml(raw)`` for ``dotted = 'a.b...'``."""
    keys = dotted.split(".")
    node = cfg
    for i, k in enumerate(keys[:-1]):
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(".".join(keys[: i + 1]), "unknown key")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(dotted, "unknown key")
    try:
        node[keys[-1]] = _load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(dotted, f"cannot parse value {raw!r}: {exc}") from None


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the file at ``path``, then ``(dotted, value)`` overrides."""
    cfg = default_config()
    if path is not None:
        try:
            user = _load(Path(path).read_text()) or {}
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"invalid YAML: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError(str(path), "top level must be a mapping")
        cfg = _merge(cfg, user)
    for dotted, raw in overrides:
        set_path(cfg, dotted, raw)
    return cfg


def _numeric_fields(factory) -> set:
    if not dataclasses.is_dataclass(factory):
        return set()
    return {f.name for f in dataclasses.fields(factory)
            if isinstance(f.default, (int, float)) and not isinstance(f.default, bool)}


def _build(path: str, factory, section: dict, skip=()):
    if not isinstance(section, dict):
        raise ConfigError(path, "expected a mapping")
    kw = {k: v for k, v in section.items() if k not in skip}
    numeric = _numeric_fields(factory)
    for k, v in kw.items():
        if isinstance(v, bool) or not isinstance(v, (int, float, str, dict, list, type(None))):
            raise ConfigError(f"{path}.{k}", f"unsupported value {v!r}")
        if k in numeric and not isinstance(v, (int, float)):
            raise ConfigError(f"{path}.{k}", f"expected a number, got {v!r}")
    try:
        return factory(**kw)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from None
    except ValueError as exc:
        msg = str(exc)
        head = msg.split()[0] if msg else ""
        raise ConfigError(f"{path}.{head}" if head in kw else path, msg) from None


def _num(path, v, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(path, "must be positive")
    return float(v)


def _list(path, v, positive=False):
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a non-empty list")
    return [_num(f"{path}[{i}]", x, positive) for i, x in enumerate(v)]


@dataclass
class Scenario:
    raw: dict
    port: interface.AntennaPort
    boost: interface.BoostNetwork
    rectifier: rectifier.RectifierModel
    converter: dcdc.ConverterConfig
    operating_points: dict
    estimator: mppt.EstimatorParams
    lna: lna.LnaParams
    network: uwb.LputNetwork
    stimulus: uwb.Stimulus
    mask: uwb.MaskSpec
    level: lcadc.LevelCrossingConfig
    pdm: lcadc.PdmConfig


def validate(cfg: dict) -> Scenario:
    """Build every model object; the first failure raises :class:`ConfigError`."""
    for sec in ("interface", "rectifier", "dcdc", "mppt", "lna", "uwb", "link", "lcadc"):
        if not isinstance(cfg.get(sec), dict):
            raise ConfigError(sec, "missing section")
    _num("seed", cfg.get("seed"))

    itf = cfg["interface"]
    _num("interface.validity_ratio", itf["validity_ratio"], positive=True)
    port = _build("interface.antenna", interface.AntennaPort, itf["antenna"])
    boost = _build("interface.boost", interface.BoostNetwork, itf["boost"])

    rc = cfg["rectifier"]
    surf = _build("rectifier.surface", rectifier.PceSurface, rc["surface"])
    rect = _build("rectifier", lambda **kw: rectifier.RectifierModel(pce_surface=surf, **kw), rc,
                  skip=("surface", "sweep"))
    _list("rectifier.sweep.P_in", rc["sweep"]["P_in"], positive=True)
    _list("rectifier.sweep.R_L", rc["sweep"]["R_L"], positive=True)

    dc = dict(cfg["dcdc"])
    ops_raw = dc.pop("operating_points")
    conv = _build("dcdc", dcdc.ConverterConfig, dc)
    ops = {}
    for i, op in enumerate(ops_raw or []):
        p = f"dcdc.operating_points[{i}]"
        if not isinstance(op, dict) or set(op) != {"P_in", "f_s", "mode"}:
            raise ConfigError(p, "expected keys P_in, f_s, mode")
        try:
            mode = dcdc.Mode(op["mode"])
        except ValueError:
            raise ConfigError(p + ".mode", f"unknown mode {op['mode']!r}") from None
        ops[_num(p + ".P_in", op["P_in"], True)] = (_num(p + ".f_s", op["f_s"], True), mode)
    lo, hi = conv.r_on[dcdc.Mode.LOW], conv.r_on[dcdc.Mode.HIGH]
    for s in ("S1", "S2", "S3"):
        if hi[s] > lo[s]:
            raise ConfigError(f"dcdc.r_on.high.{s}", "high-power mode must not exceed low-power on-resistance")
    if conv.drive_energy[dcdc.Mode.HIGH] < conv.drive_energy[dcdc.Mode.LOW]:
        raise ConfigError("dcdc.drive_energy.high", "high-power mode must not use less drive energy")

    mp = cfg["mppt"]
    est = _build("mppt", mppt.EstimatorParams, {k: mp[k] for k in ("K", "r", "tail_gain")})
    if mp["plant"] not in ("harvester", "profile"):
        raise ConfigError("mppt.plant", "must be 'harvester' or 'profile'")
    cmin, cmax = int(mp["code_min"]), int(mp["code_max"])
    if not 1 <= cmin < cmax:
        raise ConfigError("mppt.code_max", "need 1 <= code_min < code_max")
    if not cmin <= int(mp["initial_code"]) <= cmax:
        raise ConfigError("mppt.initial_code", "outside the code range")
    for k in ("P_rf", "T_ON", "V_out", "epochs", "profile_width"):
        _num(f"mppt.{k}", mp[k], positive=True)

    ln = cfg["lna"]
    lp = _build("lna", lna.LnaParams, {k: ln[k] for k in ("g_m", "R_g", "R_L", "gamma", "delta")})
    _list("lna.sweep.R_A", ln["sweep"]["R_A"], positive=True)
    _list("lna.sweep.X_A", ln["sweep"]["X_A"], positive=True)
    for k in ("frequency", "L_deg_ceiling"):
        _num(f"lna.{k}", ln[k], positive=True)

    u = cfg["uwb"]
    net = _build("uwb.network", uwb.LputNetwork, u["network"])
    stim = _build("uwb.stimulus", uwb.Stimulus, u["stimulus"])
    for k in ("prf", "sample_rate", "ref_bw", "power"):
        _num(f"uwb.{k}", u[k], positive=True)
    band = _list("uwb.band", u["band"], positive=True)
    if len(band) != 2 or band[0] >= band[1]:
        raise ConfigError("uwb.band", "expected [f_low, f_high] with f_low < f_high")
    try:
        mask = uwb.default_mask() if u["mask"] is None else uwb.MaskSpec.from_csv(u["mask"])
    except (OSError, ValueError, StopIteration) as exc:
        raise ConfigError("uwb.mask", f"cannot load mask: {exc}") from None

    lk = cfg["link"]
    for d in _list("link.distances", lk["distances"], positive=True):
        for h in _list("link.heights", lk["heights"], positive=True):
            _build("link", link.LinkGeometry, {"d": d, "h": h, "gamma": lk["gamma"]})

    lc = cfg["lcadc"]
    level = _build("lcadc.level", lcadc.LevelCrossingConfig, lc["level"])
    pdm = _build("lcadc.pdm", lcadc.PdmConfig, lc["pdm"])
    _num("lcadc.sample_rate", lc["sample_rate"], positive=True)
    if lc["sample_rate"] < 8 * pdm.carrier:
        raise ConfigError("lcadc.sample_rate", "must be at least 8x the carrier")
    for k in ("frequency", "duration", "sample_rate"):
        _num(f"lcadc.input.{k}", lc["input"][k], positive=True)

    return Scenario(cfg, port, boost, rect, conv, ops, est, lp, net, stim, mask, level, pdm)
