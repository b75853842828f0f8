"""Acceptance checks, shared by the test suite and ``wsnkit selftest``."""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dcdc, interface, lcadc, link, lna, mppt, rectifier, uwb
from .io import emit_csv, read_csv
from .quantities import ComplexImpedance


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def random_dcm_point(rng, L=220e-6):
    """Random lossless operating point that is safely inside DCM."""
    while True:
        f_s = 10 ** rng.uniform(math.log10(20e3), math.log10(1e6))
        V_in = rng.uniform(0.2, 1.5)
        V_out = rng.uniform(0.2, 1.8)
        T = 1 / f_s
        T_ON = rng.uniform(0.01, 0.45) * T
        if T_ON * (1 + V_in / V_out) < 0.95 * T:
            return V_in, V_out, f_s, T_ON


def c1_closed_form_vs_cycle(rng, n=100) -> Criterion:
    cfg = dcdc.ConverterConfig().lossless()
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n):
        V_in, V_out, f_s, T_ON = random_dcm_point(rng, cfg.L)
        T = 1 / f_s
        r_eq = dcdc.input_resistance_buckboost(cfg.L, T_ON / T, T)
        _, ledgers = dcdc.cycle_simulate(
            cfg, dcdc.ConverterState(V_in=V_in, V_out=V_out, V_DD=1.8, target="store"), f_s, T_ON, 20)
        q = sum(led.charge_in for led in ledgers)
        r_sim = V_in / (q / (len(ledgers) * T))
        worst = max(worst, abs(r_eq / r_sim - 1))
    dt = time.perf_counter() - t0
    return Criterion(1, "DCM closed form vs cycle simulator", worst < 0.01 and dt < 10,
                     f"max |R_eq/R_sim - 1| = {worst:.2e} over {n} points in {dt:.2f} s")


def c2_output_independence() -> Criterion:
    cfg = dcdc.ConverterConfig()
    V_in, f_s, T_ON = 0.15, 100e3, 400e-9
    v_out = np.linspace(0.2, 1.8, 17)
    r_sim = np.array([dcdc.simulated_input_resistance(cfg, V_in, v, f_s, T_ON) for v in v_out])
    spread_sim = r_sim.max() / r_sim.min() - 1
    T = 1 / f_s
    r_boost = np.array([dcdc.input_resistance_boost(cfg.L, T_ON / T, T, V_in, v).ohms for v in v_out])
    spread_boost = r_boost.max() / r_boost.min()
    ok = spread_sim < 0.01 and spread_boost >= 2
    return Criterion(2, "Buck-boost input resistance independent of V_out", ok,
                     f"buck-boost spread {spread_sim:.2e}, boost max/min {spread_boost:.2f}")


def c3_efficiency_reference(cfg_scenario=None) -> Criterion:
    from . import config, scenarios

    sc = cfg_scenario or config.validate(config.default_config())
    res = scenarios.dcdc_eff(sc)
    tab = res.tables[0]
    with tempfile.TemporaryDirectory() as d:
        path = emit_csv(tab.header, tab.rows, Path(d) / tab.name)
        header, rows = read_csv(path)
    i_p, i_v, i_r, i_m = (header.index(k) for k in ("P_in_W", "V_out_V", "efficiency_ref", "efficiency_model"))
    ref = {(p.P_in, p.V_out): p.efficiency for p in dcdc.efficiency_table()}
    exact = len(rows) == 20 and all(ref.get((r[i_p], r[i_v])) == r[i_r] for r in rows)
    worst = max(abs(r[i_m] - r[i_r]) * 100 for r in rows)
    return Criterion(3, "Efficiency reference data and calibrated model", exact and worst <= 3.0,
                     f"20/20 reference points exact: {exact}; max model error {worst:.2f} pts")


def random_unimodal_profile(rng, n=50):
    peak = int(rng.integers(0, n))
    inc = rng.uniform(0.05, 1.0, n)
    prof = np.empty(n)
    prof[peak] = 100.0
    for i in range(peak - 1, -1, -1):
        prof[i] = prof[i + 1] - inc[i]
    for i in range(peak + 1, n):
        prof[i] = prof[i - 1] - inc[i]
    return prof - prof.min() + 1.0, peak + 1


def c4_mppt_convergence(rng, cases=50) -> Criterion:
    span = mppt.CODE_MAX - mppt.CODE_MIN
    limit = 2 * span
    ok_count = 0
    for _ in range(cases):
        prof, best = random_unimodal_profile(rng)
        assert best == int(np.argmax(prof)) + 1
        start = int(rng.integers(mppt.CODE_MIN, mppt.CODE_MAX + 1))
        recs = mppt.closed_loop_run(mppt.ProfilePlant(prof), initial_code=start, epochs=2 * limit)
        k = mppt.settled_within(recs, best, 1)
        ok_count += k is not None and k < limit
    p20 = mppt.controller_power(20e3).watts
    p1m = mppt.controller_power(1e6).watts
    anchors = math.isclose(p20, 17.4e-9, rel_tol=1e-12) and math.isclose(p1m, 278.5e-9, rel_tol=1e-12)
    return Criterion(4, "MPPT convergence and controller power anchors", ok_count == cases and anchors,
                     f"{ok_count}/{cases} settled within +-1 code in <= {limit} epochs; "
                     f"P(20 kHz) = {p20 * 1e9:.1f} nW, P(1 MHz) = {p1m * 1e9:.1f} nW")


def c5_estimator(rng, grids=1000) -> Criterion:
    p = mppt.EstimatorParams()
    r_i = mppt.power_metric(1.0, 100e-9, p) / mppt.power_metric(1.0, 2e-9, p)
    sq = abs(r_i / math.sqrt(50) - 1)
    v1 = mppt.power_metric(0.06 / p.r, 20e-9, p)
    v3 = mppt.power_metric(0.02 / p.r, 20e-9, p)
    lin = abs(v1 / (3 * v3) - 1)
    mism = 0
    for _ in range(grids):
        V = rng.uniform(0.0, 2.0, 12)
        I = rng.uniform(0.0, 200e-9, 9)
        m = mppt.power_metric(V[:, None], I[None, :], p)
        q = V[:, None] ** 2 * I[None, :]
        mism += int(np.argmax(m)) != int(np.argmax(q))
    ok = sq < 1e-9 and lin < 1e-9 and mism == 0
    return Criterion(5, "Estimator square-root/linear laws and argmax equivalence", ok,
                     f"sqrt law err {sq:.1e}, linearity err {lin:.1e}, argmax mismatches {mism}/{grids}")


def c6_rectifier(rng, n=1000) -> Criterion:
    model = rectifier.RectifierModel()
    anchor = rectifier.pce(model, 10e-6, model.pce_surface.R_opt).pce
    violations = 0
    for _ in range(n):
        p_circ = 10 ** rng.uniform(-7, -2)
        p_ant = p_circ * (1 + rng.exponential(0.3))
        p_th = p_ant * (1 + rng.exponential(0.3))
        R = rng.uniform(1, 100)
        V_A = math.sqrt(2 * R * p_th)
        deliv = p_circ * rng.uniform(0.01, 1.0)
        acc = rectifier.pce_accounting(deliv, V_A, ComplexImpedance(R, rng.normal() * 50), p_ant, p_circ)
        violations += not (acc.pce_theoretical <= acc.pce_antenna * (1 + 1e-12)
                           and acc.pce_antenna <= acc.pce_circuit * (1 + 1e-12))
    surf = model.pce_surface
    P = np.logspace(math.log10(surf.P_min), math.log10(surf.P_max), 60)
    R = np.linspace(100e3, 850e3, 60)
    V = np.array([[rectifier.output_voltage(model, p, r) for r in R] for p in P])
    mono = bool(np.all(np.diff(V, axis=0) >= 0) and np.all(np.diff(V, axis=1) >= 0))
    ok = anchor == 0.60 and violations == 0 and mono
    return Criterion(6, "Rectifier anchor, PCE ordering, V_out monotonicity", ok,
                     f"pce(10 uW, R_opt) = {anchor}, ordering violations {violations}/{n}, monotone {mono}")


def c7_interface() -> Criterion:
    v = interface.boosted_load_voltage(interface.AntennaPort(1.0, 100.0, 10e-6)).volts
    e1 = abs(v / 0.44721 - 1)
    net = interface.BoostNetwork(L_A=3.1e-6, R_A=1.0, C_D=19.5e-12, C_B=7.5e-12, C_RT=17e-12, L_C=10e-6)
    rt = abs(interface.required_inductance(interface.resonance(net), net.C_VT) / net.L_A - 1)
    L = interface.required_inductance(13.56e6, 44e-12)
    e3 = abs(L / 3.13e-6 - 1)
    ok = e1 <= 1e-4 and rt <= 1e-9 and e3 <= 0.005
    return Criterion(7, "Interface voltage boost and resonance", ok,
                     f"V_L = {v:.5f} V, round trip err {rt:.1e}, L_A = {L * 1e6:.4f} uH")


def c8_noise_figure() -> Criterion:
    p = lna.LnaParams(g_m=366e-6, R_g=18.0, R_L=10e3, gamma=1.1, delta=0.0)
    nf = lna.min_noise_factor(p, lna.InterfaceImpedance(10.0, 282.7)).NF_dB
    R = np.linspace(1, 50, 50)
    X = np.linspace(50, 500, 50)
    F = np.array([[lna.min_noise_factor(p, lna.InterfaceImpedance(r, x)).F for x in X] for r in R])
    viol = int(np.sum(np.diff(F, axis=1) >= 0) + np.sum(np.diff(F, axis=0) <= 0))
    ok = abs(nf - 2.43) <= 0.01 and viol == 0
    return Criterion(8, "LNA noise figure and monotonicity", ok, f"NF = {nf:.4f} dB, grid violations {viol}")


def random_network(rng, base=None, spread=2.0):
    base = base or uwb.LputNetwork()
    kw = {k: getattr(base, k) * spread ** rng.uniform(-1, 1)
          for k in ("R_S", "L", "C", "C_F", "C_L", "R_A", "C_A", "L_A")}
    return uwb.LputNetwork(**kw)


def c9_uwb(rng, scenario=None) -> Criterion:
    worst_nodal = 0.0
    for _ in range(20):
        net = random_network(rng, spread=4.0)
        f = rng.uniform(1e6, 5e9, 20)
        a = uwb.antenna_voltage(net, f)
        b = uwb.nodal_antenna_voltage(net, f)
        worst_nodal = max(worst_nodal, float(np.max(np.abs(a - b) / np.abs(b))))
    worst_ss = 0.0
    stim = uwb.Stimulus()
    for _ in range(5):
        net = random_network(rng, spread=1.5)
        w = uwb.synth_pulse(net, stim, 20e9, 60e-9)
        ws = uwb.synth_pulse_state_space(net, stim, 20e9, 60e-9)
        worst_ss = max(worst_ss, uwb.rms_of_peak_deviation(w, ws))
    if scenario is None:
        rep = uwb.pulse_report(uwb.LputNetwork(), stim, uwb.default_mask())
    else:
        from .scenarios import uwb_report
        rep = uwb_report(scenario)
    e = uwb.energy_per_pulse(0.28e-3, 3.3e6)
    e_err = abs(e / 84.85e-12 - 1)
    in_band = rep.band_fraction >= 0.8 and 0.25e9 <= rep.peak_frequency <= 0.75e9
    ok = (worst_nodal <= 1e-9 and worst_ss <= 0.02 and in_band and rep.rolloff.drop_db >= 25
          and rep.verdict.passed and e_err <= 0.005)
    return Criterion(9, "UWB transfer, pulse synthesis and default spectrum", ok,
                     f"nodal err {worst_nodal:.1e}, IFFT vs state space {worst_ss:.1e}, "
                     f"band fraction {rep.band_fraction:.3f} (peak {rep.peak_frequency / 1e6:.0f} MHz), "
                     f"roll-off {rep.rolloff.drop_db:.1f} dB, mask {rep.verdict.verdict}, "
                     f"energy/pulse {e * 1e12:.2f} pJ")


def c10_link(rng) -> Criterion:
    worst = 0.0
    for _ in range(200):
        g = link.LinkGeometry(rng.uniform(0.05, 50), rng.uniform(0.05, 20), 0.0)
        f = rng.uniform(1e7, 5e9)
        worst = max(worst, abs(link.two_ray_gain(g, f) / link.friis_gain(g.d, f) - 1))
    tx = uwb.pulse_report(uwb.LputNetwork(), uwb.Stimulus(), uwb.default_mask()).psd

    def peak(d, h):
        return link.received_psd(tx, link.LinkGeometry(d, h)).bins.max()

    d_ok = all(peak(0.1, h) > peak(1, h) > peak(10, h) for h in (0.1, 10))
    h_ok = all(peak(d, 10) > peak(d, 0.1) for d in (1, 10))
    ok = worst <= 1e-12 and d_ok and h_ok
    return Criterion(10, "Two-ray link study", ok,
                     f"Friis err {worst:.1e}, decreasing in d {d_ok}, increasing in h {h_ok}")


def random_event_stream(rng, cfg: lcadc.PdmConfig, n=None):
    n = int(rng.integers(0, 40)) if n is None else n
    t, out = 0.0, []
    for _ in range(n):
        d = lcadc.Direction.UP if rng.random() < 0.5 else lcadc.Direction.DOWN
        out.append(lcadc.Event(t, d))
        t += cfg.width(d) + rng.uniform(1e-9, 200e-9)
    return out


def c11_lcadc(rng, streams=1000) -> Criterion:
    cfg = lcadc.PdmConfig()
    errors = 0
    for _ in range(streams):
        ev = random_event_stream(rng, cfg)
        pulses = lcadc.pdm_encode(ev, cfg)
        errors += lcadc.pdm_decode(pulses, cfg) != [e.direction for e in ev]
    up = lcadc.pdm_encode([lcadc.Event(0.0, lcadc.Direction.UP)], cfg)[0].width
    dn = lcadc.pdm_encode([lcadc.Event(0.0, lcadc.Direction.DOWN)], cfg)[0].width
    e_up = lcadc.energy(lcadc.envelope([lcadc.Pulse(0.0, up)], 10e9))
    e_dn = lcadc.energy(lcadc.envelope([lcadc.Pulse(0.0, dn)], 10e9))
    ratio = e_dn / e_up
    ok = errors == 0 and up == 40e-9 and dn == 80e-9 and abs(ratio - 2.0) <= 1e-6
    return Criterion(11, "LC-ADC PDM round trip and pulse widths", ok,
                     f"decode errors {errors}/{streams}, UP {up * 1e9:g} ns, DOWN {dn * 1e9:g} ns, "
                     f"energy ratio {ratio:.9f}")


def run_all(seed: int = 1234, scenario=None) -> list:
    rng = np.random.default_rng(seed)
    return [
        c1_closed_form_vs_cycle(rng),
        c2_output_independence(),
        c3_efficiency_reference(scenario),
        c4_mppt_convergence(rng),
        c5_estimator(rng),
        c6_rectifier(rng),
        c7_interface(),
        c8_noise_figure(),
        c9_uwb(rng, scenario),
        c10_link(rng),
        c11_lcadc(rng),
    ]
