"""Table builders behind each CLI subcommand.

Each builder takes a validated :class:`~wsnkit.config.Scenario` and returns
a :class:`Result`: named tables ready for CSV output plus a short summary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dcdc, lcadc, link, lna, mppt, rectifier, uwb
from .quantities import Waveform, watts_to_dbm


@dataclass
class Table:
    name: str
    header: list
    rows: list


@dataclass
class Result:
    tables: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def harvest_sweep(sc) -> Result:
    sw = sc.raw["rectifier"]["sweep"]
    rows = [
        (P, float(watts_to_dbm(P)), R, eta, v, oor)
        for P, R, eta, v, oor in rectifier.sweep(sc.rectifier, sw["P_in"], sw["R_L"])
    ]
    t = Table("harvest_sweep.csv", ["P_in_W", "P_in_dBm", "R_L_ohm", "pce", "V_out_V", "out_of_range"], rows)
    peak = max(rows, key=lambda r: r[3])
    return Result([t], {"points": len(rows), "peak_pce": peak[3], "peak_P_in_W": peak[0], "peak_R_L_ohm": peak[2]})


def dcdc_eff(sc) -> Result:
    cfg = sc.converter
    rows, ledger_rows = [], []
    worst = 0.0
    for pt, eta in dcdc.model_efficiency_table(cfg, sc.operating_points):
        f_s, mode = sc.operating_points[pt.P_in]
        err = (eta - pt.efficiency) * 100
        worst = max(worst, abs(err))
        rows.append((pt.P_in, pt.V_in, pt.V_out, pt.efficiency, eta, err, f_s, mode.value))
        T_ON = dcdc.on_time_for_power(pt.P_in, pt.V_in, f_s, cfg.L)
        led = dcdc.cycle_energy(cfg, pt.V_in, pt.V_out, f_s, T_ON, mode)
        ledger_rows.append((pt.P_in, pt.V_out, f_s, T_ON, led.t_dis, led.i_peak, led.input_energy,
                            led.delivered, led.conduction, led.switching, led.quiescent, led.efficiency))
    t1 = Table("dcdc_efficiency.csv",
               ["P_in_W", "V_in_V", "V_out_V", "efficiency_ref", "efficiency_model", "error_pts",
                "f_s_Hz", "mode"], rows)
    t2 = Table("dcdc_ledger.csv",
               ["P_in_W", "V_out_V", "f_s_Hz", "T_ON_s", "t_dis_s", "i_peak_A", "E_in_J",
                "E_delivered_J", "E_conduction_J", "E_switching_J", "E_quiescent_J", "efficiency"],
               ledger_rows)
    return Result([t1, t2], {"points": len(rows), "max_error_pts": worst})


def mppt_plant(sc):
    mp = sc.raw["mppt"]
    if mp["plant"] == "harvester":
        return mppt.HarvesterPlant(sc.rectifier, mp["P_rf"], mp["T_ON"], sc.converter.L)
    codes = np.arange(mp["code_min"], mp["code_max"] + 1)
    profile = np.exp(-(((codes - mp["profile_optimum"]) / mp["profile_width"]) ** 2)) * mp["P_rf"]
    return mppt.ProfilePlant(profile, mp["T_ON"], sc.converter.L, mp["code_min"])


def mppt_run(sc) -> Result:
    mp = sc.raw["mppt"]
    plant = mppt_plant(sc)
    recs = mppt.closed_loop_run(plant, sc.estimator, int(mp["initial_code"]), int(mp["epochs"]),
                                sc.converter, mp["V_out"], int(mp["code_min"]), int(mp["code_max"]))
    rows = [(r.epoch, r.code, r.f_s, r.R_in, r.power, r.metric, r.controller_power, r.net_power, r.clamped)
            for r in recs]
    t = Table("mppt_trajectory.csv",
              ["epoch", "code", "f_s_Hz", "R_in_ohm", "delivered_W", "metric_A", "controller_W",
               "net_W", "clamped"], rows)
    codes = range(int(mp["code_min"]), int(mp["code_max"]) + 1)
    best = max(codes, key=lambda c: plant(c).power)
    return Result([t], {"epochs": len(rows), "final_code": recs[-1].code if recs else None,
                        "optimum_code": best})


def lna_sweep(sc) -> Result:
    ln = sc.raw["lna"]
    rows = [
        (r.R_A, r.X_A, r.L_deg, r.NF_dB, r.practical)
        for r in lna.nf_sweep(sc.lna, ln["sweep"]["R_A"], ln["sweep"]["X_A"], ln["L_A"],
                              ln["L_deg_ceiling"], ln["R_floor"], ln["frequency"])
    ]
    t = Table("lna_sweep.csv", ["R_A_ohm", "X_A_ohm", "L_deg_H", "NF_dB", "practical"], rows)
    best = min((r for r in rows if r[4]), key=lambda r: r[3], default=None)
    return Result([t], {"points": len(rows), "best_practical_NF_dB": best[3] if best else None})


def uwb_report(sc) -> uwb.PulseReport:
    u = sc.raw["uwb"]
    return uwb.pulse_report(sc.network, sc.stimulus, sc.mask, u["prf"], u["sample_rate"], u["ref_bw"],
                            tuple(u["band"]))


def uwb_pulse(sc) -> Result:
    u = sc.raw["uwb"]
    rep = uwb_report(sc)
    w = rep.waveform
    t1 = Table("uwb_waveform.csv", ["t_s", "v_A_V"], list(zip(w.time, w.samples)))
    f = rep.psd.freq
    mask_vals = sc.mask.at(f)
    t2 = Table("uwb_psd.csv", ["f_Hz", "psd_dBm_per_ref_bw", "mask_dBm"], list(zip(f, rep.psd.bins, mask_vals)))
    summary = {
        "verdict": rep.verdict.verdict,
        "worst_margin_dB": rep.verdict.worst_margin_db,
        "worst_frequency_Hz": rep.verdict.worst_frequency,
        "rolloff_500M_1G_dB": rep.rolloff.drop_db,
        "peak_to_peak_V": w.peak_to_peak(),
        "band_power_fraction": rep.band_fraction,
        "peak_frequency_Hz": rep.peak_frequency,
        "energy_per_pulse_J": uwb.energy_per_pulse(u["power"], u["prf"]),
        "waveform_energy_per_pulse_J": uwb.waveform_pulse_energy(w, u["prf"]),
    }
    return Result([t1, t2], summary)


def link_psd(sc) -> Result:
    lk = sc.raw["link"]
    tx = uwb_report(sc).psd
    tables, peaks = [], {}
    for d in lk["distances"]:
        for h in lk["heights"]:
            rx = link.received_psd(tx, link.LinkGeometry(d, h, lk["gamma"]))
            tables.append(Table(f"link_psd_d{d:g}_h{h:g}.csv", ["f_Hz", "psd_dBm_per_ref_bw"],
                                list(zip(rx.freq, rx.bins))))
            peaks[f"peak_dBm_d{d:g}_h{h:g}"] = float(rx.bins.max())
    return Result(tables, peaks)


def lcadc_input(sc) -> Waveform:
    inp = sc.raw["lcadc"]["input"]
    dt = 1.0 / inp["sample_rate"]
    t = np.arange(int(round(inp["duration"] * inp["sample_rate"]))) * dt
    return Waveform(dt, inp["offset"] + inp["amplitude"] * np.sin(2 * np.pi * inp["frequency"] * t))


def lcadc_encode(sc) -> Result:
    lc = sc.raw["lcadc"]
    events = lcadc.lc_sample(lcadc_input(sc), sc.level)
    pulses = lcadc.pdm_encode(events, sc.pdm)
    env = lcadc.backscatter_envelope(pulses, sc.pdm, lc["sample_rate"])
    t1 = Table("lcadc_events.csv", ["t_s", "direction"], [(e.time, e.direction.value) for e in events])
    t2 = Table("lcadc_pulses.csv", ["start_s", "width_s"], [(p.start, p.width) for p in pulses])
    t3 = Table("lcadc_envelope.csv", ["t_s", "v"], list(zip(env.time, env.samples)))
    ups = sum(e.direction is lcadc.Direction.UP for e in events)
    return Result([t1, t2, t3], {"events": len(events), "up": ups, "down": len(events) - ups})


SCENARIOS = {
    "harvest-sweep": harvest_sweep,
    "dcdc-eff": dcdc_eff,
    "mppt-run": mppt_run,
    "lna-sweep": lna_sweep,
    "uwb-pulse": uwb_pulse,
    "link-psd": link_psd,
    "lcadc-encode": lcadc_encode,
}
