"""Non-inverting buck-boost converter in discontinuous conduction mode.

Closed-form input resistance/power relations, an exact per-cycle RL
simulator with an energy ledger, a parametric loss model and the
supply/storage housekeeping state machine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.optimize import least_squares

SWITCHES = ("S1", "S2", "S3", "S4", "S5")


class SimulationError(RuntimeError):
    """The cycle simulator was driven outside its valid regime."""


class DcmViolation(SimulationError):
    pass


class Phase(str, Enum):
    CHARGE = "charge"
    DISCHARGE = "discharge"
    IDLE = "idle"


class Mode(str, Enum):
    LOW = "low"
    HIGH = "high"


class Target(str, Enum):
    STORE = "store"
    SUPPLY = "supply"


# Shipped loss calibration, fitted to the reference efficiency dataset with
# ``calibrate_loss_model``. These are fitted values, not measured device data.
DEFAULT_R_ON = {
    Mode.LOW: {"S1": 3.040787, "S2": 6.626561, "S3": 3.040787, "S4": 0.0, "S5": 20.0},
    Mode.HIGH: {"S1": 0.076727, "S2": 0.167204, "S3": 0.076727, "S4": 0.0, "S5": 20.0},
}
DEFAULT_DRIVE_ENERGY = {Mode.LOW: 1.0576004e-12, Mode.HIGH: 2.4721497e-12}
DEFAULT_S4_KN = 9.8241686e-3
DEFAULT_S4_KP = {Mode.LOW: 8.8182214e-3, Mode.HIGH: 0.28545481}
DEFAULT_S4_VTH = 0.53984639
DEFAULT_QUIESCENT_POWER = 1.7237586e-10
DEFAULT_ZCD_POWER = 1.4987410e-5
DEFAULT_C_NODE = 1.3583470e-12


@dataclass(frozen=True)
class ConverterConfig:
    """Component values and loss-model parameters.

    ``r_on`` maps mode -> switch -> on-resistance. ``drive_energy`` is the
    gate-drive energy of one switching event (one switch turned on and off)
    per mode. ``zcd_power`` is drawn by the zero-current comparator while a
    discharge is in progress and ``c_node`` is the switching-node parasitic
    hard-charged to ``V_out`` once per cycle.
    """

    L: float = 220e-6
    L_esr: float = 21.1
    C_rec: float = 8.5e-9
    C_store: float = 22e-6
    C_supply: float = 20e-9
    r_on: dict = field(default_factory=lambda: {m: dict(r) for m, r in DEFAULT_R_ON.items()})
    drive_energy: dict = field(default_factory=lambda: dict(DEFAULT_DRIVE_ENERGY))
    quiescent_power: float = DEFAULT_QUIESCENT_POWER
    zcd_power: float = DEFAULT_ZCD_POWER
    c_node: float = DEFAULT_C_NODE
    s4_kn: float = DEFAULT_S4_KN
    s4_kp: dict = field(default_factory=lambda: dict(DEFAULT_S4_KP))
    s4_vth: float = DEFAULT_S4_VTH
    gate_drive: float = 1.8
    zcd_offset: float = 0.0
    startup_efficiency: float = 0.1
    V_supply_max: float = 1.8
    V_supply_min: float = 1.2

    def __post_init__(self):
        for name in ("L", "C_rec", "C_store", "C_supply", "V_supply_max", "V_supply_min"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("L_esr", "quiescent_power", "zcd_power", "c_node", "s4_kn", "s4_vth"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.V_supply_min >= self.V_supply_max:
            raise ValueError("V_supply_min must be below V_supply_max")
        r_on = {Mode(m): {s: float(v) for s, v in sw.items()} for m, sw in self.r_on.items()}
        for mode in Mode:
            if mode not in r_on:
                raise ValueError(f"r_on missing mode {mode.value!r}")
            missing = set(SWITCHES) - set(r_on[mode])
            if missing:
                raise ValueError(f"r_on[{mode.value}] missing switches {sorted(missing)}")
            if any(v < 0 for v in r_on[mode].values()):
                raise ValueError("on-resistances must be non-negative")
        drive = {Mode(m): float(v) for m, v in self.drive_energy.items()}
        if set(drive) != set(Mode) or any(v < 0 for v in drive.values()):
            raise ValueError("drive_energy needs non-negative 'low' and 'high' entries")
        kp = {Mode(m): float(v) for m, v in self.s4_kp.items()}
        if set(kp) != set(Mode) or any(v < 0 for v in kp.values()):
            raise ValueError("s4_kp needs non-negative 'low' and 'high' entries")
        object.__setattr__(self, "r_on", r_on)
        object.__setattr__(self, "drive_energy", drive)
        object.__setattr__(self, "s4_kp", kp)

    def charge_resistance(self, mode) -> float:
        r = self.r_on[Mode(mode)]
        return self.L_esr + r["S1"] + r["S3"]

    def s4_resistance(self, mode, V_out: float) -> float:
        """On-resistance of the output switch S4 when charging C_store.

        S4 is a PMOS (source at V_out, overdrive V_out - V_th) in parallel
        with an NMOS (gate at ``gate_drive``, overdrive gate_drive - V_out - V_th),
        each modeled as a triode conductance linear in overdrive. The high-power
        mode adds PMOS width (``s4_kp['high']`` is the total). ``r_on['S4']``
        is a fixed series part. With zero coefficients S4 is just ``r_on['S4']``.
        """
        mode = Mode(mode)
        fixed = self.r_on[mode]["S4"]
        if self.s4_kn == 0 and self.s4_kp[mode] == 0:
            return fixed
        g = self.s4_kn * max(self.gate_drive - V_out - self.s4_vth, 0.0)
        g += self.s4_kp[mode] * max(V_out - self.s4_vth, 0.0)
        if g <= 0:
            raise SimulationError(f"S4 cannot conduct at V_out={V_out:g} V")
        return fixed + 1.0 / g

    def discharge_resistance(self, mode, target=Target.STORE, V_out: float = 1.0) -> float:
        r = self.r_on[Mode(mode)]
        if Target(target) is Target.STORE:
            out = self.s4_resistance(mode, V_out)
        else:
            out = r["S5"]
        return self.L_esr + r["S2"] + out

    def lossless(self) -> "ConverterConfig":
        zero = {m: {s: 0.0 for s in SWITCHES} for m in Mode}
        return replace(
            self,
            L_esr=0.0,
            r_on=zero,
            drive_energy={m: 0.0 for m in Mode},
            s4_kn=0.0,
            s4_kp={m: 0.0 for m in Mode},
            quiescent_power=0.0,
            zcd_power=0.0,
            c_node=0.0,
        )


@dataclass(frozen=True)
class ConverterState:
    i_L: float = 0.0
    V_in: float = 0.38
    V_out: float = 0.0
    V_DD: float = 0.0
    phase: Phase = Phase.IDLE
    mode: Mode = Mode.LOW
    target: Target = Target.STORE
    startup_active: bool = False

    def __post_init__(self):
        if self.i_L < 0:
            raise ValueError("inductor current cannot be negative in DCM")
        object.__setattr__(self, "phase", Phase(self.phase))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "target", Target(self.target))


# --------------------------------------------------------------------------
# Closed forms

@dataclass(frozen=True)
class Resistance:
    ohms: float
    flag: bool = False


def input_resistance_buckboost(L: float, D: float, T: float) -> float:
    """Average input resistance of a DCM buck-boost, ``2L / (D^2 T)``."""
    if not 0 < D < 1:
        raise ValueError("duty cycle must lie in (0, 1)")
    if not (T > 0 and L > 0):
        raise ValueError("L and T must be positive")
    return 2.0 * L / (D * D * T)


def input_resistance_boost(L: float, D: float, T: float, V_in: float, V_out: float) -> Resistance:
    """Average input resistance of a DCM boost converter.

    Depends on the output voltage through ``(1 - V_in/V_out)``; the flag is
    raised at the ``V_out == V_in`` boundary where it collapses to zero.
    """
    if not V_in > 0:
        raise ValueError("V_in must be positive")
    if V_out < V_in:
        raise ValueError("boost converter needs V_out >= V_in")
    r = input_resistance_buckboost(L, D, T)
    if V_out == V_in:
        return Resistance(0.0, True)
    if math.isinf(V_out):
        return Resistance(r)
    return Resistance(r * (1.0 - V_in / V_out))


def dcm_input_power(V_in: float, f_s: float, T_ON: float, L: float) -> float:
    """Average DCM input power ``V_in^2 f_s T_ON^2 / (2 L)``."""
    if min(V_in, f_s, L) <= 0 or T_ON < 0:
        raise ValueError("arguments must be positive")
    return V_in * V_in * f_s * T_ON * T_ON / (2.0 * L)


def on_time_for_power(P_in: float, V_in: float, f_s: float, L: float) -> float:
    """Invert :func:`dcm_input_power` for the ON time."""
    return math.sqrt(2.0 * L * P_in / (V_in * V_in * f_s))


def dcm_check(L: float, T_ON: float, f_s: float, V_in: float, V_out: float) -> bool:
    """True when an ideal discharge completes before the period ends."""
    t_dis = T_ON * V_in / V_out
    return T_ON + t_dis < 1.0 / f_s


# --------------------------------------------------------------------------
# Exact RL phase integrals

def _rise(V: float, R: float, L: float, t: float):
    """Inductor charging from zero through R against a constant V.

    Returns (i_end, int i dt, int i^2 dt).
    """
    if V <= 0:
        raise SimulationError("charging voltage must be positive")
    x = R * t / L
    if x < 1e-6:
        # series to third order; keeps the lossless limit exact
        i_end = V * t / L * (1 - x / 2 + x * x / 6)
        q = V * t * t / (2 * L) * (1 - x / 3 + x * x / 12)
        e2 = V * V * t ** 3 / (3 * L * L) * (1 - 3 * x / 4 + 7 * x * x / 20)
        return i_end, q, e2
    tau = L / R
    em = -math.expm1(-x)  # 1 - e^-x
    I_inf = V / R
    i_end = I_inf * em
    q = I_inf * (t - tau * em)
    # int (1 - e^-u)^2 = t - 2 tau (1-e^-x) + tau/2 (1 - e^-2x)
    e2 = I_inf * I_inf * (t - 2 * tau * em + 0.5 * tau * (-math.expm1(-2 * x)))
    return i_end, q, e2


def _fall(I0: float, V: float, R: float, L: float):
    """Inductor discharging from I0 into V through R until zero current.

    Returns (duration, int i dt, int i^2 dt).
    """
    if V <= 0:
        raise SimulationError("discharge target voltage must be positive")
    if I0 == 0:
        return 0.0, 0.0, 0.0
    y = R * I0 / V
    if y < 1e-6:
        t = L * I0 / V * (1 - y / 2 + y * y / 3)
        q = L * I0 * I0 / (2 * V) * (1 - 2 * y / 3 + y * y / 2)
        e2 = L * I0 ** 3 / (3 * V) * (1 - 3 * y / 4 + 3 * y * y / 5)
        return t, q, e2
    tau = L / R
    A = I0 + V / R
    B = V / R
    t = tau * math.log1p(y)
    g = -math.expm1(-t / tau)  # 1 - e^{-t/tau} = y/(1+y)
    g2 = -math.expm1(-2 * t / tau)
    q = A * tau * g - B * t
    e2 = A * A * tau / 2 * g2 - 2 * A * B * tau * g + B * B * t
    return t, q, e2


@dataclass(frozen=True)
class CycleLedger:
    """Energy bookkeeping for one switching cycle (joules)."""

    t_on: float
    t_dis: float
    i_peak: float
    charge_in: float
    input_energy: float
    delivered: float
    conduction: float
    switching: float
    quiescent: float
    transferred: float

    @property
    def efficiency(self) -> float:
        return self.delivered / self.input_energy if self.input_energy > 0 else 0.0

    def residual(self) -> float:
        """Relative energy-balance error of the ledger."""
        total = self.delivered + self.conduction + self.switching + self.quiescent
        return abs(self.input_energy - total) / max(self.input_energy, 1e-300)


SWITCH_EVENTS_PER_CYCLE = 4


def cycle_energy(cfg: ConverterConfig, V_in: float, V_out: float, f_s: float, T_ON: float,
                 mode=Mode.LOW, target=Target.STORE) -> CycleLedger:
    """Integrate one DCM cycle exactly and return its energy ledger.

    Charge phase: ``V_in`` across L through S1, S3 and the ESR for ``T_ON``.
    Discharge: L into ``V_out`` through S2 and S4 (or S5) until the ZCD fires.
    Switching and quiescent overheads are paid from the transferred energy.
    """
    if not (V_in > 0 and f_s > 0 and T_ON > 0):
        raise SimulationError("V_in, f_s and T_ON must be positive")
    if not V_out > 0:
        raise SimulationError("V_out must be positive for the discharge phase")
    T = 1.0 / f_s
    if T_ON >= T:
        raise DcmViolation("ON time exceeds the switching period")
    L = cfg.L
    Rc = cfg.charge_resistance(mode)
    Rd = cfg.discharge_resistance(mode, target, V_out)
    i_pk, q_in, e2_c = _rise(V_in, Rc, L, T_ON)
    # ZCD offset shifts the turn-off current; zero offset is the ideal detector.
    i_stop = max(cfg.zcd_offset, 0.0)
    t_dis, q_out, e2_d = _fall(i_pk, V_out, Rd, L)
    if i_stop > 0 and i_stop < i_pk:
        t2, q2, e22 = _fall(i_stop, V_out, Rd, L)
        t_dis, q_out, e2_d = t_dis - t2, q_out - q2, e2_d - e22
    if T_ON + t_dis > T * (1 + 1e-12):
        raise DcmViolation(
            f"discharge ({t_dis:.3e} s) does not finish within the period "
            f"({T - T_ON:.3e} s left); not in DCM"
        )
    e_in = V_in * q_in
    transferred = V_out * q_out
    conduction = Rc * e2_c + Rd * e2_d
    # residual inductor energy when the ZCD opens early is dumped as loss
    if i_stop > 0 and i_stop < i_pk:
        conduction += 0.5 * L * i_stop * i_stop
    switching = SWITCH_EVENTS_PER_CYCLE * cfg.drive_energy[Mode(mode)] + cfg.c_node * V_out * V_out
    quiescent = cfg.quiescent_power * T + cfg.zcd_power * t_dis
    delivered = transferred - switching - quiescent
    if not all(map(math.isfinite, (e_in, transferred, conduction))):
        raise SimulationError("non-finite energy in cycle integration")
    return CycleLedger(
        t_on=T_ON,
        t_dis=t_dis,
        i_peak=i_pk,
        charge_in=q_in,
        input_energy=e_in,
        delivered=delivered,
        conduction=conduction,
        switching=switching,
        quiescent=quiescent,
        transferred=transferred,
    )


def simulated_input_resistance(cfg: ConverterConfig, V_in: float, V_out: float, f_s: float,
                               T_ON: float, mode=Mode.LOW, n_cycles: int = 1) -> float:
    """Average input resistance ``V_in / <i_in>`` observed by the simulator."""
    led = cycle_energy(cfg, V_in, V_out, f_s, T_ON, mode)
    # every cycle is identical at fixed V_in, V_out
    return V_in / (led.charge_in * f_s)


def efficiency(cfg: ConverterConfig, V_in: float, V_out: float, P_in: float, f_s: float,
               mode=Mode.LOW) -> float:
    """Steady-state efficiency at an operating point given by input power."""
    T_ON = on_time_for_power(P_in, V_in, f_s, cfg.L)
    return cycle_energy(cfg, V_in, V_out, f_s, T_ON, mode).efficiency


def charge_step(V: float, energy: float, C: float) -> float:
    """Capacitor voltage after adding ``energy`` joules (may be negative)."""
    v2 = V * V + 2.0 * energy / C
    return math.sqrt(max(v2, 0.0))


def cycle_simulate(cfg: ConverterConfig, state: ConverterState, f_s: float, T_ON: float,
                   n_cycles: int):
    """Advance the converter ``n_cycles`` switching periods.

    ``state.V_in`` is held by C_rec (ripple neglected). Each cycle's delivered
    energy charges the capacitor selected by ``state.target``; the housekeeping
    rules run between cycles. Returns the final state and the list of ledgers.
    """
    ledgers = []
    for _ in range(int(n_cycles)):
        state = housekeeping_step(cfg, state)
        if state.startup_active:
            # main converter idle; the start-up pump charges C_supply poorly
            e_in = dcm_input_power(state.V_in, f_s, T_ON, cfg.L) / f_s
            got = cfg.startup_efficiency * e_in
            state = replace(state, V_DD=charge_step(state.V_DD, got, cfg.C_supply))
            ledgers.append(CycleLedger(0.0, 0.0, 0.0, e_in / state.V_in, e_in, got,
                                       0.0, 0.0, e_in - got, 0.0))
            continue
        cap = cfg.C_store if state.target is Target.STORE else cfg.C_supply
        v_now = state.V_out if state.target is Target.STORE else state.V_DD
        # an empty capacitor is treated as a short at a tiny positive voltage
        v_eff = max(v_now, 1e-3)
        led = cycle_energy(cfg, state.V_in, v_eff, f_s, T_ON, state.mode, state.target)
        v_new = charge_step(v_now, led.delivered, cap)
        if state.target is Target.STORE:
            state = replace(state, V_out=v_new, phase=Phase.IDLE, i_L=0.0)
        else:
            state = replace(state, V_DD=v_new, phase=Phase.IDLE, i_L=0.0)
        ledgers.append(led)
    state = housekeeping_step(cfg, state)
    return state, ledgers


# --------------------------------------------------------------------------
# Housekeeping

@dataclass(frozen=True)
class SupplyDraw:
    """Energy taken from C_supply by the harvester's own circuits."""

    energy: float


def housekeeping_step(cfg: ConverterConfig, state: ConverterState, event=None) -> ConverterState:
    """Voltage-monitor decisions between switching cycles.

    ``event`` may be a :class:`SupplyDraw` applied before the decision.
    Start-up runs while neither V_DD nor V_out can power the converter and is
    turned off once one of them can. With V_DD at its maximum the discharge
    goes to C_store (S4 path); below the minimum it goes to C_supply (S5).
    """
    v_dd = state.V_DD
    if isinstance(event, SupplyDraw):
        v_dd = charge_step(v_dd, -event.energy, cfg.C_supply)
    can_run = v_dd >= cfg.V_supply_min or state.V_out >= cfg.V_supply_min
    target = state.target
    if v_dd >= cfg.V_supply_max:
        target = Target.STORE
    elif v_dd < cfg.V_supply_min:
        target = Target.SUPPLY
    return replace(state, V_DD=v_dd, startup_active=not can_run, target=target)


def switch_states(state: ConverterState) -> dict:
    """Which output switch receives the switching signal V_S."""
    return {
        "S4": state.target is Target.STORE and not state.startup_active,
        "S5": state.target is Target.SUPPLY and not state.startup_active,
    }


# --------------------------------------------------------------------------
# Reference efficiency data and loss-model calibration

@dataclass(frozen=True)
class EfficiencyPoint:
    P_in: float
    V_in: float
    V_out: float
    efficiency: float


_REFERENCE = {
    # P_in (W): (V_in (V), efficiency at V_out = 0.2, 0.6, 1.0, 1.4, 1.8 V)
    1e-6: (0.38, (0.483, 0.688, 0.736, 0.763, 0.732)),
    10e-6: (0.52, (0.551, 0.733, 0.787, 0.824, 0.829)),
    100e-6: (0.74, (0.544, 0.717, 0.780, 0.832, 0.849)),
    1e-3: (1.3, (0.241, 0.613, 0.790, 0.850, 0.863)),
}
REFERENCE_V_OUT = (0.2, 0.6, 1.0, 1.4, 1.8)

#: Operating point used when reproducing each reference curve: switching
#: frequency (Hz) and switch mode. The 1 uW point runs at 20 kHz; the others
#: were chosen by the loss-model fit inside the 20 kHz - 1 MHz range.
REFERENCE_OPERATING_POINTS = {
    1e-6: (20e3, Mode.LOW),
    10e-6: (93594.97, Mode.LOW),
    100e-6: (495446.17, Mode.LOW),
    1e-3: (146096.12, Mode.HIGH),
}


def efficiency_table() -> list:
    """The 20 reference (P_in, V_out, efficiency) points, efficiency as a fraction."""
    return [
        EfficiencyPoint(P, v_in, v_out, eta)
        for P, (v_in, etas) in _REFERENCE.items()
        for v_out, eta in zip(REFERENCE_V_OUT, etas)
    ]


def reference_lookup(P_in: float, V_out: float) -> float:
    for pt in efficiency_table():
        if math.isclose(pt.P_in, P_in, rel_tol=1e-9) and math.isclose(pt.V_out, V_out, rel_tol=1e-9):
            return pt.efficiency
    raise KeyError(f"no reference point at P_in={P_in:g} W, V_out={V_out:g} V")


def model_efficiency_table(cfg: ConverterConfig | None = None, operating_points=None) -> list:
    """Model efficiency at every reference point: list of (point, model)."""
    cfg = cfg or ConverterConfig()
    ops = operating_points or REFERENCE_OPERATING_POINTS
    rows = []
    for pt in efficiency_table():
        f_s, mode = ops[pt.P_in]
        rows.append((pt, efficiency(cfg, pt.V_in, pt.V_out, pt.P_in, f_s, mode)))
    return rows


_CAL_NAMES = ("rc", "rd", "k", "kn", "kp", "kph", "el", "ehp", "pq", "pz", "cn", "f10", "f100", "f1m")


def _cal_build(base: ConverterConfig, logp, vth):
    q = np.exp(logp)
    rc, rd, k, kn, kp, kph, el, ehp, pq, pz, cn = q[:11]
    s5 = base.r_on[Mode.LOW]["S5"]

    def r_on(scale):
        return {"S1": rc * scale / 2, "S3": rc * scale / 2, "S2": rd * scale, "S4": 0.0, "S5": s5}

    cfg = replace(
        base,
        r_on={Mode.LOW: r_on(1.0), Mode.HIGH: r_on(k)},
        drive_energy={Mode.LOW: el, Mode.HIGH: el + ehp},
        quiescent_power=pq,
        zcd_power=pz,
        c_node=cn,
        s4_kn=kn,
        s4_kp={Mode.LOW: kp, Mode.HIGH: kp + kph},
        s4_vth=vth,
    )
    f_s = dict(zip(_REFERENCE, np.concatenate([[20e3], q[11:]])))
    return cfg, f_s


def _cal_start(cfg: ConverterConfig, ops):
    lo, hi = cfg.r_on[Mode.LOW], cfg.r_on[Mode.HIGH]
    rc = lo["S1"] + lo["S3"]
    vals = [
        rc, lo["S2"], (hi["S1"] + hi["S3"]) / rc, cfg.s4_kn, cfg.s4_kp[Mode.LOW],
        cfg.s4_kp[Mode.HIGH] - cfg.s4_kp[Mode.LOW], cfg.drive_energy[Mode.LOW],
        cfg.drive_energy[Mode.HIGH] - cfg.drive_energy[Mode.LOW], cfg.quiescent_power,
        cfg.zcd_power, cfg.c_node,
    ] + [ops[P][0] for P in list(_REFERENCE)[1:]]
    return np.log(np.maximum(vals, 1e-30))


@dataclass(frozen=True)
class Calibration:
    config: ConverterConfig
    operating_points: dict
    residuals: np.ndarray

    @property
    def max_error_points(self) -> float:
        return float(np.max(np.abs(self.residuals)) * 100)


def calibrate_loss_model(base: ConverterConfig | None = None, modes=None, max_nfev: int = 200) -> Calibration:
    """Least-squares fit of the loss parameters to :func:`efficiency_table`.

    Starts from ``base`` (default: the shipped calibration) and refines the
    on-resistances, drive energies, quiescent/ZCD power, node capacitance and
    the switching frequency of the 10 uW, 100 uW and 1 mW curves. The S4
    threshold and the per-curve modes are held fixed. Points where the
    simulator leaves DCM count as a 50-point error.
    """
    base = base or ConverterConfig()
    modes = modes or {P: m for P, (_, m) in REFERENCE_OPERATING_POINTS.items()}
    ops0 = {P: (REFERENCE_OPERATING_POINTS[P][0], modes[P]) for P in _REFERENCE}
    p0 = _cal_start(base, ops0)
    vth = base.s4_vth
    f_lo, f_hi = math.log(20e3), math.log(1e6)
    lb = np.full(p0.size, -np.inf)
    ub = np.full(p0.size, np.inf)
    lb[-3:], ub[-3:] = f_lo, f_hi
    ub[2] = 0.0  # high-power mode never has more on-resistance
    p0 = np.clip(p0, lb + 1e-9, ub - 1e-9)
    table = efficiency_table()

    def resid(p):
        cfg, f_s = _cal_build(base, p, vth)
        out = []
        for pt in table:
            try:
                eta = efficiency(cfg, pt.V_in, pt.V_out, pt.P_in, f_s[pt.P_in], modes[pt.P_in])
            except SimulationError:
                eta = pt.efficiency - 0.5
            out.append(eta - pt.efficiency)
        return np.array(out)

    fit = least_squares(resid, p0, bounds=(lb, ub), max_nfev=max_nfev, x_scale=1.0)
    cfg, f_s = _cal_build(base, fit.x, vth)
    ops = {P: (float(f_s[P]), Mode(modes[P])) for P in _REFERENCE}
    return Calibration(cfg, ops, resid(fit.x))
