"""Perturb-and-observe maximum power point tracker.

The controller actuates the oscillator bias code (hence the switching
frequency and the converter's input resistance) and observes a
square-root power metric from a differential-pair estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import dcdc
from .rectifier import RectifierModel, pce

CODE_MIN = 1
CODE_MAX = 50
I_B_STEP = 2e-9  # A per code
HZ_PER_AMP = 10e3 / 1e-9  # 10 kHz per nA
EPOCH_CLOCKS = 4096
WAIT_CLOCKS = 32

# controller consumption anchors (f_s, W)
_P_CTRL = ((20e3, 17.4e-9), (1e6, 278.5e-9))


class ProtocolError(RuntimeError):
    """po_step was called with an input that does not fit the current phase."""


@dataclass(frozen=True)
class EstimatorParams:
    K: float = 50e-6  # A/V^2
    r: float = 1.0 / 20.0  # V_d = r * V_in
    tail_gain: float = 1.0  # I_T per unit I_B

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not 0 < self.r <= 1:
            raise ValueError("divider ratio r must lie in (0, 1]")
        if not self.tail_gain > 0:
            raise ValueError("tail_gain must be positive")


def power_metric(V_in, I_B, p: EstimatorParams = EstimatorParams()):
    """Differential-pair output ``sqrt(2K) sqrt(I_T) V_d``."""
    V_in = np.asarray(V_in, dtype=float)
    I_B = np.asarray(I_B, dtype=float)
    if np.any(V_in < 0) or np.any(I_B < 0):
        raise ValueError("V_in and I_B must be non-negative")
    out = math.sqrt(2.0 * p.K) * np.sqrt(p.tail_gain * I_B) * (p.r * V_in)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FrequencyPoint:
    code: int
    I_B: float
    f_s: float
    clamped: bool = False


def frequency_map(code, code_min: int = CODE_MIN, code_max: int = CODE_MAX) -> FrequencyPoint:
    c = int(code)
    clamped = not code_min <= c <= code_max
    c = min(max(c, code_min), code_max)
    i_b = I_B_STEP * c
    return FrequencyPoint(c, i_b, i_b * HZ_PER_AMP, clamped)


def code_for_bias(I_B: float) -> int:
    return int(round(I_B / I_B_STEP))


@dataclass(frozen=True)
class ControllerPower:
    watts: float
    clamped: bool


def controller_power(f_s: float) -> ControllerPower:
    """Controller consumption, linear in f_s between the two anchors."""
    (f0, p0), (f1, p1) = _P_CTRL
    clamped = not f0 <= f_s <= f1
    f = min(max(f_s, f0), f1)
    return ControllerPower(p0 + (p1 - p0) * (f - f0) / (f1 - f0), clamped)


# --------------------------------------------------------------------------
# Controller state machine

class Phase(str, Enum):
    IDLE = "idle"
    SAMPLE1 = "sample1"
    PERTURB = "perturb"
    WAIT32 = "wait32"
    SAMPLE2 = "sample2"
    DECIDE = "decide"


_SAMPLING = (Phase.SAMPLE1, Phase.SAMPLE2)


@dataclass(frozen=True)
class MpptState:
    code: int = 10
    direction: int = 1
    held: float | None = None
    counter: int = 0
    phase: Phase = Phase.IDLE
    clamped: bool = False
    code_min: int = CODE_MIN
    code_max: int = CODE_MAX
    last_metric: float | None = None

    def __post_init__(self):
        if not self.code_min <= self.code <= self.code_max:
            raise ValueError(f"code {self.code} outside [{self.code_min}, {self.code_max}]")
        if self.direction not in (-1, 1):
            raise ValueError("direction must be +1 or -1")
        if not 0 <= self.counter < EPOCH_CLOCKS:
            raise ValueError("counter must lie in [0, 4095]")
        object.__setattr__(self, "phase", Phase(self.phase))

    @property
    def analog_on(self) -> bool:
        """Estimator, S&H and comparator are powered only around the samples."""
        return self.phase is not Phase.IDLE

    @property
    def needs_metric(self) -> bool:
        return self.phase in _SAMPLING


def po_step(state: MpptState, measured_metric: float | None = None) -> MpptState:
    """Advance the controller by one phase of its epoch.

    Sampling phases (``sample1``, ``sample2``) consume a metric; every other
    phase must be called without one. The epoch is: sample and hold at clock
    0, step the code one unit in the stored direction, wait 32 clocks,
    sample again, invert the direction if the metric fell (ties keep it),
    then sleep until the 12-bit counter wraps. A step blocked at the code
    limit reverses the direction.
    """
    ph = state.phase
    if ph in _SAMPLING and measured_metric is None:
        raise ProtocolError(f"phase {ph.value} needs a measured metric")
    if ph not in _SAMPLING and measured_metric is not None:
        raise ProtocolError(f"phase {ph.value} does not take a metric")

    if ph is Phase.IDLE:
        return replace(state, phase=Phase.SAMPLE1, counter=0)
    if ph is Phase.SAMPLE1:
        return replace(state, phase=Phase.PERTURB, held=float(measured_metric),
                       last_metric=float(measured_metric))
    if ph is Phase.PERTURB:
        target = state.code + state.direction
        code = min(max(target, state.code_min), state.code_max)
        clamped = code != target
        # a step blocked by the counter limit observes nothing; turn around
        direction = -state.direction if clamped else state.direction
        return replace(state, phase=Phase.WAIT32, code=code, clamped=clamped,
                       direction=direction, counter=1)
    if ph is Phase.WAIT32:
        return replace(state, phase=Phase.SAMPLE2, counter=1 + WAIT_CLOCKS)
    if ph is Phase.SAMPLE2:
        direction = -state.direction if measured_metric < state.held else state.direction
        return replace(state, phase=Phase.DECIDE, direction=direction,
                       last_metric=float(measured_metric), counter=2 + WAIT_CLOCKS)
    # DECIDE -> sleep for the rest of the epoch
    return replace(state, phase=Phase.IDLE, counter=EPOCH_CLOCKS - 1)


# --------------------------------------------------------------------------
# Plants and closed loop

@dataclass(frozen=True)
class PlantPoint:
    V_in: float
    R_in: float
    power: float


class ProfilePlant:
    """Synthetic plant: an arbitrary delivered-power value per code.

    ``V_in`` is reconstructed as ``sqrt(P R_in)`` with ``R_in`` the
    converter resistance at that code, so the metric tracks the profile.
    """

    def __init__(self, profile, T_ON: float = 50e-9, L: float = 220e-6, code_min: int = CODE_MIN):
        self.profile = np.asarray(profile, dtype=float)
        if np.any(self.profile < 0):
            raise ValueError("power profile must be non-negative")
        self.T_ON, self.L, self.code_min = T_ON, L, code_min

    def __call__(self, code: int) -> PlantPoint:
        fp = frequency_map(code)
        r_in = converter_input_resistance(fp.f_s, self.T_ON, self.L)
        p = float(self.profile[code - self.code_min])
        return PlantPoint(math.sqrt(p * r_in), r_in, p)


def converter_input_resistance(f_s: float, T_ON: float, L: float) -> float:
    """DCM buck-boost input resistance for a fixed ON time."""
    T = 1.0 / f_s
    return dcdc.input_resistance_buckboost(L, T_ON / T, T)


class HarvesterPlant:
    """Rectifier loaded by the converter's input resistance.

    ``P_rf`` is the RF power at the rectifier input. The default ON time
    places the rectifier's optimum load inside the code range.
    """

    def __init__(self, rectifier: RectifierModel | None = None, P_rf: float = 100e-6,
                 T_ON: float = 50e-9, L: float = 220e-6):
        self.rectifier = rectifier or RectifierModel()
        self.P_rf, self.T_ON, self.L = P_rf, T_ON, L

    def __call__(self, code: int) -> PlantPoint:
        fp = frequency_map(code)
        r_in = converter_input_resistance(fp.f_s, self.T_ON, self.L)
        p = pce(self.rectifier, self.P_rf, r_in).pce * self.P_rf
        return PlantPoint(math.sqrt(p * r_in), r_in, p)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    code: int
    f_s: float
    R_in: float
    power: float
    metric: float
    controller_power: float
    net_power: float
    clamped: bool


def _net_power(cfg, pt: PlantPoint, f_s: float, ctrl: float, V_out: float) -> float:
    if cfg is None or pt.power <= 0 or pt.V_in <= 0:
        return pt.power - ctrl
    try:
        eta = dcdc.efficiency(cfg, pt.V_in, V_out, pt.power, f_s, dcdc.Mode.LOW)
    except dcdc.SimulationError:
        return float("nan")
    return eta * pt.power - ctrl


def closed_loop_run(plant, estimator: EstimatorParams = EstimatorParams(), initial_code: int = 5,
                    epochs: int = 100, converter: dcdc.ConverterConfig | None = None,
                    V_out: float = 1.4, code_min: int = CODE_MIN, code_max: int = CODE_MAX) -> list:
    """Run the controller against ``plant`` for ``epochs`` epochs.

    ``plant(code)`` returns a :class:`PlantPoint`. Settling during the
    32-clock wait is taken as complete, so the second sample sees the plant
    at the perturbed code. With a ``converter`` config the net power also
    accounts for conversion efficiency into ``V_out``.
    """
    st = MpptState(code=initial_code, code_min=code_min, code_max=code_max)
    records = []

    def measure(code):
        pt = plant(code)
        return pt, power_metric(pt.V_in, frequency_map(code).I_B, estimator)

    for k in range(int(epochs)):
        st = po_step(st)  # wake
        _, m1 = measure(st.code)
        st = po_step(st, m1)
        st = po_step(st)  # perturb
        st = po_step(st)  # wait
        pt, m2 = measure(st.code)
        st = po_step(st, m2)
        st = po_step(st)  # sleep
        fp = frequency_map(st.code)
        ctrl = controller_power(fp.f_s).watts
        records.append(EpochRecord(k, st.code, fp.f_s, pt.R_in, pt.power, m2, ctrl,
                                   _net_power(converter, pt, fp.f_s, ctrl, V_out), st.clamped))
    return records


def settled_within(records, target: int, tol: int = 1):
    """First epoch after which every code stays within ``tol`` of ``target``; None if never."""
    codes = [r.code for r in records]
    for i in range(len(codes)):
        if all(abs(c - target) <= tol for c in codes[i:]):
            return i
    return None
