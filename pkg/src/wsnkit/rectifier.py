"""Behavioral model of a multi-stage charge-pump rectifier.

Efficiency is a parametric surface over input power and load; output
voltage follows from power balance on the resistive load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .interface import power_transfer_factor
from .quantities import ComplexImpedance


class PowerOrderingError(ValueError):
    """Input-power accountings are inconsistent with each other."""


def _raised_cosine(x, width):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < width, 0.5 * (1.0 + np.cos(np.pi * x / width)), 0.0)


@dataclass(frozen=True)
class PceSurface:
    """Separable efficiency surface in log10 power and log10 load.

    ``pce = peak * g(log10(P/P_opt), w_p) * g(log10(R/R_opt), w_r)`` with
    ``g`` a raised cosine of half-width ``w``. Zero outside
    ``[P_min, P_max]``.
    """

    peak_pce: float = 0.60
    P_opt: float = 10e-6
    R_opt: float = 820e3
    width_power: float = 2.5  # decades
    width_load: float = 1.5  # decades
    P_min: float = 10e-6
    P_max: float = 10 ** (-0.4) * 1e-3  # -4 dBm

    def __post_init__(self):
        if not 0 < self.peak_pce <= 1:
            raise ValueError("peak_pce must lie in (0, 1]")
        for name in ("P_opt", "R_opt", "width_power", "width_load", "P_min", "P_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.P_min >= self.P_max:
            raise ValueError("P_min must be below P_max")

    def in_range(self, P_in) -> np.ndarray:
        P_in = np.asarray(P_in, dtype=float)
        lo = P_in >= self.P_min * (1 - 1e-9)
        hi = P_in <= self.P_max * (1 + 1e-9)
        return lo & hi

    def __call__(self, P_in, R_L):
        P_in = np.asarray(P_in, dtype=float)
        R_L = np.asarray(R_L, dtype=float)
        gp = _raised_cosine(np.log10(P_in / self.P_opt), self.width_power)
        gr = _raised_cosine(np.log10(R_L / self.R_opt), self.width_load)
        return np.where(self.in_range(P_in), self.peak_pce * gp * gr, 0.0)


@dataclass(frozen=True)
class RectifierModel:
    n_stages: int = 5
    pce_surface: PceSurface = field(default_factory=PceSurface)
    C_RT: float = 17e-12
    # component table, kept as metadata
    components: dict = field(default_factory=lambda: {
        "C_C": 9e-12, "C_R1": 9.7e-12, "C_R2": 9.7e-12, "C_DC": 90e-15, "R_DC": 350e3,
        "M1_WL": "750u/0.2u", "M2_WL": "750u/0.2u",
    })
    mismatch_factor: float = 1.0

    def __post_init__(self):
        if int(self.n_stages) != self.n_stages or self.n_stages < 1:
            raise ValueError("n_stages must be a positive integer")
        if not 0 <= self.mismatch_factor <= 1:
            raise ValueError("mismatch_factor must lie in [0, 1]")

    @classmethod
    def with_mismatch(cls, Z_src: ComplexImpedance, Z_in: ComplexImpedance, **kw) -> "RectifierModel":
        """Model whose available input power is scaled by the port mismatch."""
        return cls(mismatch_factor=power_transfer_factor(Z_src, Z_in), **kw)


@dataclass(frozen=True)
class PceResult:
    pce: float
    out_of_range: bool


def _check_positive(P_in, R_L):
    if not (P_in > 0 and R_L > 0):
        raise ValueError("P_in and R_L must be positive")


def pce(model: RectifierModel, P_in: float, R_L: float) -> PceResult:
    """Power conversion efficiency at input power ``P_in`` into load ``R_L``."""
    _check_positive(P_in, R_L)
    p_eff = P_in * model.mismatch_factor
    surf = model.pce_surface
    ok = bool(surf.in_range(p_eff))
    val = float(surf(p_eff, R_L)) * model.mismatch_factor if ok else 0.0
    return PceResult(val, not ok)


def output_voltage(model: RectifierModel, P_in: float, R_L: float) -> float:
    """DC output voltage: ``V^2 / R_L = pce * P_in``."""
    eta = pce(model, P_in, R_L).pce
    return math.sqrt(eta * P_in * R_L)


def delivered_power(model: RectifierModel, P_in: float, R_L: float) -> float:
    return pce(model, P_in, R_L).pce * P_in


@dataclass(frozen=True)
class PceAccounting:
    pce_theoretical: float
    pce_antenna: float
    pce_circuit: float


def theoretical_input_power(V_A: float, Z_A: ComplexImpedance) -> float:
    """Power available from an open-circuit antenna voltage amplitude ``V_A``."""
    if not Z_A.resistance > 0:
        raise ValueError("antenna resistance must be positive")
    return V_A * V_A / (2.0 * Z_A.resistance)


def pce_accounting(delivered: float, V_A: float, Z_A: ComplexImpedance, P_ant_meas: float,
                   P_circuit: float, rtol: float = 1e-12) -> PceAccounting:
    """Efficiency against the three input-power definitions.

    Raises :class:`PowerOrderingError` unless
    ``P_circuit <= P_ant_meas <= P_theoretical``.
    """
    p_th = theoretical_input_power(V_A, Z_A)
    if not (delivered > 0 and P_ant_meas > 0 and P_circuit > 0 and p_th > 0):
        raise ValueError("all powers must be positive")
    if P_circuit > P_ant_meas * (1 + rtol) or P_ant_meas > p_th * (1 + rtol):
        raise PowerOrderingError(
            f"expected P_circuit <= P_antenna <= P_theoretical, got "
            f"{P_circuit:g} W, {P_ant_meas:g} W, {p_th:g} W"
        )
    return PceAccounting(delivered / p_th, delivered / P_ant_meas, delivered / P_circuit)


def sweep(model: RectifierModel, P_grid, R_grid):
    """Rows of (P_in, R_L, pce, V_out, out_of_range) over a grid."""
    rows = []
    for P in np.asarray(P_grid, dtype=float):
        for R in np.asarray(R_grid, dtype=float):
            res = pce(model, P, R)
            rows.append((P, R, res.pce, math.sqrt(res.pce * P * R), res.out_of_range))
    return rows
