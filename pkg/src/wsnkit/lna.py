"""Noise factor of an inductively degenerated cascode LNA as a function of
the antenna/LNA interface impedance."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

DESIGN_FREQUENCY = 900e6
L_DEG_CEILING = 50e-9


@dataclass(frozen=True)
class LnaParams:
    g_m: float = 366e-6
    R_g: float = 18.0
    R_L: float = 10e3
    gamma: float = 1.1
    delta: float = 0.0
    C_gs: float | None = None
    C_ext: float | None = None
    L_deg: float | None = None

    def __post_init__(self):
        if not self.g_m > 0:
            raise ValueError("g_m must be positive")
        if not self.R_L > 0:
            raise ValueError("R_L must be positive")
        if self.R_g < 0 or self.delta < 0:
            raise ValueError("R_g and delta must be non-negative")
        if not 2 / 3 <= self.gamma <= 2:
            warnings.warn(f"gamma={self.gamma} outside the usual 2/3..2 band", stacklevel=2)


@dataclass(frozen=True)
class InterfaceImpedance:
    R_A: float
    X_A: float

    def __post_init__(self):
        if not self.R_A > 0:
            raise ValueError("R_A must be positive")
        if not self.X_A > 0:
            raise ValueError("X_A must be positive for an inductive interface")

    @classmethod
    def from_inductances(cls, R_A, L_A, L_deg, f=DESIGN_FREQUENCY):
        return cls(R_A, 2 * math.pi * f * (L_A + L_deg))

    def implied_L_deg(self, L_A: float = 0.0, f: float = DESIGN_FREQUENCY) -> float:
        return self.X_A / (2 * math.pi * f) - L_A


@dataclass(frozen=True)
class NoiseFactor:
    F: float
    NF_dB: float
    gate_term: float  # delta R_g / R_A
    codesign_term: float  # R_A / X_A^2, 1/ohm
    lna_term: float  # gamma/g_m + 4/(g_m^2 R_L), ohm


def lna_term(p: LnaParams) -> float:
    return p.gamma / p.g_m + 4.0 / (p.g_m * p.g_m * p.R_L)


def min_noise_factor(p: LnaParams, z: InterfaceImpedance) -> NoiseFactor:
    if not z.R_A > 0 or z.X_A == 0:
        raise ValueError("need R_A > 0 and X_A != 0")
    gate = p.delta * p.R_g / z.R_A
    co = z.R_A / (z.X_A * z.X_A)
    lt = lna_term(p)
    F = 1.0 + gate + co * lt
    return NoiseFactor(F, 10.0 * math.log10(F), gate, co, lt)


@dataclass(frozen=True)
class SweepRow:
    R_A: float
    X_A: float
    L_deg: float
    NF_dB: float
    practical: bool


def nf_sweep(p: LnaParams, R_grid, X_grid, L_A: float = 0.0, ceiling: float = L_DEG_CEILING,
             R_floor: float = 0.0, f: float = DESIGN_FREQUENCY) -> list:
    """NF over every (R_A, X_A) pair. ``practical`` is False when the implied
    degeneration inductance exceeds ``ceiling`` or R_A is below ``R_floor``."""
    rows = []
    for R in np.asarray(R_grid, dtype=float):
        for X in np.asarray(X_grid, dtype=float):
            z = InterfaceImpedance(R, X)
            l_deg = z.implied_L_deg(L_A, f)
            ok = l_deg <= ceiling and R >= R_floor
            rows.append(SweepRow(R, X, l_deg, min_noise_factor(p, z).NF_dB, ok))
    return rows


def optimum_R_A(p: LnaParams, X_A: float) -> float:
    """R_A minimizing F at fixed X_A when delta > 0 (closed form)."""
    if p.delta <= 0 or p.R_g <= 0:
        raise ValueError("an interior optimum needs delta > 0 and R_g > 0")
    return X_A * math.sqrt(p.delta * p.R_g / lna_term(p))


def optimum_R_A_numeric(p: LnaParams, X_A: float, bounds=(1e-3, 1e4)) -> float:
    res = minimize_scalar(lambda lr: min_noise_factor(p, InterfaceImpedance(math.exp(lr), X_A)).F,
                          bounds=tuple(map(math.log, bounds)), method="bounded",
                          options={"xatol": 1e-10})
    return math.exp(res.x)


def required_gm(F_target: float, z: InterfaceImpedance, p: LnaParams = LnaParams(),
                bracket=(1e-9, 10.0)) -> float:
    """Smallest g_m reaching ``F_target`` at interface ``z``."""
    def excess(gm):
        return min_noise_factor(LnaParams(gm, p.R_g, p.R_L, p.gamma, p.delta), z).F - F_target

    lo, hi = bracket
    if excess(hi) > 0:
        raise ValueError("target noise factor not reachable within the g_m bracket")
    return brentq(excess, lo, hi, xtol=1e-15, rtol=1e-13)
