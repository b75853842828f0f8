"""Antenna/electronics interface: passive voltage boost, boosting-network
resonance and conjugate-mismatch accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantities import ComplexImpedance

#: Boost approximation is trusted while R_A < X_A / VALIDITY_RATIO.
VALIDITY_RATIO = 10.0


@dataclass(frozen=True)
class AntennaPort:
    R_A: float
    X_A: float
    P_av: float

    def __post_init__(self):
        if not self.R_A > 0:
            raise ValueError("antenna resistance R_A must be positive")
        if self.P_av < 0:
            raise ValueError("available power must be non-negative")


@dataclass(frozen=True)
class BoostNetwork:
    L_A: float
    R_A: float
    C_D: float
    C_B: float
    C_RT: float
    L_C: float

    def __post_init__(self):
        for name in ("L_A", "R_A", "C_D", "C_B", "C_RT", "L_C"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def C_VT(self) -> float:
        """Total tuning capacitance seen by the antenna inductance."""
        return self.C_D + self.C_B + self.C_RT


@dataclass(frozen=True)
class BoostedVoltage:
    volts: float
    valid: bool


def boosted_load_voltage(port: AntennaPort, validity_ratio: float = VALIDITY_RATIO) -> BoostedVoltage:
    """Peak load voltage of a conjugate-matched high-Q antenna interface.

    Uses the high-Q approximation ``sqrt(2 P_av) X_A / sqrt(R_A)``. ``valid``
    is False once ``R_A >= X_A / validity_ratio``.
    """
    v = math.sqrt(2.0 * port.P_av) * port.X_A / math.sqrt(port.R_A)
    return BoostedVoltage(v, port.R_A < abs(port.X_A) / validity_ratio)


def matched_load_voltage_exact(port: AntennaPort) -> float:
    """Peak load voltage from a full solve of the matched series circuit.

    The antenna is a source ``V_s`` behind ``R_A + jX_A`` with available power
    ``V_s^2 / (8 R_A)``, loaded by the conjugate ``R_A - jX_A``.
    """
    v_s = math.sqrt(8.0 * port.P_av * port.R_A)
    z_a = complex(port.R_A, port.X_A)
    z_l = z_a.conjugate()
    return abs(v_s * z_l / (z_a + z_l))


def resonance(net: BoostNetwork) -> float:
    """Resonant frequency of the antenna inductance with C_VT.

    The choke L_C only provides the DC path and does not enter here.
    """
    return 1.0 / (2.0 * math.pi * math.sqrt(net.L_A * net.C_VT))


def required_inductance(f0: float, C_VT: float) -> float:
    if not (f0 > 0 and C_VT > 0):
        raise ValueError("f0 and C_VT must be positive")
    return 1.0 / ((2.0 * math.pi * f0) ** 2 * C_VT)


def boost_gain_at(net: BoostNetwork, f: float) -> complex:
    """Voltage across C_VT per volt of antenna EMF, from the series RLC divider."""
    w = 2.0 * math.pi * f
    z_c = 1.0 / (1j * w * net.C_VT)
    return z_c / (net.R_A + 1j * w * net.L_A + z_c)


def power_transfer_factor(Z_src: ComplexImpedance, Z_load: ComplexImpedance) -> float:
    """Fraction of the available source power delivered to ``Z_load``."""
    if not Z_src.resistance > 0:
        raise ValueError("source resistance must be positive")
    if Z_load.resistance < 0:
        raise ValueError("load resistance must be non-negative")
    total = complex(Z_src) + complex(Z_load)
    denom = abs(total) ** 2
    if denom == 0:
        return 0.0
    return float(np.clip(4.0 * Z_src.resistance * Z_load.resistance / denom, 0.0, 1.0))
