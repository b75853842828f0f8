"""Shared physical quantities: power units, impedances, waveforms, spectra
and rational transfer functions.

All values are SI unless the name says otherwise (``*_dbm``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Reference load for converting waveform voltages to power.
REFERENCE_LOAD = 50.0

#: Lowest value reported in a spectrum bin, in dBm per reference bandwidth.
PSD_FLOOR_DBM = -200.0

#: Default spectral reference bandwidth (FCC convention), Hz.
DEFAULT_REF_BW = 1e6


class NonFiniteResultError(ArithmeticError):
    """Raised when an evaluation lands on a pole."""


def dbm_to_watts(p_dbm):
    """Convert power in dBm to watts."""
    p_dbm = np.asarray(p_dbm, dtype=float)
    if not np.all(np.isfinite(p_dbm)):
        raise ValueError("power in dBm must be finite")
    out = 1e-3 * 10.0 ** (p_dbm / 10.0)
    return float(out) if out.ndim == 0 else out


def watts_to_dbm(p_w):
    """Convert power in watts to dBm. Zero maps to ``-inf``."""
    p_w = np.asarray(p_w, dtype=float)
    if np.any(p_w < 0):
        raise ValueError("power in watts must be non-negative")
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(p_w / 1e-3)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ComplexImpedance:
    resistance: float
    reactance: float = 0.0

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexImpedance":
        return cls(float(np.real(z)), float(np.imag(z)))

    @property
    def value(self) -> complex:
        return complex(self.resistance, self.reactance)

    def conjugate(self) -> "ComplexImpedance":
        return ComplexImpedance(self.resistance, -self.reactance)

    def __complex__(self) -> complex:
        return self.value


@dataclass(frozen=True)
class RationalTF:
    """Ratio of two real polynomials in ``s``, coefficients in ascending powers.

    ``num=[b0, b1, b2]`` means ``b0 + b1*s + b2*s**2``.
    """

    num: tuple
    den: tuple

    def __post_init__(self):
        num = np.atleast_1d(np.asarray(self.num, dtype=float))
        den = np.trim_zeros(np.atleast_1d(np.asarray(self.den, dtype=float)), "b")
        if den.size == 0:
            raise ValueError("denominator is identically zero")
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "num", tuple(num.tolist()))
        object.__setattr__(self, "den", tuple(den.tolist()))

    def __mul__(self, other: "RationalTF") -> "RationalTF":
        return RationalTF(
            np.polynomial.polynomial.polymul(self.num, other.num),
            np.polynomial.polynomial.polymul(self.den, other.den),
        )

    def normalized(self) -> "RationalTF":
        """Scale so the highest-order denominator coefficient is one."""
        lead = self.den[-1]
        return RationalTF(np.asarray(self.num) / lead, np.asarray(self.den) / lead)

    def at_s(self, s):
        s = np.asarray(s, dtype=complex)
        n = np.polynomial.polynomial.polyval(s, self.num)
        d = np.polynomial.polynomial.polyval(s, self.den)
        return n, d


def tf_eval(tf: RationalTF, f):
    """Evaluate ``tf`` at ``s = j*2*pi*f``.

    Raises :class:`NonFiniteResultError` when ``f`` sits on a pole.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    n, d = tf.at_s(2j * np.pi * f)
    if np.any(d == 0):
        raise NonFiniteResultError("transfer function has a pole on the jw axis here")
    out = n / d
    if not np.all(np.isfinite(out)):
        raise NonFiniteResultError("non-finite transfer function value")
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Waveform:
    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("sample period must be positive")
        x = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("waveform samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def time(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size * self.dt

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    def peak_to_peak(self) -> float:
        return float(np.ptp(self.samples)) if self.samples.size else 0.0


@dataclass(frozen=True)
class Spectrum:
    """One-sided PSD in dBm per ``ref_bw`` on a uniform grid starting at 0 Hz."""

    df: float
    bins: np.ndarray
    ref_bw: float = DEFAULT_REF_BW
    f0: float = 0.0

    def __post_init__(self):
        if not self.df > 0:
            raise ValueError("frequency step must be positive")
        if not self.ref_bw > 0:
            raise ValueError("reference bandwidth must be positive")
        b = np.asarray(self.bins, dtype=float)
        b.setflags(write=False)
        object.__setattr__(self, "bins", b)

    @property
    def freq(self) -> np.ndarray:
        return self.f0 + self.df * np.arange(self.bins.size)

    def power_watts(self) -> np.ndarray:
        """Power carried by each bin, in watts."""
        return 1e-3 * 10.0 ** (self.bins / 10.0) * (self.df / self.ref_bw)

    def total_power(self) -> float:
        return float(np.sum(self.power_watts()))

    def at(self, f) -> np.ndarray:
        """PSD value (dBm/ref_bw) linearly interpolated at ``f``."""
        return np.interp(f, self.freq, self.bins)

    def same_grid(self, other: "Spectrum") -> bool:
        return (
            self.bins.size == other.bins.size
            and np.isclose(self.df, other.df, rtol=1e-12)
            and np.isclose(self.f0, other.f0, rtol=1e-12, atol=1e-9)
            and np.isclose(self.ref_bw, other.ref_bw, rtol=1e-12)
        )


def power_to_bins(power_w: np.ndarray, df: float, ref_bw: float) -> np.ndarray:
    """Per-bin power (W) to dBm per ``ref_bw`` with the floor clamp applied."""
    density = np.asarray(power_w, dtype=float) * (ref_bw / df) / 1e-3
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(density)
    return np.maximum(out, PSD_FLOOR_DBM)


def psd_estimate(
    w: Waveform,
    prf: float,
    ref_bw: float = DEFAULT_REF_BW,
    load: float = REFERENCE_LOAD,
) -> Spectrum:
    """PSD of a pulse train repeating at ``prf``, one pulse taken from ``w``.

    The first ``floor(1/(prf*dt))`` samples hold one pulse. Its energy
    spectral density ``|X(f)|^2 / R`` times ``prf`` gives the average PSD of
    the train; the grid spacing is ``1/(n*dt)``. Summing the bins returns
    pulse energy times ``prf``, i.e. the train's average power (Parseval).
    """
    if not prf > 0:
        raise ValueError("prf must be positive")
    period = 1.0 / prf
    n = int(np.floor(period / w.dt * (1 + 1e-12)))
    if n < 1 or w.samples.size < n:
        raise ValueError(
            f"waveform spans {w.duration:g} s, shorter than one repetition "
            f"period {period:g} s"
        )
    x = w.samples[:n]
    X = np.fft.rfft(x) * w.dt  # V*s
    df = 1.0 / (n * w.dt)
    psd = 2.0 * np.abs(X) ** 2 * prf / load  # W/Hz, one-sided
    psd[0] /= 2.0
    if n % 2 == 0:
        psd[-1] /= 2.0
    return Spectrum(df=df, bins=power_to_bins(psd * df, df, ref_bw), ref_bw=ref_bw)
