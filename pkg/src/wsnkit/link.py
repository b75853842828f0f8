"""Two-ray propagation (direct plus one ground reflection) applied to a
transmitted PSD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0

from .quantities import PSD_FLOOR_DBM, Spectrum, power_to_bins


@dataclass(frozen=True)
class LinkGeometry:
    d: float
    h: float
    gamma: float = -1.0

    def __post_init__(self):
        if not (self.d > 0 and self.h > 0):
            raise ValueError("d and h must be positive")
        if abs(self.gamma) > 1:
            raise ValueError("|gamma| must not exceed 1")

    @property
    def r1(self) -> float:
        return self.d

    @property
    def r2(self) -> float:
        return float(np.hypot(self.d, 2.0 * self.h))


def two_ray_field(geom: LinkGeometry, f):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    lam = C0 / f
    k = 2 * np.pi / lam
    r1, r2 = geom.r1, geom.r2
    return lam / (4 * np.pi) * (np.exp(-1j * k * r1) / r1 + geom.gamma * np.exp(-1j * k * r2) / r2)


def two_ray_gain(geom: LinkGeometry, f):
    g = np.abs(two_ray_field(geom, f)) ** 2
    return float(g) if g.ndim == 0 else g


def friis_gain(d: float, f):
    lam = C0 / np.asarray(f, dtype=float)
    return (lam / (4 * np.pi * d)) ** 2


def received_psd(tx: Spectrum, geom: LinkGeometry, matching: Spectrum | None = None) -> Spectrum:
    """Scale each bin by the two-ray power gain. The DC bin carries no
    radiated power and is set to the floor. ``matching``, if given, is an
    extra per-bin gain in dB on the same grid."""
    f = tx.freq
    gain = np.zeros_like(f)
    pos = f > 0
    gain[pos] = two_ray_gain(geom, f[pos])
    p = tx.power_watts() * gain
    if matching is not None:
        if not tx.same_grid(matching):
            raise ValueError("matching spectrum grid differs from the transmitted spectrum")
        p = p * 10 ** (matching.bins / 10)
    bins = power_to_bins(p, tx.df, tx.ref_bw)
    bins[~pos] = PSD_FLOOR_DBM
    return Spectrum(tx.df, bins, tx.ref_bw, tx.f0)


def check_grid(a: Spectrum, b: Spectrum):
    if not a.same_grid(b):
        raise ValueError("spectra are on different frequency grids")


REFERENCE_GEOMETRIES = tuple((d, h) for d in (0.1, 1.0, 10.0) for h in (0.1, 10.0))
