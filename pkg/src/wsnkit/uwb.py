"""Low-power sub-GHz UWB transmitter: differential T-network model, pulse
synthesis, PSD metrics and spectral-mask checks.

Network (per branch): source ``Vip`` -> ``R_S`` -> ``L`` -> node ``VP``,
with ``C`` from ``VP`` to ground. ``C_F`` bridges ``VP+`` and ``VP-`` and
``C_L`` couples ``VP+`` into the antenna, a parallel ``R_A``/``C_A``/``L_A``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.linalg import expm

from .quantities import (
    DEFAULT_REF_BW,
    REFERENCE_LOAD,
    NonFiniteResultError,
    RationalTF,
    Spectrum,
    Waveform,
    psd_estimate,
    tf_eval,
)


class AliasingError(ValueError):
    pass


@dataclass(frozen=True)
class LputNetwork:
    """Element values of the differential transmitter.

    ``mismatch`` scales ``L`` and ``C`` of the negative branch by
    ``1 + mismatch``; zero gives the ideal symmetric network.
    """

    R_S: float = 1.05
    L: float = 3.92e-9
    C: float = 6.72e-12
    C_F: float = 9.42e-12
    C_L: float = 5.04e-12
    R_A: float = 50.0
    C_A: float = 2.0e-12
    L_A: float = 13.8e-9
    mismatch: float = 0.0

    def __post_init__(self):
        for name in ("R_S", "L", "C", "C_F", "C_L", "R_A", "C_A", "L_A"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.mismatch > -1:
            raise ValueError("mismatch must exceed -1")

    @property
    def symmetric(self) -> bool:
        return self.mismatch == 0.0

    @property
    def L_minus(self) -> float:
        return self.L * (1.0 + self.mismatch)

    @property
    def C_minus(self) -> float:
        return self.C * (1.0 + self.mismatch)


@dataclass(frozen=True)
class Stimulus:
    """Differential drive. ``Vip-`` mirrors ``Vip+`` delayed by ``skew``.

    ``shape='edge'`` is a single ramped step of each input per repetition;
    ``shape='pulse'`` is a rectangular pulse of ``width`` with ramped edges.
    """

    shape: str = "edge"
    amplitude: float = 0.15
    rise_time: float = 0.7e-9
    width: float = 5e-9
    skew: float = 0.0
    delay: float = 1e-9

    def __post_init__(self):
        if self.shape not in ("edge", "pulse"):
            raise ValueError("shape must be 'edge' or 'pulse'")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if not self.rise_time > 0:
            raise ValueError("rise_time must be positive")
        if self.shape == "pulse" and not self.width > self.rise_time:
            raise ValueError("pulse width must exceed the rise time")

    def _edges(self):
        """(start time, signed amplitude) of each ramp."""
        if self.shape == "edge":
            return [(self.delay, self.amplitude)]
        return [(self.delay, self.amplitude), (self.delay + self.width, -self.amplitude)]

    def derivative_spectrum(self, f, sign: float = 1.0, extra_delay: float = 0.0):
        """Fourier transform of the time derivative of one input."""
        w = 2 * np.pi * np.asarray(f, dtype=float)
        tr = self.rise_time
        x = w * tr / 2
        # ramp of height A over tr: A * sinc(w tr / 2) * e^{-jw(t0 + tr/2)}
        shape = np.sinc(x / np.pi)
        out = np.zeros_like(w, dtype=complex)
        for t0, a in self._edges():
            out += a * shape * np.exp(-1j * w * (t0 + extra_delay + tr / 2))
        return sign * out

    def value(self, t, sign: float = 1.0, extra_delay: float = 0.0):
        t = np.asarray(t, dtype=float) - extra_delay
        out = np.zeros_like(t)
        for t0, a in self._edges():
            out += a * np.clip((t - t0) / self.rise_time, 0.0, 1.0)
        return sign * out

    def breakpoints(self):
        pts = []
        for t0, _ in self._edges():
            pts += [t0, t0 + self.rise_time]
        pts += [p + self.skew for p in pts]
        return pts


@dataclass(frozen=True)
class MaskSpec:
    freq: tuple
    limit: tuple
    name: str = "mask"

    def __post_init__(self):
        f = np.asarray(self.freq, dtype=float)
        lim = np.asarray(self.limit, dtype=float)
        if f.size != lim.size or f.size < 2:
            raise ValueError("mask needs at least two (frequency, limit) breakpoints")
        if np.any(np.diff(f) <= 0):
            raise ValueError("mask breakpoints must be strictly increasing in frequency")
        object.__setattr__(self, "freq", tuple(f.tolist()))
        object.__setattr__(self, "limit", tuple(lim.tolist()))

    def at(self, f):
        return np.interp(f, self.freq, self.limit)

    @classmethod
    def from_csv(cls, path, name=None) -> "MaskSpec":
        path = Path(path)
        freqs, limits = [], []
        with path.open(newline="") as fh:
            rows = (r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#"))
            header = next(rows)
            if len(header) < 2:
                raise ValueError(f"{path}: expected 'frequency_hz,limit_dbm' header")
            for row in rows:
                freqs.append(float(row[0]))
                limits.append(float(row[1]))
        return cls(tuple(freqs), tuple(limits), name or path.stem)


def default_mask() -> MaskSpec:
    from importlib.resources import files

    return MaskSpec.from_csv(files("wsnkit.data") / "fcc_subghz_mask.csv")


# --------------------------------------------------------------------------
# Impedances and the closed-form antenna transfer

def _s(f):
    return 2j * np.pi * np.asarray(f, dtype=float)


def antenna_impedance(net: LputNetwork, f):
    s = _s(f)
    with np.errstate(divide="ignore"):
        y = 1.0 / net.R_A + s * net.C_A + 1.0 / (s * net.L_A)
    return 1.0 / y


def branch_impedances(net: LputNetwork, f):
    """(Z_pgA, Z_pgB, Z_pgC) seen from node P at frequency ``f``.

    At ``f = 0`` the capacitive branches B and C are open; they are returned
    as ``inf`` rather than raising.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    s = _s(f)
    z_a = (net.R_S + s * net.L) / (s * s * net.L * net.C + s * net.R_S * net.C + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_f = np.where(f > 0, 1.0 / np.where(f > 0, s * net.C_F, 1.0), np.inf)
        z_cl = np.where(f > 0, 1.0 / np.where(f > 0, s * net.C_L, 1.0), np.inf)
        z_ant = np.where(f > 0, antenna_impedance(net, np.where(f > 0, f, 1.0)), 0.0)
    z_b = z_a + z_f
    z_c = z_ant + z_cl
    if f.ndim == 0:
        return complex(z_a), complex(z_b), complex(z_c)
    return z_a, z_b, z_c


def antenna_voltage_tf(net: LputNetwork) -> RationalTF:
    """Antenna voltage per volt of differential drive as one rational function.

    Built by clearing the denominators of the T-network expression
    ``Z_F Z_A / (Z_pgC Z_F + 2 Z_pgA Z_pgC + Z_pgA Z_F + Z_pgA^2)`` times the
    source divider ``1/(s^2 LC + s R_S C + 1)``. Requires a symmetric network.
    """
    if not net.symmetric:
        raise ValueError("closed-form transfer assumes matched branches; use nodal_antenna_voltage")
    p_div = [1.0, net.R_S * net.C, net.L * net.C]  # s^2 LC + s R_S C + 1
    n_pa = [net.R_S, net.L]  # Z_pgA = n_pa / p_div
    n_f, d_f = [1.0], [0.0, net.C_F]  # Z_F = 1 / (s C_F)
    n_ant = [0.0, net.L_A * net.R_A]  # parallel R_A, C_A, L_A
    d_ant = [net.R_A, net.L_A, net.R_A * net.L_A * net.C_A]
    s_cl = [0.0, net.C_L]
    n_c = P.polyadd(P.polymul(s_cl, n_ant), d_ant)  # Z_pgC = n_c / (s C_L d_ant)
    d_c = P.polymul(s_cl, d_ant)

    p2 = P.polymul(p_div, p_div)
    den = P.polymul(P.polymul(n_c, n_f), p2)
    den = P.polyadd(den, 2.0 * P.polymul(P.polymul(n_pa, n_c), P.polymul(p_div, d_f)))
    den = P.polyadd(den, P.polymul(P.polymul(n_pa, n_f), P.polymul(p_div, d_c)))
    den = P.polyadd(den, P.polymul(P.polymul(n_pa, n_pa), P.polymul(d_c, d_f)))
    num = P.polymul(P.polymul(n_f, n_ant), P.polymul(p_div, s_cl))
    tf = RationalTF(num, den)
    if np.all(np.asarray(tf.den) == 0):
        raise ValueError("degenerate element values collapse the denominator")
    return tf.normalized()


def antenna_voltage(net: LputNetwork, f, Vip=1.0):
    """Antenna voltage phasor for differential drive amplitude ``Vip``."""
    if net.symmetric:
        return tf_eval(antenna_voltage_tf(net), f) * Vip
    return nodal_antenna_voltage(net, f, Vip, -Vip)


def antenna_voltage_termwise(net: LputNetwork, f, Vip=1.0):
    """Same quantity assembled term by term from the branch impedances."""
    f = np.asarray(f, dtype=float)
    s = _s(f)
    z_a, _, z_c = branch_impedances(net, f)
    z_f = 1.0 / (s * net.C_F)
    z_ant = antenna_impedance(net, f)
    div = 1.0 / (s * s * net.L * net.C + s * net.R_S * net.C + 1.0)
    d = z_c * z_f + 2 * z_a * z_c + z_a * z_f + z_a * z_a
    return Vip * div * z_f * z_ant / d


def nodal_antenna_voltage(net: LputNetwork, f, v_plus=1.0, v_minus=-1.0):
    """Antenna voltage from a nodal solve of the element-level circuit.

    Unknowns are the five internal node voltages (between R_S and L on each
    side, VP+, VP-, antenna). Independent of the closed-form reduction and
    valid for mismatched branches and arbitrary source phasors.
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    vp = np.broadcast_to(np.asarray(v_plus, dtype=complex), f.shape)
    vm = np.broadcast_to(np.asarray(v_minus, dtype=complex), f.shape)
    out = np.empty(f.shape, dtype=complex)
    g_s = 1.0 / net.R_S
    for i, fi in enumerate(f):
        if fi <= 0:
            out[i] = 0.0
            continue
        s = 2j * np.pi * fi
        y_lp, y_lm = 1 / (s * net.L), 1 / (s * net.L_minus)
        y_cp, y_cm = s * net.C, s * net.C_minus
        y_f, y_l = s * net.C_F, s * net.C_L
        y_ant = 1 / net.R_A + s * net.C_A + 1 / (s * net.L_A)
        # node order: m+, a (VP+), m-, b (VP-), t (antenna)
        Y = np.zeros((5, 5), dtype=complex)
        I = np.zeros(5, dtype=complex)

        def stamp(n1, n2, y):
            Y[n1, n1] += y
            if n2 is not None:
                Y[n2, n2] += y
                Y[n1, n2] -= y
                Y[n2, n1] -= y

        stamp(0, None, g_s)
        I[0] += g_s * vp[i]
        stamp(0, 1, y_lp)
        stamp(1, None, y_cp)
        stamp(2, None, g_s)
        I[2] += g_s * vm[i]
        stamp(2, 3, y_lm)
        stamp(3, None, y_cm)
        stamp(1, 3, y_f)
        stamp(1, 4, y_l)
        stamp(4, None, y_ant)
        out[i] = np.linalg.solve(Y, I)[4]
    return out


# --------------------------------------------------------------------------
# Time domain

def _retained_bandwidth(spec_mag, freqs, rel=1e-3):
    peak = spec_mag.max()
    if peak == 0:
        return 0.0
    idx = np.nonzero(spec_mag >= rel * peak)[0]
    return float(freqs[idx[-1]])


def synth_pulse(net: LputNetwork, stim: Stimulus, sample_rate: float, duration: float) -> Waveform:
    """Antenna voltage waveform by spectral multiplication and inverse FFT.

    The input derivative spectrum is multiplied by ``H(f)/(j 2 pi f)`` so a
    step that never returns still yields a compact, periodic response. The
    result is one period of the repetition implied by ``duration``.
    """
    n = int(round(duration * sample_rate))
    if n < 4:
        raise ValueError("duration too short for the sample rate")
    dt = 1.0 / sample_rate
    f = np.fft.rfftfreq(n, dt)
    fpos = f[1:]
    if net.symmetric and stim.skew == 0.0:
        h_pos = tf_eval(antenna_voltage_tf(net), fpos)
        d = stim.derivative_spectrum(fpos)
        spec_pos = h_pos / (2j * np.pi * fpos) * d
    else:
        h_p = nodal_antenna_voltage(net, fpos, 1.0, 0.0)
        h_m = nodal_antenna_voltage(net, fpos, 0.0, 1.0)
        d_p = stim.derivative_spectrum(fpos)
        d_m = stim.derivative_spectrum(fpos, sign=-1.0, extra_delay=stim.skew)
        spec_pos = (h_p * d_p + h_m * d_m) / (2j * np.pi * fpos)
    spec = np.concatenate([[0.0], spec_pos])
    f_ret = _retained_bandwidth(np.abs(spec), f)
    if f_ret > 0 and sample_rate < 4.0 * f_ret:
        raise AliasingError(
            f"sample rate {sample_rate:g} Hz is below 4x the retained bandwidth {f_ret:g} Hz"
        )
    x = np.fft.irfft(spec / dt, n)
    return Waveform(dt, x)


def state_space(net: LputNetwork):
    """Continuous-time (A, B, C) of the element-level circuit.

    States: i_L+, i_L-, v_VP+, v_VP-, v_ant, i_LA. Inputs: (Vip+, Vip-).
    Output: antenna voltage. The capacitor loops through C_F and C_L are
    handled by solving the node-charge equations with a capacitance matrix.
    """
    Cm = np.array(
        [
            [net.C + net.C_F + net.C_L, -net.C_F, -net.C_L],
            [-net.C_F, net.C_minus + net.C_F, 0.0],
            [-net.C_L, 0.0, net.C_A + net.C_L],
        ]
    )
    Cinv = np.linalg.inv(Cm)
    A = np.zeros((6, 6))
    B = np.zeros((6, 2))
    # inductor currents
    A[0, 0] = -net.R_S / net.L
    A[0, 2] = -1.0 / net.L
    B[0, 0] = 1.0 / net.L
    A[1, 1] = -net.R_S / net.L_minus
    A[1, 3] = -1.0 / net.L_minus
    B[1, 1] = 1.0 / net.L_minus
    # node currents into (VP+, VP-, ant): (i_L+, i_L-, -v_ant/R_A - i_LA)
    M = np.zeros((3, 6))
    M[0, 0] = 1.0
    M[1, 1] = 1.0
    M[2, 4] = -1.0 / net.R_A
    M[2, 5] = -1.0
    A[2:5, :] = Cinv @ M
    A[5, 4] = 1.0 / net.L_A
    C = np.zeros(6)
    C[4] = 1.0
    return A, B, C


def synth_pulse_state_space(net: LputNetwork, stim: Stimulus, sample_rate: float,
                            duration: float) -> Waveform:
    """Time-stepping reference: exact discretization for piecewise-linear inputs."""
    n = int(round(duration * sample_rate))
    dt = 1.0 / sample_rate
    A, B, C = state_space(net)
    ns, ni = B.shape
    # first-order hold: augment with input and its slope
    M = np.zeros((ns + 2 * ni, ns + 2 * ni))
    M[:ns, :ns] = A * dt
    M[:ns, ns:ns + ni] = B * dt
    M[ns:ns + ni, ns + ni:] = np.eye(ni)
    E = expm(M)
    Phi = E[:ns, :ns]
    G0 = E[:ns, ns:ns + ni]
    G1 = E[:ns, ns + ni:]
    t = np.arange(n + 1) * dt
    u = np.stack([stim.value(t), stim.value(t, sign=-1.0, extra_delay=stim.skew)], axis=1)
    x = np.zeros(ns)
    y = np.empty(n)
    for k in range(n):
        y[k] = C @ x
        du = u[k + 1] - u[k]
        x = Phi @ x + G0 @ u[k] + G1 @ du
    return Waveform(dt, y)


def rms_of_peak_deviation(a: Waveform, b: Waveform) -> float:
    """RMS difference of two waveforms relative to the peak magnitude of ``b``."""
    n = min(a.samples.size, b.samples.size)
    diff = a.samples[:n] - b.samples[:n]
    peak = np.max(np.abs(b.samples[:n]))
    return float(np.sqrt(np.mean(diff ** 2)) / peak) if peak > 0 else float(np.sqrt(np.mean(diff ** 2)))


# --------------------------------------------------------------------------
# Spectral metrics

@dataclass(frozen=True)
class MaskVerdict:
    passed: bool
    worst_margin_db: float
    worst_frequency: float

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def mask_check(spec: MaskSpec, psd: Spectrum) -> MaskVerdict:
    """Compare every PSD bin inside the mask span with the interpolated limit."""
    f = psd.freq
    inside = (f >= spec.freq[0]) & (f <= spec.freq[-1])
    if not np.any(inside):
        raise ValueError("spectrum and mask do not overlap")
    margin = spec.at(f[inside]) - psd.bins[inside]
    i = int(np.argmin(margin))
    worst = float(margin[i])
    return MaskVerdict(worst >= 0.0, worst, float(f[inside][i]))


@dataclass(frozen=True)
class Rolloff:
    drop_db: float
    db_per_octave: float


def rolloff(psd: Spectrum, f1: float, f2: float) -> Rolloff:
    if not f2 > f1:
        raise ValueError("f2 must exceed f1")
    fmax = psd.freq[-1]
    if not (psd.freq[0] <= f1 <= fmax and f2 <= fmax):
        raise ValueError("both frequencies must lie inside the spectrum")
    drop = float(psd.at(f1) - psd.at(f2))
    return Rolloff(drop, drop / np.log2(f2 / f1))


def band_power_fraction(psd: Spectrum, f_lo: float, f_hi: float) -> float:
    p = psd.power_watts()
    f = psd.freq
    total = p.sum()
    return float(p[(f >= f_lo) & (f <= f_hi)].sum() / total) if total > 0 else 0.0


def energy_per_pulse(power: float, prf: float) -> float:
    if power < 0 or not prf > 0:
        raise ValueError("power must be non-negative and prf positive")
    return power / prf


def waveform_pulse_energy(w: Waveform, prf: float, load: float = REFERENCE_LOAD) -> float:
    """Energy of one repetition period, integral of v^2/R."""
    n = int(np.floor(1.0 / (prf * w.dt) + 1e-9))
    if w.samples.size < n:
        raise ValueError("waveform shorter than one repetition period")
    x = w.samples[:n]
    return float(np.sum(x * x) * w.dt / load)


@dataclass(frozen=True)
class PulseReport:
    waveform: Waveform
    psd: Spectrum
    verdict: MaskVerdict
    rolloff: Rolloff
    band_fraction: float
    peak_frequency: float


def pulse_report(net: LputNetwork, stim: Stimulus, mask: MaskSpec, prf: float = 3.3e6,
                 sample_rate: float = 20e9, ref_bw: float = DEFAULT_REF_BW,
                 band=(0.25e9, 0.75e9)) -> PulseReport:
    """Synthesize one repetition, estimate its PSD and evaluate all metrics."""
    n = int(np.floor(sample_rate / prf))
    w = synth_pulse(net, stim, sample_rate, n / sample_rate)
    psd = psd_estimate(w, prf, ref_bw)
    return PulseReport(
        waveform=w,
        psd=psd,
        verdict=mask_check(mask, psd),
        rolloff=rolloff(psd, 500e6, 1e9),
        band_fraction=band_power_fraction(psd, *band),
        peak_frequency=float(psd.freq[int(np.argmax(psd.bins))]),
    )
