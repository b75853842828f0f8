"""Level-crossing sampling, pulse-duration encoding of the crossing
direction, and the on-off-keyed backscatter envelope."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .quantities import Waveform


class Direction(str, Enum):
    UP = "UP"
    DOWN = "DOWN"


@dataclass(frozen=True)
class Event:
    time: float
    direction: Direction


class PdmOverflowError(ValueError):
    def __init__(self, dropped):
        self.dropped = list(dropped)
        super().__init__(
            f"{len(self.dropped)} event(s) would overlap the previous pulse: "
            + ", ".join(f"{e.direction.value}@{e.time:.3e}s" for e in self.dropped)
        )


@dataclass(frozen=True)
class LevelCrossingConfig:
    lsb: float = 0.1
    origin: float = 0.0
    hysteresis: float = 0.0

    def __post_init__(self):
        if not self.lsb > 0:
            raise ValueError("lsb must be positive")
        if not 0 <= self.hysteresis < self.lsb:
            raise ValueError("hysteresis must lie in [0, lsb)")

    def level(self, m: int) -> float:
        return self.origin + m * self.lsb


@dataclass(frozen=True)
class PdmConfig:
    t_up: float = 40e-9
    t_down: float = 80e-9
    carrier: float = 402e6
    L_S: float = 32e-9
    C_S: float = 4.9e-12

    def __post_init__(self):
        if not (self.t_up > 0 and self.t_down > 0):
            raise ValueError("pulse widths must be positive")
        if self.t_up == self.t_down:
            raise ValueError("t_up and t_down must differ")

    def width(self, d: Direction) -> float:
        return self.t_up if Direction(d) is Direction.UP else self.t_down

    @property
    def threshold(self) -> float:
        return 0.5 * (self.t_up + self.t_down)


def lc_sample(w: Waveform, cfg: LevelCrossingConfig) -> list:
    """Crossing events of a sampled input, times linearly interpolated.

    The sampler tracks the band ``[L_m, L_{m+1})`` containing the signal.
    It fires UP when the signal reaches ``L_{m+1}`` and DOWN when it drops
    below ``L_m``; after an event the threshold back across the level just
    crossed is moved by ``hysteresis``.
    """
    x = w.samples
    if x.size == 0:
        return []
    t = w.time
    h = cfg.hysteresis
    m = math.floor((x[0] - cfg.origin) / cfg.lsb)
    last = None
    events = []
    for i in range(1, x.size):
        while True:
            up = cfg.level(m + 1) + (h if last is Direction.DOWN else 0.0)
            down = cfg.level(m) - (h if last is Direction.UP else 0.0)
            if x[i] >= up:
                thr, d = up, Direction.UP
            elif x[i] < down:
                thr, d = down, Direction.DOWN
            else:
                break
            x0, x1 = x[i - 1], x[i]
            frac = (thr - x0) / (x1 - x0) if x1 != x0 else 1.0
            frac = min(max(frac, 0.0), 1.0)
            events.append(Event(float(t[i - 1] + frac * w.dt), d))
            m += 1 if d is Direction.UP else -1
            last = d
    return events


def dense_crossing_count(f, t0: float, t1: float, cfg: LevelCrossingConfig, n: int = 200001):
    """(ups, downs) counted from sign changes of ``f - level`` on a dense grid."""
    t = np.linspace(t0, t1, n)
    x = np.asarray(f(t), dtype=float)
    lo = math.floor((x.min() - cfg.origin) / cfg.lsb) - 1
    hi = math.ceil((x.max() - cfg.origin) / cfg.lsb) + 1
    ups = downs = 0
    for m in range(lo, hi + 1):
        above = x >= cfg.level(m)
        ch = np.diff(above.astype(np.int8))
        ups += int(np.sum(ch == 1))
        downs += int(np.sum(ch == -1))
    return ups, downs


@dataclass(frozen=True)
class Pulse:
    start: float
    width: float


def pdm_encode(events, cfg: PdmConfig = PdmConfig()) -> list:
    """One pulse per event, width set by direction.

    A pulse may not start before the previous one has ended; offending events
    are collected and reported in a :class:`PdmOverflowError`.
    """
    pulses, dropped = [], []
    busy_until = -math.inf
    prev_t = -math.inf
    for e in events:
        if e.time < prev_t:
            raise ValueError("events must be time-ordered")
        prev_t = e.time
        if e.time < busy_until:
            dropped.append(e)
            continue
        wd = cfg.width(e.direction)
        pulses.append(Pulse(e.time, wd))
        busy_until = e.time + wd
    if dropped:
        raise PdmOverflowError(dropped)
    return pulses


def pdm_decode(pulses, cfg: PdmConfig = PdmConfig()) -> list:
    """Direction of each pulse from its width."""
    short = Direction.UP if cfg.t_up < cfg.t_down else Direction.DOWN
    long_ = Direction.DOWN if short is Direction.UP else Direction.UP
    return [short if p.width < cfg.threshold else long_ for p in pulses]


def envelope(pulses, sample_rate: float, duration: float | None = None) -> Waveform:
    """0/1 gate, pulse edges rounded to the sample grid."""
    dt = 1.0 / sample_rate
    end = max((p.start + p.width for p in pulses), default=0.0)
    n = int(round((duration if duration is not None else end) * sample_rate))
    g = np.zeros(max(n, 0))
    for p in pulses:
        i0 = int(round(p.start * sample_rate))
        i1 = int(round((p.start + p.width) * sample_rate))
        g[max(i0, 0):min(i1, n)] = 1.0
    return Waveform(dt, g)


def backscatter_envelope(pulses, cfg: PdmConfig = PdmConfig(), sample_rate: float = 10e9,
                         duration: float | None = None) -> Waveform:
    """Unit carrier gated by the pulse train (on-off keying)."""
    if sample_rate < 8 * cfg.carrier:
        raise ValueError("sample rate must be at least 8x the carrier frequency")
    gate = envelope(pulses, sample_rate, duration)
    t = gate.time
    return Waveform(gate.dt, gate.samples * np.sin(2 * np.pi * cfg.carrier * t))


def decode_waveform(w: Waveform, cfg: PdmConfig = PdmConfig()) -> list:
    """Recover pulses from a 0/1 gate waveform by run lengths."""
    on = np.asarray(w.samples) != 0
    edges = np.diff(np.concatenate([[0], on.astype(np.int8), [0]]))
    starts = np.nonzero(edges == 1)[0]
    stops = np.nonzero(edges == -1)[0]
    return [Pulse(w.t0 + a * w.dt, (b - a) * w.dt) for a, b in zip(starts, stops)]


def burst_cycles(w: Waveform, cfg: PdmConfig = PdmConfig()) -> float:
    """Carrier cycles inside the bursts of ``w``, counted from positive-going zero crossings."""
    x = np.asarray(w.samples)
    return float(np.sum((x[:-1] <= 0) & (x[1:] > 0)))


def energy(w: Waveform) -> float:
    return float(np.sum(np.asarray(w.samples) ** 2) * w.dt)
