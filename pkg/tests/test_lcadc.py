import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wsnkit.lcadc import (
    Direction, Event, LevelCrossingConfig, PdmConfig, PdmOverflowError, Pulse,
    backscatter_envelope, burst_cycles, decode_waveform, dense_crossing_count, energy, envelope,
    lc_sample, pdm_decode, pdm_encode,
)
from wsnkit.quantities import Waveform

LC = LevelCrossingConfig(lsb=0.1)
PDM = PdmConfig()


def test_ramp_three_levels():
    t = np.linspace(0, 1e-6, 1001)
    w = Waveform(t[1] - t[0], 0.05 + 0.3 * t / 1e-6)  # 0.05 -> 0.35 crosses 0.1, 0.2, 0.3
    ev = lc_sample(w, LC)
    assert [e.direction for e in ev] == [Direction.UP] * 3
    times = [e.time for e in ev]
    assert times == sorted(times)
    # interpolated crossing times match the analytic ones
    assert np.allclose(times, [(lvl - 0.05) / 0.3 * 1e-6 for lvl in (0.1, 0.2, 0.3)], rtol=1e-9)


def test_constant_input_no_events():
    assert lc_sample(Waveform(1e-9, np.full(100, 0.123)), LC) == []


def test_sine_matches_dense_oracle():
    f0, A, off = 100e3, 0.43, 0.01
    fs = 100e6
    t = np.arange(int(fs / f0) + 1) / fs
    sig = lambda tt: off + A * np.sin(2 * math.pi * f0 * tt)
    ev = lc_sample(Waveform(1 / fs, sig(t)), LC)
    ups = sum(e.direction is Direction.UP for e in ev)
    downs = len(ev) - ups
    assert ups == downs
    assert (ups, downs) == dense_crossing_count(sig, 0.0, t[-1], LC)


@given(st.integers(0, 2 ** 32 - 1))
def test_bandlimited_event_count_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    fs = 50e6
    freqs = rng.uniform(10e3, 300e3, 3)
    amps = rng.uniform(0.05, 0.3, 3)
    phases = rng.uniform(0, 2 * math.pi, 3)
    off = rng.uniform(-0.5, 0.5)
    sig = lambda tt: off + sum(a * np.sin(2 * math.pi * f * tt + p) for a, f, p in zip(amps, freqs, phases))
    t = np.arange(2000) / fs
    x = sig(t)
    ev = lc_sample(Waveform(1 / fs, x), LC)
    # oracle on the same samples (sampling defines the signal here)
    ups, downs = dense_crossing_count(lambda tt: np.interp(tt, t, x), t[0], t[-1], LC, n=2000)
    assert (sum(e.direction is Direction.UP for e in ev), sum(e.direction is Direction.DOWN for e in ev)) == (ups, downs)


def test_hysteresis_suppresses_chatter():
    x = 0.1 + 0.004 * np.sin(np.linspace(0, 20 * math.pi, 2000))
    w = Waveform(1e-9, x)
    assert len(lc_sample(w, LC)) > 10
    assert len(lc_sample(w, LevelCrossingConfig(lsb=0.1, hysteresis=0.01))) <= 1
    with pytest.raises(ValueError):
        LevelCrossingConfig(lsb=0.1, hysteresis=0.1)


def test_single_pulses():
    assert pdm_encode([Event(0.0, Direction.UP)]) == [Pulse(0.0, 40e-9)]
    assert pdm_encode([Event(0.0, Direction.DOWN)]) == [Pulse(0.0, 80e-9)]
    assert pdm_encode([]) == []


def test_overflow_lists_dropped_events():
    evs = [Event(0.0, Direction.DOWN), Event(50e-9, Direction.UP)]
    with pytest.raises(PdmOverflowError) as exc:
        pdm_encode(evs)
    assert exc.value.dropped == [evs[1]]
    with pytest.raises(ValueError):
        pdm_encode([Event(1.0, Direction.UP), Event(0.0, Direction.UP)])


def test_pdm_config_invariants():
    with pytest.raises(ValueError):
        PdmConfig(t_up=40e-9, t_down=40e-9)
    assert PDM.threshold == pytest.approx(60e-9)


def test_empty_envelope_and_guard():
    w = backscatter_envelope([], duration=100e-9)
    assert np.all(w.samples == 0)
    with pytest.raises(ValueError):
        backscatter_envelope([], sample_rate=3e9)


def test_cycle_count_of_up_burst():
    w = backscatter_envelope([Pulse(5e-9, 40e-9)], PDM, sample_rate=20e9, duration=60e-9)
    assert burst_cycles(w) == pytest.approx(402e6 * 40e-9, abs=1.0)


def test_down_up_energy_ratio():
    up = envelope([Pulse(0.0, 40e-9)], 10e9)
    down = envelope([Pulse(0.0, 80e-9)], 10e9)
    assert energy(down) / energy(up) == pytest.approx(2.0, abs=1e-6)


def _stream(rng, n):
    t, evs = 0.0, []
    for _ in range(n):
        d = Direction.UP if rng.random() < 0.5 else Direction.DOWN
        evs.append(Event(t, d))
        t += PDM.width(d) + rng.uniform(1e-9, 200e-9)
    return evs


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 40))
def test_round_trip_through_waveform(seed, n):
    evs = _stream(np.random.default_rng(seed), n)
    pulses = pdm_encode(evs)
    for a, b in zip(pulses, pulses[1:]):
        assert a.start + a.width <= b.start
    gate = envelope(pulses, 10e9)
    rec = decode_waveform(gate)
    assert pdm_decode(rec) == [e.direction for e in evs]
