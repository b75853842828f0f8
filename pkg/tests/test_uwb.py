import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wsnkit.quantities import Spectrum, Waveform, psd_estimate
from wsnkit.uwb import (
    AliasingError, LputNetwork, MaskSpec, Stimulus, antenna_voltage, antenna_voltage_termwise,
    antenna_voltage_tf, band_power_fraction, branch_impedances, default_mask, energy_per_pulse,
    mask_check, nodal_antenna_voltage, pulse_report, rms_of_peak_deviation, rolloff, synth_pulse,
    synth_pulse_state_space, waveform_pulse_energy,
)

NET = LputNetwork()
STIM = Stimulus()


def _rand_net(rng, spread=2.0, **kw):
    base = LputNetwork()
    vals = {k: getattr(base, k) * spread ** rng.uniform(-1, 1)
            for k in ("R_S", "L", "C", "C_F", "C_L", "R_A", "C_A", "L_A")}
    vals.update(kw)
    return LputNetwork(**vals)


def _va_oracle(net, f, vip=1.0):
    """Direct complex arithmetic on the T-network expression."""
    s = 2j * math.pi * f
    zpa = (net.R_S + s * net.L) / (s * s * net.L * net.C + s * net.R_S * net.C + 1)
    zf = 1 / (s * net.C_F)
    za = 1 / (1 / net.R_A + s * net.C_A + 1 / (s * net.L_A))
    zpc = za + 1 / (s * net.C_L)
    den = zpc * zf + 2 * zpa * zpc + zpa * zf + zpa * zpa
    return vip / (s * s * net.L * net.C + s * net.R_S * net.C + 1) * zf * za / den


def test_branch_impedances_at_dc():
    za, zb, zc = branch_impedances(NET, 0.0)
    assert za == pytest.approx(NET.R_S)
    assert math.isinf(abs(zb)) and math.isinf(abs(zc))


def test_branch_A_at_LC_frequency():
    f0 = 1 / (2 * math.pi * math.sqrt(NET.L * NET.C))
    w0 = 2 * math.pi * f0
    za, _, _ = branch_impedances(NET, f0)
    assert za == pytest.approx((NET.R_S + 1j * w0 * NET.L) / (1j * w0 * NET.R_S * NET.C), rel=1e-9)


@given(st.floats(1e6, 1e10))
def test_branch_B_minus_A_is_CF(f):
    za, zb, _ = branch_impedances(NET, f)
    assert zb - za == pytest.approx(1 / (2j * math.pi * f * NET.C_F), rel=1e-9)


def test_rational_matches_direct_arithmetic_and_nodal(rng):
    for _ in range(20):
        net = _rand_net(rng)
        f = rng.uniform(1e6, 5e9, 20)
        rat = antenna_voltage(net, f)
        assert np.allclose(rat, _va_oracle(net, f), rtol=1e-9, atol=0)
        assert np.allclose(rat, antenna_voltage_termwise(net, f), rtol=1e-9, atol=0)
        nod = nodal_antenna_voltage(net, f, 1.0, -1.0)
        assert np.max(np.abs(rat - nod) / np.abs(nod)) < 1e-9


def test_CF_limits():
    f = np.array([100e6, 500e6, 1e9, 3e9])
    shorted = LputNetwork(C_F=1e3)
    assert np.all(np.abs(antenna_voltage(shorted, f)) < 1e-12)
    open_ = LputNetwork(C_F=1e-30)
    s = 2j * math.pi * f
    za, _, zc = branch_impedances(NET, f)
    z_ant = 1 / (1 / NET.R_A + s * NET.C_A + 1 / (s * NET.L_A))
    div = 1 / (s * s * NET.L * NET.C + s * NET.R_S * NET.C + 1)
    limit = div * z_ant / (zc + za)
    assert np.allclose(antenna_voltage(open_, f), limit, rtol=1e-9)


def test_differential_null_as_ZF_vanishes():
    f = 700e6
    mags = [abs(antenna_voltage(LputNetwork(C_F=c), f)) for c in (1e-11, 1e-9, 1e-7, 1e-5)]
    assert all(b < a for a, b in zip(mags, mags[1:]))
    assert mags[-1] < 1e-6 * mags[0]


def test_high_frequency_suppression_relative_to_single_ended():
    f = np.geomspace(1e9, 1e12, 40)
    diff = np.abs(nodal_antenna_voltage(NET, f, 1.0, -1.0))
    single = np.abs(nodal_antenna_voltage(NET, f, 1.0, 0.0))
    ratio = diff / single
    assert np.all(ratio < 1.0)
    assert ratio[0] < 0.1  # differential null near 1 GHz
    # both fall off at the same asymptotic order; the ratio settles to a constant
    assert ratio[-1] == pytest.approx(ratio[-2], rel=1e-3)


def test_asymmetric_tf_refused():
    with pytest.raises(ValueError):
        antenna_voltage_tf(LputNetwork(mismatch=0.05))


def test_zero_stimulus_gives_zero_pulse():
    w = synth_pulse(NET, Stimulus(amplitude=0.0), 20e9, 1 / 3.3e6)
    assert np.all(w.samples == 0)


def test_default_pulse_amplitude():
    w = synth_pulse(NET, STIM, 20e9, 1 / 3.3e6)
    assert w.peak_to_peak() == pytest.approx(0.14, abs=0.005)


def test_ifft_vs_state_space(rng):
    for _ in range(3):
        net = _rand_net(rng, spread=1.5)
        a = synth_pulse(net, STIM, 20e9, 60e-9)
        b = synth_pulse_state_space(net, STIM, 20e9, 60e-9)
        assert rms_of_peak_deviation(a, b) <= 0.02


def test_skewed_drive_uses_nodal_path_and_matches_state_space():
    stim = Stimulus(skew=0.1e-9)
    a = synth_pulse(NET, stim, 20e9, 60e-9)
    b = synth_pulse_state_space(NET, stim, 20e9, 60e-9)
    assert rms_of_peak_deviation(a, b) <= 0.02


def test_aliasing_guard():
    with pytest.raises(AliasingError):
        synth_pulse(NET, Stimulus(rise_time=0.05e-9), 2e9, 1 / 3.3e6)


def _flat_mask(level=-41.3):
    return MaskSpec((0.0, 2e9), (level, level))


def test_mask_check_margins():
    psd = Spectrum(10e6, np.full(100, -51.3))
    v = mask_check(_flat_mask(), psd)
    assert v.passed and v.worst_margin_db == pytest.approx(10.0)
    bins = np.full(100, -51.3)
    bins[37] = -40.3
    v = mask_check(_flat_mask(), Spectrum(10e6, bins))
    assert not v.passed
    assert v.worst_margin_db == pytest.approx(-1.0)
    assert v.worst_frequency == pytest.approx(370e6)
    with pytest.raises(ValueError):
        mask_check(MaskSpec((5e9, 6e9), (0.0, 0.0)), psd)


def test_mask_spec_invariants_and_bundled_mask():
    with pytest.raises(ValueError):
        MaskSpec((1.0, 1.0), (0.0, 0.0))
    m = default_mask()
    assert m.at(500e6) == pytest.approx(-41.3)
    assert m.at(1.2e9) == pytest.approx(-65.3)


def test_mask_from_csv(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("# comment\nfrequency_hz,limit_dbm\n0,-30\n1e9,-50\n")
    m = MaskSpec.from_csv(p)
    assert m.at(0.5e9) == pytest.approx(-40.0)


def test_rolloff_flat_and_second_order():
    assert rolloff(Spectrum(1e6, np.full(2000, -50.0)), 500e6, 1e9).drop_db == 0.0
    f = np.arange(20000) * 1e6
    fc = 10e6
    h2 = 1 / (1 + (f / fc) ** 2) ** 2  # |1/(1+s/wc)^2|^2
    psd = Spectrum(1e6, 10 * np.log10(h2))
    r = rolloff(psd, 4e9, 8e9)
    assert r.db_per_octave == pytest.approx(40 * math.log10(2), rel=1e-3)
    assert r.db_per_octave == pytest.approx(12.0, abs=0.1)
    with pytest.raises(ValueError):
        rolloff(psd, 8e9, 4e9)


def test_default_pulse_report():
    rep = pulse_report(NET, STIM, default_mask())
    assert rep.verdict.passed
    assert rep.rolloff.drop_db >= 25.0
    assert rep.band_fraction >= 0.8
    assert 250e6 <= rep.peak_frequency <= 750e6
    # null above 1 GHz: at least 25 dB under the in-band peak
    peak = np.max(rep.psd.bins)
    assert peak - rep.psd.at(1e9) >= 25.0


def test_mismatch_degrades_rolloff_monotonically():
    drops = [pulse_report(LputNetwork(mismatch=e), STIM, default_mask()).rolloff.drop_db
             for e in (0.0, 0.01, 0.02, 0.05)]
    assert all(b < a for a, b in zip(drops, drops[1:]))


def test_energy_per_pulse():
    assert energy_per_pulse(0.28e-3, 3.3e6) == pytest.approx(84.85e-12, rel=1e-3)
    assert energy_per_pulse(0.28e-3, 3.3e6) == pytest.approx(85e-12, rel=5e-3)
    assert energy_per_pulse(0.0, 3.3e6) == 0.0


def test_waveform_energy_matches_psd_route():
    w = synth_pulse(NET, STIM, 20e9, 1 / 3.3e6)
    e_wave = waveform_pulse_energy(w, 3.3e6)
    oracle = np.sum(w.samples ** 2) * w.dt / 50.0
    assert e_wave == pytest.approx(oracle, rel=1e-9)
    p_avg = psd_estimate(w, 3.3e6).total_power()
    assert energy_per_pulse(p_avg, 3.3e6) == pytest.approx(e_wave, rel=0.01)


def test_band_power_fraction_bounds():
    psd = Spectrum(1e6, np.full(100, -50.0))
    assert band_power_fraction(psd, 0.0, 1e9) == pytest.approx(1.0)
    assert band_power_fraction(psd, 10e6, 19.5e6) == pytest.approx(0.1)
