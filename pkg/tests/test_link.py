import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import c

from wsnkit.link import LinkGeometry, REFERENCE_GEOMETRIES, friis_gain, received_psd, two_ray_gain
from wsnkit.quantities import PSD_FLOOR_DBM, Spectrum


def test_no_reflection_is_friis():
    f = np.linspace(100e6, 3e9, 50)
    for d in (0.1, 1.0, 10.0):
        g = two_ray_gain(LinkGeometry(d, 1.0, gamma=0.0), f)
        assert np.allclose(g, (c / f / (4 * math.pi * d)) ** 2, rtol=1e-12, atol=0)
        assert np.allclose(g, friis_gain(d, f), rtol=1e-12, atol=0)


def test_half_wavelength_path_difference_adds():
    geom = LinkGeometry(1.0, 1.0, gamma=-1.0)
    lam = 2 * (geom.r2 - geom.r1)
    f = c / lam
    oracle = (lam / (4 * math.pi) * (1 / geom.r1 + 1 / geom.r2)) ** 2
    assert two_ray_gain(geom, f) == pytest.approx(oracle, rel=1e-9)


def test_grazing_cancellation():
    g = [two_ray_gain(LinkGeometry(10.0, h), 500e6) for h in (1e-2, 1e-3, 1e-4)]
    assert g[0] > g[1] > g[2]
    assert g[2] < 1e-6 * friis_gain(10.0, 500e6)


@given(st.floats(0.05, 100), st.floats(0.01, 50), st.floats(-1, 1), st.floats(1e6, 1e10))
def test_triangle_bound(d, h, gamma, f):
    geom = LinkGeometry(d, h, gamma)
    lam = c / f
    bound = (lam / (4 * math.pi) * (1 / geom.r1 + 1 / geom.r2)) ** 2
    assert two_ray_gain(geom, f) <= bound * (1 + 1e-12)


def test_geometry_invariants():
    with pytest.raises(ValueError):
        LinkGeometry(0.0, 1.0)
    with pytest.raises(ValueError):
        LinkGeometry(1.0, 1.0, gamma=-1.5)
    assert len(REFERENCE_GEOMETRIES) == 6


def test_received_psd_zero_gain_is_floor():
    tx = Spectrum(1e6, np.full(50, -40.0))
    rx = received_psd(tx, LinkGeometry(1.0, 1e-12, gamma=-1.0))
    assert np.all(rx.bins == PSD_FLOOR_DBM)
    assert rx.same_grid(tx)


def test_received_psd_per_bin_scaling():
    tx = Spectrum(10e6, np.full(100, -41.3))
    geom = LinkGeometry(1.0, 10.0)
    rx = received_psd(tx, geom)
    f = tx.freq[1:]
    expected = -41.3 + 10 * np.log10(two_ray_gain(geom, f))
    assert np.allclose(rx.bins[1:], np.maximum(expected, PSD_FLOOR_DBM), atol=1e-9)
    assert rx.bins[0] == PSD_FLOOR_DBM


def test_matching_grid_mismatch_raises():
    tx = Spectrum(1e6, np.zeros(10))
    with pytest.raises(ValueError):
        received_psd(tx, LinkGeometry(1.0, 1.0), matching=Spectrum(2e6, np.zeros(10)))
    same = received_psd(tx, LinkGeometry(1.0, 1.0), matching=Spectrum(1e6, np.zeros(10)))
    assert np.allclose(same.bins, received_psd(tx, LinkGeometry(1.0, 1.0)).bins)
