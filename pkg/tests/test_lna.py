import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wsnkit.lna import (
    InterfaceImpedance, LnaParams, lna_term, min_noise_factor, nf_sweep, optimum_R_A,
    optimum_R_A_numeric, required_gm,
)

P = LnaParams()  # g_m 366 uS, R_g 18, R_L 10k, gamma 1.1, delta 0


def test_lna_term_breakdown():
    g = Fraction(366, 10 ** 6)
    t1 = Fraction(11, 10) / g
    t2 = 4 / (g * g * 10000)
    assert float(t1) == pytest.approx(3005.5, abs=0.05)
    assert float(t2) == pytest.approx(2986.1, abs=0.05)
    assert lna_term(P) == pytest.approx(float(t1 + t2), rel=1e-14)
    assert lna_term(P) == pytest.approx(5991.5, abs=0.05)


def test_nf_anchor_exact_arithmetic():
    nf = min_noise_factor(P, InterfaceImpedance(10.0, 282.7))
    g = Fraction(366, 10 ** 6)
    F = 1 + Fraction(10) / Fraction(2827, 10) ** 2 * (Fraction(11, 10) / g + 4 / (g * g * 10000))
    assert nf.F == pytest.approx(float(F), rel=1e-13)
    assert nf.F == pytest.approx(1.7497, abs=1e-4)
    assert nf.F == pytest.approx(1.7495, abs=5e-4)  # quoted approximate value
    assert nf.NF_dB == pytest.approx(2.43, abs=0.01)
    assert nf.gate_term == 0.0
    assert nf.codesign_term == pytest.approx(10 / 282.7 ** 2)


def test_large_reactance_limit():
    assert min_noise_factor(P, InterfaceImpedance(10.0, 1e9)).NF_dB == pytest.approx(0.0, abs=1e-9)


def test_domain_errors_and_gamma_warning():
    with pytest.raises(ValueError):
        InterfaceImpedance(0.0, 100.0)
    with pytest.raises(ValueError):
        InterfaceImpedance(1.0, 0.0)
    with pytest.warns(UserWarning):
        LnaParams(gamma=3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        LnaParams(gamma=2 / 3)


def test_reactance_inductance_conversion():
    z = InterfaceImpedance.from_inductances(10.0, 0.0, 50e-9)
    assert z.X_A == pytest.approx(282.74, abs=0.01)
    assert z.implied_L_deg() == pytest.approx(50e-9)
    assert z.implied_L_deg(L_A=20e-9) == pytest.approx(30e-9)


def test_sweep_trends_and_practicality():
    R = [1.0, 2.0, 5.0, 10.0, 20.0]
    X = [50.0, 100.0, 200.0, 282.7, 400.0]
    rows = nf_sweep(P, R, X)
    grid = np.array([r.NF_dB for r in rows]).reshape(len(R), len(X))
    assert np.all(np.diff(grid, axis=1) < 0)  # increasing X lowers NF
    assert np.all(np.diff(grid, axis=0) > 0)  # increasing R raises NF
    by_x = {r.X_A: r.practical for r in rows if r.R_A == 1.0}
    assert by_x[282.7] and not by_x[400.0]
    rows = nf_sweep(P, [1.0, 5.0], [100.0], R_floor=2.0)
    assert [r.practical for r in rows] == [False, True]


def test_doubling_X_quarters_codesign():
    a = min_noise_factor(P, InterfaceImpedance(7.0, 150.0))
    b = min_noise_factor(P, InterfaceImpedance(7.0, 300.0))
    assert a.codesign_term / b.codesign_term == pytest.approx(4.0, rel=1e-14)


@given(st.floats(0.1, 200), st.floats(10, 1000), st.floats(0.0, 5.0))
def test_F_at_least_one(R, X, delta):
    nf = min_noise_factor(LnaParams(delta=delta), InterfaceImpedance(R, X))
    assert nf.F >= 1.0 and nf.NF_dB >= 0.0


def test_partial_derivative_signs_on_grid():
    R = np.linspace(0.5, 100, 50)
    X = np.linspace(20, 1000, 50)
    F = np.array([[min_noise_factor(P, InterfaceImpedance(r, x)).F for x in X] for r in R])
    assert np.all(np.diff(F, axis=1) < 0)
    assert np.all(np.diff(F, axis=0) > 0)


def test_interior_optimum_with_delta():
    p = LnaParams(delta=4.0)
    X = 282.7
    r_star = optimum_R_A(p, X)
    assert optimum_R_A_numeric(p, X) == pytest.approx(r_star, rel=1e-6)
    grid = np.linspace(0.1, 100, 2000)
    F = [min_noise_factor(p, InterfaceImpedance(r, X)).F for r in grid]
    k = int(np.argmin(F))
    assert 0 < k < grid.size - 1
    assert abs(grid[k] - r_star) <= grid[1] - grid[0]
    rows = nf_sweep(p, grid, [X])
    assert abs(min(rows, key=lambda r: r.NF_dB).R_A - r_star) <= grid[1] - grid[0]
    with pytest.raises(ValueError):
        optimum_R_A(P, X)


def test_required_gm_decreases_with_X2_over_R():
    F_t = 1.5
    prev = math.inf
    for X in (100.0, 150.0, 200.0, 300.0, 400.0):
        z = InterfaceImpedance(10.0, X)
        gm = required_gm(F_t, z)
        nf = min_noise_factor(LnaParams(g_m=gm), z)
        assert nf.F == pytest.approx(F_t, rel=1e-9)
        assert gm < prev
        prev = gm
