import math

import numpy as np
import pytest

from sidex.gaussian import (GaussGrids, GaussProblem, cond_rd, cov3, g_g, gauss_kl, gauss_mi, kbar, kstar,
                            marton_gauss, mse, mse_gradient, sigma, theta_gauss_upper, two_sided_gauss)


def test_gauss_kl_basics():
    s = sigma(0.5)
    assert gauss_kl(s, s) == pytest.approx(0.0, abs=1e-15)
    assert gauss_kl(np.array([[2.0]]), np.array([[1.0]])) == pytest.approx(0.5 * (2 - math.log(2) - 1))
    with pytest.raises(ValueError):
        gauss_kl(np.array([[1.0, 2.0], [2.0, 1.0]]), s)


def test_kbar_block_and_psd():
    for sx2 in (0.3, 1.0, 2.5):
        for r in (-0.9, 0.0, 0.6):
            k = kbar(sx2, r, 0.7)
            assert np.array_equal(k[:2, :2], sigma(0.7))
            assert np.linalg.eigvalsh(k).min() > -1e-12


def test_marton_closed_form():
    assert marton_gauss(0.5, math.exp(-1.0)) == 0.0
    t = 0.5 * math.e
    assert marton_gauss(0.5, 0.5) == pytest.approx(0.5 * (t - math.log(t) - 1), abs=1e-15)
    assert marton_gauss(0.6, 0.5) > marton_gauss(0.5, 0.5)


def test_two_sided_example():
    u = 0.4 * math.exp(0.4) / 0.51
    assert two_sided_gauss(0.2, 0.4, 0.7) == pytest.approx(0.5 * (u - math.log(u) - 1), abs=1e-15)
    assert two_sided_gauss(0.3, 0.4, 0.0) == marton_gauss(0.3, 0.4)


def test_cond_rd():
    assert cond_rd(sigma(0.7), 0.4) == pytest.approx(0.5 * math.log(0.51 / 0.4), abs=1e-15)
    assert cond_rd(sigma(0.7), 10.0) == 0.0


def test_gauss_mi_and_mse():
    k = cov3(1.0, 1.0, 0.5, 0.6, 0.3)
    assert gauss_mi(k, ("x", "y")) == pytest.approx(-0.5 * math.log(0.75))
    assert mse(k, (0.0, 0.0)) == pytest.approx(1.0)


def test_g_g_error_free_branch():
    k = cov3(1.0, 1.0, 0.7, 0.9, 0.63)
    # R > I(X;Z) and the estimator meets the distortion: no error event
    assert g_g(k, (0.0, 0.9), GaussProblem(0.7, 0.4, 1.0)) == math.inf
    # R < I(X;Z): binning penalty [R - I(X;Z) + I(Y;Z)]^+ on top of the divergence
    v = g_g(k, (0.0, 0.9), GaussProblem(0.7, 0.4, 0.1))
    assert v >= 0 and math.isfinite(v)


def test_upper_rejects_low_rate():
    with pytest.raises(ValueError):
        theta_gauss_upper(GaussProblem(0.7, 0.4, 0.1))


def test_upper_close_to_closed_form():
    v = theta_gauss_upper(GaussProblem(0.7, 0.4, 0.3)).value
    assert v == pytest.approx(two_sided_gauss(0.3, 0.4, 0.7), rel=0.02)


def test_grid_construction_is_exact():
    g = GaussGrids()
    assert 1.0 in g.variances().tolist()
    assert 0.0 in g.correlations().tolist()
    assert g.correlations(nonneg=True).min() == 0.0


def test_kstar_is_psd():
    assert np.linalg.eigvalsh(kstar(0.3, 0.4, 0.7)).min() > 0
