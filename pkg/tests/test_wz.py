import math

import numpy as np
import pytest

from sidex.info import GridSpec, conditional_entropy, kl_divergence
from sidex.wz import (FunctionalProblem, WzProblem, all_maps, blahut_arimoto, g_d, hamming,
                      marton_binary_hamming, rwz, theta_lower, theta_upper, xi_exponents)

FAST = GridSpec(resolution=8, cond_resolution=4, refine_rounds=0)


def test_problem_validation():
    with pytest.raises(ValueError):
        WzProblem(np.full((2, 2), 0.25), 0.3, 0.1, np.ones((3, 2)))
    with pytest.raises(ValueError):
        WzProblem(np.full((2, 2), 0.25), 0.3, 0.1, -hamming(2))


def test_all_maps_count():
    assert len(all_maps(2, 2, 2)) == 16


def test_g_d_branches():
    p = np.array([[0.4, 0.1], [0.1, 0.4]])
    w = np.eye(2)
    q = p[:, :, None] * w[:, None, :]  # Z = X, so the nominal joint itself
    f = np.array([[0, 1], [0, 1]])  # xhat = z
    # distortion 0 < delta and R >= I(X;Z): divergence 0 plus binning penalty [R - I(X;Z) + I(Y;Z)]^+
    i_yz = 1.0 - 0.7219280948873623
    assert g_d(q, p, w, f, 0.1, 1.0, hamming(2)) == pytest.approx(i_yz, abs=1e-12)
    # deep in the binning regime the penalty clips at zero
    assert g_d(q, p, w, f, 0.1, 0.5, hamming(2)) == pytest.approx(0.0, abs=1e-12)
    # R > I(X;Z): the codeword is sent without binning, no error event
    assert g_d(q, p, w, f, 0.1, 1.5, hamming(2)) == math.inf
    # xhat = not z: distortion 1 >= delta, the divergence branch
    assert g_d(q, p, w, np.array([[1, 0], [1, 0]]), 0.1, 1.0, hamming(2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        g_d(q, p, np.array([[0.5, 0.5], [0.5, 0.5]]), f, 0.1, 1.0, hamming(2))


def test_blahut_arimoto_distortion_decreases_with_slope():
    q = np.array([0.5, 0.5])
    d = hamming(2)
    e1 = float(np.sum(q[:, None] * blahut_arimoto(q, d, 1.0) * d))
    e2 = float(np.sum(q[:, None] * blahut_arimoto(q, d, 4.0) * d))
    assert e2 < e1


def test_rwz_independent_equals_rd():
    # Y independent of X: R_WZ = R(D) = 1 - h(D) for a uniform bit
    p = np.outer([0.5, 0.5], [0.5, 0.5])
    from sidex.info import binary_entropy
    v = rwz(p, 0.1, hamming(2), GridSpec(resolution=8, cond_resolution=20), 2)
    assert v == pytest.approx(1 - binary_entropy(0.1), abs=1e-9)


def test_theta_lower_zero_when_rate_is_short():
    p = np.array([[0.4, 0.1], [0.1, 0.4]])
    assert theta_lower(WzProblem(p, 0.1, 0.1, hamming(2), 2), FAST).value == pytest.approx(0.0, abs=1e-6)


def test_theta_lower_close_to_marton_for_independent_side_info():
    px = np.array([0.89, 0.11])
    p = np.outer(px, [0.5, 0.5])
    v = theta_lower(WzProblem(p, 0.5, 0.05, hamming(2), 2), GridSpec(resolution=16, cond_resolution=8)).value
    ref = marton_binary_hamming(px, 0.5, 0.05)
    assert v == pytest.approx(ref, rel=0.1)


def test_theta_upper_at_least_lower():
    p = np.array([[0.4, 0.1], [0.1, 0.4]])
    prob = WzProblem(p, 0.5, 0.1, hamming(2), 2)
    lo = theta_lower(prob, FAST).value
    up = theta_upper(prob, GridSpec(resolution=32, cond_resolution=20)).value
    assert up >= lo - 1e-6


def test_xi_ordering():
    p = np.array([[0.3, 0.05], [0.05, 0.3], [0.2, 0.1]])
    prob = FunctionalProblem(p, np.array([0, 1, 1]), 0.6)
    res = xi_exponents(prob, GridSpec(resolution=8))
    assert res.xi_lower_unconstrained <= res.xi_lower + 1e-7
    assert res.xi_lower <= res.xi_upper + 1e-7
    assert res.xi_upper >= 0
