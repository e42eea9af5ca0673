import math

import numpy as np
import pytest

from sidex.info import GridSpec
from sidex.sccsi import SccsiProblem, eta_lower, eta_sp, eta_upper, point_to_point_exponent

FAST = GridSpec(resolution=8, cond_resolution=4, refine_rounds=0)


def test_problem_validation():
    with pytest.raises(ValueError):
        SccsiProblem(np.array([[0.5, 0.5]]), -0.1, 0.2)
    with pytest.raises(ValueError):
        SccsiProblem(np.array([0.5, 0.5]), 0.1, 0.2)


def test_p2p_closed_form_binary():
    # D(q||p) at the q with h(q) = r1
    from scipy.optimize import brentq
    from sidex.info import binary_entropy, binary_kl
    r1 = 0.75
    q = brentq(lambda t: binary_entropy(t) - r1, 0.11, 0.5)
    assert point_to_point_exponent(np.array([0.89, 0.11]), r1) == pytest.approx(binary_kl(q, 0.11), abs=1e-10)
    assert point_to_point_exponent(np.array([0.89, 0.11]), 0.3) == 0.0


def test_p2p_ternary_grid_agrees_with_brute_force():
    p = np.array([0.7, 0.2, 0.1])
    r1 = 1.3
    from sidex.info import entropy, kl_divergence, simplex_grid
    grid = simplex_grid(3, 120)
    feas = [kl_divergence(q, p) for q in grid if entropy(q) >= r1]
    assert point_to_point_exponent(p, r1) <= min(feas) + 1e-9
    assert point_to_point_exponent(p, r1) >= min(feas) - 5e-3


def test_eta_lower_infinite_at_full_rate():
    p = np.full((2, 2), 0.25)
    assert eta_lower(SccsiProblem(p, 1.0, 0.0), FAST).value == math.inf


def test_eta_lower_zero_below_conditional_entropy():
    p = np.array([[0.25, 0.25], [0.25, 0.25]])
    assert eta_lower(SccsiProblem(p, 0.5, 0.5, 2), FAST).value == pytest.approx(0.0, abs=1e-7)


def test_eta_upper_requires_positive_joint():
    with pytest.raises(ValueError):
        eta_upper(SccsiProblem(np.array([[0.5, 0.0], [0.25, 0.25]]), 0.5, 0.2, 2), FAST)


def test_upper_below_sphere_packing_small():
    p = np.array([[0.4, 0.1], [0.15, 0.35]])
    prob = SccsiProblem(p, 0.8, 0.2, 2)
    g = GridSpec(resolution=8, cond_resolution=8)
    assert eta_upper(prob, g).value <= eta_sp(prob, g).value + 1e-9


def test_report_carries_witnesses():
    p = np.array([[0.4, 0.1], [0.15, 0.35]])
    rep = eta_lower(SccsiProblem(p, 0.9, 0.3, 2), FAST)
    assert "channel_s_given_y" in rep.witnesses
    obj = rep.to_obj()
    assert set(obj) == {"value", "witnesses", "grid", "refined"}
