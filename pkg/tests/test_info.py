import math

import numpy as np
import pytest

from sidex.info import (CondDist, FiniteDist, GridSpec, JointDist, binary_entropy, binary_kl, compose,
                        composition_counts, conditional_entropy, decompose, empirical_joint_type, entropy,
                        enumerate_simplex, kl_divergence, mutual_information, simplex_grid, channel_grid)


def test_dist_validation():
    with pytest.raises(ValueError):
        FiniteDist(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        FiniteDist(np.array([1.2, -0.2]))
    with pytest.raises(ValueError):
        CondDist(np.array([[0.5, 0.5], [0.2, 0.7]]))
    j = JointDist(np.array([[0.4, 0.1], [0.1, 0.4]]))
    with pytest.raises(ValueError):
        j.probs[0, 0] = 1.0


def test_json_round_trip():
    j = JointDist(np.array([[0.4, 0.1], [0.1, 0.4]]))
    text = j.to_json()
    assert '"axis_sizes": [2, 2]' in text or '"axis_sizes":[2,2]' in text
    assert np.array_equal(JointDist.from_json(text).probs, j.probs)


def test_entropy_values():
    assert entropy(np.array([0.5, 0.5])) == pytest.approx(1.0, abs=1e-15)
    assert entropy(np.array([1.0, 0.0])) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.4999162, abs=1e-6)


def test_kl_support_mismatch_is_inf():
    assert kl_divergence(np.array([0.5, 0.5]), np.array([1.0, 0.0])) == math.inf
    assert kl_divergence(np.array([1.0, 0.0]), np.array([0.5, 0.5])) == pytest.approx(1.0)
    assert binary_kl(0.575, 0.5) == pytest.approx(0.0162917373768143, abs=1e-13)


def test_compose_decompose_round_trip():
    rng = np.random.default_rng(3)
    p = rng.dirichlet(np.ones(3))
    v = rng.dirichlet(np.ones(4), size=3)
    j = compose(p, v)
    m, c = decompose(j)
    assert np.allclose(m.probs, p) and np.allclose(c.rows, v)


def test_decompose_zero_row_is_uniform():
    m, c = decompose(np.array([[0.5, 0.5], [0.0, 0.0]]))
    assert np.allclose(c.rows[1], [0.5, 0.5])


def test_conditional_entropy_rejects_overlap():
    j = np.full((2, 2), 0.25)
    with pytest.raises(ValueError):
        conditional_entropy(j, 0, [0])


def test_grids_are_exact():
    assert len(composition_counts(3, 4)) == math.comb(6, 2)
    g = simplex_grid(3, 7)
    assert np.all(composition_counts(3, 7).sum(1) == 7)
    assert np.allclose(g.sum(1), 1.0)
    assert all(abs(d.probs.sum() - 1) < 1e-15 for d in enumerate_simplex(2, 5))


def test_channel_grid_dedup_keeps_distinct_channels():
    full = channel_grid(2, 2, 4, dedup=False)
    red = channel_grid(2, 2, 4)
    assert len(full) == 25 and len(red) < len(full)
    def key(c):
        return tuple(sorted(tuple(col) for col in c.T))

    kept = [key(c) for c in red]
    assert len(set(kept)) == len(kept)
    assert {key(c) for c in full} == set(kept)


def test_empirical_joint_type():
    j = empirical_joint_type([0, 1, 1, 0], [1, 1, 0, 0], sizes=[2, 2])
    assert np.allclose(j.probs, 0.25)


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(resolution=0)
    with pytest.raises(ValueError):
        GridSpec(refine_shrink=1.0)


def test_mutual_information_independent_is_zero():
    assert mutual_information(np.outer([0.3, 0.7], [0.2, 0.8])) == pytest.approx(0.0, abs=1e-15)
