import math

import numpy as np
import pytest

from sidex.erasure import (BeConfig, _sym_coupling, be_exponent, distortion, erasure_channel, g1, g1_closed_form,
                           g2, g2_objective, natural_f, rd_function, source_joint, two_sided_exponent)
from sidex.info import binary_kl


def test_config_validation():
    with pytest.raises(ValueError):
        BeConfig(p=1.2)
    with pytest.raises(ValueError):
        BeConfig(kappa=0.5)


def test_tables():
    f = natural_f()
    assert f[2, 1] == 1 and f[1, 1] == 0 and f[0, 1] == -1 and f[1, 2] == 1
    d = distortion(100.0)
    assert d[0, 0] == 0 and d[0, 1] == 1 and d[0, 2] == 100
    assert source_joint(0.5).sum() == pytest.approx(1.0)
    assert np.allclose(erasure_channel(0.3).sum(1), 1.0)


def test_rd_function_clamps():
    assert rd_function(0.15, 0.5) == pytest.approx(0.35)
    assert rd_function(0.6, 0.5) == 0.0


def test_g1_matches_closed_form():
    cfg = BeConfig()
    for d in np.linspace(0.16, 1.0, 22):
        assert g1(float(d), cfg) == pytest.approx(g1_closed_form(float(d), cfg), abs=1e-12)
    assert g1(0.1, cfg) == math.inf


def test_g2_symmetric_optimum_is_consistent():
    cfg = BeConfig()
    for d in (0.2, 0.3, 0.5):
        v, args = g2(d, cfg, return_args=True)
        obj, ed = g2_objective(_sym_coupling(d, *args), d, cfg)
        assert obj == pytest.approx(v, abs=1e-12)
        assert ed <= cfg.delta_target + 1e-12


def test_g2_infinite_when_rate_exceeds_kept_fraction():
    assert g2(0.7, BeConfig()) == math.inf


def test_two_sided_anchor():
    cfg = BeConfig()
    assert two_sided_exponent(0.35, cfg) == 0.0
    assert two_sided_exponent(0.425, cfg) == pytest.approx(binary_kl(0.575, 0.5), abs=1e-15)
    with pytest.raises(ValueError):
        two_sided_exponent(0.9, cfg)


def test_be_exponent_small_grid():
    val, arg, curve = be_exponent(BeConfig(dgrid=0.05))
    assert len(curve) == 21
    assert val == max(min(c.g1, c.g2) for c in curve)
    assert 0.15 <= arg <= 0.3


@pytest.mark.parametrize("kappa", [20.0, 100.0, 500.0])
def test_kappa_sensitivity(kappa):
    # sign errors are never forced by the natural map, so kappa does not move the exponent
    val, _, _ = be_exponent(BeConfig(kappa=kappa, dgrid=0.05))
    ref, _, _ = be_exponent(BeConfig(dgrid=0.05))
    assert val == pytest.approx(ref, abs=1e-12)
