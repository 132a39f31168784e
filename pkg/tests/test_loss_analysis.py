import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treecluster.loss_analysis import (
    combine,
    eps_coh,
    eps_eff,
    eps_loss,
    mc_logic_error,
    mc_loss_oracle,
    r_indirect,
    timing,
)
from treecluster.protocol import TreeShape

S222 = TreeShape((2, 2, 2))
S353 = TreeShape((3, 5, 3))
S_BIG = TreeShape((6, 10, 9, 1))

shapes = st.lists(st.integers(1, 6), min_size=1, max_size=4).map(lambda b: TreeShape(tuple(b)))


def eps_loss_by_hand_222(eps):
    """Independent expansion for {2,2,2}: R_2 then R_1 by hand, then the closed form."""
    r2 = 1 - eps ** 2
    # R_1 uses R_3 = 0 and b_2 = 2
    r1 = 1 - (1 - (1 - eps) * (1 - eps) ** 2) ** 2
    ok = ((1 - eps + eps * r1) ** 2 - (eps * r1) ** 2) * (1 - eps + eps * r2) ** 2
    return 1 - ok, r1, r2


# ---------------------------------------------------------------- examples

def test_r_examples():
    R = r_indirect(S222, 0.1)
    assert R[2] == pytest.approx(0.99, abs=1e-15)
    assert R[1] == pytest.approx(0.926559, abs=1e-6)
    assert R[3] == R[4] == 0
    assert all(r == pytest.approx(1.0) for r in r_indirect(S222, 0.0)[:3])
    assert all(r == 0 for r in r_indirect(S222, 1.0))
    with pytest.raises(ValueError):
        r_indirect(S222, 1.5)


def test_eps_loss_examples():
    val, r1, r2 = eps_loss_by_hand_222(0.1)
    assert eps_loss(S222, 0.1) == pytest.approx(val, rel=1e-12)
    assert eps_loss(S222, 0.1) == pytest.approx(0.02517, abs=5e-6)
    assert r_indirect(S222, 0.1)[1] == pytest.approx(r1, rel=1e-12)
    assert eps_loss(S222, 0.0) == 0
    for eps in (0.0, 0.1, 0.37, 1.0):
        assert eps_loss(TreeShape((1,)), eps) == pytest.approx(eps, abs=1e-15)


def test_timing_examples():
    t = timing(S222)
    assert t.t_min == 38
    assert t.t_levels == [8, 10, 12, 8]
    assert t.delta_t[3] == 1 and t.delta_t[2] == 3
    assert timing(TreeShape((2, 2))).t_min == 15
    with pytest.raises(ValueError):
        timing(S222, 0)


@given(shapes, st.floats(0.01, 100))
def test_timing_linear_in_tph(shape, tph):
    base = timing(shape, 1.0)
    scaled = timing(shape, tph)
    assert scaled.t_min == pytest.approx(tph * base.t_min, rel=1e-12)
    assert scaled.t_min == pytest.approx(sum(scaled.t_levels), rel=1e-12)
    d = shape.depth
    assert scaled.delta_t[d] == pytest.approx(tph)
    assert scaled.delta_t[d - 1] == pytest.approx((shape.branches[d - 1] + 1) * tph)


def test_eps_coh_examples():
    assert eps_coh(S222, 1.0, math.inf) == 0
    assert eps_coh(S222, 1.0, 38.0) == pytest.approx(1 - math.exp(-1))
    assert eps_coh(S222, 1.0, 1e4) == pytest.approx(1 - math.exp(-0.0038), rel=1e-12)
    assert eps_coh(S222, 1.0, 1e4) == pytest.approx(0.003793, abs=1e-6)
    with pytest.raises(ValueError):
        eps_coh(S222, 1.0, 0)


def test_eps_eff_examples():
    b = eps_eff(S222, 0.1, 1.0, math.inf)
    assert b.eps_eff == b.eps_loss
    b = eps_eff(S222, 0.1, 1.0, 1e4)
    assert b.eps_eff == pytest.approx(1 - (1 - 0.025172) * (1 - 0.003793), abs=1e-5)
    assert b.eps_eff == pytest.approx(0.02887, abs=1e-5)
    assert b.t_min_over_tph == 38
    assert eps_eff(S222, 0.0).eps_eff == 0
    assert set(b.to_dict()) >= {"eps", "R", "eps_loss", "eps_coh", "eps_eff"}


# ---------------------------------------------------------------- properties

@settings(max_examples=80, deadline=None)
@given(shapes, st.floats(0, 1), st.floats(0, 1))
def test_r_monotone_in_eps(shape, e1, e2):
    lo, hi = sorted((e1, e2))
    r_lo, r_hi = r_indirect(shape, lo), r_indirect(shape, hi)
    for a, b in zip(r_lo, r_hi):
        assert 0 <= b <= a + 1e-12 <= 1 + 1e-12


@settings(max_examples=80, deadline=None)
@given(shapes, st.floats(0, 1), st.floats(1, 1e6), st.floats(0.1, 10))
def test_budget_probabilities(shape, eps, tc, tph):
    b = eps_eff(shape, eps, tph, tc)
    for v in (b.eps_loss, b.eps_coh, b.eps_eff):
        assert -1e-12 <= v <= 1 + 1e-12
    assert b.eps_eff == pytest.approx(combine(b.eps_loss, b.eps_coh))


def test_named_shapes_beat_bare_loss():
    for s in (S222, S353, S_BIG):
        assert eps_loss(s, 0.1) < 0.1


def test_threshold_at_sixty_percent():
    best = min(eps_loss(TreeShape(b), 0.6)
               for d in range(1, 5) for b in itertools.product(range(1, 7), repeat=d))
    assert best >= 0.5


def test_eps_coh_grows_along_nested_shapes():
    nested = [TreeShape((2,)), TreeShape((2, 2)), TreeShape((2, 2, 2)), TreeShape((2, 2, 2, 2))]
    vals = [eps_coh(s, 1.0, 1e3) for s in nested]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    nested = [TreeShape((3,)), TreeShape((3, 5)), TreeShape((3, 5, 3))]
    vals = [eps_coh(s, 1.0, 1e4) for s in nested]
    assert all(a < b for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------- Monte Carlo

def test_mc_loss_zero_eps():
    assert mc_loss_oracle(S222, 0.0, 1000) == (0.0, 0.0)
    with pytest.raises(ValueError):
        mc_loss_oracle(S222, 0.1, 0)


@pytest.mark.parametrize("shape", [S222, S353, TreeShape((2, 3))], ids=str)
@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_mc_loss_agrees_with_closed_form(shape, eps):
    est, se = mc_loss_oracle(shape, eps, 400_000, seed=11)
    assert abs(est - eps_loss(shape, eps)) <= 3 * se


def test_mc_loss_is_worker_independent():
    a = mc_loss_oracle(S222, 0.2, 50_000, seed=3, chunk=7_000, workers=1)
    b = mc_loss_oracle(S222, 0.2, 50_000, seed=3, chunk=7_000, workers=4)
    assert a == b


def test_mc_logic_examples():
    out = mc_logic_error(S222, 0.0, 1000)
    assert out["worst"]["estimate"] == 0
    with pytest.raises(ValueError):
        mc_logic_error(S222, 0.5, 10)


def test_mc_logic_bound_and_slope_222():
    eps = [1e-4, 1e-3, 1e-2]
    vals = [mc_logic_error(S222, e, 2_000_000, seed=5)["worst"]["estimate"] for e in eps]
    for e, v in zip(eps, vals):
        assert v <= 6 * e
    slope = np.polyfit(np.log10(eps), np.log10(vals), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.15)


def test_mc_logic_353():
    v = mc_logic_error(S353, 1e-3, 1_000_000, seed=5)["worst"]["estimate"]
    assert v <= 6e-3


def test_mc_logic_worker_independent():
    a = mc_logic_error(S222, 0.05, 30_000, seed=2, chunk=4_000, workers=1)
    b = mc_logic_error(S222, 0.05, 30_000, seed=2, chunk=4_000, workers=3)
    assert a == b


def test_ties_rule_matters_for_even_votes():
    # level-1 nodes of {2,1} have one child, so every vote has two members
    s = TreeShape((2, 1))
    strict = mc_logic_error(s, 0.1, 200_000, seed=1, ties_fail=True)["X"]["estimate"]
    lenient = mc_logic_error(s, 0.1, 200_000, seed=1, ties_fail=False)["X"]["estimate"]
    assert strict > lenient
