import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treecluster.loss_analysis import eps_coh, eps_loss, timing
from treecluster.optimizer import (
    CSV_COLUMNS,
    Optimizer,
    SearchConfig,
    batch_eps_loss,
    batch_t_min,
    coherence_error,
    enumerate_shapes,
    pareto_front,
    parse_grid,
    shape_reaches,
    sweep,
)
from treecluster.protocol import TreeShape

NAMED_SHAPES = [(2, 2, 2), (3, 5, 3), (6, 10, 9, 1)]


@pytest.fixture(scope="module")
def opt():
    return Optimizer()


@pytest.fixture(scope="module")
def small():
    return Optimizer(SearchConfig(max_depth=3, max_branch=6, max_photons=400))


def full_eff(o, eps, tc):
    loss = o.loss(eps)
    coh = coherence_error(o.table.t_min, tc)
    return 1 - (1 - loss) * (1 - coh)


# ---------------------------------------------------------------- enumeration

def test_enumeration_examples():
    got = [s.branches for s in enumerate_shapes(SearchConfig(max_depth=1, max_branch=3))]
    assert got == [(1,), (2,), (3,)]
    got = [s.branches for s in enumerate_shapes(SearchConfig(max_depth=2, max_branch=2))]
    assert got == [(1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2)]


def test_enumeration_count_matches_recount():
    cfg = SearchConfig(max_depth=3, max_branch=10, max_photons=2000)
    count = 0
    for a in range(1, 11):
        count += 1 + a <= 2000
        for b in range(1, 11):
            count += 1 + a + a * b <= 2000
            for c in range(1, 11):
                count += 1 + a + a * b + a * b * c <= 2000
    assert sum(1 for _ in enumerate_shapes(cfg)) == count
    cfg = SearchConfig(max_depth=3, max_branch=10, max_photons=100)
    count = sum(1 for d in range(1, 4) for b in np.ndindex(*(10,) * d)
                if TreeShape(tuple(x + 1 for x in b)).n_photons <= 100)
    assert sum(1 for _ in enumerate_shapes(cfg)) == count


def test_named_shapes_are_enumerated(opt):
    for s in NAMED_SHAPES:
        assert s in opt.table.index
    cfg = SearchConfig(max_depth=4, max_branch=10)
    found = {s.branches for s in enumerate_shapes(cfg)}
    assert set(NAMED_SHAPES) <= found


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(max_depth=0)
    cfg = SearchConfig()
    assert cfg.tph_gamma_r == pytest.approx(6.2 / 0.0014)
    assert cfg.tcoh_over_tph(cfg.tph_gamma_r * 10) == pytest.approx(10)


# ---------------------------------------------------------------- vectorised forms vs scalar forms

@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 16), min_size=1, max_size=5), st.floats(0, 1))
def test_batch_forms_match_scalar(b, eps):
    shape = TreeShape(tuple(b))
    row = np.zeros((1, 7), dtype=np.int64)
    row[0, : len(b)] = b
    depth = np.array([len(b)])
    assert batch_t_min(row, depth)[0] == pytest.approx(timing(shape).t_min, rel=1e-12)
    assert batch_eps_loss(row, depth, eps)[0] == pytest.approx(eps_loss(shape, eps), rel=1e-9, abs=1e-13)


def test_photon_counts_include_root(opt):
    i = opt.table.index[(2, 2, 2)]
    assert opt.table.n_photons[i] == 15
    assert opt.table.t_min[i] == 38


# ---------------------------------------------------------------- Pareto front

@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=30))
def test_pareto_front_matches_brute_force(pts):
    t = np.array([p[0] for p in pts], dtype=float)
    l = np.array([p[1] for p in pts], dtype=float)
    # a point is dropped only when another is no slower and strictly less lossy;
    # equal-loss slower points stay because with infinite coherence they tie
    # and may win the photon-count tie-break
    brute = [i for i in range(len(pts))
             if not any(t[j] <= t[i] and l[j] < l[i] for j in range(len(pts)))]
    assert list(pareto_front(t, l)) == brute


# ---------------------------------------------------------------- optimum

@settings(max_examples=25, deadline=None)
@given(st.floats(0, 0.6), st.floats(1.0, 1e8))
def test_optimum_dominates_every_shape(eps, tc):
    o = Optimizer(SearchConfig(max_depth=4, max_branch=8, max_photons=5000))
    best = o.best(eps, tc)
    eff = full_eff(o, eps, tc)
    assert best.eps_eff <= eff.min() + 1e-15
    assert best.eps_eff == pytest.approx(eff.min(), abs=1e-15)


def test_optimum_dominates_on_full_table(opt):
    for eps, tc in [(0.1, 1e4), (0.06, 3e5), (0.2, math.inf), (0.01, 50.0)]:
        assert opt.best(eps, tc).eps_eff <= full_eff(opt, eps, tc).min() + 1e-15


def test_tie_break_prefers_fewer_photons(small):
    # at eps = 0 with infinite coherence every shape has zero error
    c = small.best(0.0, math.inf)
    assert c.shape == (1,) and c.eps_eff == 0
    c = small.best(0.0, 1e3)
    assert c.shape == (1,)
    assert c.eps_eff == pytest.approx(eps_coh(TreeShape((1,)), 1.0, 1e3))


def test_candidate_fields_are_consistent(opt):
    c = opt.best_cohbw(0.06, 1.5e9)
    s = TreeShape(c.shape)
    assert c.n_photons == s.n_photons
    assert c.eps_loss == pytest.approx(eps_loss(s, 0.06), rel=1e-9, abs=1e-15)
    tc = SearchConfig().tcoh_over_tph(1.5e9)
    assert c.eps_coh == pytest.approx(eps_coh(s, 1.0, tc), rel=1e-9)
    assert c.label == str(s)


def test_monotone_grid(opt):
    eps = [0.01, 0.05, 0.1, 0.2, 0.3]
    cbs = [1e6, 1e7, 1e8, 1e9, 1e10, 1e11]
    res = sweep(eps, cbs, optimizer=opt)
    g = res.grid()
    assert np.all(np.diff(g, axis=0) >= -1e-15)  # non-decreasing in eps
    assert np.all(np.diff(g, axis=1) <= 1e-15)   # non-increasing in cohbw


def test_sweep_reproducible_and_parallel_safe(small):
    eps = [0.02, 0.1, 0.3]
    cbs = [1e7, 1e9]
    a = sweep(eps, cbs, optimizer=small)
    b = sweep(eps, cbs, optimizer=Optimizer(small.config), workers=3)
    assert a.cells == b.cells
    assert a.contour == b.contour
    assert list(a.rows()[0]) == list(CSV_COLUMNS)
    with pytest.raises(ValueError):
        sweep([], cbs, optimizer=small)


def test_size_curves(opt):
    caps = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 4096, 16384]
    blue = [opt.best_for_size(0.1, math.inf, c).eps_eff for c in caps]
    assert all(b <= a + 1e-15 for a, b in zip(blue, blue[1:]))
    assert blue[-1] < 1e-3 * blue[0]
    orange = [c.eps_eff for c in opt.size_curve(0.1, 1e4, caps)]
    k = int(np.argmin(orange))
    assert 0 < k < len(orange) - 1
    assert orange[-1] > orange[k]
    with pytest.raises(ValueError):
        opt.best_for_size(0.1, 1e4, 1)


def test_eps_zero_picks_single_photon(opt):
    for tc in (10.0, 1e4, math.inf):
        c = opt.best_for_size(0.0, tc, 1000)
        assert c.shape == (1,)


# ---------------------------------------------------------------- thresholds

def test_required_cohbw_at_six_percent(opt):
    cb = opt.min_cohbw(0.06)
    assert 1e9 / 3 <= cb <= 3e9
    assert opt.best_cohbw(0.06, cb).eps_eff <= 1e-3
    assert opt.best_cohbw(0.06, cb / 1.01).eps_eff > 1e-3


def test_named_shapes_reach_target(opt):
    eps = parse_grid("0.001:0.2:40")
    cbs = parse_grid("1e6:1e12:60")
    for s in NAMED_SHAPES:
        assert shape_reaches(opt, s, eps, cbs), s


def test_above_half_nothing_reaches_target(opt):
    for e in (0.51, 0.6, 0.8):
        assert opt.best(e, math.inf).eps_eff > 1e-3
        assert opt.min_cohbw(e) == math.inf


def test_parse_grid():
    assert parse_grid("0.1,0.2") == [0.1, 0.2]
    assert parse_grid("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_grid("1e-4:1e-2:3") == pytest.approx([1e-4, 1e-3, 1e-2])
    g = parse_grid("1e6:1e12:7")
    assert g[1] == pytest.approx(1e7)
    with pytest.raises(ValueError):
        parse_grid("0:1:0")
