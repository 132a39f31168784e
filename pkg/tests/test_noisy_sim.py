import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treecluster.loss_analysis import timing
from treecluster.noisy_sim import (
    DensityMatrix,
    NoiseParams,
    PulseMap,
    apply_1q,
    cnot,
    coherence_schedule,
    config_params,
    cz,
    dephase,
    depolarizing_pi,
    fidelity,
    fidelity_grid,
    run_noisy,
    tree_fidelity,
)
from treecluster.protocol import GateSequence, Step, TreeShape, ideal_tree_graph, shapes_up_to, tree_sequence
from treecluster.stabilizer import GraphSpec, graph_to_state, plus_state, zero_state

from dense import PAULI, X, Y, Z


def embed(u, q, n):
    ops = [np.eye(2)] * n
    ops[q] = u
    out = np.ones((1, 1))
    for o in ops:
        out = np.kron(out, o)
    return out


def random_rho(n, rng, rank=None):
    rank = rank or 2 ** n
    a = rng.normal(size=(2 ** n, rank)) + 1j * rng.normal(size=(2 ** n, rank))
    m = a @ a.conj().T
    m /= np.trace(m)
    return DensityMatrix(n, m.reshape((2,) * (2 * n)))


def assert_physical(rho, tol=1e-10):
    m = rho.matrix
    assert abs(np.trace(m) - 1) < tol
    assert np.abs(m - m.conj().T).max() < tol
    assert np.linalg.eigvalsh(m).min() > -1e-9


# ---------------------------------------------------------------- channels

def test_depolarizing_examples():
    rng = np.random.default_rng(0)
    rho = random_rho(1, rng)
    assert np.allclose(depolarizing_pi(rho, 0, 0.0).matrix, X @ rho.matrix @ X)
    assert np.allclose(depolarizing_pi(rho, 0, 0.5).matrix, np.eye(2) / 2)
    zero = DensityMatrix.from_vector(np.array([1, 0], dtype=complex))
    assert np.allclose(depolarizing_pi(zero, 0, 0.01).matrix, np.diag([0.01, 0.99]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.floats(0, 2 / 3), st.integers(0, 2 ** 31))
def test_depolarizing_matches_four_term_sum(n, lam, seed):
    rng = np.random.default_rng(seed)
    rho = random_rho(n, rng)
    q = int(rng.integers(n))
    m = rho.matrix
    xs, ys, zs = (embed(p, q, n) for p in (X, Y, Z))
    expected = (1 - 1.5 * lam) * xs @ m @ xs + lam / 2 * (m + ys @ m @ ys + zs @ m @ zs)
    out = depolarizing_pi(rho, q, lam)
    assert np.allclose(out.matrix, expected, atol=1e-12)
    assert_physical(out)


@pytest.mark.parametrize("lam", [-0.01, 0.7])
def test_depolarizing_rejects_bad_lambda(lam):
    with pytest.raises(ValueError):
        depolarizing_pi(DensityMatrix.from_vector(np.array([1, 0], dtype=complex)), 0, lam)


def test_dephase_examples():
    rng = np.random.default_rng(1)
    rho = random_rho(2, rng)
    assert np.allclose(dephase(rho, 0, 0.0, 5.0).matrix, rho.matrix)
    assert np.allclose(dephase(rho, 0, 3.0, math.inf).matrix, rho.matrix)
    plus = DensityMatrix.from_vector(np.array([1, 1], dtype=complex) / np.sqrt(2))
    out = dephase(plus, 0, 2.0, 2.0).matrix
    assert np.allclose(out, [[0.5, 0.5 / math.e], [0.5 / math.e, 0.5]])
    with pytest.raises(ValueError):
        dephase(plus, 0, -1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.floats(0, 10), st.floats(0.1, 100), st.integers(0, 2 ** 31))
def test_dephase_is_phase_damping(n, dur, tcoh, seed):
    rng = np.random.default_rng(seed)
    rho = random_rho(n, rng)
    q = int(rng.integers(n))
    f = math.exp(-dur / tcoh)
    zs = embed(Z, q, n)
    m = rho.matrix
    expected = (1 + f) / 2 * m + (1 - f) / 2 * zs @ m @ zs
    out = dephase(rho, q, dur, tcoh)
    assert np.allclose(out.matrix, expected, atol=1e-12)
    assert_physical(out)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2 ** 31), st.lists(st.sampled_from(["cz", "cnot", "h", "dep", "deph"]), max_size=8))
def test_gates_preserve_trace_and_hermiticity(n, seed, ops):
    rng = np.random.default_rng(seed)
    rho = random_rho(n, rng, rank=2)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    for op in ops:
        a, b = rng.choice(n, size=2, replace=False)
        m = rho.matrix
        if op == "cz":
            rho = cz(rho, a, b)
            u = np.diag([(-1) ** (((i >> (n - 1 - a)) & 1) * ((i >> (n - 1 - b)) & 1)) for i in range(2 ** n)])
            assert np.allclose(rho.matrix, u @ m @ u)
        elif op == "cnot":
            rho = cnot(rho, a, b)
            p0 = embed(np.diag([1, 0]), a, n)
            p1 = embed(np.diag([0, 1]), a, n)
            u = p0 + p1 @ embed(X, b, n)
            assert np.allclose(rho.matrix, u @ m @ u.conj().T)
        elif op == "h":
            rho = apply_1q(rho, h, a)
            u = embed(h, a, n)
            assert np.allclose(rho.matrix, u @ m @ u.conj().T)
        elif op == "dep":
            rho = depolarizing_pi(rho, a, float(rng.uniform(0, 2 / 3)))
        else:
            rho = dephase(rho, a, float(rng.uniform(0, 3)), 1.0)
        assert_physical(rho)


def test_partial_trace():
    rho = DensityMatrix.product([np.array([1, 0]), np.array([1, 1]) / np.sqrt(2)])
    assert np.allclose(rho.partial_trace(0).matrix, np.full((2, 2), 0.5))
    assert np.allclose(rho.partial_trace(1).matrix, np.diag([1, 0]))


# ---------------------------------------------------------------- fidelity

def test_fidelity_examples():
    g = GraphSpec(3, frozenset({(0, 1), (1, 2)}))
    target = graph_to_state(g)
    from treecluster.stabilizer import to_statevector

    rho = DensityMatrix.from_vector(to_statevector(target))
    assert fidelity(rho, target) == pytest.approx(1.0, abs=1e-12)
    mixed = DensityMatrix(3, (np.eye(8) / 8).reshape((2,) * 6))
    assert fidelity(mixed, target) == pytest.approx(1 / 8, abs=1e-12)
    with pytest.raises(ValueError):
        fidelity(mixed, plus_state(2))


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(lambda1=0.7)
    with pytest.raises(ValueError):
        NoiseParams(t_coh=0)
    with pytest.raises(ValueError):
        NoiseParams(t_ph=-1)
    assert NoiseParams(lambda2=0.1).lam("2") == 0.1


def test_pulse_map_counts():
    pm = PulseMap()
    assert pm.counts()["E"] == {"1": 4, "2": 2, "3": 2}
    assert pm.counts()["CZ"] == {"1": 0, "2": 2, "3": 0}
    assert PulseMap(cz_3pi_events=3).counts()["CZ"]["2"] == 4
    with pytest.raises(ValueError):
        PulseMap(e_before=("4",))
    with pytest.raises(ValueError):
        PulseMap(cz_3pi_events=-1)


# ---------------------------------------------------------------- runs

NOISELESS_SHAPES = list(shapes_up_to(11, max_depth=4, max_branch=10))


@pytest.mark.parametrize("shape", NOISELESS_SHAPES, ids=str)
def test_noiseless_run_is_exact(shape):
    assert tree_fidelity(shape, NoiseParams()) == pytest.approx(1.0, abs=1e-9)


def test_noiseless_run_keeps_emitter_product():
    shape = TreeShape((2, 2))
    rho = run_noisy(tree_sequence(shape), shape, NoiseParams())
    assert_physical(rho)
    emitter = rho.partial_trace(1)
    for _ in range(shape.n_photons - 1):
        emitter = emitter.partial_trace(1)
    # emitter ends in a pure state
    assert np.trace(emitter.matrix @ emitter.matrix).real == pytest.approx(1.0)


def test_noisy_state_is_physical():
    shape = TreeShape((2, 2))
    rho = run_noisy(tree_sequence(shape), shape, NoiseParams(0.02, 0.01, 0.03, t_coh=50.0))
    assert_physical(rho)


def test_run_noisy_limits():
    shape = TreeShape((12,))
    with pytest.raises(ValueError, match="exceeds"):
        run_noisy(tree_sequence(shape), shape, NoiseParams())
    seq = GateSequence([Step("E", 1), Step("MEAS_Z")], 1)
    with pytest.raises(ValueError, match="not supported"):
        run_noisy(seq, TreeShape((1,)), NoiseParams())


@pytest.mark.parametrize("branches", [(2, 2, 2), (2, 2), (3, 1), (4,), (2, 1, 3)])
def test_schedule_sums_to_t_min(branches):
    shape = TreeShape(branches)
    for tph in (1.0, 2.5):
        total = sum(coherence_schedule(tree_sequence(shape), shape, tph))
        assert total == pytest.approx(timing(shape, tph).t_min)


def test_single_photon_dephasing_matches_closed_form():
    # {1}: the emitter holds the root-leaf bond for a known time
    shape = TreeShape((1,))
    f_inf = tree_fidelity(shape, NoiseParams())
    f_10 = tree_fidelity(shape, NoiseParams(t_coh=10.0))
    assert f_inf == pytest.approx(1.0)
    assert f_10 < 1.0


@pytest.mark.parametrize("branches", [(2, 2), (3, 1), (2, 3), (3, 2)], ids=str)
def test_fidelity_monotone(branches):
    shape = TreeShape(branches)
    for name in ("lambda1", "lambda2", "lambda3"):
        f = [tree_fidelity(shape, NoiseParams(**{name: lam})) for lam in (0.0, 0.005, 0.01)]
        assert f[0] == pytest.approx(1.0)
        assert f[0] >= f[1] >= f[2]
        assert f[2] < f[0]
    f = [tree_fidelity(shape, NoiseParams(t_coh=tc)) for tc in (10.0, 100.0, math.inf)]
    assert f[0] <= f[1] <= f[2]


def test_fidelity_drops_with_lambda_31():
    shape = TreeShape((3, 1))
    f = [tree_fidelity(shape, config_params("all", lam)) for lam in (0.0, 0.005, 0.01)]
    assert f[0] > f[1] > f[2]
    f2 = tree_fidelity(shape, config_params("all", 0.02))
    assert f2 < f[2]


def test_grid_is_ordered_and_parallel_safe():
    shape = TreeShape((2, 1))
    args = (shape, ["omega1", "all"], [0.0, 0.01], [math.inf, 100.0])
    serial = fidelity_grid(*args)
    parallel = fidelity_grid(*args, workers=4)
    assert serial == parallel
    assert [(r["config"], r["lambda"], r["tcoh"]) for r in serial][:3] == [
        ("omega1", 0.0, math.inf), ("omega1", 0.0, 100.0), ("omega1", 0.01, math.inf)]


def test_more_3pi_events_hurt():
    shape = TreeShape((2, 1))
    p = NoiseParams(lambda2=0.01)
    assert tree_fidelity(shape, p, PulseMap(cz_3pi_events=3)) < tree_fidelity(shape, p)
