"""Loss, decoherence and logic-error budgets of a tree-encoded qubit.

Closed forms for the indirect-measurement recursion, effective loss and
emitter coherence time, together with Monte-Carlo decoders that check them
by sampling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .protocol import TreeShape


@dataclass
class TimingModel:
    t_ph: float
    delta_t: list[float]   # Δt_0 .. Δt_d (Δt_0 unused, kept for indexing)
    t_levels: list[float]  # t_0 .. t_d
    t_min: float


@dataclass
class ErrorBudget:
    shape: str
    eps: float
    R: list[float]
    eps_loss: float
    eps_coh: float
    eps_eff: float
    t_min_over_tph: float
    eps_logic: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def r_indirect(shape: TreeShape, eps: float) -> list[float]:
    """Success probabilities ``R_0 .. R_{d+1}`` of indirect Z measurements.

    ``R_l = 1 - [1 - (1-eps)(1-eps+eps R_{l+2})^{b_{l+1}}]^{b_l}`` with
    ``R_d = R_{d+1} = 0`` and ``b_d = 0``.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    d = shape.depth
    b = list(shape.branches) + [0, 0]
    R = [0.0] * (d + 2)
    for l in range(d - 1, -1, -1):
        R[l] = 1.0 - (1.0 - (1.0 - eps) * (1.0 - eps + eps * R[l + 2]) ** b[l + 1]) ** b[l]
    return R


def eps_loss(shape: TreeShape, eps: float) -> float:
    """Probability that a logical measurement on the tree fails through loss."""
    R = r_indirect(shape, eps)
    b = list(shape.branches) + [0]
    ok = ((1 - eps + eps * R[1]) ** b[0] - (eps * R[1]) ** b[0]) * (1 - eps + eps * R[2]) ** b[1]
    return 1.0 - ok


def timing(shape: TreeShape, t_ph: float = 1.0) -> TimingModel:
    """Coherence-critical time per level and in total."""
    if t_ph <= 0:
        raise ValueError("t_ph must be positive")
    b = shape.branches
    d = shape.depth
    n = shape.level_counts
    dt = [0.0] * (d + 1)
    dt[d] = t_ph
    dt[d - 1] = (b[d - 1] + 1) * t_ph
    for l in range(d - 2, 0, -1):
        dt[l] = b[l] * dt[l + 1]
    t_levels = [((b[l] - 1) * dt[l + 1] + 2 * t_ph) * n[l] for l in range(d)] + [t_ph * n[d]]
    return TimingModel(t_ph, dt, t_levels, float(sum(t_levels)))


def eps_coh(shape: TreeShape, t_ph: float, t_coh: float) -> float:
    if t_coh <= 0:
        raise ValueError("t_coh must be positive")
    if math.isinf(t_coh):
        return 0.0
    return -math.expm1(-timing(shape, t_ph).t_min / t_coh)


def combine(loss: float, coh: float) -> float:
    return 1.0 - (1.0 - loss) * (1.0 - coh)


def eps_eff(shape: TreeShape, eps: float, t_ph: float = 1.0, t_coh: float = math.inf) -> ErrorBudget:
    loss = eps_loss(shape, eps)
    coh = eps_coh(shape, t_ph, t_coh)
    return ErrorBudget(
        shape=str(shape), eps=eps, R=r_indirect(shape, eps)[: shape.depth + 1],
        eps_loss=loss, eps_coh=coh, eps_eff=combine(loss, coh),
        t_min_over_tph=timing(shape, t_ph).t_min / t_ph,
    )


# ---------------------------------------------------------------------------
# Monte Carlo

def _chunks(trials: int, chunk: int) -> list[tuple[int, int]]:
    """(index, size) pairs; chunk i draws from its own stream seeded by (seed, i)."""
    out = []
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        out.append((len(out), k))
        done += k
    return out


def _map_chunks(fn, seed: int, trials: int, chunk: int, workers: int) -> list:
    jobs = [(np.random.default_rng([seed, i]), k) for i, k in _chunks(trials, chunk)]
    if workers <= 1:
        return [fn(rng, k) for rng, k in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _z_access(shape: TreeShape, received: list[np.ndarray]) -> list[np.ndarray]:
    """Per level, whether each node's Z value is obtainable (direct or indirect).

    Node v (lost) is recovered through a child c that was received and whose
    own children are all Z-accessible.
    """
    d = shape.depth
    b = shape.branches
    acc: list[np.ndarray | None] = [None] * (d + 1)
    acc[d] = received[d]
    for l in range(d - 1, -1, -1):
        trials, n_child = received[l + 1].shape
        child_ok = received[l + 1].copy()
        if l + 2 <= d:
            child_ok &= acc[l + 2].reshape(trials, n_child, b[l + 1]).all(axis=2)
        indirect = child_ok.reshape(trials, -1, b[l]).any(axis=2)
        acc[l] = received[l] | indirect
    return acc


def _loss_success(shape: TreeShape, received: list[np.ndarray]) -> np.ndarray:
    """Logical measurement succeeds: every level-1 photon Z-accessible, at least
    one received, and the first received one has all of its children Z-accessible."""
    acc = _z_access(shape, received)
    trials = received[1].shape[0]
    all_l1 = acc[1].all(axis=1)
    any_rx = received[1].any(axis=1)
    if shape.depth >= 2:
        first = np.argmax(received[1], axis=1)
        kids = acc[2].reshape(trials, -1, shape.branches[1])[np.arange(trials), first]
        chosen_ok = kids.all(axis=1)
    else:
        chosen_ok = np.ones(trials, dtype=bool)
    return all_l1 & any_rx & chosen_ok


def mc_loss_oracle(shape: TreeShape, eps: float, trials: int, seed: int = 0,
                   chunk: int = 200_000, workers: int = 1) -> tuple[float, float]:
    """Sampled logical failure probability under independent photon loss.

    Returns ``(estimate, standard error)``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")

    def run(rng, k):
        received = [rng.random((k, n)) >= eps for n in shape.level_counts]
        return int((~_loss_success(shape, received)).sum())

    fails = sum(_map_chunks(run, seed, trials, chunk, workers))
    p = fails / trials
    return p, math.sqrt(p * (1 - p) / trials)


def _vote_fails(wrong: np.ndarray, total: int, ties_fail: bool) -> np.ndarray:
    if ties_fail:
        return 2 * wrong >= total
    return 2 * wrong > total


def _z_estimate_errors(shape: TreeShape, flips: list[np.ndarray], ties_fail: bool) -> list:
    """Whether the majority-decoded Z value of each node is wrong.

    Votes for node v: its own Z outcome plus, per child c, the product of
    c's X outcome and the decoded Z values of c's children.
    """
    d = shape.depth
    b = shape.branches
    err: list[np.ndarray | None] = [None] * (d + 1)
    err[d] = flips[d]
    if d >= 1:
        trials, n_child = flips[d].shape
        votes = flips[d].reshape(trials, -1, b[d - 1])
        wrong = flips[d - 1].astype(np.int64) + votes.sum(axis=2)
        err[d - 1] = _vote_fails(wrong, 1 + b[d - 1], ties_fail)
    for l in range(d - 2, -1, -1):
        trials, n_child = flips[l + 1].shape
        parity = err[l + 2].reshape(trials, n_child, b[l + 1]).sum(axis=2) % 2
        indirect = flips[l + 1] ^ parity.astype(bool)
        wrong = flips[l].astype(np.int64) + indirect.reshape(trials, -1, b[l]).sum(axis=2)
        err[l] = _vote_fails(wrong, 1 + b[l], ties_fail)
    return err


def mc_logic_error(shape: TreeShape, eps_flip: float, trials: int, seed: int = 0,
                   ties_fail: bool = True, chunk: int = 200_000, workers: int = 1) -> dict:
    """Logical error rates from independent outcome flips (no loss).

    Logical X reads the product of the decoded Z values of all level-1
    photons.  Logical Z reads the X outcome of the first level-1 photon times
    the decoded Z values of its children.  Returns per-basis estimates,
    standard errors and the worst basis.
    """
    if not 0.0 <= eps_flip < 0.5:
        raise ValueError("eps_flip must lie in [0, 0.5)")
    if trials < 1:
        raise ValueError("need at least one trial")
    b = shape.branches

    def run(rng, k):
        flips = [rng.random((k, n)) < eps_flip for n in shape.level_counts]
        err = _z_estimate_errors(shape, flips, ties_fail)
        x_err = err[1].sum(axis=1) % 2 == 1
        if shape.depth >= 2:
            kids = err[2][:, : b[1]].sum(axis=1) % 2
            z_err = flips[1][:, 0] ^ kids.astype(bool)
        else:
            z_err = flips[1][:, 0]
        return int(x_err.sum()), int(z_err.sum())

    parts = _map_chunks(run, seed, trials, chunk, workers)
    counts = {"X": sum(p[0] for p in parts), "Z": sum(p[1] for p in parts)}
    out = {}
    for basis, c in counts.items():
        p = c / trials
        out[basis] = {"estimate": p, "stderr": math.sqrt(p * (1 - p) / trials)}
    worst = max(out, key=lambda k: out[k]["estimate"])
    out["worst"] = {"basis": worst, **out[worst]}
    return out
