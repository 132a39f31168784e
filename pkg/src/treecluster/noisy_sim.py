"""Density-matrix execution of emission sequences with imperfect pulses.

Every abstract gate is expanded into the optical pi pulses that drive it.
Each pulse is an ideal pi rotation followed by the depolarizing channel
applied to the emitter.  Emitter memory loss is modelled as phase damping
over the intervals in which the emitter has to hold coherence.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .protocol import EMITTER, GateSequence, TreeShape, ideal_tree_graph, tree_sequence
from .loss_analysis import timing
from .stabilizer import SINGLE_QUBIT_MATRICES, StabilizerState, graph_to_state, to_statevector

MAX_QUBITS = 12
PULSE_TYPES = ("1", "2", "3")


@dataclass
class NoiseParams:
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    t_coh: float = math.inf
    t_ph: float = 1.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            lam = getattr(self, name)
            if not 0.0 <= lam <= 2.0 / 3.0:
                raise ValueError(f"{name} must lie in [0, 2/3], got {lam}")
        if not self.t_coh > 0:
            raise ValueError("t_coh must be positive")
        if not self.t_ph > 0:
            raise ValueError("t_ph must be positive")

    def lam(self, pulse: str) -> float:
        return getattr(self, "lambda" + pulse)


@dataclass
class PulseMap:
    """Where the pi pulses of each gate sit relative to its abstract action.

    The E gate is CNOT(e->p), CNOT(p->e), X(e); ``e_before`` pulses precede
    the first CNOT, ``e_mid`` sit between the CNOTs and ``e_after`` follow
    the final flip.  CZ pulses all precede the phase gate; the 3pi rotation
    contributes ``cz_3pi_events`` pulse events.
    """

    e_before: tuple[str, ...] = ("1", "2", "3", "1")
    e_mid: tuple[str, ...] = ("1", "2", "3")
    e_after: tuple[str, ...] = ("1",)
    cz_pi: tuple[str, ...] = ("2",)
    cz_3pi_events: int = 1

    def __post_init__(self):
        for p in self.e_before + self.e_mid + self.e_after + self.cz_pi:
            if p not in PULSE_TYPES:
                raise ValueError(f"unknown pulse type {p!r}")
        if self.cz_3pi_events < 0:
            raise ValueError("cz_3pi_events must be non-negative")

    @property
    def cz_pulses(self) -> tuple[str, ...]:
        return self.cz_pi + ("2",) * self.cz_3pi_events

    def counts(self) -> dict[str, dict[str, int]]:
        e = self.e_before + self.e_mid + self.e_after
        return {"E": {p: e.count(p) for p in PULSE_TYPES},
                "CZ": {p: self.cz_pulses.count(p) for p in PULSE_TYPES}}


@dataclass
class DensityMatrix:
    """n-qubit density matrix stored as a (2,)*2n tensor, qubit 0 most significant."""

    n: int
    tensor: np.ndarray = field(repr=False)

    @classmethod
    def from_vector(cls, psi: np.ndarray) -> "DensityMatrix":
        n = int(round(math.log2(psi.size)))
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
        psi = psi.reshape(-1)
        return cls(n, np.outer(psi, psi.conj()).reshape((2,) * (2 * n)))

    @classmethod
    def product(cls, single: list[np.ndarray]) -> "DensityMatrix":
        psi = np.ones(1, dtype=complex)
        for v in single:
            psi = np.kron(psi, v)
        return cls.from_vector(psi)

    @property
    def matrix(self) -> np.ndarray:
        return self.tensor.reshape(2 ** self.n, 2 ** self.n)

    def trace(self) -> complex:
        return np.trace(self.matrix)

    def check(self, tol: float = 1e-9) -> None:
        m = self.matrix
        if abs(np.trace(m) - 1) > tol:
            raise AssertionError("trace drifted from 1")
        if np.abs(m - m.conj().T).max() > tol:
            raise AssertionError("lost hermiticity")
        if np.linalg.eigvalsh(m).min() < -tol:
            raise AssertionError("negative eigenvalue")

    def partial_trace(self, q: int) -> "DensityMatrix":
        t = np.trace(self.tensor, axis1=q, axis2=self.n + q)
        return DensityMatrix(self.n - 1, t)


# ---------------------------------------------------------------------------
# kernels
#
# The ``_*_inplace`` functions act on a (2,)*2n tensor through basic-slicing
# views; the public wrappers copy first and return a new DensityMatrix.

def _idx(nd: int, fixed: dict[int, int]):
    # length-1 slices rather than integers so the result is always a view,
    # even when every axis is fixed (a single qubit)
    idx = [slice(None)] * nd
    for axis, v in fixed.items():
        idx[axis] = slice(v, v + 1)
    return tuple(idx)


def _unitary_inplace(t: np.ndarray, n: int, q: int, u: np.ndarray) -> None:
    nd = t.ndim
    for axis, m in ((q, u), (n + q, u.conj())):
        v0, v1 = t[_idx(nd, {axis: 0})], t[_idx(nd, {axis: 1})]
        old0 = v0.copy()
        v0 *= m[0, 0]
        v0 += m[0, 1] * v1
        v1 *= m[1, 1]
        v1 += m[1, 0] * old0


def _pauli_inplace(t: np.ndarray, n: int, q: int, p_i: float, p_x: float, p_y: float, p_z: float) -> None:
    nd = t.ndim
    blk = {(a, b): t[_idx(nd, {q: a, n + q: b})] for a in (0, 1) for b in (0, 1)}
    # populations mix through X and Y, coherences through X and -Y, Z flips coherences
    for (s, o), (c_same, c_swap) in ((((0, 0), (1, 1)), (p_i + p_z, p_x + p_y)),
                                     (((0, 1), (1, 0)), (p_i - p_z, p_x - p_y))):
        a, b = blk[s], blk[o]
        old = a.copy()
        a *= c_same
        a += c_swap * b
        b *= c_same
        b += c_swap * old


def _dephase_inplace(t: np.ndarray, n: int, q: int, f: float) -> None:
    nd = t.ndim
    t[_idx(nd, {q: 0, n + q: 1})] *= f
    t[_idx(nd, {q: 1, n + q: 0})] *= f


def _cz_inplace(t: np.ndarray, n: int, a: int, b: int) -> None:
    nd = t.ndim
    t[_idx(nd, {a: 1, b: 1})] *= -1
    t[_idx(nd, {n + a: 1, n + b: 1})] *= -1


def _cnot_inplace(t: np.ndarray, n: int, c: int, tq: int) -> None:
    nd = t.ndim
    for ic, it in ((c, tq), (n + c, n + tq)):
        v0 = t[_idx(nd, {ic: 1, it: 0})]
        v1 = t[_idx(nd, {ic: 1, it: 1})]
        old = v0.copy()
        v0[...] = v1
        v1[...] = old


def _fresh(rho: DensityMatrix) -> np.ndarray:
    return rho.tensor.astype(complex, copy=True)


def apply_1q(rho: DensityMatrix, u: np.ndarray, q: int) -> DensityMatrix:
    t = _fresh(rho)
    _unitary_inplace(t, rho.n, q, np.asarray(u, dtype=complex))
    return DensityMatrix(rho.n, t)


def pauli_channel(rho: DensityMatrix, q: int, p_i: float, p_x: float, p_y: float,
                  p_z: float) -> DensityMatrix:
    t = _fresh(rho)
    _pauli_inplace(t, rho.n, q, p_i, p_x, p_y, p_z)
    return DensityMatrix(rho.n, t)


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 2.0 / 3.0:
        raise ValueError(f"lambda must lie in [0, 2/3], got {lam}")


def depolarizing_pi(rho: DensityMatrix, q: int, lam: float) -> DensityMatrix:
    """Imperfect pi pulse: (1-3lam/2) X rho X + lam/2 (rho + Y rho Y + Z rho Z)."""
    _check_lambda(lam)
    return pauli_channel(rho, q, lam / 2, 1 - 1.5 * lam, lam / 2, lam / 2)


def dephase(rho: DensityMatrix, q: int, duration: float, t_coh: float) -> DensityMatrix:
    """Phase damping: coherences of qubit q scale by exp(-duration/t_coh)."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if duration == 0 or math.isinf(t_coh):
        return rho
    t = _fresh(rho)
    _dephase_inplace(t, rho.n, q, math.exp(-duration / t_coh))
    return DensityMatrix(rho.n, t)


def cz(rho: DensityMatrix, a: int, b: int) -> DensityMatrix:
    t = _fresh(rho)
    _cz_inplace(t, rho.n, a, b)
    return DensityMatrix(rho.n, t)


def cnot(rho: DensityMatrix, c: int, tq: int) -> DensityMatrix:
    t = _fresh(rho)
    _cnot_inplace(t, rho.n, c, tq)
    return DensityMatrix(rho.n, t)


# ---------------------------------------------------------------------------
# execution

def _photon_levels(shape: TreeShape) -> dict[int, int]:
    """Level of every photon label in emission order (leaves first, root last)."""
    out = {}
    p = 0
    for level in range(shape.depth, -1, -1):
        for _ in range(shape.level_counts[level]):
            p += 1
            out[p] = level
    return out


def coherence_schedule(seq: GateSequence, shape: TreeShape, t_ph: float = 1.0) -> list[float]:
    """Idle time (in t_ph units times ``t_ph``) the emitter spends before each step.

    One t_ph precedes every E and the first CZ of each parent; consecutive
    CZs onto level-l children are Δt_l apart.  For tree sequences the total
    equals the minimal coherence time of the timing model.
    """
    dt = timing(shape, t_ph).delta_t
    level = _photon_levels(shape)
    out = []
    prev = None
    for step in seq.steps:
        if step.op == "E":
            out.append(t_ph)
        elif step.op == "CZ":
            out.append(dt[level[step.photon]] if prev == "CZ" else t_ph)
        else:
            out.append(0.0)
        prev = step.op
    return out


def _grow(t: np.ndarray, k: int) -> np.ndarray:
    """Append a fresh |0><0| qubit as the last row and column axis."""
    out = np.zeros((2,) * (2 * k + 2), dtype=complex)
    out[_idx(2 * k + 2, {k: 0, 2 * k + 1: 0})] = np.expand_dims(t, (k, 2 * k + 1))
    return out


class _Register:
    """Working tensor that only holds the emitter and already emitted photons."""

    def __init__(self):
        plus = np.full((2, 2), 0.5, dtype=complex)
        self.t = plus
        self.order = [EMITTER]

    @property
    def k(self) -> int:
        return len(self.order)

    def axis(self, q: int) -> int:
        try:
            return self.order.index(q)
        except ValueError:
            raise ValueError(f"qubit {q} acted on before its emission") from None

    def add(self, q: int) -> None:
        if q not in self.order:
            self.t = _grow(self.t, self.k)
            self.order.append(q)

    def pulses(self, pulses: tuple[str, ...], params: NoiseParams) -> None:
        e = self.axis(EMITTER)
        for p in pulses:
            lam = params.lam(p)
            if lam:
                # ideal pi rotation, then the imperfect one; the abstract gate is unchanged
                _unitary_inplace(self.t, self.k, e, SINGLE_QUBIT_MATRICES["X"])
                _pauli_inplace(self.t, self.k, e, lam / 2, 1 - 1.5 * lam, lam / 2, lam / 2)

    def finish(self, n: int) -> DensityMatrix:
        for q in range(n):
            self.add(q)
        perm = [self.order.index(q) for q in range(n)]
        t = np.ascontiguousarray(self.t.transpose(perm + [n + a for a in perm]))
        return DensityMatrix(n, t)


def run_noisy(seq: GateSequence, shape: TreeShape, params: NoiseParams,
              pulse_map: PulseMap | None = None) -> DensityMatrix:
    """Run ``seq`` with imperfect pulses and emitter dephasing; emitter included."""
    pulse_map = pulse_map or PulseMap()
    n = seq.n_photons + 1
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
    idle = coherence_schedule(seq, shape, params.t_ph)
    reg = _Register()
    for step, wait in zip(seq.steps, idle):
        e = reg.axis(EMITTER)
        if wait and not math.isinf(params.t_coh):
            _dephase_inplace(reg.t, reg.k, e, math.exp(-wait / params.t_coh))
        op = step.op
        if op == "E":
            reg.add(step.photon)
            p = reg.axis(step.photon)
            reg.pulses(pulse_map.e_before, params)
            _cnot_inplace(reg.t, reg.k, e, p)
            reg.pulses(pulse_map.e_mid, params)
            _cnot_inplace(reg.t, reg.k, p, e)
            _unitary_inplace(reg.t, reg.k, e, SINGLE_QUBIT_MATRICES["X"])
            reg.pulses(pulse_map.e_after, params)
        elif op == "CZ":
            reg.pulses(pulse_map.cz_pulses, params)
            _cz_inplace(reg.t, reg.k, e, reg.axis(step.photon))
        elif op in ("ROTY", "LC_A"):
            kind = "RY_MINUS" if op == "ROTY" else "LC_A"
            _unitary_inplace(reg.t, reg.k, e, SINGLE_QUBIT_MATRICES[kind])
        elif op == "LC_B":
            _unitary_inplace(reg.t, reg.k, reg.axis(step.photon), SINGLE_QUBIT_MATRICES["LC_B"])
        else:
            raise ValueError(f"step {op} is not supported by the density-matrix backend")
    return reg.finish(n)


def fidelity(rho: DensityMatrix, target: StabilizerState) -> float:
    """<psi|rho|psi> for the dense vector of ``target``."""
    if rho.n != target.n:
        raise ValueError(f"dimension mismatch: {rho.n} vs {target.n} qubits")
    psi = to_statevector(target)
    val = np.vdot(psi, rho.matrix @ psi).real
    return float(min(1.0, max(0.0, val)))


def tree_fidelity(shape: TreeShape, params: NoiseParams, pulse_map: PulseMap | None = None) -> float:
    """Fidelity of the emitted photons (emitter traced out) with the ideal tree."""
    rho = run_noisy(tree_sequence(shape), shape, params, pulse_map)
    photons = rho.partial_trace(EMITTER)
    return fidelity(photons, graph_to_state(ideal_tree_graph(shape)))


# pulse configurations used for the Fig-S5 style sweeps
SWEEP_CONFIGS = {
    "omega1": ("lambda1",),
    "omega2": ("lambda2",),
    "omega3": ("lambda3",),
    "all": ("lambda1", "lambda2", "lambda3"),
}


def config_params(config: str, lam: float, t_coh: float = math.inf) -> NoiseParams:
    kw = {name: lam for name in SWEEP_CONFIGS[config]}
    return NoiseParams(t_coh=t_coh, **kw)


def fidelity_grid(shape: TreeShape, configs: list[str], lambdas: list[float],
                  tcohs: list[float], pulse_map: PulseMap | None = None,
                  workers: int = 1) -> list[dict]:
    """Rows ``{config, lambda, tcoh, fidelity}`` in deterministic order."""
    jobs = [(c, lam, tc) for c in configs for lam in lambdas for tc in tcohs]

    def one(job):
        c, lam, tc = job
        return {"config": c, "lambda": lam, "tcoh": tc,
                "fidelity": tree_fidelity(shape, config_params(c, lam, tc), pulse_map)}

    if workers <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))
