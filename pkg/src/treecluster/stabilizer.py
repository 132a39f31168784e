"""Stabilizer tableau engine, graph states and local complementation.

The tableau keeps ``2n`` rows: rows ``0..n-1`` are destabilizers and rows
``n..2n-1`` are stabilizer generators.  Row ``i`` encodes the Pauli
``(-1)^r[i] * P(x[i, 0], z[i, 0]) ⊗ ... `` with ``P(1, 1) = Y``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# dense single-qubit matrices, used once to freeze the Clifford tables

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _expi(angle: float, generator: np.ndarray) -> np.ndarray:
    """exp(i * angle * G) for a Pauli-like generator with G @ G = I."""
    return np.cos(angle) * _I2 + 1j * np.sin(angle) * generator


SINGLE_QUBIT_MATRICES: dict[str, np.ndarray] = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "X": _X,
    "Y": _Y,
    "Z": _Z,
    # RotY(theta) = exp(-i theta Y / 2)
    "RY_PLUS": _expi(-np.pi / 4, _Y),
    "RY_MINUS": _expi(np.pi / 4, _Y),
    "LC_A": _expi(np.pi / 2, (_Y + _Z) / np.sqrt(2)),
    "LC_B": _expi(np.pi / 2, (_X + _Y) / np.sqrt(2)),
}

TWO_QUBIT_KINDS = ("CNOT", "CZ")
ONE_QUBIT_KINDS = tuple(SINGLE_QUBIT_MATRICES)

# Pauli index convention: 0=I, 1=X, 2=Z, 3=Y  (index = x + 2 z)
_PAULI_BY_INDEX = (_I2, _X, _Z, _Y)


def _conjugation_table(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    new_x = np.zeros(4, dtype=np.uint8)
    new_z = np.zeros(4, dtype=np.uint8)
    flip = np.zeros(4, dtype=np.uint8)
    for idx in (1, 2, 3):
        image = u @ _PAULI_BY_INDEX[idx] @ u.conj().T
        for cand in (1, 2, 3):
            for sign in (1, -1):
                if np.allclose(image, sign * _PAULI_BY_INDEX[cand], atol=1e-12):
                    new_x[idx] = cand & 1
                    new_z[idx] = cand >> 1
                    flip[idx] = sign < 0
                    break
            else:
                continue
            break
        else:
            raise ValueError("matrix is not a single-qubit Clifford")
    return new_x, new_z, flip


CLIFFORD_TABLES = {kind: _conjugation_table(m) for kind, m in SINGLE_QUBIT_MATRICES.items()}


@dataclass(frozen=True)
class CliffordOp:
    """A Clifford gate acting on one or two qubits.

    ``RY_PLUS``/``RY_MINUS`` are RotY(+pi/2)/RotY(-pi/2) with
    RotY(theta) = exp(-i theta Y / 2); ``RY_MINUS`` maps |1> to |+>.
    ``LC_A = exp(i pi/2 (Y+Z)/sqrt2)`` and ``LC_B = exp(i pi/2 (X+Y)/sqrt2)``.
    """

    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind in ONE_QUBIT_KINDS:
            arity = 1
        elif self.kind in TWO_QUBIT_KINDS:
            arity = 2
        else:
            raise ValueError(f"unknown Clifford kind {self.kind!r}")
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} target(s), got {len(self.targets)}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError(f"{self.kind} targets must differ")


def _g(x1, z1, x2, z2):
    """Exponent of i picked up when multiplying single-qubit Paulis (AG)."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return np.where(
        (x1 == 1) & (z1 == 1),
        z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )


def _pauli_product(x1, z1, r1, x2, z2, r2):
    """Multiply Pauli rows ``(x1, z1, r1) * (x2, z2, r2)``; arrays may be 2-d (rows)."""
    phase = 2 * r1.astype(np.int64) + 2 * r2.astype(np.int64) + _g(x1, z1, x2, z2).sum(axis=-1)
    phase %= 4
    if np.any(phase % 2):
        raise ValueError("product of non-commuting Paulis")
    return x1 ^ x2, z1 ^ z2, (phase // 2).astype(np.uint8)


class StabilizerState:
    """Pure n-qubit stabilizer state with destabilizer bookkeeping.

    A freshly constructed state is |0...0>.  Gates mutate the state in place
    and return it so calls can be chained.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"need at least one qubit, got {n}")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1

    # -- construction -----------------------------------------------------

    @classmethod
    def from_generators(cls, x, z, signs=None) -> "StabilizerState":
        """Build a state from n stabilizer generators (rows of ``x``/``z``).

        Destabilizers are found by solving the symplectic system and then
        symmetrised so that they mutually commute.
        """
        x = np.asarray(x, dtype=np.uint8) & 1
        z = np.asarray(z, dtype=np.uint8) & 1
        n = x.shape[1]
        if x.shape != (n, n) or z.shape != (n, n):
            raise ValueError("need exactly n generators on n qubits")
        signs = np.zeros(n, dtype=np.uint8) if signs is None else np.asarray(signs, dtype=np.uint8) & 1
        if np.any(_symplectic(x, z, x, z)):
            raise ValueError("generators do not commute")
        # d . s_i (symplectic) = delta_ij  <=>  [z | x] d = e_i
        m = np.concatenate([z, x], axis=1)
        d = _gf2_solve(m, np.eye(n, dtype=np.uint8))
        dx, dz = d[:, :n].copy(), d[:, n:].copy()
        for j in range(n):
            for i in range(j):
                if _symplectic(dx[i:i + 1], dz[i:i + 1], dx[j:j + 1], dz[j:j + 1])[0, 0]:
                    dx[j] ^= x[i]
                    dz[j] ^= z[i]
        state = cls(n)
        state.x = np.concatenate([dx, x]).astype(np.uint8)
        state.z = np.concatenate([dz, z]).astype(np.uint8)
        state.r = np.concatenate([np.zeros(n, dtype=np.uint8), signs])
        return state

    @classmethod
    def from_strings(cls, paulis: Sequence[str]) -> "StabilizerState":
        """``StabilizerState.from_strings(["+XZ", "-ZX"])``."""
        rows = [parse_pauli(p) for p in paulis]
        x = np.array([r[0] for r in rows])
        z = np.array([r[1] for r in rows])
        s = np.array([r[2] for r in rows])
        return cls.from_generators(x, z, s)

    def copy(self) -> "StabilizerState":
        other = StabilizerState.__new__(StabilizerState)
        other.n = self.n
        other.x = self.x.copy()
        other.z = self.z.copy()
        other.r = self.r.copy()
        return other

    # -- views --------------------------------------------------------------

    @property
    def stab_x(self) -> np.ndarray:
        return self.x[self.n:]

    @property
    def stab_z(self) -> np.ndarray:
        return self.z[self.n:]

    @property
    def stab_r(self) -> np.ndarray:
        return self.r[self.n:]

    def stabilizers(self) -> list[str]:
        return [format_pauli(self.x[i], self.z[i], self.r[i]) for i in range(self.n, 2 * self.n)]

    def __repr__(self):
        return f"StabilizerState({self.stabilizers()})"

    def is_valid(self) -> bool:
        """Tableau rows obey the canonical (anti)commutation pattern."""
        comm = _symplectic(self.x, self.z, self.x, self.z)
        n = self.n
        expected = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        expected[np.arange(n), n + np.arange(n)] = 1
        expected[n + np.arange(n), np.arange(n)] = 1
        return bool(np.array_equal(comm, expected))

    # -- gates ----------------------------------------------------------------

    def apply_single(self, kind: str, q: int) -> "StabilizerState":
        new_x, new_z, flip = CLIFFORD_TABLES[kind]
        idx = self.x[:, q] + 2 * self.z[:, q]
        self.r ^= flip[idx]
        self.x[:, q] = new_x[idx]
        self.z[:, q] = new_z[idx]
        return self

    def cnot(self, a: int, b: int) -> "StabilizerState":
        x, z = self.x, self.z
        self.r ^= x[:, a] & z[:, b] & (x[:, b] ^ z[:, a] ^ 1)
        x[:, b] ^= x[:, a]
        z[:, a] ^= z[:, b]
        return self

    def cz(self, a: int, b: int) -> "StabilizerState":
        x, z = self.x, self.z
        self.r ^= x[:, a] & x[:, b] & (z[:, a] ^ z[:, b])
        z[:, a] ^= x[:, b]
        z[:, b] ^= x[:, a]
        return self

    def h(self, q: int) -> "StabilizerState":
        return self.apply_single("H", q)

    def s(self, q: int) -> "StabilizerState":
        return self.apply_single("S", q)

    # -- measurement ----------------------------------------------------------

    def _rowsum(self, targets: np.ndarray, src: int):
        if len(targets) == 0:
            return
        x, z, r = _pauli_product(
            self.x[targets], self.z[targets], self.r[targets],
            self.x[src][None, :], self.z[src][None, :], self.r[src:src + 1],
        )
        self.x[targets], self.z[targets], self.r[targets] = x, z, r

    def measure_z(self, q: int, rng: np.random.Generator | None = None,
                  force: int | None = None) -> int:
        """Measure Z on qubit ``q``; returns +1/-1 and collapses the state.

        ``force`` selects the branch of a random outcome (post-selection).
        Forcing the impossible value of a deterministic outcome raises.
        """
        n = self.n
        hits = np.nonzero(self.x[n:, q])[0]
        if len(hits):
            p = n + int(hits[0])
            if force is not None:
                bit = 0 if force == 1 else 1
            else:
                rng = np.random.default_rng() if rng is None else rng
                bit = int(rng.integers(2))
            others = np.nonzero(self.x[:, q])[0]
            others = others[others != p]
            # destabilizer p-n is always in `others` (it anticommutes with row p)
            # but it gets overwritten right after, so skip it
            self._rowsum(others[others != p - n], p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            self.r[p] = bit
            return 1 - 2 * bit

        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        sr = np.zeros(1, dtype=np.uint8)
        for i in np.nonzero(self.x[:n, q])[0]:
            sx, sz, sr = _pauli_product(sx, sz, sr, self.x[n + i], self.z[n + i], self.r[n + i:n + i + 1])
        outcome = 1 - 2 * int(sr[0])
        if force is not None and force != outcome:
            raise ValueError(f"outcome {force} has zero probability (deterministic {outcome})")
        return outcome

    def is_deterministic(self, basis: str, q: int) -> bool:
        probe = self.copy()
        _to_z_basis(probe, basis, q)
        return not np.any(probe.x[probe.n:, q])


def _to_z_basis(state: StabilizerState, basis: str, q: int):
    if basis == "X":
        state.apply_single("H", q)
    elif basis == "Y":
        state.apply_single("SDG", q).apply_single("H", q)
    elif basis != "Z":
        raise ValueError(f"basis must be X, Y or Z, got {basis!r}")


def _from_z_basis(state: StabilizerState, basis: str, q: int):
    if basis == "X":
        state.apply_single("H", q)
    elif basis == "Y":
        state.apply_single("H", q).apply_single("S", q)


# ---------------------------------------------------------------------------
# GF(2) helpers

def _symplectic(x1, z1, x2, z2) -> np.ndarray:
    """Matrix of symplectic products (1 = anticommute) between two row sets."""
    a = x1.astype(np.int64) @ z2.T.astype(np.int64) + z1.astype(np.int64) @ x2.T.astype(np.int64)
    return (a % 2).astype(np.uint8)


def _gf2_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``m @ sol.T = rhs`` over GF(2) for full-row-rank ``m``.

    Returns one solution row per column of ``rhs``.
    """
    m = m.copy() & 1
    rhs = rhs.copy() & 1
    rows, cols = m.shape
    pivots = []
    row = 0
    for col in range(cols):
        hit = np.nonzero(m[row:, col])[0]
        if len(hit) == 0:
            continue
        piv = row + hit[0]
        if piv != row:
            m[[row, piv]] = m[[piv, row]]
            rhs[[row, piv]] = rhs[[piv, row]]
        mask = m[:, col].astype(bool)
        mask[row] = False
        m[mask] ^= m[row]
        rhs[mask] ^= rhs[row]
        pivots.append(col)
        row += 1
        if row == rows:
            break
    if row < rows:
        raise ValueError("generators are not independent")
    sol = np.zeros((rhs.shape[1], cols), dtype=np.uint8)
    for i, col in enumerate(pivots):
        sol[:, col] = rhs[i]
    return sol


def canonical_form(state: StabilizerState, column_order: Sequence[int] | None = None,
                   x_first: bool = False):
    """Row-reduced stabilizer generators ``(x, z, r)``.

    Columns are eliminated qubit by qubit (X bit, then Z bit), optionally in
    a custom qubit order.  The reduced form is unique for a stabilizer group,
    so two states are equal iff their canonical forms coincide.  With
    ``x_first`` every X column is eliminated before any Z column, which puts
    graph states in the form ``[I | A]``.
    """
    n = state.n
    x = state.stab_x.copy()
    z = state.stab_z.copy()
    r = state.stab_r.copy()
    order = list(range(n)) if column_order is None else list(column_order)
    if x_first:
        columns = [(x, q) for q in order] + [(z, q) for q in order]
    else:
        columns = [(m, q) for q in order for m in (x, z)]
    row = 0
    for mat, q in columns:
        if row == n:
            break
        hit = np.nonzero(mat[row:, q])[0]
        if len(hit) == 0:
            continue
        piv = row + hit[0]
        if piv != row:
            for a in (x, z, r):
                a[[row, piv]] = a[[piv, row]]
        targets = np.nonzero(mat[:, q])[0]
        targets = targets[targets != row]
        if len(targets):
            nx, nz, nr = _pauli_product(x[targets], z[targets], r[targets],
                                        x[row][None, :], z[row][None, :], r[row:row + 1])
            x[targets], z[targets], r[targets] = nx, nz, nr
        row += 1
    return x, z, r


def extract_graph(state: StabilizerState) -> tuple[GraphSpec, np.ndarray] | None:
    """Graph and per-vertex sign bits if the state is a graph state up to Z's.

    Returns ``None`` when the generators cannot be brought to ``[I | A]``
    form with a symmetric, zero-diagonal ``A``.  A sign bit of 1 on vertex
    ``v`` means a ``Z_v`` correction maps the state onto the graph state.
    """
    x, z, r = canonical_form(state, x_first=True)
    if not np.array_equal(x, np.eye(state.n, dtype=np.uint8)):
        return None
    if np.any(np.diag(z)) or not np.array_equal(z, z.T):
        return None
    return GraphSpec.from_adjacency(z), r.copy()


def states_equal(a: StabilizerState, b: StabilizerState, ignore_signs: bool = False) -> bool:
    """True iff the two stabilizer groups coincide (signs included by default).

    With ``ignore_signs`` the states are compared up to a local Pauli frame.
    """
    if a.n != b.n:
        raise ValueError(f"qubit counts differ: {a.n} vs {b.n}")
    ax, az, ar = canonical_form(a)
    bx, bz, br = canonical_form(b)
    same = np.array_equal(ax, bx) and np.array_equal(az, bz)
    return bool(same and (ignore_signs or np.array_equal(ar, br)))


def reduced_state(state: StabilizerState, keep: Sequence[int]) -> StabilizerState:
    """Pure state of the qubits in ``keep`` when they factor out of the rest.

    Raises ``ValueError`` if ``keep`` is entangled with the other qubits.
    """
    keep = list(keep)
    drop = [q for q in range(state.n) if q not in set(keep)]
    x, z, r = canonical_form(state, column_order=drop + keep)
    local = ~(x[:, drop].any(axis=1) | z[:, drop].any(axis=1))
    if local.sum() != len(keep):
        raise ValueError("requested qubits are entangled with the rest")
    return StabilizerState.from_generators(x[local][:, keep], z[local][:, keep], r[local])


def tensor(a: StabilizerState, b: StabilizerState) -> StabilizerState:
    """Product state ``a ⊗ b`` (qubits of ``b`` come after those of ``a``)."""
    n = a.n + b.n
    out = StabilizerState(n)
    for src, off in ((a, 0), (b, a.n)):
        for block in (0, 1):
            rows = slice(block * src.n, (block + 1) * src.n)
            dst = np.arange(src.n) + off + block * n
            out.x[dst] = 0
            out.z[dst] = 0
            out.x[dst, off:off + src.n] = src.x[rows]
            out.z[dst, off:off + src.n] = src.z[rows]
            out.r[dst] = src.r[rows]
    return out


# ---------------------------------------------------------------------------
# Pauli strings

def parse_pauli(text: str) -> tuple[np.ndarray, np.ndarray, int]:
    sign = 0
    if text[0] in "+-":
        sign = int(text[0] == "-")
        text = text[1:]
    x = np.array([c in "XY" for c in text], dtype=np.uint8)
    z = np.array([c in "ZY" for c in text], dtype=np.uint8)
    if any(c not in "IXYZ" for c in text):
        raise ValueError(f"bad Pauli string {text!r}")
    return x, z, sign


def format_pauli(x, z, r) -> str:
    letters = "IXZY"
    return ("-" if r else "+") + "".join(letters[int(a) + 2 * int(b)] for a, b in zip(x, z))


# ---------------------------------------------------------------------------
# public operations

def plus_state(n: int) -> StabilizerState:
    state = StabilizerState(n)
    for q in range(n):
        state.h(q)
    return state


def zero_state(n: int) -> StabilizerState:
    return StabilizerState(n)


def apply(state: StabilizerState, op: CliffordOp) -> StabilizerState:
    """Conjugate the tableau by ``op`` (in place); returns the state."""
    for t in op.targets:
        if not 0 <= t < state.n:
            raise IndexError(f"qubit {t} out of range for {state.n} qubits")
    if op.kind == "CNOT":
        return state.cnot(*op.targets)
    if op.kind == "CZ":
        return state.cz(*op.targets)
    return state.apply_single(op.kind, op.targets[0])


def measure_pauli(state: StabilizerState, basis: str, qubit: int,
                  rng: np.random.Generator | None = None,
                  force: int | None = None) -> tuple[int, StabilizerState]:
    """Single-qubit Pauli measurement; random outcomes come from ``rng``."""
    if not 0 <= qubit < state.n:
        raise IndexError(f"qubit {qubit} out of range for {state.n} qubits")
    _to_z_basis(state, basis, qubit)
    outcome = state.measure_z(qubit, rng=rng, force=force)
    _from_z_basis(state, basis, qubit)
    return outcome, state


# ---------------------------------------------------------------------------
# graphs

@dataclass(frozen=True)
class GraphSpec:
    """Simple undirected graph on nodes ``0..n-1``; edges stored as sorted pairs."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    def neighbors(self, v: int) -> set[int]:
        return {j if i == v else i for i, j in self.edges if v in (i, j)}

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        return a

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in sorted(self.edges)]})

    @classmethod
    def from_json(cls, text: str) -> "GraphSpec":
        data = json.loads(text)
        return cls(data["n"], frozenset(tuple(e) for e in data["edges"]))

    @classmethod
    def from_adjacency(cls, a) -> "GraphSpec":
        a = np.asarray(a)
        n = a.shape[0]
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n) if a[i, j]))

    def without(self, nodes: Iterable[int]) -> "GraphSpec":
        """Drop ``nodes`` and relabel the survivors consecutively."""
        gone = set(nodes)
        keep = [v for v in range(self.n) if v not in gone]
        label = {v: k for k, v in enumerate(keep)}
        return GraphSpec(len(keep), frozenset((label[i], label[j]) for i, j in self.edges
                                              if i in label and j in label))


def graph_to_state(g: GraphSpec) -> StabilizerState:
    """Graph state with generators ``X_v prod_{w in N(v)} Z_w``."""
    n = g.n
    state = StabilizerState(n)
    state.x[:] = 0
    state.z[:] = 0
    state.r[:] = 0
    state.z[np.arange(n), np.arange(n)] = 1
    state.x[n + np.arange(n), np.arange(n)] = 1
    state.z[n:] = g.adjacency()
    return state


def local_complement(g: GraphSpec, v: int) -> GraphSpec:
    """Toggle every edge inside the neighbourhood of ``v``."""
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range")
    nb = sorted(g.neighbors(v))
    edges = set(g.edges)
    for a_i, a in enumerate(nb):
        for b in nb[a_i + 1:]:
            edges ^= {(a, b)}
    return GraphSpec(g.n, frozenset(edges))


def graph_after_measurement(g: GraphSpec, basis: str, v: int, b0: int | None = None) -> GraphSpec:
    """Graph left on the other qubits after measuring ``v`` (node kept, isolated).

    Z: delete v.  Y: complement at v, then delete v.  X: with a neighbour
    ``b0``, complement at b0, at v, delete v, complement at b0 again.  The
    resulting state equals this graph state up to local Cliffords.
    """
    def isolate(h: GraphSpec, u: int) -> GraphSpec:
        return GraphSpec(h.n, frozenset(e for e in h.edges if u not in e))

    if basis == "Z":
        return isolate(g, v)
    if basis == "Y":
        return isolate(local_complement(g, v), v)
    if basis == "X":
        nb = g.neighbors(v)
        if not nb:
            return g
        b0 = min(nb) if b0 is None else b0
        if b0 not in nb:
            raise ValueError(f"{b0} is not a neighbour of {v}")
        h = local_complement(g, b0)
        h = isolate(local_complement(h, v), v)
        return local_complement(h, b0)
    raise ValueError(f"basis must be X, Y or Z, got {basis!r}")


def contract_pair(g: GraphSpec, a: int, b: int) -> GraphSpec:
    """Graph after X measurements on both ends of the edge ``(a, b)``.

    Neighbours of ``a`` and ``b`` (other than each other) become joined by
    toggled complete-bipartite edges; ``a`` and ``b`` are left isolated.
    """
    if (min(a, b), max(a, b)) not in g.edges:
        raise ValueError(f"({a}, {b}) is not an edge")
    na = g.neighbors(a) - {b}
    nb = g.neighbors(b) - {a}
    edges = {e for e in g.edges if a not in e and b not in e}
    for u in na:
        for w in nb:
            if u != w:
                edges ^= {(min(u, w), max(u, w))}
    return GraphSpec(g.n, frozenset(edges))


# ---------------------------------------------------------------------------
# dense conversion (small n only)

def _apply_pauli_vec(psi: np.ndarray, x, z, r) -> np.ndarray:
    out = psi.copy()
    for q, (xq, zq) in enumerate(zip(x, z)):
        if zq:
            idx = [slice(None)] * out.ndim
            idx[q] = 1
            out[tuple(idx)] *= -1
        if xq:
            out = np.flip(out, axis=q)
        if xq and zq:
            out = out * 1j
    return -out if r else out


def to_statevector(state: StabilizerState) -> np.ndarray:
    """Dense vector (qubit 0 is the most significant bit), global phase fixed."""
    n = state.n
    if n > 20:
        raise ValueError("state too large for a dense vector")
    rng = np.random.default_rng(12345)
    psi = (rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)).reshape((2,) * n)
    for i in range(n, 2 * n):
        psi = 0.5 * (psi + _apply_pauli_vec(psi, state.x[i], state.z[i], state.r[i]))
    psi = psi.reshape(-1)
    psi /= np.linalg.norm(psi)
    k = int(np.argmax(np.abs(psi)))
    return psi * (abs(psi[k]) / psi[k])
