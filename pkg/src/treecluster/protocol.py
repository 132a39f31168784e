"""Compile tree shapes into emitter gate sequences and run them exactly.

Qubit 0 is always the emitter; photon ``p`` (1-based, in generation order)
lives on qubit ``p``.  Photons start in |0>, standing in for the empty
time-bin mode.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import prod
from typing import Iterable, NamedTuple

import numpy as np

from .stabilizer import (
    GraphSpec,
    StabilizerState,
    contract_pair,
    extract_graph,
    graph_to_state,
    local_complement,
    measure_pauli,
    reduced_state,
    states_equal,
)

EMITTER = 0

PHOTON_OPS = ("E", "CZ", "LC_B", "MEAS_X")
EMITTER_OPS = ("ROTY", "LC_A", "MEAS_Z")


@dataclass(frozen=True)
class TreeShape:
    """Branching parameters ``(b_0, ..., b_{d-1})`` of a rooted tree."""

    branches: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(v) for v in self.branches)
        if not b:
            raise ValueError("a tree needs depth >= 1")
        if any(v < 1 for v in b):
            raise ValueError(f"branching parameters must be >= 1, got {b}")
        object.__setattr__(self, "branches", b)

    @classmethod
    def parse(cls, text: str) -> "TreeShape":
        return cls(tuple(int(t) for t in text.strip("{}() ").split(",") if t.strip()))

    @property
    def depth(self) -> int:
        return len(self.branches)

    @property
    def level_counts(self) -> tuple[int, ...]:
        """``n_0 .. n_d`` with ``n_l = prod(b_0 .. b_{l-1})``."""
        return tuple(prod(self.branches[:l]) for l in range(self.depth + 1))

    @property
    def n_photons(self) -> int:
        return sum(self.level_counts)

    def __str__(self):
        return "{" + ",".join(map(str, self.branches)) + "}"


class Step(NamedTuple):
    op: str
    photon: int | None = None


@dataclass
class GateSequence:
    """Ordered protocol operations on the emitter (qubit 0) and photons."""

    steps: list[Step]
    n_photons: int
    emitter: int = EMITTER

    def __post_init__(self):
        self.validate()

    def validate(self):
        emitted = set()
        for step in self.steps:
            if step.op in PHOTON_OPS:
                p = step.photon
                if p is None or not 1 <= p <= self.n_photons:
                    raise ValueError(f"bad photon index in {step}")
                if step.op == "E":
                    if p in emitted:
                        raise ValueError(f"photon {p} emitted twice")
                    emitted.add(p)
                elif p not in emitted:
                    raise ValueError(f"{step.op} on photon {p} before its emission")
            elif step.op in EMITTER_OPS:
                if step.photon is not None:
                    raise ValueError(f"{step.op} acts on the emitter only")
            else:
                raise ValueError(f"unknown op {step.op!r}")
        if len(emitted) != self.n_photons:
            raise ValueError(f"{self.n_photons - len(emitted)} photon(s) never emitted")

    def count(self, op: str) -> int:
        return sum(1 for s in self.steps if s.op == op)

    def to_jsonl(self) -> str:
        lines = []
        for s in self.steps:
            item = {"op": s.op}
            if s.photon is not None:
                item["photon"] = s.photon
            lines.append(json.dumps(item))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "GateSequence":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        steps = [Step(d["op"], d.get("photon")) for d in rows]
        return cls(steps, n_photons=sum(1 for s in steps if s.op == "E"))

    def __len__(self):
        return len(self.steps)


# ---------------------------------------------------------------------------
# compilation

def tree_sequence(shape: TreeShape) -> GateSequence:
    """Gate sequence for a tree, photon labels taken from the product formula.

    Leaves come first: ``n_d`` rounds of (E, rotation).  Then for each level
    ``d-j`` and each parent ``k`` the emitter scatters the parent's ``b``
    children (CZ), emits the parent (E) and is rotated back to |+>.
    """
    b = shape.branches
    d = shape.depth
    n = list(shape.level_counts) + [0]  # n[d+1] = 0
    steps: list[Step] = []
    photon = 0
    for _ in range(n[d]):
        photon += 1
        steps += [Step("E", photon), Step("ROTY")]
    for j in range(1, d + 1):
        offset = sum(n[d + 1 - m] for m in range(j))
        for k in range(1, n[d - j] + 1):
            for l in range(1, b[d - j] + 1):
                steps.append(Step("CZ", offset + (k - 1) * b[d - j] + l))
            photon += 1
            steps += [Step("E", photon), Step("ROTY")]
    return GateSequence(steps, n_photons=photon)


@dataclass
class RootedTree:
    """Arbitrary rooted tree, node 0 the root; ``children[v]`` is ordered."""

    children: list[list[int]]

    @classmethod
    def from_shape(cls, shape: TreeShape) -> "RootedTree":
        children: list[list[int]] = [[]]
        frontier = [0]
        for b in shape.branches:
            nxt = []
            for v in frontier:
                for _ in range(b):
                    children.append([])
                    children[v].append(len(children) - 1)
                    nxt.append(len(children) - 1)
            frontier = nxt
        return cls(children)

    @property
    def n_nodes(self) -> int:
        return len(self.children)

    def levels(self) -> list[list[int]]:
        out = [[0]]
        while True:
            nxt = [c for v in out[-1] for c in self.children[v]]
            if not nxt:
                return out
            out.append(nxt)

    def graph(self, relabel: dict[int, int] | None = None, n: int | None = None) -> GraphSpec:
        lab = relabel or {v: v for v in range(self.n_nodes)}
        edges = frozenset((lab[v], lab[c]) for v, cs in enumerate(self.children) for c in cs)
        return GraphSpec(self.n_nodes if n is None else n, edges)


def compile_tree(tree: RootedTree, root_is_emitter: bool = False) -> tuple[GateSequence, dict[int, int]]:
    """Level-by-level generation of any rooted tree.

    Returns the sequence and a map ``tree node -> qubit``.  With
    ``root_is_emitter`` the root is never emitted; the emitter itself ends up
    entangled with the level-1 photons, as in repeater-graph-state growth.
    """
    levels = tree.levels()
    qubit: dict[int, int] = {}
    steps: list[Step] = []
    photon = 0
    for depth in range(len(levels) - 1, -1, -1):
        for v in levels[depth]:
            for c in tree.children[v]:
                steps.append(Step("CZ", qubit[c]))
            if depth == 0 and root_is_emitter:
                qubit[v] = EMITTER
                continue
            photon += 1
            qubit[v] = photon
            steps += [Step("E", photon), Step("ROTY")]
    return GateSequence(steps, n_photons=photon), qubit


def ideal_tree_graph(shape: TreeShape) -> GraphSpec:
    """Target tree on photon labels (node ``p-1`` is photon ``p``)."""
    tree = RootedTree.from_shape(shape)
    _, qubit = compile_tree(tree)
    return tree.graph({v: q - 1 for v, q in qubit.items()})


# ---------------------------------------------------------------------------
# execution

def e_gate(state: StabilizerState, emitter: int, photon: int) -> StabilizerState:
    """Copy the emitter qubit onto a fresh photon and reset the emitter to |1>."""
    probe = state.copy()
    if not probe.is_deterministic("Z", photon) or probe.measure_z(photon) != 1:
        raise ValueError(f"photon {photon} is not a fresh |0> mode")
    state.cnot(emitter, photon)
    state.cnot(photon, emitter)
    state.apply_single("X", emitter)
    return state


@dataclass
class RunResult:
    state: StabilizerState
    outcomes: dict[tuple[str, int], int] = field(default_factory=dict)


def execute(seq: GateSequence, rng: np.random.Generator | None = None,
            forced: dict[tuple[str, int], int] | None = None) -> RunResult:
    """Run ``seq`` from emitter |+>, photons |0>.

    Measurement outcomes are keyed ``(op, qubit)``; ``forced`` pins chosen
    branches of random outcomes.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    forced = forced or {}
    state = StabilizerState(seq.n_photons + 1)
    state.h(EMITTER)
    out = RunResult(state)
    for step in seq.steps:
        p = step.photon
        if step.op == "E":
            state.cnot(EMITTER, p)
            state.cnot(p, EMITTER)
            state.apply_single("X", EMITTER)
        elif step.op == "CZ":
            state.cz(EMITTER, p)
        elif step.op == "ROTY":
            state.apply_single("RY_MINUS", EMITTER)
        elif step.op == "LC_A":
            state.apply_single("LC_A", EMITTER)
        elif step.op == "LC_B":
            state.apply_single("LC_B", p)
        elif step.op == "MEAS_Z":
            key = ("MEAS_Z", EMITTER)
            out.outcomes[key], _ = measure_pauli(state, "Z", EMITTER, rng, forced.get(key))
        elif step.op == "MEAS_X":
            key = ("MEAS_X", p)
            out.outcomes[key], _ = measure_pauli(state, "X", p, rng, forced.get(key))
    return out


def run_ideal(seq: GateSequence, rng: np.random.Generator | None = None,
              forced: dict | None = None) -> StabilizerState:
    return execute(seq, rng, forced).state


def photon_state(state: StabilizerState) -> StabilizerState:
    """Drop the emitter; raises if it is still entangled with the photons."""
    return reduced_state(state, range(1, state.n))


@dataclass
class Verification:
    shape: TreeShape
    ok: bool
    emitter_product: bool
    n_e: int
    n_cz: int

    def report(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        msg = "state matches ideal tree" if self.ok else "state differs from ideal tree"
        return (f"{verdict} {self.shape}: {self.shape.n_photons} photons, {msg} "
                f"(E gates: {self.n_e}, CZ gates: {self.n_cz})")


def verify_tree(shape: TreeShape) -> Verification:
    seq = tree_sequence(shape)
    state = run_ideal(seq)
    try:
        photons = photon_state(state)
        product = True
    except ValueError:
        product = False
    ok = product and states_equal(photons, graph_to_state(ideal_tree_graph(shape)))
    return Verification(shape, ok, product, seq.count("E"), seq.count("CZ"))


# ---------------------------------------------------------------------------
# repeater graph states

def rgs_sequence(n_core: int, core_scatter: bool = True) -> GateSequence:
    """Repeater-graph-state sequence with ``n_core`` core photons.

    Photons ``1..N`` are the arms and ``N+1..2N`` the cores.  The written
    product formula never scatters the core photons off the emitter, which
    leaves N disconnected pairs; ``core_scatter`` adds those N CZ gates
    (after all emissions, before the emitter rotation) so the emitter
    becomes the root of the {N,1} tree that the local complementation acts on.
    """
    if n_core < 2:
        raise ValueError("need at least two core photons")
    steps: list[Step] = []
    for j in range(1, n_core + 1):
        steps += [Step("E", j), Step("ROTY")]
    for k in range(1, n_core + 1):
        steps += [Step("CZ", k), Step("E", n_core + k), Step("LC_B", n_core + k), Step("ROTY")]
    if core_scatter:
        steps += [Step("CZ", n_core + k) for k in range(1, n_core + 1)]
    steps += [Step("LC_A"), Step("MEAS_Z")]
    return GateSequence(steps, n_photons=2 * n_core)


def rgs_graph(n_core: int) -> GraphSpec:
    """Target on photon labels: K_N on cores, arm ``k`` hanging off core ``N+k``."""
    edges = {(n_core + i, n_core + j) for i in range(n_core) for j in range(i + 1, n_core)}
    edges |= {(k, n_core + k) for k in range(n_core)}
    return GraphSpec(2 * n_core, frozenset(edges))


@dataclass
class BranchResult:
    outcome: int
    state: StabilizerState
    graph: GraphSpec | None
    signs: np.ndarray | None


def run_rgs(n_core: int, core_scatter: bool = True) -> dict[int, BranchResult]:
    """Both emitter-measurement branches; key = Z outcome (+1 is canonical)."""
    seq = rgs_sequence(n_core, core_scatter)
    out = {}
    for outcome in (1, -1):
        state = run_ideal(seq, forced={("MEAS_Z", EMITTER): outcome})
        photons = photon_state(state)
        found = extract_graph(photons)
        graph, signs = found if found else (None, None)
        out[outcome] = BranchResult(outcome, photons, graph, signs)
    return out


@dataclass
class EncodedRGSLayout:
    """Augmented generation tree plus the photon pairs to X-measure."""

    tree: RootedTree
    pairs: list[tuple[int, int]]
    wiring: str


def encoded_rgs_layout(n_core: int, core_shape: TreeShape, wiring: str = "first_level") -> EncodedRGSLayout:
    """Augmented tree for a tree-encoded repeater graph state (root = emitter).

    ``first_level``: emitter -> p_k -> {arm a_k, encoding root r_k}, with
    the ``core_shape`` tree hanging below r_k; the pair (p_k, r_k) is
    measured, so the first-level photons of every encoding tree inherit the
    logical bonds.  ``explicit_root``: emitter -> p_k -> q_k -> rho_k ->
    {a_k, encoding subtree}; measuring (p_k, q_k) bonds rho_k to the emitter
    and rho_k survives as the logical root.
    """
    children: list[list[int]] = [[]]

    def add(parent: int) -> int:
        children.append([])
        children[parent].append(len(children) - 1)
        return len(children) - 1

    def grow(root: int, branches: tuple[int, ...]):
        frontier = [root]
        for b in branches:
            frontier = [add(v) for v in frontier for _ in range(b)]

    pairs = []
    for _ in range(n_core):
        p = add(0)
        if wiring == "first_level":
            add(p)  # arm
            r = add(p)
            grow(r, core_shape.branches)
            pairs.append((p, r))
        elif wiring == "explicit_root":
            q = add(p)
            rho = add(q)
            add(rho)  # arm
            grow(rho, core_shape.branches)
            pairs.append((p, q))
        else:
            raise ValueError(f"unknown wiring {wiring!r}")
    return EncodedRGSLayout(RootedTree(children), pairs, wiring)


@dataclass
class EncodedRGSResult:
    state: StabilizerState
    graph: GraphSpec | None
    signs: np.ndarray | None
    expected: GraphSpec
    survivors: list[int]
    layout: EncodedRGSLayout
    qubit: dict[int, int]


def encoded_rgs_run(n_core: int, core_shape: TreeShape, wiring: str = "first_level",
                    rng: np.random.Generator | None = None) -> EncodedRGSResult:
    """Generate the augmented tree, X-measure the pairs, complement and detach the emitter.

    ``graph`` is read off the simulated state (over the surviving photons,
    in qubit order); ``expected`` is predicted independently by graph rules.
    """
    if n_core < 2:
        raise ValueError("need at least two core qubits")
    layout = encoded_rgs_layout(n_core, core_shape, wiring)
    seq, qubit = compile_tree(layout.tree, root_is_emitter=True)
    state = run_ideal(seq)
    rng = np.random.default_rng(0) if rng is None else rng
    measured = []
    for a, b in layout.pairs:
        for v in (a, b):
            measure_pauli(state, "X", qubit[v], rng)
            measured.append(qubit[v])

    # current emitter neighbourhood, read from the (Pauli-frame) graph form
    survivors = [q for q in range(state.n) if q not in set(measured)]
    live = reduced_state(state, survivors)
    found = extract_graph(live)
    if found is None:
        raise RuntimeError("post-measurement state is not in graph form")
    neighbours = found[0].neighbors(0)
    state.apply_single("LC_A", EMITTER)
    for w in neighbours:
        state.apply_single("LC_B", survivors[w])
    measure_pauli(state, "Z", EMITTER, rng)

    photons = [q for q in survivors if q != EMITTER]
    final = reduced_state(state, photons)
    found = extract_graph(final)
    graph, signs = found if found else (None, None)

    # independent prediction with graph rules on qubit labels
    g = layout.tree.graph({v: q for v, q in qubit.items()}, n=seq.n_photons + 1)
    for a, b in layout.pairs:
        g = contract_pair(g, qubit[a], qubit[b])
    g = local_complement(g, EMITTER)
    g = g.without([EMITTER] + measured)
    return EncodedRGSResult(final, graph, signs, g, photons, layout, qubit)


def equal_up_to_pauli_frame(state: StabilizerState, g: GraphSpec) -> bool:
    return states_equal(state, graph_to_state(g), ignore_signs=True)


def shapes_up_to(max_photons: int, max_depth: int = 3, max_branch: int = 3) -> Iterable[TreeShape]:
    from itertools import product as cartesian

    for d in range(1, max_depth + 1):
        for b in cartesian(range(1, max_branch + 1), repeat=d):
            s = TreeShape(b)
            if s.n_photons <= max_photons:
                yield s
