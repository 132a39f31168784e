"""Exhaustive search for the tree shape with the smallest effective error.

Loss only depends on the loss probability and coherence loss only on the
total emitter time, so for each loss probability the candidates are first
reduced to the (time, loss) Pareto front.  Every coherence value is then
scanned over that front only.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .loss_analysis import eps_loss, timing
from .protocol import TreeShape

TARGET = 1e-3


@dataclass(frozen=True)
class SearchConfig:
    max_depth: int = 5
    max_branch: int = 16
    max_photons: int = 10_000_000
    ratio: float = 0.0014   # gamma_B / gamma_R
    gbtph: float = 6.2      # gamma_B * t_ph

    def __post_init__(self):
        if self.max_depth < 1 or self.max_branch < 1 or self.max_photons < 1:
            raise ValueError("search bounds must be positive")

    @property
    def tph_gamma_r(self) -> float:
        """t_ph in units of 1/gamma_R."""
        return self.gbtph / self.ratio

    def tcoh_over_tph(self, cohbw: float) -> float:
        return cohbw / self.tph_gamma_r


def _photons(branches) -> int:
    total, n = 1, 1
    for b in branches:
        n *= b
        total += n
    return total


def enumerate_shapes(config: SearchConfig):
    """All branch vectors within the bounds, by depth then lexicographically."""
    for d in range(1, config.max_depth + 1):
        for branches in itertools.product(range(1, config.max_branch + 1), repeat=d):
            if _photons(branches) <= config.max_photons:
                yield TreeShape(branches)


# ---------------------------------------------------------------------------
# vectorised closed forms

def _pad(rows: list[tuple[int, ...]], width: int) -> np.ndarray:
    out = np.zeros((len(rows), width), dtype=np.int64)
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
    return out


@dataclass
class ShapeTable:
    """Branch vectors of one search as padded integer arrays."""

    shapes: list[tuple[int, ...]]
    depth: np.ndarray
    branches: np.ndarray  # (m, max_depth + 2), zero padded
    n_photons: np.ndarray
    t_min: np.ndarray     # units of t_ph

    @classmethod
    def build(cls, config: SearchConfig) -> "ShapeTable":
        shapes = [s.branches for s in enumerate_shapes(config)]
        if not shapes:
            raise ValueError("empty enumeration")
        depth = np.array([len(s) for s in shapes])
        br = _pad(shapes, config.max_depth + 2)
        n_ph = np.array([_photons(s) for s in shapes], dtype=np.int64)
        return cls(shapes, depth, br, n_ph, batch_t_min(br, depth))

    def __len__(self):
        return len(self.shapes)

    @cached_property
    def t_order(self) -> np.ndarray:
        return np.argsort(self.t_min, kind="stable")

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.shapes)}


def batch_t_min(br: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Minimal coherence time (units of t_ph) for padded branch rows."""
    m, width = br.shape
    out = np.zeros(m)
    for d in np.unique(depth):
        sel = depth == d
        b = br[sel][:, :d].astype(float)
        counts = np.cumprod(np.hstack([np.ones((b.shape[0], 1)), b]), axis=1)  # n_0..n_d
        dt = np.zeros((b.shape[0], d + 1))
        dt[:, d] = 1.0
        dt[:, d - 1] = b[:, d - 1] + 1
        for l in range(d - 2, 0, -1):
            dt[:, l] = b[:, l] * dt[:, l + 1]
        total = counts[:, d].copy()
        for l in range(d):
            total += ((b[:, l] - 1) * dt[:, l + 1] + 2) * counts[:, l]
        out[sel] = total
    return out


def batch_eps_loss(br: np.ndarray, depth: np.ndarray, eps: float) -> np.ndarray:
    """Logical loss failure for padded branch rows (zero beyond the depth)."""
    m, width = br.shape
    b = br.astype(float)
    R = np.zeros((m, width + 1))
    # R_l is zero for l >= depth; padding already gives b_l = 0 there
    for l in range(width - 2, -1, -1):
        val = 1.0 - (1.0 - (1.0 - eps) * (1.0 - eps + eps * R[:, l + 2]) ** b[:, l + 1]) ** b[:, l]
        R[:, l] = np.where(l < depth, val, 0.0)
    ok = ((1 - eps + eps * R[:, 1]) ** b[:, 0] - (eps * R[:, 1]) ** b[:, 0]) * (1 - eps + eps * R[:, 2]) ** b[:, 1]
    return 1.0 - ok


def coherence_error(t_min: np.ndarray, tcoh_over_tph: float) -> np.ndarray:
    if math.isinf(tcoh_over_tph):
        return np.zeros_like(t_min, dtype=float)
    return -np.expm1(-t_min / tcoh_over_tph)


# ---------------------------------------------------------------------------
# search

@dataclass
class Candidate:
    shape: tuple[int, ...]
    n_photons: int
    eps_loss: float
    eps_coh: float
    eps_eff: float

    @property
    def label(self) -> str:
        return "{" + ",".join(map(str, self.shape)) + "}"


def _pick(table: ShapeTable, idx: np.ndarray, loss: np.ndarray, tcoh_over_tph: float) -> Candidate:
    """Best of the shapes ``idx``; ``loss`` is aligned with ``idx``."""
    coh = coherence_error(table.t_min[idx], tcoh_over_tph)
    eff = 1.0 - (1.0 - loss) * (1.0 - coh)
    best = eff.min()
    tied = np.flatnonzero(eff == best)
    # fewer photons first, then the lexicographically smaller branch vector
    j = min(tied, key=lambda k: (table.n_photons[idx[k]], table.shapes[idx[k]]))
    i = idx[j]
    return Candidate(table.shapes[i], int(table.n_photons[i]), float(loss[j]), float(coh[j]), float(eff[j]))


def pareto_front(t_min: np.ndarray, loss: np.ndarray, order: np.ndarray | None = None) -> np.ndarray:
    """Indices with no other point at most as slow and strictly less lossy.

    Equal-loss slower points are kept: with infinite coherence they tie on
    the effective error and take part in the photon-count tie-break.

    ``order`` may pass a precomputed stable argsort of ``t_min``.
    """
    order = np.argsort(t_min, kind="stable") if order is None else order
    ts, ls = t_min[order], loss[order]
    starts = np.flatnonzero(np.r_[True, ts[1:] != ts[:-1]])
    group_min = np.minimum.reduceat(ls, starts)
    earlier = np.r_[np.inf, np.minimum.accumulate(group_min)[:-1]]
    bound = np.repeat(np.minimum(group_min, earlier), np.diff(np.r_[starts, ls.size]))
    return np.sort(order[ls <= bound]).astype(np.int64)


class Optimizer:
    """Holds the enumerated shapes and caches per-loss Pareto fronts.

    Full loss vectors are large (one float per shape), so only the last few
    are kept; fronts are small and cached for every loss value seen.
    """

    LOSS_CACHE = 4

    def __init__(self, config: SearchConfig | None = None):
        self.config = config or SearchConfig()
        self.table = ShapeTable.build(self.config)
        self._loss: OrderedDict[float, np.ndarray] = OrderedDict()
        self._front: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def loss(self, eps: float) -> np.ndarray:
        if eps in self._loss:
            self._loss.move_to_end(eps)
            return self._loss[eps]
        if not 0.0 <= eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        vals = batch_eps_loss(self.table.branches, self.table.depth, eps)
        self._loss[eps] = vals
        while len(self._loss) > self.LOSS_CACHE:
            self._loss.popitem(last=False)
        return vals

    def front(self, eps: float) -> np.ndarray:
        return self._front_data(eps)[0]

    def _front_data(self, eps: float) -> tuple[np.ndarray, np.ndarray]:
        if eps not in self._front:
            loss = self.loss(eps)
            idx = pareto_front(self.table.t_min, loss, self.table.t_order)
            self._front[eps] = (idx, loss[idx])
        return self._front[eps]

    def best(self, eps: float, tcoh_over_tph: float) -> Candidate:
        idx, loss = self._front_data(eps)
        return _pick(self.table, idx, loss, tcoh_over_tph)

    def best_cohbw(self, eps: float, cohbw: float) -> Candidate:
        return self.best(eps, self.config.tcoh_over_tph(cohbw))

    def evaluate(self, shape: TreeShape | tuple[int, ...], eps: float, tcoh_over_tph: float) -> Candidate:
        key = shape.branches if isinstance(shape, TreeShape) else tuple(shape)
        shape = TreeShape(key)
        if key not in self.table.index:
            raise KeyError(f"{shape} is outside the search bounds")
        i = self.table.index[key]
        return _pick(self.table, np.array([i]), np.array([eps_loss(shape, eps)]), tcoh_over_tph)

    def best_for_size(self, eps: float, tcoh_over_tph: float, size_cap: int) -> Candidate:
        if size_cap < 2:
            raise ValueError("size_cap must be at least 2")
        idx = np.flatnonzero(self.table.n_photons <= size_cap)
        if idx.size == 0:
            raise ValueError("no shape within the size cap")
        return _pick(self.table, idx, self.loss(eps)[idx], tcoh_over_tph)

    def size_curve(self, eps: float, tcoh_over_tph: float, edges: list[int]) -> list[Candidate | None]:
        """Best shape whose photon count falls in each bin (edges[i-1], edges[i]]."""
        out = []
        lo = 0
        loss = self.loss(eps)
        for hi in edges:
            idx = np.flatnonzero((self.table.n_photons > lo) & (self.table.n_photons <= hi))
            out.append(_pick(self.table, idx, loss[idx], tcoh_over_tph) if idx.size else None)
            lo = hi
        return out

    def min_cohbw(self, eps: float, target: float = TARGET, lo: float = 1.0, hi: float = 1e20,
                  rel_tol: float = 1e-6) -> float:
        """Smallest t_coh * gamma_R for which the optimum reaches ``target`` (inf if never)."""
        if self.best(eps, math.inf).eps_eff > target:
            return math.inf
        if self.best_cohbw(eps, lo).eps_eff <= target:
            return lo
        while self.best_cohbw(eps, hi).eps_eff > target:
            hi *= 10
        while hi / lo > 1 + rel_tol:
            mid = math.sqrt(lo * hi)
            if self.best_cohbw(eps, mid).eps_eff <= target:
                hi = mid
            else:
                lo = mid
        return hi


# ---------------------------------------------------------------------------
# sweeps

CSV_COLUMNS = ("eps", "cohbw", "best_shape", "n_photons", "eps_loss", "eps_coh", "eps_eff")


@dataclass
class SweepResult:
    eps_grid: list[float]
    cohbw_grid: list[float]
    cells: list[dict] = field(default_factory=list)
    contour: list[dict] = field(default_factory=list)

    def grid(self) -> np.ndarray:
        """eps_eff with eps along rows and cohbw along columns."""
        return np.array([c["eps_eff"] for c in self.cells]).reshape(len(self.eps_grid), len(self.cohbw_grid))

    def rows(self) -> list[dict]:
        return [{k: c[k] for k in CSV_COLUMNS} for c in self.cells]


def parse_grid(text: str, log: bool | None = None) -> list[float]:
    """``start:stop:count`` (log spaced when the range spans two decades or more) or a comma list."""
    if ":" not in text:
        return [float(v) for v in text.split(",")]
    start, stop, count = text.split(":")
    a, b, n = float(start), float(stop), int(float(count))
    if n < 1:
        raise ValueError("grid needs at least one point")
    if log is None:
        log = a > 0 and b / a >= 100
    if log:
        return list(np.geomspace(a, b, n))
    return list(np.linspace(a, b, n))


def sweep(eps_grid, cohbw_grid, config: SearchConfig | None = None, optimizer: Optimizer | None = None,
          target: float = TARGET, workers: int = 1) -> SweepResult:
    if len(eps_grid) == 0 or len(cohbw_grid) == 0:
        raise ValueError("grids must be non-empty")
    opt = optimizer or Optimizer(config)
    eps_grid = [float(e) for e in eps_grid]
    cohbw_grid = [float(c) for c in cohbw_grid]

    def row(eps):
        cells = []
        for cb in cohbw_grid:
            c = opt.best_cohbw(eps, cb)
            cells.append({"eps": eps, "cohbw": cb, "best_shape": c.label, "n_photons": c.n_photons,
                          "eps_loss": c.eps_loss, "eps_coh": c.eps_coh, "eps_eff": c.eps_eff})
        return cells

    # fill the loss cache serially so worker threads only read it
    for e in eps_grid:
        opt.front(e)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, eps_grid))
    else:
        rows = [row(e) for e in eps_grid]
    res = SweepResult(eps_grid, cohbw_grid, [c for r in rows for c in r])
    res.contour = [{"eps": e, "min_cohbw": opt.min_cohbw(e, target)} for e in eps_grid]
    return res


def shape_reaches(opt: Optimizer, shape: TreeShape | tuple[int, ...], eps_grid, cohbw_grid,
                  target: float = TARGET) -> list[tuple[float, float, float]]:
    """Grid cells where a fixed shape alone reaches the target."""
    shape = shape if isinstance(shape, TreeShape) else TreeShape(tuple(shape))
    t_min = timing(shape).t_min
    hits = []
    for e in eps_grid:
        loss = eps_loss(shape, e)
        for cb in cohbw_grid:
            coh = float(coherence_error(np.array(t_min), opt.config.tcoh_over_tph(cb)))
            eff = 1.0 - (1.0 - loss) * (1.0 - coh)
            if eff <= target:
                hits.append((e, cb, eff))
    return hits
