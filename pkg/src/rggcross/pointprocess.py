"""Poisson / binomial point processes in a convex body and the random geometric graph."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numba
import numpy as np

from .geometry import ConvexBody, as_rng, kappa

_MAX_CELLS = 1 << 22


@dataclass(eq=False)
class GeometricGraph:
    """Points in R^d with the straight-line edges of a distance-threshold graph."""

    points: np.ndarray
    edges: np.ndarray
    delta: float
    dim: int = field(default=0)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            if not self.dim:
                raise ValueError("dim is required when points is empty")
            pts = pts.reshape(-1, self.dim)
        self.points = pts
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.dim = pts.shape[1]

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return len(self.edges)

    def check(self) -> None:
        """Assert simplicity, i < j ordering and the distance bound on every edge."""
        e = self.edges
        if len(e) == 0:
            return
        assert np.all(e[:, 0] < e[:, 1]), "edges must satisfy i < j"
        assert np.all(e >= 0) and np.all(e < self.n), "edge index out of range"
        assert len(np.unique(e, axis=0)) == len(e), "duplicate edge"
        diff = self.points[e[:, 0]] - self.points[e[:, 1]]
        assert np.all(np.sqrt(np.sum(diff * diff, axis=1)) <= self.delta + 1e-12)


class RegimeKind(str, Enum):
    THERMODYNAMIC = "thermodynamic"
    DENSE = "dense"
    FIXED = "fixed"


@dataclass(frozen=True)
class RegimeSchedule:
    """Maps an intensity ``t`` to the connection radius ``delta_t``.

    thermodynamic(c):  t * delta^d = c
    dense(c, beta):    t * delta^d = c * t^(1 - beta)
    fixed(delta):      delta independent of t
    """

    kind: RegimeKind
    c: float = 1.0
    beta: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegimeKind(self.kind))
        if self.kind is RegimeKind.FIXED:
            if not self.delta > 0:
                raise ValueError("fixed schedule needs delta > 0")
        elif not self.c > 0:
            raise ValueError("schedule constant c must be > 0")
        if self.kind is RegimeKind.DENSE and not 0 < self.beta < 1:
            raise ValueError("dense schedule needs 0 < beta < 1")

    @classmethod
    def thermodynamic(cls, c: float) -> "RegimeSchedule":
        return cls(RegimeKind.THERMODYNAMIC, c=c)

    @classmethod
    def dense(cls, c: float, beta: float) -> "RegimeSchedule":
        return cls(RegimeKind.DENSE, c=c, beta=beta)

    @classmethod
    def fixed(cls, delta: float) -> "RegimeSchedule":
        return cls(RegimeKind.FIXED, delta=delta)

    @classmethod
    def parse(cls, text: str) -> "RegimeSchedule":
        """Parse ``"thermodynamic 5"``, ``"dense 1 0.75"`` or ``"fixed 0.05"``."""
        parts = text.replace(",", " ").replace(":", " ").split()
        if not parts:
            raise ValueError("empty schedule")
        kind = RegimeKind(parts[0].lower())
        args = [float(a) for a in parts[1:]]
        if kind is RegimeKind.THERMODYNAMIC and len(args) == 1:
            return cls.thermodynamic(args[0])
        if kind is RegimeKind.DENSE and len(args) == 2:
            return cls.dense(*args)
        if kind is RegimeKind.FIXED and len(args) == 1:
            return cls.fixed(args[0])
        raise ValueError(f"wrong number of parameters for {kind.value} schedule: {text!r}")

    def __str__(self) -> str:
        if self.kind is RegimeKind.THERMODYNAMIC:
            return f"thermodynamic {self.c!r}"
        if self.kind is RegimeKind.DENSE:
            return f"dense {self.c!r} {self.beta!r}"
        return f"fixed {self.delta!r}"

    def delta_at(self, t: float, d: int) -> float:
        if self.kind is RegimeKind.FIXED:
            return self.delta
        if self.kind is RegimeKind.THERMODYNAMIC:
            return (self.c / t) ** (1.0 / d)
        return (self.c * t ** (-self.beta)) ** (1.0 / d)


def sample_poisson(W: ConvexBody, t: float, rng) -> np.ndarray:
    """Poisson process of intensity ``t`` in ``W``: Poisson(t) many i.i.d. uniform points."""
    if not t > 0:
        raise ValueError(f"intensity must be > 0, got {t}")
    rng = as_rng(rng)
    n = int(rng.poisson(t))
    return W.sample(rng, n)


def sample_binomial(W: ConvexBody, n: int, rng) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be >= 0")
    return W.sample(as_rng(rng), int(n))


@numba.njit(cache=True)
def _grid_edges(points, delta, cell, lo, dims, offsets):
    n, d = points.shape
    strides = np.empty(d, np.int64)
    s = 1
    for k in range(d - 1, -1, -1):
        strides[k] = s
        s *= dims[k]
    ncell = s
    coords = np.empty((n, d), np.int64)
    keys = np.empty(n, np.int64)
    for i in range(n):
        key = 0
        for k in range(d):
            c = int((points[i, k] - lo[k]) / cell)
            if c < 0:
                c = 0
            elif c >= dims[k]:
                c = dims[k] - 1
            coords[i, k] = c
            key += c * strides[k]
        keys[i] = key
    order = np.argsort(keys, kind="mergesort")
    start = np.zeros(ncell + 1, np.int64)
    for i in range(n):
        start[keys[i] + 1] += 1
    for c in range(ncell):
        start[c + 1] += start[c]

    d2max = delta * delta
    counts = np.zeros(n, np.int64)
    buf = np.empty(n, np.int64)
    total = 0
    # pass 0 counts, pass 1 fills
    out = np.empty((0, 2), np.int64)
    for sweep in range(2):
        if sweep == 1:
            out = np.empty((total, 2), np.int64)
        pos = 0
        for i in range(n):
            nb = 0
            for o in range(offsets.shape[0]):
                key = 0
                ok = True
                for k in range(d):
                    c = coords[i, k] + offsets[o, k]
                    if c < 0 or c >= dims[k]:
                        ok = False
                        break
                    key += c * strides[k]
                if not ok:
                    continue
                for a in range(start[key], start[key + 1]):
                    j = order[a]
                    if j <= i:
                        continue
                    d2 = 0.0
                    for k in range(d):
                        diff = points[i, k] - points[j, k]
                        d2 += diff * diff
                    if d2 <= d2max:
                        if sweep == 0:
                            nb += 1
                        else:
                            buf[nb] = j
                            nb += 1
            if sweep == 0:
                counts[i] = nb
                total += nb
            else:
                sub = np.sort(buf[:nb])
                for b in range(nb):
                    out[pos, 0] = i
                    out[pos, 1] = sub[b]
                    pos += 1
    return out


@numba.njit(cache=True)
def _all_pairs_edges(points, delta):
    n, d = points.shape
    d2max = delta * delta
    cnt = 0
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for k in range(d):
                diff = points[i, k] - points[j, k]
                d2 += diff * diff
            if d2 <= d2max:
                cnt += 1
    out = np.empty((cnt, 2), np.int64)
    p = 0
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for k in range(d):
                diff = points[i, k] - points[j, k]
                d2 += diff * diff
            if d2 <= d2max:
                out[p, 0] = i
                out[p, 1] = j
                p += 1
    return out


def rgg_edges_bruteforce(points, delta: float) -> np.ndarray:
    """All pairs ``i < j`` with ``|p_i - p_j| <= delta``, by exhaustive comparison."""
    pts = np.ascontiguousarray(points, dtype=float)
    if len(pts) < 2:
        return np.empty((0, 2), np.int64)
    return _all_pairs_edges(pts, float(delta))


def build_rgg(points, delta: float) -> GeometricGraph:
    """Random geometric graph on ``points`` with inclusive threshold ``delta``.

    Neighbours are found through a uniform cell grid of side ``delta`` laid
    over the bounding box of the points.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    pts = np.ascontiguousarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    n, d = pts.shape
    if n < 2:
        return GeometricGraph(pts, np.empty((0, 2), np.int64), float(delta), d)
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    # slightly inflated cells keep every delta-neighbour within the 3^d block
    cell = delta * (1 + 1e-9)
    while np.prod(np.floor(span / cell) + 1.0) > _MAX_CELLS:
        cell *= 2.0
    dims = (np.floor(span / cell) + 1).astype(np.int64)
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)
    edges = _grid_edges(pts, float(delta), float(cell), lo, dims, offsets)
    return GeometricGraph(pts, edges, float(delta), d)


def expected_edges(W: ConvexBody, t: float, delta: float) -> float:
    """Leading term ``kappa_d / 2 * t^2 * delta^d`` of the mean edge count.

    The boundary correction is of order ``t^2 delta^(d+1) surf(W)`` and is not
    included.
    """
    if not (t > 0 and delta > 0):
        raise ValueError("t and delta must be > 0")
    return 0.5 * kappa(W.dim) * t * t * delta ** W.dim


class GraphFormatError(ValueError):
    pass


def write_graph(G: GeometricGraph, path) -> None:
    """Text dump: ``d n delta``, n coordinate lines, ``m``, m lines ``i j``."""
    lines = [f"{G.dim} {G.n} {G.delta:.17g}"]
    lines += [" ".join(f"{x:.17g}" for x in p) for p in G.points]
    lines.append(str(G.m))
    lines += [f"{i} {j}" for i, j in G.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> GeometricGraph:
    text = Path(path).read_text().splitlines()
    it = iter(enumerate(text, start=1))

    def next_line():
        for no, line in it:
            if line.strip():
                return no, line.split()
        raise GraphFormatError(f"line {len(text) + 1}: unexpected end of file")

    no, head = next_line()
    if len(head) != 3:
        raise GraphFormatError(f"line {no}: expected 'd n delta', got {' '.join(head)!r}")
    try:
        d, n, delta = int(head[0]), int(head[1]), float(head[2])
    except ValueError as exc:
        raise GraphFormatError(f"line {no}: {exc}") from None
    if d < 2:
        raise GraphFormatError(f"line {no}: dimension must be >= 2, got {d}")
    if n < 0 or not delta > 0:
        raise GraphFormatError(f"line {no}: need n >= 0 and delta > 0")
    pts = np.empty((n, d))
    for i in range(n):
        no, row = next_line()
        if len(row) != d:
            raise GraphFormatError(f"line {no}: expected {d} coordinates, got {len(row)}")
        try:
            pts[i] = [float(x) for x in row]
        except ValueError as exc:
            raise GraphFormatError(f"line {no}: {exc}") from None
        if not np.all(np.isfinite(pts[i])):
            raise GraphFormatError(f"line {no}: non-finite coordinate")
    no, row = next_line()
    try:
        (m,) = [int(x) for x in row]
    except ValueError:
        raise GraphFormatError(f"line {no}: expected edge count, got {' '.join(row)!r}") from None
    edges = np.empty((m, 2), np.int64)
    for k in range(m):
        no, row = next_line()
        try:
            i, j = (int(x) for x in row)
        except ValueError:
            raise GraphFormatError(f"line {no}: expected 'i j', got {' '.join(row)!r}") from None
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise GraphFormatError(f"line {no}: invalid edge {i} {j}")
        edges[k] = (min(i, j), max(i, j))
    return GeometricGraph(pts, edges, delta, d)
