"""Crossing counts of straight-line drawings.

A crossing is a proper interior intersection of two vertex-disjoint edges.
Orientation signs are decided with a floating-point filter (Shewchuk's
static bound for orient2d); pairs the filter cannot certify are re-evaluated
exactly with rational arithmetic. An exactly vanishing orientation marks the
drawing as degenerate and the pair does not count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numba
import numpy as np

from .geometry import Plane2, project
from .pointprocess import GeometricGraph

_EPS = np.finfo(float).eps / 2
CCW_ERRBOUND_A = (3.0 + 16.0 * _EPS) * _EPS
_UNCERTAIN = 2
_INITIAL_CAP = 1 << 12


@dataclass(frozen=True)
class CrossingCount:
    count: int
    degenerate: bool = False

    def __int__(self):
        return self.count


@dataclass(eq=False)
class Drawing2:
    """Planar vertex positions ``(n, 2)`` and an edge list ``(m, 2)``."""

    positions: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        self.positions = np.ascontiguousarray(np.asarray(self.positions, dtype=float).reshape(-1, 2))
        self.edges = np.ascontiguousarray(np.asarray(self.edges, dtype=np.int64).reshape(-1, 2))
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= len(self.positions)):
            raise ValueError("edge index out of range")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise ValueError("self-loop in edge list")

    @property
    def m(self) -> int:
        return len(self.edges)


def orient_exact(a, b, c) -> int:
    """Exact sign of the orientation determinant of ``(a, b, c)``."""
    ax, ay = Fraction(a[0]), Fraction(a[1])
    det = (Fraction(b[0]) - ax) * (Fraction(c[1]) - ay) - (Fraction(b[1]) - ay) * (Fraction(c[0]) - ax)
    return (det > 0) - (det < 0)


def _segment_relation(a0, a1, b0, b1) -> tuple[bool, bool]:
    """(proper crossing, degenerate) for two segments, decided exactly."""
    o1 = orient_exact(a0, a1, b0)
    o2 = orient_exact(a0, a1, b1)
    o3 = orient_exact(b0, b1, a0)
    o4 = orient_exact(b0, b1, a1)
    degenerate = 0 in (o1, o2, o3, o4)
    return (o1 * o2 < 0 and o3 * o4 < 0), degenerate


def segments_cross(a, b) -> bool:
    """True iff segments ``a = (p, q)`` and ``b`` meet in exactly one interior point."""
    a0, a1 = (tuple(map(float, p)) for p in a)
    b0, b1 = (tuple(map(float, p)) for p in b)
    if a0 == a1 or b0 == b1:
        raise ValueError("zero-length segment")
    if {a0, a1} & {b0, b1}:
        return False
    return _segment_relation(a0, a1, b0, b1)[0]


def count_crossings_reference(D: Drawing2) -> CrossingCount:
    """Pure-Python exhaustive count with exact predicates on every pair. Slow."""
    P = D.positions
    total = 0
    degenerate = False
    E = [tuple(e) for e in D.edges]
    for i in range(len(E)):
        a, b = E[i]
        for j in range(i + 1, len(E)):
            c, d = E[j]
            if a in (c, d) or b in (c, d):
                continue
            crossed, degen = _segment_relation(P[a], P[b], P[c], P[d])
            total += crossed
            degenerate |= degen
    return CrossingCount(total, degenerate)


@numba.njit(cache=True, inline="always")
def _orient(ax, ay, bx, by, cx, cy):
    left = (bx - ax) * (cy - ay)
    right = (by - ay) * (cx - ax)
    det = left - right
    bound = CCW_ERRBOUND_A * (abs(left) + abs(right))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _UNCERTAIN


@numba.njit(cache=True, inline="always")
def _pair_status(P, E, e, f):
    """0: no crossing, 1: crossing, 2: filter uncertain (decide exactly)."""
    a = E[e, 0]
    b = E[e, 1]
    c = E[f, 0]
    d = E[f, 1]
    o1 = _orient(P[a, 0], P[a, 1], P[b, 0], P[b, 1], P[c, 0], P[c, 1])
    o2 = _orient(P[a, 0], P[a, 1], P[b, 0], P[b, 1], P[d, 0], P[d, 1])
    if o1 == _UNCERTAIN or o2 == _UNCERTAIN:
        return 2
    if o1 == o2:
        return 0
    o3 = _orient(P[c, 0], P[c, 1], P[d, 0], P[d, 1], P[a, 0], P[a, 1])
    o4 = _orient(P[c, 0], P[c, 1], P[d, 0], P[d, 1], P[b, 0], P[b, 1])
    if o3 == _UNCERTAIN or o4 == _UNCERTAIN:
        return 2
    if o3 == o4:
        return 0
    return 1


@numba.njit(cache=True)
def _brute_kernel(P, E, pending):
    m = E.shape[0]
    xmin = np.empty(m)
    xmax = np.empty(m)
    ymin = np.empty(m)
    ymax = np.empty(m)
    for e in range(m):
        a = E[e, 0]
        b = E[e, 1]
        xmin[e] = min(P[a, 0], P[b, 0])
        xmax[e] = max(P[a, 0], P[b, 0])
        ymin[e] = min(P[a, 1], P[b, 1])
        ymax[e] = max(P[a, 1], P[b, 1])
    count = 0
    npend = 0
    for e in range(m):
        a = E[e, 0]
        b = E[e, 1]
        for f in range(e + 1, m):
            c = E[f, 0]
            d = E[f, 1]
            if a == c or a == d or b == c or b == d:
                continue
            if xmax[f] < xmin[e] or xmax[e] < xmin[f] or ymax[f] < ymin[e] or ymax[e] < ymin[f]:
                continue
            s = _pair_status(P, E, e, f)
            if s == 1:
                count += 1
            elif s == 2:
                if npend < pending.shape[0]:
                    pending[npend, 0] = e
                    pending[npend, 1] = f
                npend += 1
    return count, npend


@numba.njit(cache=True)
def _sweep_kernel(P, E, pending):
    m = E.shape[0]
    xmin = np.empty(m)
    xmax = np.empty(m)
    ymin = np.empty(m)
    ymax = np.empty(m)
    for e in range(m):
        a = E[e, 0]
        b = E[e, 1]
        xmin[e] = min(P[a, 0], P[b, 0])
        xmax[e] = max(P[a, 0], P[b, 0])
        ymin[e] = min(P[a, 1], P[b, 1])
        ymax[e] = max(P[a, 1], P[b, 1])
    order = np.argsort(xmin, kind="mergesort")
    active = np.empty(m, np.int64)
    nact = 0
    count = 0
    npend = 0
    for k in range(m):
        e = order[k]
        x0 = xmin[e]
        # retire segments whose right end lies left of the sweep line
        keep = 0
        for q in range(nact):
            g = active[q]
            if xmax[g] >= x0:
                active[keep] = g
                keep += 1
        nact = keep
        a = E[e, 0]
        b = E[e, 1]
        for q in range(nact):
            f = active[q]
            if ymax[f] < ymin[e] or ymax[e] < ymin[f]:
                continue
            c = E[f, 0]
            d = E[f, 1]
            if a == c or a == d or b == c or b == d:
                continue
            s = _pair_status(P, E, e, f)
            if s == 1:
                count += 1
            elif s == 2:
                if npend < pending.shape[0]:
                    pending[npend, 0] = e
                    pending[npend, 1] = f
                npend += 1
        active[nact] = e
        nact += 1
    return count, npend


def _run(kernel, D: Drawing2) -> tuple[int, bool]:
    P, E = D.positions, D.edges
    cap = _INITIAL_CAP
    while True:
        pending = np.empty((cap, 2), np.int64)
        count, npend = kernel(P, E, pending)
        if npend <= cap:
            break
        cap = npend
    degenerate = False
    for e, f in pending[:npend]:
        a, b = E[e]
        c, d = E[f]
        crossed, degen = _segment_relation(P[a], P[b], P[c], P[d])
        count += crossed
        degenerate |= degen
    return int(count), degenerate


def _has_coincident_vertices(D: Drawing2) -> bool:
    used = np.unique(D.edges)
    if used.size < 2:
        return False
    return len(np.unique(D.positions[used], axis=0)) < used.size


def count_crossings_bruteforce(D: Drawing2) -> CrossingCount:
    """Exhaustive count over all unordered pairs of vertex-disjoint edges."""
    if D.m < 2:
        return CrossingCount(0, False)
    count, degenerate = _run(_brute_kernel, D)
    return CrossingCount(count, degenerate or _has_coincident_vertices(D))


def _tied_abscissae(D: Drawing2) -> bool:
    used = np.unique(D.edges)
    xs = D.positions[used, 0]
    return len(np.unique(xs)) < len(xs)


def count_crossings_sweep(D: Drawing2) -> CrossingCount:
    """Plane-sweep count over x-sorted edges with an active list.

    Edges enter the active list at their left abscissa and retire once the
    sweep line passes their right end; only bounding-box-overlapping active
    pairs are tested. Coincident vertices or two vertices with the same
    abscissa count as a degeneracy, in which case the exhaustive count is
    returned instead.
    """
    if D.m < 2:
        return CrossingCount(0, False)
    if _has_coincident_vertices(D) or _tied_abscissae(D):
        return CrossingCount(count_crossings_bruteforce(D).count, True)
    count, degenerate = _run(_sweep_kernel, D)
    if degenerate:
        return CrossingCount(count_crossings_bruteforce(D).count, True)
    return CrossingCount(count, False)


def drawing_of(G: GeometricGraph, L: Plane2) -> Drawing2:
    if G.dim != L.dim:
        raise ValueError(f"graph dimension {G.dim} does not match plane dimension {L.dim}")
    return Drawing2(project(G.points, L), G.edges)


def crossing_number_of_projection(G: GeometricGraph, L: Plane2) -> CrossingCount:
    return count_crossings_sweep(drawing_of(G, L))


def crossing_lemma_floor(n: int, m: int) -> float:
    """Crossing-lemma lower bound ``m^3 / (20 n^2)`` for ``m >= 7n``, else 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 7 * n:
        return 0.0
    return m ** 3 / (20.0 * n * n)


def max_crossings(m: int) -> int:
    return math.comb(m, 2)
