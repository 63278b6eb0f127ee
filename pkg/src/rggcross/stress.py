"""Metric stress of a projected configuration against Euclidean distances in R^d."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from scipy.spatial.distance import pdist

from .geometry import Plane2, project
from .pointprocess import GeometricGraph


class WeightKind(str, Enum):
    INVERSE_SQUARE = "inverse_square"
    UNIT = "unit"


def _weighted_sq(d0: np.ndarray, dl: np.ndarray, w: WeightKind) -> np.ndarray:
    if w is WeightKind.INVERSE_SQUARE:
        if np.any(d0 == 0):
            raise ValueError("coincident points: inverse-square weight is undefined")
        return (1.0 - dl / d0) ** 2
    return (d0 - dl) ** 2


def stress_term(p, q, L: Plane2, w: WeightKind = WeightKind.INVERSE_SQUARE) -> float:
    """Contribution ``w * (d0 - dL)^2`` of the unordered pair ``{p, q}``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    diff = p - q
    d0 = math.sqrt(float(diff @ diff))
    if d0 == 0:
        raise ValueError("stress term needs two distinct points")
    dl = float(np.linalg.norm(project(diff, L)))
    return float(_weighted_sq(np.array([d0]), np.array([dl]), WeightKind(w))[0])


def pair_terms(points, L: Plane2, w: WeightKind = WeightKind.INVERSE_SQUARE) -> np.ndarray:
    """Stress summands for all unordered pairs, in ``pdist`` order."""
    pts = np.asarray(points, dtype=float)
    return _weighted_sq(pdist(pts), pdist(project(pts, L)), WeightKind(w))


def stress_of_points(points, L: Plane2, w: WeightKind = WeightKind.INVERSE_SQUARE) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(pair_terms(pts, L, w)))


def stress_of_projection(G: GeometricGraph, L: Plane2, w: WeightKind = WeightKind.INVERSE_SQUARE) -> float:
    """Half the sum over ordered distinct vertex pairs, i.e. the sum over unordered pairs.

    All vertex pairs contribute, not only edges.
    """
    if G.dim != L.dim:
        raise ValueError(f"graph dimension {G.dim} does not match plane dimension {L.dim}")
    return stress_of_points(G.points, L, w)
