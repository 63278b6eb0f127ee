"""Convex bodies of unit volume, Haar-random 2-planes, projections and fiber volumes.

Bodies are centred at the origin. Points are numpy arrays of shape ``(d,)`` or
``(n, d)``; projected points have shape ``(2,)`` or ``(n, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .stats import McEstimate

ORTHO_TOL = 1e-12
_RESAMPLE_TOL = 1e-9


def kappa(d: int) -> float:
    """Volume of the unit ball in R^d."""
    if d < 0:
        raise ValueError(f"dimension must be >= 0, got {d}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class BodyKind(str, Enum):
    BALL = "ball"
    CUBE = "cube"


@dataclass(frozen=True)
class ConvexBody:
    """Unit-volume ball or cube in R^d, centred at the origin."""

    kind: BodyKind
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", BodyKind(self.kind))
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"body dimension must be an integer >= 2, got {self.dim}")

    @classmethod
    def ball(cls, d: int) -> "ConvexBody":
        return cls(BodyKind.BALL, d)

    @classmethod
    def cube(cls, d: int) -> "ConvexBody":
        return cls(BodyKind.CUBE, d)

    @property
    def volume(self) -> float:
        return 1.0

    @cached_property
    def radius(self) -> float:
        """Ball radius ``kappa_d ** (-1/d)``; half the side length for the cube."""
        if self.kind is BodyKind.BALL:
            return kappa(self.dim) ** (-1.0 / self.dim)
        return 0.5

    @cached_property
    def circumradius(self) -> float:
        if self.kind is BodyKind.BALL:
            return self.radius
        return 0.5 * math.sqrt(self.dim)

    @property
    def half_width(self) -> float:
        """Half side of the axis-aligned bounding box."""
        return self.radius

    def contains(self, points, slack: float = 0.0):
        p = np.asarray(points, dtype=float)
        if self.kind is BodyKind.BALL:
            return np.sum(p * p, axis=-1) <= (self.radius + slack) ** 2
        return np.all(np.abs(p) <= 0.5 + slack, axis=-1)

    def sample(self, rng, size: int | None = None) -> np.ndarray:
        """Uniform points in the body; shape ``(d,)`` if ``size`` is None else ``(size, d)``."""
        rng = as_rng(rng)
        n = 1 if size is None else int(size)
        d = self.dim
        if self.kind is BodyKind.BALL:
            g = rng.standard_normal((n, d))
            norms = np.linalg.norm(g, axis=1)
            while np.any(norms == 0.0):  # pragma: no cover - probability zero
                bad = norms == 0.0
                g[bad] = rng.standard_normal((int(bad.sum()), d))
                norms = np.linalg.norm(g, axis=1)
            r = self.radius * rng.random(n) ** (1.0 / d)
            pts = g * (r / norms)[:, None]
        else:
            pts = rng.random((n, d)) - 0.5
        return pts[0] if size is None else pts

    def max_section_volume(self) -> float:
        """Volume of the largest (d-2)-dimensional central section (ball only)."""
        if self.kind is not BodyKind.BALL:
            raise NotImplementedError("maximal sections are only tabulated for the ball")
        return kappa(self.dim - 2) * self.radius ** (self.dim - 2)


def sample_uniform_body(W: ConvexBody, rng) -> np.ndarray:
    return W.sample(rng)


@dataclass(frozen=True, eq=False)
class Plane2:
    """A 2-plane through the origin given by an orthonormal frame (columns of ``basis``)."""

    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 2:
            raise ValueError(f"frame must have shape (d, 2), got {b.shape}")
        gram = b.T @ b
        if not np.allclose(gram, np.eye(2), atol=ORTHO_TOL * 10, rtol=0):
            raise ValueError("frame is not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def coordinate(cls, d: int) -> "Plane2":
        """The plane spanned by the first two coordinate axes."""
        b = np.zeros((d, 2))
        b[0, 0] = b[1, 1] = 1.0
        return cls(b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def u1(self) -> np.ndarray:
        return self.basis[:, 0]

    @property
    def u2(self) -> np.ndarray:
        return self.basis[:, 1]

    @cached_property
    def perp(self) -> np.ndarray:
        """Orthonormal basis of the orthogonal complement, shape ``(d, d-2)``."""
        d = self.dim
        q, _ = np.linalg.qr(np.hstack([self.basis, np.eye(d)]))
        return q[:, 2:d].copy()

    def is_axis_aligned(self) -> bool:
        a = np.abs(self.basis)
        return bool(np.all(np.isclose(a, 0.0, atol=1e-14) | np.isclose(a, 1.0, atol=1e-14)))

    def lift(self, q) -> np.ndarray:
        """The point of the plane with in-plane coordinates ``q``."""
        return np.asarray(q, dtype=float) @ self.basis.T

    def rotated(self, angle: float) -> "Plane2":
        """Same plane, frame rotated in-plane by ``angle``."""
        c, s = math.cos(angle), math.sin(angle)
        return Plane2(self.basis @ np.array([[c, -s], [s, c]]))

    def __eq__(self, other):
        return isinstance(other, Plane2) and np.array_equal(self.basis, other.basis)

    def __hash__(self):
        return hash(self.basis.tobytes())


def sample_plane_haar(d: int, rng) -> Plane2:
    """Haar-random 2-plane in R^d via Gram-Schmidt on a Gaussian ``d x 2`` matrix."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if d == 2:
        return Plane2(np.eye(2))
    rng = as_rng(rng)
    while True:
        g = rng.standard_normal((d, 2))
        n1 = np.linalg.norm(g[:, 0])
        if n1 < _RESAMPLE_TOL:
            continue
        u1 = g[:, 0] / n1
        r = g[:, 1] - (u1 @ g[:, 1]) * u1
        r -= (u1 @ r) * u1
        n2 = np.linalg.norm(r)
        if n2 < _RESAMPLE_TOL:
            continue
        return Plane2(np.column_stack([u1, r / n2]))


def project(p, L: Plane2) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != L.dim:
        raise ValueError(f"point dimension {p.shape[-1]} does not match plane dimension {L.dim}")
    return p @ L.basis


def _ball_section(W: ConvexBody, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    rho2 = np.sum(q * q, axis=-1)
    r2 = W.radius ** 2
    inside = rho2 <= r2
    k = W.dim - 2
    if k == 0:
        return inside.astype(float)
    out = kappa(k) * np.clip(r2 - rho2, 0.0, None) ** (k / 2)
    return np.where(inside, out, 0.0)


def _fiber_mc(W: ConvexBody, L: Plane2, q, n: int, rng):
    """Hit-or-miss fiber volumes for an array of in-plane points; returns (values, std errors)."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    rng = as_rng(rng)
    k = W.dim - 2
    base = L.lift(q)
    if k == 0:
        v = W.contains(base).astype(float)
        return v, np.zeros_like(v)
    rho2 = W.circumradius ** 2 - np.sum(q * q, axis=1)
    values = np.zeros(len(q))
    ses = np.zeros(len(q))
    P = L.perp
    chunk = max(1, 2_000_000 // (n * W.dim))
    live = np.flatnonzero(rho2 > 0)
    for start in range(0, live.size, chunk):
        idx = live[start:start + chunk]
        half = np.sqrt(rho2[idx])
        s = (rng.random((idx.size, n, k)) * 2.0 - 1.0) * half[:, None, None]
        pts = base[idx][:, None, :] + s @ P.T
        frac = W.contains(pts).mean(axis=1)
        box = (2.0 * half) ** k
        values[idx] = box * frac
        ses[idx] = box * np.sqrt(frac * (1.0 - frac) / max(n - 1, 1))
    return values, ses


def section_volume_mc(W: ConvexBody, L: Plane2, q, N: int, rng) -> McEstimate:
    """Monte Carlo estimate of the fiber volume over the in-plane point ``q``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    v, se = _fiber_mc(W, L, q, int(N), rng)
    return McEstimate(float(v[0]), float(se[0]), int(N))


def section_volume(W: ConvexBody, L: Plane2, q, *, rng=None, n_samples: int = 4096):
    """Volume of the (d-2)-dimensional fiber of ``W`` over the in-plane point(s) ``q``.

    Closed form for the ball and for the cube with an axis-aligned plane; a
    hit-or-miss estimate otherwise. A nonempty point fiber (d = 2) has volume 1.
    Accepts a single point ``(2,)`` (returns a float) or ``(n, 2)``.
    """
    qa = np.asarray(q, dtype=float)
    scalar = qa.ndim == 1
    qa = np.atleast_2d(qa)
    if L.dim != W.dim:
        raise ValueError("plane and body dimensions differ")
    if W.kind is BodyKind.BALL:
        out = _ball_section(W, qa)
    elif W.dim == 2 or L.is_axis_aligned():
        # axis-aligned fiber of the cube is a full unit (d-2)-cube
        out = W.contains(L.lift(qa)).astype(float)
    else:
        out, _ = _fiber_mc(W, L, qa, n_samples, as_rng(0 if rng is None else rng))
    return float(out[0]) if scalar else out
