"""Monte Carlo and closed-form values of the constants in the moment formulas.

Every estimator draws its samples in fixed-size chunks from one generator, so
a result depends only on ``(seed, N)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import BodyKind, ConvexBody, Plane2, _fiber_mc, as_rng, kappa, section_volume
from .pointprocess import expected_edges
from .stats import McEstimate, product
from .stress import WeightKind, _weighted_sq

__all__ = [
    "kappa", "estimate_c_d", "estimate_c_prime_d", "I2", "I3", "I2_ball_exact", "I3_ball_exact",
    "S1", "S2", "section_stress_integral", "IW", "cov_lower_bound", "Constants",
    "compute_constants", "MomentPredictions", "predict_moments",
]

CHUNK = 1 << 17
FIBER_SAMPLES = 32


def _mc(N: int, rng, draw) -> McEstimate:
    """Average ``draw(rng, k)`` over ``N`` samples taken in chunks."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = as_rng(rng)
    s = s2 = 0.0
    done = 0
    while done < N:
        k = min(CHUNK, N - done)
        vals = np.asarray(draw(rng, k), dtype=float)
        s += float(vals.sum())
        s2 += float(np.dot(vals, vals))
        done += k
    return McEstimate.from_moments(s, s2, N)


def _unit_ball(rng, k: int, d: int) -> np.ndarray:
    g = rng.standard_normal((k, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * (rng.random(k) ** (1.0 / d))[:, None]


def _disk(rng, k: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(k))
    a = 2 * math.pi * rng.random(k)
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def _cross2(u, v):
    return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]


def segments_meet(p0, p1, q0, q1) -> np.ndarray:
    """Vectorised closed-segment intersection test (touching counts as meeting)."""
    r = p1 - p0
    s = q1 - q0
    o1 = _cross2(r, q0 - p0)
    o2 = _cross2(r, q1 - p0)
    o3 = _cross2(s, p0 - q0)
    o4 = _cross2(s, p1 - q0)
    return (o1 * o2 <= 0) & (o3 * o4 <= 0)


def _frame(d: int, L: Plane2 | None) -> np.ndarray:
    return Plane2.coordinate(d).basis if L is None else L.basis


def estimate_c_d(d: int, N: int, rng, L: Plane2 | None = None) -> McEstimate:
    """Crossing constant: measure of ``(x, y, z)`` in ``B_d x 2B_2 x B_d`` with
    ``[0, x|L]`` meeting ``y + [0, z|L]``.

    The integral does not depend on the plane; ``L`` defaults to the first two
    coordinate axes.
    """
    F = _frame(d, L)
    vol = kappa(d) * 4 * math.pi * kappa(d)
    origin = np.zeros((1, 2))

    def draw(rng, k):
        x = _unit_ball(rng, k, d) @ F
        y = _disk(rng, k, 2.0)
        z = _unit_ball(rng, k, d) @ F
        return segments_meet(origin, x, y, y + z)

    return _mc(N, rng, draw) * vol


def estimate_c_prime_d(d: int, N: int, rng, L: Plane2 | None = None) -> McEstimate:
    """Measure of ``(x, y1, y2, z1, z2)`` where ``[0, x|L]`` meets both ``y_i + [0, z_i|L]``."""
    F = _frame(d, L)
    vol = kappa(d) * (4 * math.pi) ** 2 * kappa(d) ** 2
    origin = np.zeros((1, 2))

    def draw(rng, k):
        x = _unit_ball(rng, k, d) @ F
        y1 = _disk(rng, k, 2.0)
        y2 = _disk(rng, k, 2.0)
        z1 = _unit_ball(rng, k, d) @ F
        z2 = _unit_ball(rng, k, d) @ F
        return segments_meet(origin, x, y1, y1 + z1) & segments_meet(origin, x, y2, y2 + z2)

    return _mc(N, rng, draw) * vol


def _needs_fiber_mc(W: ConvexBody, L: Plane2) -> bool:
    return W.kind is BodyKind.CUBE and W.dim > 2 and not L.is_axis_aligned()


def _section_power(W: ConvexBody, L: Plane2, power: int):
    """Sampler of unbiased estimates of ``sec(v|L) ** power`` for uniform ``v`` in ``W``."""

    def draw(rng, k):
        q = W.sample(rng, k) @ L.basis
        if not _needs_fiber_mc(W, L):
            return section_volume(W, L, q) ** power
        # independent inner estimates multiply to an unbiased estimate of the power
        out = np.ones(k)
        for _ in range(power):
            out *= _fiber_mc(W, L, q, FIBER_SAMPLES, rng)[0]
        return out

    return draw


def I2(W: ConvexBody, L: Plane2, N: int, rng) -> McEstimate:
    """Integral of the squared fiber volume over ``W|L``, i.e. the mean fiber volume over ``W``."""
    if W.dim == 2:
        return McEstimate(1.0, 0.0, N)
    return _mc(N, rng, _section_power(W, L, 1))


def I3(W: ConvexBody, L: Plane2, N: int, rng) -> McEstimate:
    """Integral of the cubed fiber volume over ``W|L``, i.e. the mean squared fiber volume over ``W``."""
    if W.dim == 2:
        return McEstimate(1.0, 0.0, N)
    return _mc(N, rng, _section_power(W, L, 2))


def _ball_power_integral(W: ConvexBody, power: int) -> float:
    # integral over the disk of radius r of (kappa_{d-2} (r^2 - rho^2)^{(d-2)/2})^power
    if W.kind is not BodyKind.BALL:
        raise ValueError("closed form only for the ball")
    d, r = W.dim, W.radius
    a = power * (d - 2) / 2
    return kappa(d - 2) ** power * math.pi * r ** (2 * a + 2) / (a + 1)


def I2_ball_exact(W: ConvexBody) -> float:
    return _ball_power_integral(W, 2)


def I3_ball_exact(W: ConvexBody) -> float:
    return _ball_power_integral(W, 3)


def _pair_draw(W: ConvexBody, L: Plane2, w: WeightKind):
    def f(v, v1):
        diff = v - v1
        d0 = np.sqrt(np.sum(diff * diff, axis=1))
        dl = np.sqrt(np.sum((diff @ L.basis) ** 2, axis=1))
        return _weighted_sq(d0, dl, w)

    return f


def S1(W: ConvexBody, L: Plane2, w: WeightKind, N: int, rng) -> McEstimate:
    """Mean of the pair stress integrand over two independent uniform points."""
    f = _pair_draw(W, L, WeightKind(w))
    return _mc(N, rng, lambda rng, k: f(W.sample(rng, k), W.sample(rng, k)))


def S2(W: ConvexBody, L: Plane2, w: WeightKind, N: int, rng) -> McEstimate:
    """Mean over uniform ``(v, v1, v2)`` of the product of the two stress integrands sharing ``v``."""
    f = _pair_draw(W, L, WeightKind(w))

    def draw(rng, k):
        v = W.sample(rng, k)
        return f(v, W.sample(rng, k)) * f(v, W.sample(rng, k))

    return _mc(N, rng, draw)


def section_stress_integral(W: ConvexBody, L: Plane2, w: WeightKind, N: int, rng) -> McEstimate:
    """Mean over uniform ``(v, v1)`` of ``sec(v|L) * w(v, v1) (d0 - dL)^2``."""
    f = _pair_draw(W, L, WeightKind(w))

    def draw(rng, k):
        v = W.sample(rng, k)
        if _needs_fiber_mc(W, L):
            s = _fiber_mc(W, L, v @ L.basis, FIBER_SAMPLES, rng)[0]
        else:
            s = section_volume(W, L, v @ L.basis)
        return s * f(v, W.sample(rng, k))

    return _mc(N, rng, draw)


def IW(v, W: ConvexBody, L: Plane2, delta: float, N: int, rng) -> McEstimate:
    """Finite-delta measure of ``(v2, v3, v4)`` in ``W^3`` with ``|v - v2|, |v3 - v4| <= delta``
    and ``[v, v2]|L`` meeting ``[v3, v4]|L``.

    Writing ``v2 = v + x``, ``v4 = y + z``, the point ``y`` must project within
    ``2 delta`` of ``v|L``; it is drawn uniformly from that cylinder intersected
    with the bounding ball of ``W`` (cut to a cube in the fiber coordinates)
    and weighted by the cylinder-box volume.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    v = np.asarray(v, dtype=float)
    d = W.dim
    k_perp = d - 2
    R = W.circumradius
    vq = v @ L.basis
    P = L.perp
    weight = kappa(d) ** 2 * delta ** (2 * d) * 4 * math.pi * delta ** 2 * (2 * R) ** k_perp

    def draw(rng, k):
        x = delta * _unit_ball(rng, k, d)
        z = delta * _unit_ball(rng, k, d)
        yq = vq + _disk(rng, k, 2 * delta)
        y = yq @ L.basis.T
        if k_perp:
            y = y + (rng.random((k, k_perp)) * 2 - 1) * R @ P.T
        ok = W.contains(v + x) & W.contains(y) & W.contains(y + z)
        hit = segments_meet(np.broadcast_to(vq, (k, 2)), vq + x @ L.basis, yq, yq + z @ L.basis)
        return ok & hit

    return _mc(N, rng, draw) * weight


def cov_lower_bound(W: ConvexBody, L: Plane2, w: WeightKind, t: float, delta: float, N: int, rng,
                    c_d: McEstimate | None = None) -> McEstimate:
    """``t^5/16 * c_d delta^(2d+2) * E[sec(v|L) w(v, v1) (d0 - dL)^2]`` over uniform ``(v, v1)``.

    Uses the small-delta limit of the crossing integral. ``c_d`` is estimated
    with the same sample size when not supplied.
    """
    rng = as_rng(rng)
    d = W.dim
    if c_d is None:
        c_d = estimate_c_d(d, N, rng)
    K = section_stress_integral(W, L, w, N, rng)
    scale = t ** 5 / 16 * delta ** (2 * d + 2)
    return product(c_d, K) * scale


@dataclass(frozen=True)
class Constants:
    """All integrals feeding the moment predictions for one ``(W, L, weight)``."""

    d: int
    body: str
    weight: str
    c_d: McEstimate
    c_prime_d: McEstimate
    I2: McEstimate
    I3: McEstimate
    S1: McEstimate
    S2: McEstimate
    K: McEstimate
    N: int
    seed: int
    plane: list = field(default_factory=list)

    def to_record(self) -> dict:
        rec = {"d": self.d, "W": self.body, "weight": self.weight}
        for name in ("c_d", "c_prime_d", "I2", "I3", "S1", "S2", "K"):
            est = getattr(self, name)
            rec[name] = {"value": est.value, "std_error": est.std_error}
        rec.update(N=self.N, seed=self.seed, plane=self.plane)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Constants":
        def est(name):
            return McEstimate(float(rec[name]["value"]), float(rec[name]["std_error"]), int(rec["N"]))

        return cls(int(rec["d"]), rec["W"], rec.get("weight", "inverse_square"),
                   *(est(n) for n in ("c_d", "c_prime_d", "I2", "I3", "S1", "S2", "K")),
                   int(rec["N"]), int(rec["seed"]), rec.get("plane", []))


def compute_constants(W: ConvexBody, L: Plane2, N: int, seed: int,
                      w: WeightKind = WeightKind.INVERSE_SQUARE) -> Constants:
    """Estimate every constant with ``N`` samples each from independent child streams of ``seed``."""
    w = WeightKind(w)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(7)]
    d = W.dim
    c = estimate_c_d(d, N, streams[0])
    cp = estimate_c_prime_d(d, N, streams[1])
    i2 = I2(W, L, N, streams[2])
    i3 = I3(W, L, N, streams[3])
    if W.dim == 2:
        # projection is the identity: every stress integrand vanishes
        s1 = s2 = k = McEstimate(0.0, 0.0, N)
    else:
        s1 = S1(W, L, w, N, streams[4])
        s2 = S2(W, L, w, N, streams[5])
        k = section_stress_integral(W, L, w, N, streams[6])
    return Constants(d, W.kind.value, w.value, c, cp, i2, i3, s1, s2, k, int(N), int(seed),
                     L.basis.tolist())


@dataclass(frozen=True)
class MomentPredictions:
    """Leading-order moments; ``None`` where the theory does not apply (crossing variance for d < 3)."""

    e_cr: float
    var_cr_lb: float | None
    var_cr_ub: float | None
    e_stress: float
    var_stress: float
    cov_lb: float
    corr_lb: float | None
    e_m: float
    notes: list = field(default_factory=list)
    # same quantities when the add-one cost of a point counts every tuple
    # position it can occupy: 4 of 4 for crossings, 2 of 2 for stress
    full_add_one_cost: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def predict_moments(W: ConvexBody, L: Plane2, t: float, delta: float, constants: Constants,
                    w: WeightKind | None = None) -> MomentPredictions:
    """Leading-order expectation, variance bounds, covariance and correlation bounds."""
    d = W.dim
    c = constants.c_d.value
    i2, i3 = constants.I2.value, constants.I3.value
    s1, s2, k = constants.S1.value, constants.S2.value, constants.K.value
    if w is not None and WeightKind(w).value != constants.weight:
        raise ValueError("constants were computed for a different weight")
    notes = [
        "leading terms only; expectation error o(t^4 delta^(2d+2))",
        "crossing variance error o(t^7 delta^(4d+4)); stress variance error O(t^2)",
        "edge count boundary term O(t^2 delta^(d+1)) omitted",
    ]
    e_cr = c * t ** 4 * delta ** (2 * d + 2) * i2 / 8
    e_stress = 0.5 * t * t * s1
    var_stress = 0.25 * t ** 3 * s2
    cov_lb = t ** 5 / 16 * c * delta ** (2 * d + 2) * k
    lb = ub = corr = None
    if d >= 3:
        base = t ** 7 * delta ** (4 * d + 4) * i3 / 64
        lb = c * c * base
        ub = (c * c + 2 * math.pi * kappa(d) * c / (t * delta ** d)) * base
        if ub > 0 and var_stress > 0:
            corr = max(-1.0, min(1.0, cov_lb / math.sqrt(ub * var_stress)))
    else:
        notes.append("crossing variance bounds need d >= 3; fields unavailable")
    full = {
        "var_cr_lb": None if lb is None else 16 * lb,
        "var_cr_ub": None if ub is None else 16 * ub,
        "var_stress": 4 * var_stress,
        "cov_lb": 8 * cov_lb,
        "corr_lb": corr,
    }
    return MomentPredictions(e_cr, lb, ub, e_stress, var_stress, cov_lb, corr,
                             expected_edges(W, t, delta), notes, full)
