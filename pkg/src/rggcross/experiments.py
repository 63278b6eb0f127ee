"""Replicated simulation of projected random geometric graphs and the verification checks."""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .crossings import crossing_lemma_floor, crossing_number_of_projection
from .geometry import ConvexBody, Plane2, kappa, sample_plane_haar
from .pointprocess import GeometricGraph, RegimeSchedule, build_rgg, sample_binomial, sample_poisson
from .stats import batch_means_ci, fisher_z_one_sided, ols_slope, pearson, variance_ci
from .stress import WeightKind, stress_of_projection
from .theory import Constants, MomentPredictions, predict_moments

CSV_HEADER = "t,delta,rep,plane_id,n,m,cr,stress"
_PLANE_KEY = 1 << 31


class PlaneMode(str, Enum):
    FIXED = "fixed"
    RANDOM = "random"


class ProcessKind(str, Enum):
    POISSON = "poisson"
    BINOMIAL = "binomial"


@dataclass(frozen=True)
class ExperimentConfig:
    body: ConvexBody
    schedule: RegimeSchedule
    t_grid: tuple
    reps: int
    plane_mode: PlaneMode = PlaneMode.FIXED
    weight: WeightKind = WeightKind.INVERSE_SQUARE
    seed: int = 0
    process: ProcessKind = ProcessKind.POISSON
    plane_index: int = 0
    name: str = "experiment"

    def __post_init__(self):
        object.__setattr__(self, "plane_mode", PlaneMode(self.plane_mode))
        object.__setattr__(self, "weight", WeightKind(self.weight))
        object.__setattr__(self, "process", ProcessKind(self.process))
        grid = tuple(float(t) for t in self.t_grid)
        object.__setattr__(self, "t_grid", grid)
        if self.reps < 2:
            raise ValueError("reps must be >= 2")
        if not grid or any(t <= 0 for t in grid):
            raise ValueError("t_grid must be nonempty with all t > 0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be strictly increasing")

    @property
    def d(self) -> int:
        return self.body.dim

    def delta(self, t: float) -> float:
        return self.schedule.delta_at(t, self.d)

    def fixed_plane(self) -> Plane2:
        ss = np.random.SeedSequence(self.seed, spawn_key=(_PLANE_KEY, self.plane_index))
        return sample_plane_haar(self.d, np.random.default_rng(ss))

    def echo(self) -> dict:
        return {
            "name": self.name, "body": self.body.kind.value, "d": self.d,
            "schedule": str(self.schedule), "t_grid": list(self.t_grid), "reps": self.reps,
            "plane_mode": self.plane_mode.value, "weight": self.weight.value, "seed": self.seed,
            "process": self.process.value, "plane_index": self.plane_index,
        }


@dataclass(frozen=True)
class RepSample:
    t: float
    delta: float
    rep: int
    plane_id: int
    n: int
    m: int
    cr: int
    stress: float

    def csv_row(self) -> str:
        return (f"{self.t:.17g},{self.delta:.17g},{self.rep},{self.plane_id},"
                f"{self.n},{self.m},{self.cr},{self.stress:.17g}")


def replication_rng(cfg: ExperimentConfig, t_index: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(t_index, rep)))


def sample_graph(cfg: ExperimentConfig, t: float, rng) -> GeometricGraph:
    if cfg.process is ProcessKind.POISSON:
        pts = sample_poisson(cfg.body, t, rng)
    else:
        pts = sample_binomial(cfg.body, int(round(t)), rng)
    return build_rgg(pts.reshape(-1, cfg.d), cfg.delta(t))


def _replicate(cfg: ExperimentConfig, t_index: int, rep: int, plane: Plane2 | None) -> RepSample:
    t = cfg.t_grid[t_index]
    rng = replication_rng(cfg, t_index, rep)
    G = sample_graph(cfg, t, rng)
    if plane is None:
        plane = sample_plane_haar(cfg.d, rng)
        plane_id = rep + 1
    else:
        plane_id = 0
    cr = crossing_number_of_projection(G, plane).count
    stress = stress_of_projection(G, plane, cfg.weight)
    return RepSample(t, cfg.delta(t), rep, plane_id, G.n, G.m, cr, stress)


def run_replication(cfg: ExperimentConfig, t: float, rep_index: int) -> RepSample:
    """One joint draw of (n, m, cr, stress); a pure function of ``(seed, t, rep_index)``.

    ``t`` must be a member of ``cfg.t_grid``: its position selects the substream.
    """
    t_index = cfg.t_grid.index(float(t))
    plane = cfg.fixed_plane() if cfg.plane_mode is PlaneMode.FIXED else None
    return _replicate(cfg, t_index, rep_index, plane)


def _run_block(args):
    cfg, tasks = args
    plane = cfg.fixed_plane() if cfg.plane_mode is PlaneMode.FIXED else None
    return [_replicate(cfg, ti, rep, plane) for ti, rep in tasks]


def run_samples(cfg: ExperimentConfig, workers: int | None = None) -> list[RepSample]:
    """All replications, ordered by ``(t, rep)`` regardless of ``workers``."""
    tasks = [(ti, rep) for ti in range(len(cfg.t_grid)) for rep in range(cfg.reps)]
    workers = (os.cpu_count() or 1) if workers is None else int(workers)
    if workers <= 1:
        return _run_block((cfg, tasks))
    # interleave so the heavy large-t replications are spread across workers
    blocks = [tasks[i::workers * 4] for i in range(workers * 4)]
    out: list[RepSample] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_block, [(cfg, b) for b in blocks if b]):
            out.extend(part)
    out.sort(key=lambda s: (s.t, s.rep))
    return out


def to_csv(samples: list[RepSample]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for s in samples:
        buf.write(s.csv_row() + "\n")
    return buf.getvalue()


def read_csv(text: str) -> list[RepSample]:
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError("not a replication table")
    out = []
    for line in lines[1:]:
        t, delta, rep, pid, n, m, cr, st = line.split(",")
        out.append(RepSample(float(t), float(delta), int(rep), int(pid), int(n), int(m), int(cr), float(st)))
    return out


def _interval(triple) -> dict:
    mean, lo, hi = triple
    return {"value": mean, "ci": [lo, hi]}


@dataclass
class SummaryStats:
    t: float
    delta: float
    reps: int
    n: dict
    m: dict
    cr: dict
    stress: dict
    cov_cr_stress: float
    pearson: float
    cr_normalized: dict

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(samples: list[RepSample], d: int) -> list[SummaryStats]:
    """Per-t moments with batch-means confidence intervals (20 batches)."""
    out = []
    for t in sorted({s.t for s in samples}):
        rows = [s for s in samples if s.t == t]
        delta = rows[0].delta
        cols = {k: np.array([getattr(s, k) for s in rows], dtype=float) for k in ("n", "m", "cr", "stress")}

        def moments(x):
            return {"mean": _interval(batch_means_ci(x)), "var": _interval(variance_ci(x))}

        cr, st = cols["cr"], cols["stress"]
        cov = float(np.cov(cr, st, ddof=1)[0, 1]) if len(rows) > 1 else math.nan
        scale = t ** 4 * delta ** (2 * d + 2)
        out.append(SummaryStats(
            t, delta, len(rows), moments(cols["n"]), moments(cols["m"]), moments(cr), moments(st),
            cov, pearson(cr, st), _interval(batch_means_ci(cr / scale)),
        ))
    return out


def run_experiment(cfg: ExperimentConfig, workers: int | None = None):
    """Run every replication; returns ``(summary per t, raw samples)``."""
    samples = run_samples(cfg, workers)
    return summarize(samples, cfg.d), samples


@dataclass
class CheckReport:
    name: str
    status: str  # PASS, FAIL, WARN, SKIP or INCONCLUSIVE
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in ("PASS", "WARN")

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, **self.details}


def _by_t(summary: list[SummaryStats]) -> list[SummaryStats]:
    return sorted(summary, key=lambda s: s.t)


def lln_check(summary: list[SummaryStats], d: int, constants: Constants, tol: float = 0.2) -> CheckReport:
    """Normalised mean crossing number against ``c_d * I2 / 8`` along the t grid.

    Passes if the relative deviation at the largest t is within ``tol`` and the
    absolute deviations do not increase, allowing one increase that stays
    inside the combined confidence half-widths.
    """
    rows = _by_t(summary)
    if len(rows) < 3:
        raise ValueError("law-of-large-numbers check needs at least 3 grid points")
    target = constants.c_d.value * constants.I2.value / 8
    devs, halfs, per_t = [], [], []
    for s in rows:
        v = s.cr_normalized["value"]
        lo, hi = s.cr_normalized["ci"]
        dev = (v - target) / target
        half = (hi - lo) / 2 / target
        devs.append(abs(dev))
        halfs.append(half)
        per_t.append({"t": s.t, "ratio": v, "ci": [lo, hi], "rel_deviation": dev})
    inversions = [k for k in range(len(devs) - 1) if devs[k + 1] > devs[k]]
    consistent = all(devs[k + 1] - devs[k] <= halfs[k] + halfs[k + 1] for k in inversions)
    trend_ok = len(inversions) <= 1 and consistent
    final_ok = devs[-1] <= tol
    positive = all(p["ratio"] > 0 for p in per_t)
    status = "PASS" if (trend_ok and final_ok and positive) else "FAIL"
    return CheckReport("lln", status, {
        "target": target, "tolerance": tol, "per_t": per_t, "inversions": len(inversions),
        "trend_ok": trend_ok, "final_deviation": devs[-1],
    })


def sandwich_bounds(d: int, t: float, delta: float, constants: Constants) -> tuple[float, float]:
    """Normalised variance bounds ``(lb, ub)`` for ``Var(cr) / (t^7 delta^(4d+4))``."""
    c = constants.c_d.value
    lb = c * c * constants.I3.value / 64
    ub = lb * (1 + 2 * math.pi * kappa(d) / (c * t * delta ** d))
    return lb, ub


def variance_sandwich_check(summary: list[SummaryStats], d: int, constants: Constants,
                            plane_mode: PlaneMode = PlaneMode.FIXED, tau: float = 0.25) -> CheckReport:
    """Empirical normalised crossing variance at the largest t against the inflated sandwich.

    Also reports the same comparison with the bounds multiplied by 16, the
    factor obtained when the add-one cost counts all four tuple positions a
    new point can take (diagnostic only, does not affect the status).
    """
    if d < 3:
        raise ValueError("variance sandwich requires d >= 3")
    if PlaneMode(plane_mode) is not PlaneMode.FIXED:
        raise ValueError("variance sandwich requires a fixed plane")
    s = _by_t(summary)[-1]
    scale = s.t ** 7 * s.delta ** (4 * d + 4)
    v = s.cr["var"]["value"] / scale
    lo, hi = (x / scale for x in s.cr["var"]["ci"])
    lb, ub = sandwich_bounds(d, s.t, s.delta, constants)
    lo_b, hi_b = lb * (1 - tau), ub * (1 + tau)
    ok = hi >= lo_b and lo <= hi_b
    lo16, hi16 = 16 * lo_b, 16 * hi_b
    return CheckReport("variance_sandwich", "PASS" if ok else "FAIL", {
        "t": s.t, "normalized_var": v, "ci": [lo, hi], "lb": lb, "ub": ub, "tau": tau,
        "band": [lo_b, hi_b],
        "full_add_one_cost_band": [lo16, hi16],
        "full_add_one_cost_ok": hi >= lo16 and lo <= hi16,
    })


def correlation_check(samples: list[RepSample], predictions: MomentPredictions | None = None,
                      alpha: float = 0.01, bound_fraction: float = 0.5) -> CheckReport:
    """Pearson correlation of (cr, stress) with a one-sided Fisher-z test.

    Hard failure only when ``r <= 0`` or not significant; falling short of
    ``bound_fraction`` times the predicted lower bound is a warning.
    """
    if len(samples) < 100:
        raise ValueError("correlation check needs at least 100 replications")
    cr = np.array([s.cr for s in samples], dtype=float)
    st = np.array([s.stress for s in samples], dtype=float)
    details = {"reps": len(samples), "t": samples[-1].t}
    if cr.std() == 0 or st.std() == 0:
        return CheckReport("correlation", "INCONCLUSIVE", {**details, "reason": "zero variance"})
    r = pearson(cr, st)
    p = fisher_z_one_sided(r, len(samples))
    details.update(r=r, p_value=p, alpha=alpha)
    if not (r > 0 and p < alpha):
        return CheckReport("correlation", "FAIL", details)
    status = "PASS"
    if predictions is not None and predictions.corr_lb is not None:
        details.update(corr_lb=predictions.corr_lb, bound_fraction=bound_fraction)
        if r < bound_fraction * predictions.corr_lb:
            status = "WARN"
    return CheckReport("correlation", status, details)


def cov_slope(ts, covs) -> float:
    """OLS slope of log coefficient of variation against log t."""
    return ols_slope(np.log(np.asarray(ts, dtype=float)), np.log(np.asarray(covs, dtype=float)))


def cov_scaling_check(summary: list[SummaryStats], window=(-0.6, -0.4)) -> CheckReport:
    rows = _by_t(summary)
    if len(rows) < 4:
        raise ValueError("coefficient-of-variation check needs at least 4 grid points")
    ts = [s.t for s in rows]
    out = {"t": ts, "window": list(window), "span": ts[-1] / ts[0]}
    ok = True
    for key in ("cr", "stress"):
        cov = [math.sqrt(getattr(s, key)["var"]["value"]) / getattr(s, key)["mean"]["value"] for s in rows]
        slope = cov_slope(ts, cov)
        out[key] = {"cov": cov, "slope": slope}
        ok &= window[0] <= slope <= window[1]
    status = "PASS" if ok else "FAIL"
    if ok and ts[-1] / ts[0] < 10:
        out["note"] = "grid spans less than one decade"
    return CheckReport("cov_scaling", status, out)


def predictions_for(cfg: ExperimentConfig, constants: Constants, t: float) -> MomentPredictions:
    return predict_moments(cfg.body, cfg.fixed_plane(), t, cfg.delta(t), constants)


def run_checks(cfg: ExperimentConfig, summary, samples, constants: Constants) -> list[CheckReport]:
    """Every check whose preconditions the configuration meets; the rest are reported as SKIP."""
    reports = []

    def attempt(name, fn):
        try:
            reports.append(fn())
        except ValueError as exc:
            reports.append(CheckReport(name, "SKIP", {"reason": str(exc)}))

    attempt("lln", lambda: lln_check(summary, cfg.d, constants))
    attempt("variance_sandwich", lambda: variance_sandwich_check(summary, cfg.d, constants, cfg.plane_mode))
    t_max = cfg.t_grid[-1]
    last = [s for s in samples if s.t == t_max]
    attempt("correlation", lambda: correlation_check(last, predictions_for(cfg, constants, t_max)))
    attempt("cov_scaling", lambda: cov_scaling_check(summary))
    return reports


def add_point_effect(points, new_point, delta: float, L: Plane2,
                     w: WeightKind = WeightKind.INVERSE_SQUARE) -> tuple[int, float]:
    """Change in (crossing number, stress) when one point is added to the configuration."""
    pts = np.asarray(points, dtype=float)
    G0 = build_rgg(pts, delta)
    G1 = build_rgg(np.vstack([pts, np.asarray(new_point, dtype=float)[None, :]]), delta)
    dcr = crossing_number_of_projection(G1, L).count - crossing_number_of_projection(G0, L).count
    dst = stress_of_projection(G1, L, w) - stress_of_projection(G0, L, w)
    return dcr, dst


@dataclass
class PlaneSearchResult:
    planes: list
    cr: np.ndarray
    stress: np.ndarray
    best_cr: int
    best_stress: int
    lemma_floor: float
    correlation: float
    low_fraction: float
    chebyshev_bound: float
    ratio_bound: float | None

    def table(self) -> str:
        lines = ["plane,cr,stress"]
        lines += [f"{k},{c},{s:.17g}" for k, (c, s) in enumerate(zip(self.cr, self.stress))]
        return "\n".join(lines) + "\n"

    def report(self) -> dict:
        return {
            "K": len(self.planes), "best_cr_plane": self.best_cr, "best_stress_plane": self.best_stress,
            "best_cr": int(self.cr[self.best_cr]), "median_cr": float(np.median(self.cr)),
            "lemma_floor": self.lemma_floor, "ratio_bound": self.ratio_bound,
            "correlation": self.correlation, "low_fraction": self.low_fraction,
            "chebyshev_bound": self.chebyshev_bound,
            "best_plane": np.asarray(self.planes[self.best_cr].basis).tolist(),
        }


def plane_search(G: GeometricGraph, K: int, rng, w: WeightKind = WeightKind.INVERSE_SQUARE,
                 low_constant: float = 1.0) -> PlaneSearchResult:
    """Project ``G`` onto ``K`` Haar planes and summarise crossings and stress per plane.

    ``low_fraction`` is the share of planes with ``cr <= low_constant * n^4 delta^(3d)``
    (the crossing-lemma order, with ``n`` standing in for the intensity);
    ``chebyshev_bound`` is the matching Chebyshev estimate from the
    across-plane mean and variance.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    if G.dim == 2:
        K = 1
    planes = [sample_plane_haar(G.dim, rng) for _ in range(K)]
    cr = np.array([crossing_number_of_projection(G, L).count for L in planes], dtype=np.int64)
    st = np.array([stress_of_projection(G, L, w) for L in planes])
    floor = crossing_lemma_floor(max(G.n, 1), G.m)
    thr = low_constant * G.n ** 4 * G.delta ** (3 * G.dim)
    low = float(np.mean(cr <= thr))
    mean, var = float(cr.mean()), float(cr.var(ddof=1)) if K > 1 else 0.0
    cheb = min(1.0, var / (mean - thr) ** 2) if mean > thr else 1.0
    corr = pearson(cr, st) if K > 1 else math.nan
    best = int(np.argmin(cr))
    ratio = cr[best] / floor if floor > 0 else None
    return PlaneSearchResult(planes, cr, st, best, int(np.argmin(st)), floor, corr, low, cheb,
                             None if ratio is None else float(ratio))
