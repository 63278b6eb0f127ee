"""Small statistics helpers shared by the estimators and the experiment harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo estimate with its standard error."""

    value: float
    std_error: float
    n_samples: int

    @classmethod
    def from_samples(cls, samples, scale: float = 1.0) -> "McEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        mean = float(samples.mean()) if n else 0.0
        sd = float(samples.std(ddof=1)) if n > 1 else 0.0
        return cls(scale * mean, abs(scale) * sd / math.sqrt(max(n, 1)), n)

    @classmethod
    def from_moments(cls, total: float, total_sq: float, n: int, scale: float = 1.0) -> "McEstimate":
        """Build from running sums of a per-sample quantity (sum and sum of squares)."""
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
        return cls(scale * mean, abs(scale) * math.sqrt(var / n), n)

    @classmethod
    def exact(cls, value: float) -> "McEstimate":
        return cls(float(value), 0.0, 0)

    def __mul__(self, k: float) -> "McEstimate":
        return McEstimate(self.value * k, self.std_error * abs(k), self.n_samples)

    __rmul__ = __mul__

    def within(self, target: float, n_sigma: float = 4.0, other_se: float = 0.0) -> bool:
        return abs(self.value - target) <= n_sigma * math.hypot(self.std_error, other_se)

    def as_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "n_samples": self.n_samples}


def agree(a: McEstimate, b: McEstimate, n_sigma: float = 4.0) -> bool:
    """True if two independent estimates agree within ``n_sigma`` joint standard errors."""
    return abs(a.value - b.value) <= n_sigma * math.hypot(a.std_error, b.std_error)


def product(a: McEstimate, b: McEstimate) -> McEstimate:
    """Product of two independent estimates, first-order error propagation."""
    value = a.value * b.value
    se = math.hypot(a.std_error * b.value, b.std_error * a.value)
    return McEstimate(value, se, min(a.n_samples, b.n_samples))


def batch_means_ci(x, n_batches: int = 20, level: float = 0.95) -> tuple[float, float, float]:
    """Mean and batch-means confidence interval ``(mean, lo, hi)``.

    The sample is split into contiguous batches; the interval is a Student-t
    interval on the batch means. Fewer samples than batches means one sample
    per batch.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 0:
        return math.nan, math.nan, math.nan
    mean = float(x.mean())
    k = min(n_batches, n)
    if k < 2:
        return mean, -math.inf, math.inf
    usable = (n // k) * k
    means = x[:usable].reshape(k, -1).mean(axis=1)
    half = _st.t.ppf(0.5 + level / 2, k - 1) * means.std(ddof=1) / math.sqrt(k)
    return mean, mean - half, mean + half


def variance_ci(x, n_batches: int = 20, level: float = 0.95) -> tuple[float, float, float]:
    """Unbiased sample variance with a batch-means interval on the squared deviations."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return math.nan, math.nan, math.nan
    sq = (x - x.mean()) ** 2 * (n / (n - 1))
    return batch_means_ci(sq, n_batches, level)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return math.nan
    r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
    return max(-1.0, min(1.0, r))


def fisher_z_one_sided(r: float, n: int) -> float:
    """p-value of H0: rho <= 0 against rho > 0 via the Fisher transform."""
    if not math.isfinite(r) or n <= 3:
        return math.nan
    r = min(r, 1 - 1e-15)
    z = math.atanh(r) * math.sqrt(n - 3)
    return float(_st.norm.sf(z))


def ols_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
