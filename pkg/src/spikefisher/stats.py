"""Summary statistics, Kolmogorov-Smirnov distances and normal qq data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr, ndtri

__all__ = [
    "SampleStats",
    "describe",
    "ks_normal",
    "ks_two_sample",
    "normal_quantile",
    "qq_pairs",
    "KS_COEFF_95",
]

# asymptotic 95% Kolmogorov coefficient: D_crit ~ 1.36 / sqrt(n)
KS_COEFF_95 = 1.36


def normal_quantile(prob: ArrayLike) -> NDArray[np.float64] | float:
    """Inverse standard normal CDF (cephes ``ndtri``, full double precision)."""
    out = ndtri(np.asarray(prob, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def ks_normal(sample: ArrayLike) -> float:
    """``sup_x |F_hat(x) - Phi(x)|`` evaluated exactly at the jump points."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    m = x.size
    if m == 0:
        raise ValueError("empty sample")
    cdf = ndtr(x)
    upper = np.arange(1, m + 1) / m - cdf
    lower = cdf - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


def ks_two_sample(a: ArrayLike, b: ArrayLike) -> float:
    """Two-sample statistic ``sup_x |F_a(x) - F_b(x)|``."""
    xa = np.sort(np.asarray(a, dtype=np.float64))
    xb = np.sort(np.asarray(b, dtype=np.float64))
    if xa.size == 0 or xb.size == 0:
        raise ValueError("empty sample")
    grid = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, grid, side="right") / xa.size
    fb = np.searchsorted(xb, grid, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def qq_pairs(sample: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``(normal quantiles at (r - 0.5)/R, sorted sample)``."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    probs = (np.arange(1, x.size + 1) - 0.5) / x.size
    return np.asarray(normal_quantile(probs), dtype=np.float64).reshape(-1), x


@dataclass(frozen=True)
class SampleStats:
    count: int
    mean: float | None
    variance: float | None
    skewness: float | None
    excess_kurtosis: float | None
    ks: float | None

    @property
    def variance_defined(self) -> bool:
        return self.variance is not None

    def to_dict(self) -> dict[str, float | int | None]:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "ks_normal": self.ks,
        }


def describe(sample: ArrayLike, *, ks: bool = True) -> SampleStats:
    """Moments and (optionally) the KS distance to N(0, 1).

    Variance uses ``ddof=1`` and is ``None`` below two observations; skewness
    and kurtosis are the plain moment ratios and are ``None`` when the sample
    is constant.
    """
    x = np.asarray(sample, dtype=np.float64).ravel()
    m = x.size
    if m == 0:
        return SampleStats(0, None, None, None, None, None)
    mean = float(np.mean(x))
    dev = x - mean
    m2 = float(np.mean(dev**2))
    variance = float(np.sum(dev**2) / (m - 1)) if m > 1 else None
    if m > 1 and m2 > 0.0:
        skew = float(np.mean(dev**3) / m2**1.5)
        kurt = float(np.mean(dev**4) / m2**2 - 3.0)
    else:
        skew = kurt = None
    return SampleStats(m, mean, variance, skew, kurt, ks_normal(x) if ks else None)
