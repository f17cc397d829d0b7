"""Fisher-matrix spectra via the symmetric similarity transform."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, PoleError
from .model import Regime
from .sampling import CovariancePair, SampleMatrices

__all__ = [
    "SpectralResult",
    "Esd",
    "fisher_eigenvalues",
    "fisher_eigh",
    "f0_eigenvalues",
    "f0_from_covariances",
    "spectral_result",
    "empirical_m_tilde",
    "empirical_stieltjes",
]


def _whitened(cov: CovariancePair) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    # W^T S1 W with W = V diag(w)^{-1/2} is orthogonally similar to S2^{-1/2} S1 S2^{-1/2}
    w, v = cov.s2_eigh()
    whiten = v / np.sqrt(w)
    m = whiten.T @ cov.S1 @ whiten
    return 0.5 * (m + m.T), whiten


def fisher_eigenvalues(cov: CovariancePair) -> NDArray[np.float64]:
    """Eigenvalues of ``S2^{-1} S1`` in descending order."""
    m, _ = _whitened(cov)
    vals = np.linalg.eigvalsh(m)[::-1]
    # the pencil is similar to a PSD matrix; anything negative is roundoff
    return np.maximum(vals, 0.0)


def fisher_eigh(cov: CovariancePair) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Descending eigenvalues and generalized eigenvectors (columns) of ``(S1, S2)``."""
    m, whiten = _whitened(cov)
    vals, vecs = np.linalg.eigh(m)
    return np.maximum(vals[::-1], 0.0), whiten @ vecs[:, ::-1]


def f0_from_covariances(cov: CovariancePair, q: int) -> NDArray[np.float64]:
    """Spectrum of the non-spiked Fisher matrix built from the trailing blocks."""
    if not 0 <= q < cov.dim:
        raise DimensionError(f"q={q} out of range for dimension {cov.dim}")
    if q == 0:
        return fisher_eigenvalues(cov)
    return fisher_eigenvalues(CovariancePair.from_matrices(cov.S1[q:, q:], cov.S2[q:, q:]))


def f0_eigenvalues(s: SampleMatrices, regime: Regime) -> NDArray[np.float64]:
    """Descending eigenvalues of ``((1/n) Z2 Z2^T)^{-1} ((1/T) X2 X2^T)``."""
    if regime.p - regime.q >= regime.n:
        raise DimensionError("need p - q < n")
    x2, z2 = s.X2, s.Z2
    s1 = x2 @ x2.T / regime.T
    s2 = z2 @ z2.T / regime.n
    return fisher_eigenvalues(CovariancePair.from_matrices(0.5 * (s1 + s1.T), 0.5 * (s2 + s2.T)))


@dataclass(frozen=True)
class SpectralResult:
    fisher_eigs: NDArray[np.float64] = field(repr=False)
    f0_eigs: NDArray[np.float64] = field(repr=False)
    residual: float


def spectral_result(cov: CovariancePair, q: int) -> SpectralResult:
    """Full spectrum, F0 sub-spectrum and the max relative backward error.

    The backward error of pair ``(lam, v)`` is
    ``||S1 v - lam S2 v|| / (||S1|| ||v||)`` with spectral norms.
    """
    vals, vecs = fisher_eigh(cov)
    s1_norm = np.linalg.norm(cov.S1, 2)
    resid = cov.S1 @ vecs - (cov.S2 @ vecs) * vals
    scale = s1_norm * np.linalg.norm(vecs, axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    residual = float(np.max(np.linalg.norm(resid, axis=0) / scale)) if vals.size else 0.0
    return SpectralResult(vals, f0_from_covariances(cov, q), residual)


@dataclass(frozen=True)
class Esd:
    """Empirical spectral distribution ``F(x) = #{mu_j <= x} / m``."""

    points: NDArray[np.float64] = field(repr=False)

    @classmethod
    def from_eigenvalues(cls, eigs: ArrayLike) -> "Esd":
        pts = np.sort(np.asarray(eigs, dtype=np.float64))
        if pts.size == 0:
            raise ValueError("an ESD needs at least one eigenvalue")
        pts.setflags(write=False)
        return cls(pts)

    def __call__(self, x: ArrayLike) -> NDArray[np.float64] | float:
        out = np.searchsorted(self.points, np.asarray(x, dtype=np.float64), side="right") / self.points.size
        return float(out) if np.ndim(out) == 0 else out

    def stieltjes(self, z: float) -> float:
        return empirical_stieltjes(self.points, z)


def empirical_stieltjes(eigs: ArrayLike, z: float) -> float:
    """``(1/m) sum_j 1 / (mu_j - z)`` for real ``z`` off the spectrum."""
    mu = np.asarray(eigs, dtype=np.float64)
    diff = mu - z
    if np.any(diff == 0.0):
        raise PoleError(f"z={z} coincides with an eigenvalue")
    return float(np.mean(1.0 / diff))


def empirical_m_tilde(f0_eigs: ArrayLike, theta: float) -> float:
    """``(1/(p-q)) tr (I - F0/theta)^{-1}`` from the F0 spectrum.

    Requires ``theta`` above the largest eigenvalue.
    """
    mu = np.asarray(f0_eigs, dtype=np.float64)
    if mu.size == 0:
        raise ValueError("empty spectrum")
    if not theta > np.max(mu):
        raise PoleError(f"theta={theta} does not exceed the largest eigenvalue {np.max(mu)}")
    return float(np.mean(1.0 / (1.0 - mu / theta)))
