"""Closed-form limiting quantities for spiked Fisher matrices.

Covers the Wachter law (support and Stieltjes transform), the centering
parameter ``theta`` for a spike, the fixed-q outlier limit, the CLT variance
and the covariance structure of the random block matrix that governs a
multiple spike.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DomainError,
    InsideSupportError,
    InvalidCovarianceError,
    InvalidRotationError,
    NonpositiveVarianceError,
    NoSupercriticalRootError,
    PoleError,
    SubcriticalSpikeError,
)
from .model import ORTHOGONALITY_TOL, EntryDist, SpikeModel
from .sampling import draw_entries, make_generator

__all__ = [
    "WachterParams",
    "ThetaSolution",
    "MultiSpikeParams",
    "wachter_support",
    "wachter_stieltjes",
    "solve_theta",
    "theta_residual",
    "classical_limit",
    "sigma_sq",
    "nu_for",
    "nu_monte_carlo",
    "omega_beta",
    "multi_spike_params",
    "multi_spike_cov",
    "block_entry_covariance",
    "sample_block_matrix",
    "sample_block_matrices",
]

EDGE_MARGIN = 1e-6
RESIDUAL_TOL = 1e-10
PSD_FLOOR = -1e-8


def _check_ratios(c: float, y: float) -> None:
    if not 0.0 < y < 1.0:
        raise DomainError(f"y must lie in (0, 1), got {y}")
    if not c > 0.0:
        raise DomainError(f"c must be positive, got {c}")


def wachter_support(c: float, y: float) -> tuple[float, float]:
    """Endpoints ``(a, b)`` of the Wachter law with ratios ``c = p/T``, ``y = p/n``."""
    _check_ratios(c, y)
    root = math.sqrt(c + y - c * y)
    scale = (1.0 - y) ** 2
    return (1.0 - root) ** 2 / scale, (1.0 + root) ** 2 / scale


@dataclass(frozen=True)
class WachterParams:
    c: float
    y: float
    a: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self) -> None:
        a, b = wachter_support(self.c, self.y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def stieltjes(self, z: float) -> float:
        return wachter_stieltjes(z, self.c, self.y)


def _stieltjes_unchecked(z: float, c: float, y: float) -> float:
    lin = z * (1.0 - y) + 1.0 - c
    disc = lin * lin - 4.0 * z
    # lin - sqrt(lin^2 - 4z) written as 4z / (lin + sqrt(.)) to avoid cancellation for large z
    gap = 4.0 * z / (lin + math.sqrt(disc))
    numer = 2.0 * z * y + c * gap
    return (1.0 - c) / (z * c) - numer / (2.0 * z * c * (c + z * y))


def wachter_stieltjes(z: float, c: float, y: float) -> float:
    """Stieltjes transform ``int (x - z)^{-1} dF_{c,y}(x)`` for real ``z > b``.

    The positive square-root branch is the one with ``z S(z) -> -1``.
    Points left of the support are not supported.
    """
    a, b = wachter_support(c, y)
    z = float(z)
    if z == 0.0 or c + z * y == 0.0:
        raise PoleError(f"S(z) has a pole at z={z}")
    if a <= z <= b:
        raise InsideSupportError(f"z={z} lies inside the support [{a}, {b}]")
    if z < a:
        raise DomainError(f"z={z} is left of the support; only z > b={b} is supported")
    return _stieltjes_unchecked(z, c, y)


@dataclass(frozen=True)
class ThetaSolution:
    lam: float
    theta: float
    residual: float
    sigma: float | None = None
    delta: float | None = None

    def observe(self, lambda_hat: float) -> "ThetaSolution":
        """Copy with ``delta = (lambda_hat - theta) / theta`` attached."""
        return dataclasses.replace(self, delta=(lambda_hat - self.theta) / self.theta)

    def with_sigma(self, sigma: float) -> "ThetaSolution":
        return dataclasses.replace(self, sigma=sigma)


def theta_residual(theta: float, lam: float, c_tilde: float, y_tilde: float) -> float:
    """LHS - RHS of ``1 + y theta S(theta) = (lam/theta)(1 - c - c theta S(theta))``."""
    ts = theta * _stieltjes_unchecked(theta, c_tilde, y_tilde)
    return (1.0 + y_tilde * ts) - lam / theta * (1.0 - c_tilde - c_tilde * ts)


def _scaled_residual(theta: float, lam: float, c: float, y: float) -> float:
    return theta * theta_residual(theta, lam, c, y)


def solve_theta(lam: float, c_tilde: float, y_tilde: float, *, max_iter: int = 400) -> ThetaSolution:
    """Centering parameter of a spike ``lam`` for the bulk ratios ``(c_tilde, y_tilde)``.

    Bisection on ``theta * residual(theta)``, which is negative just right of
    the bulk edge and positive for large ``theta`` when the spike is
    supercritical.
    """
    _check_ratios(c_tilde, y_tilde)
    lam = float(lam)
    if not lam > 0.0:
        raise SubcriticalSpikeError(f"spike must be positive, got {lam}")
    _, b = wachter_support(c_tilde, y_tilde)
    floor = b * (1.0 + EDGE_MARGIN)
    ceiling = 1e3 * lam

    def g(t: float) -> float:
        return _scaled_residual(t, lam, c_tilde, y_tilde)

    if not ceiling > floor or g(floor) >= 0.0:
        raise NoSupercriticalRootError(
            f"spike {lam} produces no centering parameter above the bulk edge {b:.6g}"
        )

    lo = max(floor, 0.25 * lam / (1.0 - y_tilde))
    while g(lo) >= 0.0:
        lo = max(floor, 0.5 * lo)
    hi = 4.0 * lam / (1.0 - y_tilde)
    while g(hi) <= 0.0:
        if hi >= ceiling:
            raise NoSupercriticalRootError(f"no sign change for spike {lam} below {ceiling:.6g}")
        hi = min(2.0 * hi, ceiling)

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid

    theta = min((lo, hi), key=lambda t: abs(theta_residual(t, lam, c_tilde, y_tilde)))
    residual = theta_residual(theta, lam, c_tilde, y_tilde)
    if abs(residual) > RESIDUAL_TOL * max(1.0, theta):
        raise NoSupercriticalRootError(f"bisection stalled with residual {residual:.3e}")
    return ThetaSolution(lam=lam, theta=theta, residual=residual)


def classical_limit(lam: float, c: float, y: float) -> float:
    """Almost-sure outlier limit ``lam (lam + c - 1) / (lam - lam y - 1)`` for a fixed spike."""
    denom = lam - lam * y - 1.0
    if not denom > 0.0:
        raise SubcriticalSpikeError(f"lam (1 - y) must exceed 1, got {lam * (1.0 - y)}")
    return lam * (lam + c - 1.0) / denom


def sigma_sq(y: float, c: float, nu: float) -> float:
    """Limiting variance of ``sqrt(p) * delta`` for a simple spike."""
    _check_ratios(c, y)
    if not nu >= 1.0:
        raise DomainError(f"a fourth moment of a unit-variance variable is >= 1, got {nu}")
    value = (y + c) * nu - c - y * (1.0 - 3.0 * y) / (1.0 - y)
    if not value > 0.0:
        raise NonpositiveVarianceError(f"sigma^2 = {value} for y={y}, c={c}, nu={nu}")
    return value


def _rotation_rows(rotation: ArrayLike) -> NDArray[np.float64]:
    u = np.asarray(rotation, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise InvalidRotationError(f"rotation must be square, got shape {u.shape}")
    if u.size and np.max(np.abs(u.T @ u - np.eye(u.shape[0]))) > ORTHOGONALITY_TOL:
        raise InvalidRotationError("rotation is not orthogonal")
    return u


def nu_monte_carlo(
    dist: "EntryDist | str", direction: ArrayLike, budget: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo ``E (u^T z)^4`` with its standard error, ``z`` iid from ``dist``."""
    u = np.asarray(direction, dtype=np.float64)
    rng = make_generator(seed)
    draws = draw_entries(rng, EntryDist.parse(dist), (int(budget), u.size)) @ u
    vals = draws**4
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


def nu_for(
    dist: "EntryDist | str",
    rotation: ArrayLike,
    i: int,
    mc_budget: int | None = None,
    seed: int = 0,
) -> float:
    """Fourth moment ``E (u_i^T z)^4`` for row ``i`` of the rotation.

    For iid unit-variance entries with fourth moment ``m4`` this is exactly
    ``3 + (m4 - 3) * sum_a u_ia^4``.  Passing ``mc_budget`` forces a Monte
    Carlo estimate instead (see :func:`nu_monte_carlo` for its error).
    """
    dist = EntryDist.parse(dist)
    u = _rotation_rows(rotation)
    row = u[i]
    if mc_budget is not None:
        return nu_monte_carlo(dist, row, mc_budget, seed)[0]
    if dist is EntryDist.GAUSSIAN:
        return 3.0
    return 3.0 + (dist.fourth_moment - 3.0) * float(np.sum(row**4))


def omega_beta(y: float, c: float) -> tuple[float, float]:
    _check_ratios(c, y)
    return (y + c) * (1.0 - y) ** 2, y * (1.0 - y) + c * (1.0 - y) ** 2


@dataclass(frozen=True)
class MultiSpikeParams:
    """Moments of one multiplicity block plus ``omega``, ``beta``.

    ``m2[h, k]`` and ``m4[h1, k1, h2, k2]`` are the mixed second and fourth
    moments of the projections ``u_h^T z`` of a single data column onto the
    block's population directions.  Indices are zero-based.
    """

    y: float
    c: float
    m2: NDArray[np.float64] = field(repr=False)
    m4: NDArray[np.float64] = field(repr=False)
    omega: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self) -> None:
        omega, beta = omega_beta(self.y, self.c)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "beta", beta)
        size = self.m2.shape[0]
        if self.m2.shape != (size, size) or self.m4.shape != (size,) * 4:
            raise ValueError("moment arrays have inconsistent shapes")

    @property
    def size(self) -> int:
        return self.m2.shape[0]

    @classmethod
    def from_directions(
        cls, directions: ArrayLike, y: float, c: float, dist: "EntryDist | str" = EntryDist.GAUSSIAN
    ) -> "MultiSpikeParams":
        """Exact moments for orthonormal ``directions`` (rows) and iid entries."""
        rows = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        m2 = rows @ rows.T
        excess = EntryDist.parse(dist).fourth_moment - 3.0
        m4 = (
            np.einsum("ab,cd->abcd", m2, m2)
            + np.einsum("ac,bd->abcd", m2, m2)
            + np.einsum("ad,bc->abcd", m2, m2)
        )
        if excess:
            m4 = m4 + excess * np.einsum("ha,ka,ia,ja->hkij", rows, rows, rows, rows)
        return cls(y=y, c=c, m2=m2, m4=m4)

    @classmethod
    def gaussian_identity(cls, size: int, y: float, c: float) -> "MultiSpikeParams":
        return cls.from_directions(np.eye(size), y, c)


def multi_spike_params(model: SpikeModel, block: int, y: float, c: float) -> MultiSpikeParams:
    """Moment parameters for multiplicity block ``block`` (zero-based) of ``model``."""
    idx = model.blocks[block]
    return MultiSpikeParams.from_directions(model.rotation[idx.start : idx.stop], y, c, model.entry_dist)


def multi_spike_cov(h1: int, k1: int, h2: int, k2: int, params: MultiSpikeParams) -> float:
    """``cov(R[h1, k1], R[h2, k2])`` for the block's limiting random matrix."""
    size = params.size
    for idx in (h1, k1, h2, k2):
        if not 0 <= idx < size:
            raise IndexError(f"index {idx} outside block of size {size}")
    m2, m4 = params.m2, params.m4
    scale = (1.0 - params.y) ** -2
    first = m4[h1, k1, h2, k2] - m2[h1, k1] * m2[h2, k2]
    second = m2[h1, k2] * m2[h2, k1] + m2[h1, h2] * m2[k1, k2]
    return scale * (params.omega * first + (params.beta - params.omega) * second)


def _upper_pairs(size: int) -> list[tuple[int, int]]:
    return list(combinations_with_replacement(range(size), 2))


def block_entry_covariance(params: MultiSpikeParams) -> tuple[list[tuple[int, int]], NDArray[np.float64]]:
    """Covariance matrix of the upper-triangle entries ``(h, k), h <= k``."""
    pairs = _upper_pairs(params.size)
    cov = np.array([[multi_spike_cov(h1, k1, h2, k2, params) for h2, k2 in pairs] for h1, k1 in pairs])
    return pairs, 0.5 * (cov + cov.T)


def _entry_factor(params: MultiSpikeParams) -> tuple[list[tuple[int, int]], NDArray[np.float64]]:
    pairs, cov = block_entry_covariance(params)
    w, v = np.linalg.eigh(cov)
    if w.size and w[0] < PSD_FLOOR:
        raise InvalidCovarianceError(f"entry covariance has eigenvalue {w[0]:.3e} < {PSD_FLOOR}")
    return pairs, v * np.sqrt(np.clip(w, 0.0, None))


def sample_block_matrices(params: MultiSpikeParams, count: int, seed: int) -> NDArray[np.float64]:
    """``count`` independent draws of the symmetric block matrix, shape ``(count, s, s)``."""
    pairs, factor = _entry_factor(params)
    rng = make_generator(seed)
    entries = rng.standard_normal((int(count), len(pairs))) @ factor.T
    size = params.size
    out = np.zeros((int(count), size, size))
    for col, (h, k) in enumerate(pairs):
        out[:, h, k] = entries[:, col]
        out[:, k, h] = entries[:, col]
    return out


def sample_block_matrix(params: MultiSpikeParams, seed: int) -> NDArray[np.float64]:
    return sample_block_matrices(params, 1, seed)[0]
