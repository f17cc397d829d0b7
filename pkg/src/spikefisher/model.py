"""Dimension regime, spike configuration and assumption diagnostics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionError,
    InvalidRotationError,
    InvalidSpectrumError,
    SubcriticalSpikeError,
)

__all__ = [
    "EntryDist",
    "Regime",
    "SpikeModel",
    "AssumptionReport",
    "build_spike_model",
    "paper_spike_schedule",
    "check_assumptions",
    "kappa",
    "ORTHOGONALITY_TOL",
]

ORTHOGONALITY_TOL = 1e-12


class EntryDist(str, enum.Enum):
    """Zero-mean, unit-variance entry laws for the data matrices."""

    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"  # uniform on [-sqrt(3), sqrt(3)]

    @property
    def fourth_moment(self) -> float:
        return {"gaussian": 3.0, "rademacher": 1.0, "uniform": 9.0 / 5.0}[self.value]

    @classmethod
    def parse(cls, value: "str | EntryDist") -> "EntryDist":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"normal": "gaussian", "uniformsym": "uniform", "uniform_sym": "uniform"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class Regime:
    """Dimensions ``p, n, T`` and spike count ``q``.

    ``n`` is the size of the second sample (the one that gets inverted), so
    ``n > p`` is required; ``T`` is the first sample size.
    """

    p: int
    n: int
    T: int
    q: int = 0

    def __post_init__(self) -> None:
        for name in ("p", "n", "T", "q"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise DimensionError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.p < 1:
            raise DimensionError("p must be positive")
        if self.T < 1:
            raise DimensionError("T must be positive")
        if not 0 <= self.q < self.p:
            raise DimensionError(f"need 0 <= q < p, got q={self.q}, p={self.p}")
        if self.n <= self.p:
            raise DimensionError(f"need n > p for an invertible S2, got n={self.n}, p={self.p}")

    # exact ratios
    @property
    def y_ratio(self) -> Fraction:
        return Fraction(self.p, self.n)

    @property
    def c_ratio(self) -> Fraction:
        return Fraction(self.p, self.T)

    @property
    def y_tilde_ratio(self) -> Fraction:
        return Fraction(self.p - self.q, self.n)

    @property
    def c_tilde_ratio(self) -> Fraction:
        return Fraction(self.p - self.q, self.T)

    # real-valued views
    @property
    def y_p(self) -> float:
        return float(self.y_ratio)

    @property
    def c_p(self) -> float:
        return float(self.c_ratio)

    @property
    def y_tilde(self) -> float:
        return float(self.y_tilde_ratio)

    @property
    def c_tilde(self) -> float:
        return float(self.c_tilde_ratio)

    def with_q(self, q: int) -> "Regime":
        return Regime(self.p, self.n, self.T, q)


@dataclass(frozen=True)
class SpikeModel:
    """Population spikes of ``Sigma_2^{-1} Sigma_1`` with ``Sigma_2 = I``.

    ``spikes`` lists one value per spiked index (so a block of multiplicity
    two appears twice).  ``rotation`` is the q x q orthogonal ``U`` with
    ``Sigma_11 = U^T diag(spikes) U``; row ``i`` of ``U`` is the population
    eigenvector belonging to ``spikes[i]``.
    """

    spikes: tuple[float, ...]
    multiplicities: tuple[int, ...]
    rotation: NDArray[np.float64] = field(repr=False, compare=False)
    entry_dist: EntryDist = EntryDist.GAUSSIAN

    @property
    def q(self) -> int:
        return len(self.spikes)

    @property
    def n_blocks(self) -> int:
        return len(self.multiplicities)

    @property
    def cumulative(self) -> tuple[int, ...]:
        """Cumulative block ends ``N_1, ..., N_l``."""
        return tuple(int(v) for v in np.cumsum(self.multiplicities))

    @property
    def blocks(self) -> list[range]:
        """Zero-based index ranges of the multiplicity blocks."""
        ends = self.cumulative
        starts = (0,) + ends[:-1]
        return [range(s, e) for s, e in zip(starts, ends)]

    @property
    def block_values(self) -> tuple[float, ...]:
        return tuple(self.spikes[b.start] for b in self.blocks)

    @property
    def is_identity_rotation(self) -> bool:
        return bool(np.array_equal(self.rotation, np.eye(self.q)))

    def sigma11(self) -> NDArray[np.float64]:
        u = self.rotation
        out = u.T @ np.diag(self.spikes) @ u
        return 0.5 * (out + out.T)

    def sigma11_sqrt(self) -> NDArray[np.float64]:
        u = self.rotation
        out = u.T @ np.diag(np.sqrt(self.spikes)) @ u
        return 0.5 * (out + out.T)

    def sigma1(self, p: int) -> NDArray[np.float64]:
        """Dense ``p x p`` population matrix ``block-diag(Sigma_11, I)``."""
        if p <= self.q:
            raise DimensionError(f"p={p} must exceed q={self.q}")
        out = np.eye(p)
        out[: self.q, : self.q] = self.sigma11()
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpikeModel):
            return NotImplemented
        return (
            self.spikes == other.spikes
            and self.multiplicities == other.multiplicities
            and self.entry_dist == other.entry_dist
            and np.array_equal(self.rotation, other.rotation)
        )

    __hash__ = None  # type: ignore[assignment]


def build_spike_model(
    spikes: Sequence[float],
    multiplicities: Sequence[int] | None = None,
    rotation: ArrayLike | None = None,
    dist: "EntryDist | str" = EntryDist.GAUSSIAN,
) -> SpikeModel:
    """Validate and assemble a :class:`SpikeModel`.

    ``multiplicities`` defaults to all ones (simple spikes).  Raises
    :class:`SubcriticalSpikeError` for any spike <= 1,
    :class:`InvalidSpectrumError` for ordering or grouping problems and
    :class:`InvalidRotationError` if ``rotation`` is not orthogonal to
    ``ORTHOGONALITY_TOL``.
    """
    values = tuple(float(s) for s in spikes)
    if any(not math.isfinite(s) for s in values):
        raise InvalidSpectrumError("spikes must be finite")
    if any(s <= 1.0 for s in values):
        raise SubcriticalSpikeError(f"every spike must exceed 1, got {values}")
    q = len(values)
    mult = tuple(int(m) for m in (multiplicities if multiplicities is not None else [1] * q))
    if any(m < 1 for m in mult):
        raise InvalidSpectrumError("multiplicities must be >= 1")
    if sum(mult) != q:
        raise InvalidSpectrumError(f"multiplicities sum to {sum(mult)}, expected q={q}")

    start = 0
    previous = math.inf
    for m in mult:
        block = values[start : start + m]
        if any(v != block[0] for v in block):
            raise InvalidSpectrumError(f"spike values differ within a block: {block}")
        if not block[0] < previous:
            raise InvalidSpectrumError("spike blocks must be strictly decreasing")
        previous = block[0]
        start += m

    if rotation is None:
        u = np.eye(q)
    else:
        u = np.array(rotation, dtype=np.float64)
        if u.shape != (q, q):
            raise InvalidRotationError(f"rotation must be {q}x{q}, got shape {u.shape}")
        deviation = np.max(np.abs(u.T @ u - np.eye(q))) if q else 0.0
        if not deviation <= ORTHOGONALITY_TOL:
            raise InvalidRotationError(f"rotation is not orthogonal (max |U^T U - I| = {deviation:.3e})")
    u.setflags(write=False)
    return SpikeModel(values, mult, u, EntryDist.parse(dist))


def paper_spike_schedule(p: int) -> tuple[int, tuple[float, ...]]:
    """Spike count ``ceil(2 ln p)`` with geometric spikes ``1.5^(q+1-i) (ln p / 3)^3``."""
    if p < 2:
        raise DimensionError("p must be at least 2")
    logp = math.log(p)
    q = math.ceil(2.0 * logp)
    base = (logp / 3.0) ** 3
    return q, tuple(1.5 ** (q + 1 - i) * base for i in range(1, q + 1))


def kappa(spikes: Sequence[float], i: int) -> tuple[float, float, float]:
    """Return ``(kappa_1, kappa_2, min)`` for the zero-based spike index ``i``."""
    lam = np.asarray(spikes, dtype=np.float64)
    q = lam.size
    k1 = q + float(np.sum(lam)) / lam[i]
    k2 = q + lam[i] * float(np.sum(1.0 / lam))
    return k1, k2, min(k1, k2)


@dataclass(frozen=True)
class AssumptionReport:
    """Finite-n proxies for the model assumptions.  Advisory only."""

    a1_q_rate: float
    a2a_scale: float
    a2b_scale: float
    a2_qsq_over_lambda: float
    a4_gap: float
    a5_max_mult: int
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    a4_ok: bool
    a5_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.a1_ok and self.a2_ok and self.a3_ok and self.a4_ok and self.a5_ok


A1_FACTOR = 2.0
A4_MIN_GAP = 1.2
A5_MAX_MULT = 4


def check_assumptions(model: SpikeModel, regime: Regime) -> AssumptionReport:
    if model.q != regime.q:
        raise DimensionError(f"model has q={model.q} spikes but regime has q={regime.q}")
    if regime.q >= regime.p:
        raise DimensionError("q must be smaller than p")
    q, n = model.q, regime.n
    lam = np.asarray(model.spikes, dtype=np.float64)
    rate = math.sqrt(q) * n ** -0.25
    a1 = q / n ** (1.0 / 6.0)
    if q:
        a2a = float(np.max(lam.sum() / lam)) * rate
        a2b = float(np.max(lam * np.sum(1.0 / lam))) * rate
        qsq = q**2 / float(lam[-1])
    else:
        a2a = a2b = qsq = 0.0
    values = model.block_values
    gaps = [values[k] / values[k + 1] for k in range(len(values) - 1)]
    a4 = min(gaps) if gaps else math.inf
    a5 = max(model.multiplicities, default=0)
    return AssumptionReport(
        a1_q_rate=a1,
        a2a_scale=a2a,
        a2b_scale=a2b,
        a2_qsq_over_lambda=qsq,
        a4_gap=a4,
        a5_max_mult=a5,
        a1_ok=q <= A1_FACTOR * n ** (1.0 / 6.0),
        a2_ok=min(a2a, a2b) <= 1.0 and qsq <= 1.0,
        # every built-in law has mean 0, variance 1 and a finite fourth moment
        a3_ok=math.isfinite(model.entry_dist.fourth_moment),
        a4_ok=a4 >= A4_MIN_GAP,
        a5_ok=a5 <= A5_MAX_MULT,
    )
