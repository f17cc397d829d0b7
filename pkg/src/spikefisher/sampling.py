"""Data matrices, sample covariances and seeded randomness."""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError, SingularS2Error
from .model import EntryDist, Regime, SpikeModel

__all__ = [
    "SampleMatrices",
    "CovariancePair",
    "make_generator",
    "replication_seed",
    "draw_entries",
    "draw_samples",
    "form_covariances",
    "write_matrix",
    "read_matrix",
    "S2_CONDITION_LIMIT",
]

S2_CONDITION_LIMIT = 1e12
_MAGIC = b"SFLM"
_SQRT3 = math.sqrt(3.0)


def make_generator(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def replication_seed(master_seed: int, index: int) -> int:
    """64-bit seed for replication ``index``, independent of every other index."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def draw_entries(rng: np.random.Generator, dist: EntryDist, shape: tuple[int, ...]) -> NDArray[np.float64]:
    if dist is EntryDist.GAUSSIAN:
        return rng.standard_normal(shape)
    if dist is EntryDist.RADEMACHER:
        return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
    if dist is EntryDist.UNIFORM:
        return rng.uniform(-_SQRT3, _SQRT3, size=shape)
    raise ValueError(f"unknown entry distribution {dist!r}")


@dataclass(frozen=True)
class SampleMatrices:
    """``Y`` (p x T), ``Z`` (p x n) and ``X = Sigma_1^{1/2} Y``."""

    Y: NDArray[np.float64] = field(repr=False)
    Z: NDArray[np.float64] = field(repr=False)
    X: NDArray[np.float64] = field(repr=False)
    seed: int
    q: int

    @property
    def Y1(self) -> NDArray[np.float64]:
        return self.Y[: self.q]

    @property
    def Y2(self) -> NDArray[np.float64]:
        return self.Y[self.q :]

    @property
    def Z1(self) -> NDArray[np.float64]:
        return self.Z[: self.q]

    @property
    def Z2(self) -> NDArray[np.float64]:
        return self.Z[self.q :]

    @property
    def X1(self) -> NDArray[np.float64]:
        return self.X[: self.q]

    @property
    def X2(self) -> NDArray[np.float64]:
        return self.X[self.q :]


def draw_samples(model: SpikeModel, regime: Regime, seed: int) -> SampleMatrices:
    """Draw ``Y`` then ``Z`` from a Philox stream keyed by ``seed``.

    The result is a pure function of ``(model, regime, seed)``.
    """
    if model.q != regime.q:
        raise DimensionError(f"model has q={model.q} spikes but regime has q={regime.q}")
    rng = make_generator(seed)
    p, q = regime.p, regime.q
    y = draw_entries(rng, model.entry_dist, (p, regime.T))
    z = draw_entries(rng, model.entry_dist, (p, regime.n))
    x = y.copy()
    if q:
        x[:q] = model.sigma11_sqrt() @ y[:q]
    for arr in (x, y, z):
        arr.setflags(write=False)
    return SampleMatrices(Y=y, Z=z, X=x, seed=int(seed), q=q)


def _gram(a: NDArray[np.float64], scale: int) -> NDArray[np.float64]:
    out = (a @ a.T) / scale
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class CovariancePair:
    """``S1 = X X^T / T`` and ``S2 = Z Z^T / n``.

    The eigendecomposition of ``S2`` computed during the singularity check is
    kept so that the Fisher eigensolver does not repeat it.
    """

    S1: NDArray[np.float64] = field(repr=False)
    S2: NDArray[np.float64] = field(repr=False)
    s2_evals: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)
    s2_evecs: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.S1.shape[0]

    def s2_eigh(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        if self.s2_evals is not None and self.s2_evecs is not None:
            return self.s2_evals, self.s2_evecs
        return np.linalg.eigh(self.S2)

    @classmethod
    def from_matrices(cls, S1: NDArray[np.float64], S2: NDArray[np.float64]) -> "CovariancePair":
        """Wrap an arbitrary symmetric pair, validating ``S2`` as in :func:`form_covariances`."""
        S1 = np.asarray(S1, dtype=np.float64)
        S2 = np.asarray(S2, dtype=np.float64)
        if S1.ndim != 2 or S1.shape[0] != S1.shape[1] or S1.shape != S2.shape:
            raise DimensionError(f"need two square matrices of equal size, got {S1.shape} and {S2.shape}")
        w, v = _checked_eigh(S2)
        return cls(S1, S2, w, v)


def _checked_eigh(S2: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    w, v = np.linalg.eigh(S2)
    if w[0] <= 0.0 or w[-1] / w[0] > S2_CONDITION_LIMIT:
        cond = math.inf if w[0] <= 0.0 else w[-1] / w[0]
        raise SingularS2Error(f"S2 is numerically singular (condition estimate {cond:.3e})")
    return w, v


def form_covariances(s: SampleMatrices, regime: Regime) -> CovariancePair:
    if s.X.shape != (regime.p, regime.T) or s.Z.shape != (regime.p, regime.n):
        raise DimensionError("sample shapes do not match the regime")
    S1 = _gram(s.X, regime.T)
    S2 = _gram(s.Z, regime.n)
    w, v = _checked_eigh(S2)
    return CovariancePair(S1, S2, w, v)


def write_matrix(path: str | os.PathLike[str], matrix: NDArray[np.float64]) -> None:
    """Dump a 2-D float matrix as ``SFLM`` + u32 rows + u32 cols + row-major f64 (little endian)."""
    m = np.asarray(matrix, dtype="<f8")
    if m.ndim != 2:
        raise ValueError("only 2-D matrices can be written")
    rows, cols = m.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<II", rows, cols))
        fh.write(np.ascontiguousarray(m).tobytes(order="C"))


def read_matrix(path: str | os.PathLike[str]) -> NDArray[np.float64]:
    with open(path, "rb") as fh:
        header = fh.read(12)
        if len(header) != 12 or header[:4] != _MAGIC:
            raise ValueError(f"{os.fspath(path)}: not an SFLM matrix file")
        rows, cols = struct.unpack("<II", header[4:])
        payload = fh.read()
    if len(payload) != 8 * rows * cols:
        raise ValueError(f"{os.fspath(path)}: expected {rows * cols} entries, got {len(payload) // 8}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
