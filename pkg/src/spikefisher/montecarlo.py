"""Replicated experiments for consistency, the simple-spike CLT and the block law.

Replication ``r`` draws its data from a seed derived from
``(master_seed, r)`` alone, and results are folded in index order, so the
output does not depend on how many worker threads ran the replications.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from threadpoolctl import threadpool_limits

from .errors import ConfigError, ExperimentDegenerateError, SpikeFisherError
from .limitlaw import (
    MultiSpikeParams,
    ThetaSolution,
    multi_spike_cov,
    multi_spike_params,
    nu_for,
    sample_block_matrices,
    sigma_sq,
    solve_theta,
    wachter_support,
)
from .model import Regime, SpikeModel, kappa
from .sampling import draw_samples, form_covariances, replication_seed
from .spectra import fisher_eigenvalues
from .stats import SampleStats, describe, ks_two_sample, qq_pairs

__all__ = [
    "Mode",
    "ExperimentConfig",
    "ReplicationRecord",
    "SpikeSummary",
    "BlockComparison",
    "ExperimentSummary",
    "ConsistencyRow",
    "prepare_thetas",
    "run_replication",
    "run_experiment",
    "summarize_spike",
    "consistency_table",
    "block_law_check",
    "thread_count",
    "MAX_FAILED_FRACTION",
]

MAX_FAILED_FRACTION = 0.05
THREADS_ENV = "SFL_THREADS"


class Mode(str, enum.Enum):
    CONSISTENCY = "consistency"
    CLT_SIMPLE = "clt_simple"
    CLT_BLOCK = "clt_block"


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment.

    ``targets`` are one-based spike numbers (spike 1 is the largest); ``None``
    tracks every spike.
    """

    regime: Regime
    model: SpikeModel
    replications: int = 1000
    master_seed: int = 0
    targets: tuple[int, ...] | None = None
    mode: Mode = Mode.CLT_SIMPLE

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.regime.q != self.model.q:
            raise ConfigError("spikes", f"{self.model.q} spikes but regime has q={self.regime.q}")
        if isinstance(self.replications, bool) or int(self.replications) < 1:
            raise ConfigError("replications", "must be a positive integer")
        object.__setattr__(self, "replications", int(self.replications))
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        if self.targets is not None:
            targets = tuple(int(t) for t in self.targets)
            if any(not 1 <= t <= self.model.q for t in targets) or len(set(targets)) != len(targets):
                raise ConfigError("targets", f"must be distinct spike numbers in 1..{self.model.q}")
            object.__setattr__(self, "targets", targets)
        if self.mode is Mode.CLT_BLOCK and max(self.model.multiplicities, default=0) < 2:
            raise ConfigError("multiplicities", "clt_block mode needs a block with multiplicity >= 2")

    @property
    def tracked(self) -> tuple[int, ...]:
        return self.targets if self.targets is not None else tuple(range(1, self.model.q + 1))


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        threads = int(raw) if raw else 1
    return max(1, int(threads))


def prepare_thetas(config: ExperimentConfig) -> list[ThetaSolution | SpikeFisherError]:
    """Centering parameter and CLT scale for every spike (index = spike number - 1).

    ``theta`` uses the bulk ratios ``((p-q)/T, (p-q)/n)``; ``sigma`` uses
    ``(p/n, p/T)``.  A spike whose equation has no admissible root keeps the
    error instead, and every replication that tracks it is marked failed.
    """
    reg, model = config.regime, config.model
    out: list[ThetaSolution | SpikeFisherError] = []
    for i, lam in enumerate(model.spikes):
        try:
            sol = solve_theta(lam, reg.c_tilde, reg.y_tilde)
            nu = nu_for(model.entry_dist, model.rotation, i)
            out.append(sol.with_sigma(math.sqrt(sigma_sq(reg.y_p, reg.c_p, nu))))
        except SpikeFisherError as exc:
            out.append(exc)
    return out


@dataclass(frozen=True)
class ReplicationRecord:
    """One replication.  Arrays are aligned with ``spikes`` (one-based numbers)."""

    index: int
    seed: int
    spikes: tuple[int, ...]
    lambda_hat: NDArray[np.float64] | None = field(default=None, repr=False)
    delta: NDArray[np.float64] | None = field(default=None, repr=False)
    normalized: NDArray[np.float64] | None = field(default=None, repr=False)
    top_bulk: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_replication(
    config: ExperimentConfig,
    r: int,
    thetas: Sequence[ThetaSolution | SpikeFisherError] | None = None,
) -> ReplicationRecord:
    """Run replication ``r``; failures are returned as tagged records, not raised."""
    if not 0 <= r < config.replications:
        raise IndexError(f"replication {r} outside 0..{config.replications - 1}")
    seed = replication_seed(config.master_seed, r)
    spikes = config.tracked
    if thetas is None:
        thetas = prepare_thetas(config)
    reg = config.regime
    try:
        for s in spikes:
            if isinstance(thetas[s - 1], SpikeFisherError):
                raise thetas[s - 1]
        samples = draw_samples(config.model, reg, seed)
        eigs = fisher_eigenvalues(form_covariances(samples, reg))
    except SpikeFisherError as exc:
        return ReplicationRecord(r, seed, spikes, error=f"{type(exc).__name__}: {exc}")

    idx = np.array(spikes, dtype=int) - 1
    lam_hat = eigs[idx]
    sols = [thetas[s - 1] for s in spikes]
    theta = np.array([t.theta for t in sols], dtype=np.float64)
    sigma = np.array([t.sigma for t in sols], dtype=np.float64)
    delta = (lam_hat - theta) / theta
    normalized = math.sqrt(reg.p) * delta / sigma
    return ReplicationRecord(
        index=r,
        seed=seed,
        spikes=spikes,
        lambda_hat=lam_hat,
        delta=delta,
        normalized=normalized,
        top_bulk=float(eigs[reg.q]),
    )


@dataclass(frozen=True)
class SpikeSummary:
    spike: int
    lam: float
    theta: float
    sigma: float
    replications: NDArray[np.int64] = field(repr=False)
    lambda_hat: NDArray[np.float64] = field(repr=False)
    delta: NDArray[np.float64] = field(repr=False)
    normalized: NDArray[np.float64] = field(repr=False)
    stats: SampleStats
    ratio_stats: SampleStats
    ratio_limit: float

    @property
    def ratio(self) -> NDArray[np.float64]:
        return self.lambda_hat / self.lam

    @property
    def ratio_gap(self) -> float | None:
        if self.ratio_stats.mean is None:
            return None
        return abs(self.ratio_stats.mean - self.ratio_limit)

    def qq(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return qq_pairs(self.normalized)


@dataclass(frozen=True)
class BlockComparison:
    """Sorted ``sqrt(p) * delta`` tuples for one block against reference draws."""

    block: int
    spikes: tuple[int, ...]
    lam: float
    empirical: NDArray[np.float64] = field(repr=False)
    reference: NDArray[np.float64] = field(repr=False)
    ks: tuple[float, ...]
    entry_variances: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    records: tuple[ReplicationRecord, ...] = field(repr=False)
    spikes: tuple[SpikeSummary, ...]
    bulk_edge: float
    top_bulk: SampleStats
    blocks: tuple[BlockComparison, ...] = ()

    @property
    def failures(self) -> dict[int, str]:
        return {rec.index: rec.error for rec in self.records if rec.error is not None}

    @property
    def n_success(self) -> int:
        return sum(rec.ok for rec in self.records)

    @property
    def n_failed(self) -> int:
        return len(self.records) - self.n_success

    def spike(self, number: int) -> SpikeSummary:
        for s in self.spikes:
            if s.spike == number:
                return s
        raise KeyError(f"spike {number} was not tracked")


def summarize_spike(
    spike: int,
    lam: float,
    solution: ThetaSolution,
    replications: NDArray[np.int64],
    lambda_hat: NDArray[np.float64],
    ratio_limit: float,
    p: int,
) -> SpikeSummary:
    """Build a :class:`SpikeSummary` from raw eigenvalue samples."""
    lambda_hat = np.asarray(lambda_hat, dtype=np.float64)
    delta = (lambda_hat - solution.theta) / solution.theta
    normalized = math.sqrt(p) * delta / solution.sigma
    return SpikeSummary(
        spike=spike,
        lam=lam,
        theta=solution.theta,
        sigma=float(solution.sigma),
        replications=np.asarray(replications, dtype=np.int64),
        lambda_hat=lambda_hat,
        delta=delta,
        normalized=normalized,
        stats=describe(normalized),
        ratio_stats=describe(lambda_hat / lam, ks=False),
        ratio_limit=ratio_limit,
    )


def _run_all(
    config: ExperimentConfig, thetas: list[ThetaSolution | SpikeFisherError], threads: int
) -> list[ReplicationRecord]:
    indices = range(config.replications)
    # one BLAS thread per call keeps every floating-point reduction order fixed
    with threadpool_limits(limits=1):
        if threads == 1:
            return [run_replication(config, r, thetas) for r in indices]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda r: run_replication(config, r, thetas), indices))


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentSummary:
    """Run all replications and aggregate them in index order.

    Raises :class:`ExperimentDegenerateError` when more than
    ``MAX_FAILED_FRACTION`` of the replications failed.
    """
    thetas = prepare_thetas(config)
    records = _run_all(config, thetas, thread_count(threads))
    failures = {rec.index: rec.error for rec in records if rec.error is not None}
    if len(failures) > MAX_FAILED_FRACTION * config.replications:
        first = next(iter(failures.values()))
        raise ExperimentDegenerateError(
            f"{len(failures)} of {config.replications} replications failed (first: {first})", failures
        )
    good = [rec for rec in records if rec.ok]
    reg, model = config.regime, config.model
    ratio_limit = 1.0 / (1.0 - reg.y_p)
    reps = np.array([rec.index for rec in good], dtype=np.int64)
    spikes = []
    for col, number in enumerate(config.tracked):
        lam_hat = np.array([rec.lambda_hat[col] for rec in good], dtype=np.float64)
        sol = thetas[number - 1]
        assert isinstance(sol, ThetaSolution)
        spikes.append(summarize_spike(number, model.spikes[number - 1], sol, reps, lam_hat, ratio_limit, reg.p))
    summary = ExperimentSummary(
        config=config,
        records=tuple(records),
        spikes=tuple(spikes),
        bulk_edge=wachter_support(reg.c_tilde, reg.y_tilde)[1],
        top_bulk=describe([rec.top_bulk for rec in good], ks=False),
    )
    if config.mode is Mode.CLT_BLOCK:
        summary = ExperimentSummary(
            summary.config, summary.records, summary.spikes, summary.bulk_edge, summary.top_bulk,
            tuple(_compare_blocks(summary, None)),
        )
    return summary


@dataclass(frozen=True)
class ConsistencyRow:
    spike: int
    mean_ratio: float
    limit: float
    gap: float
    kappa: float
    kappa_diagnostic: float

    @property
    def gap_over_diagnostic(self) -> float:
        return self.gap / self.kappa_diagnostic


def consistency_table(source: ExperimentConfig | ExperimentSummary) -> list[ConsistencyRow]:
    """Mean ``lambda_hat/lambda`` against ``1/(1 - y_p)`` with the ``kappa q (n^-1/2 + 1/lambda)`` scale."""
    summary = source if isinstance(source, ExperimentSummary) else run_experiment(source)
    cfg = summary.config
    if cfg.mode is not Mode.CONSISTENCY and not isinstance(source, ExperimentSummary):
        raise ConfigError("mode", "consistency_table expects a consistency experiment")
    reg, model = cfg.regime, cfg.model
    rows = []
    for s in sorted(summary.spikes, key=lambda s: s.spike):
        k = kappa(model.spikes, s.spike - 1)[2]
        diag = k * model.q * (reg.n**-0.5 + 1.0 / s.lam)
        mean_ratio = float(s.ratio_stats.mean)
        rows.append(ConsistencyRow(s.spike, mean_ratio, s.ratio_limit, abs(mean_ratio - s.ratio_limit), k, diag))
    return rows


def _block_params(config: ExperimentConfig, block: int) -> MultiSpikeParams:
    reg = config.regime
    return multi_spike_params(config.model, block, reg.y_p, reg.c_p)


def _compare_blocks(summary: ExperimentSummary, blocks: Sequence[int] | None) -> list[BlockComparison]:
    cfg = summary.config
    model, reg = cfg.model, cfg.regime
    if blocks is None:
        blocks = [b for b, m in enumerate(model.multiplicities) if m >= 2]
    tracked = set(cfg.tracked)
    out = []
    for b in blocks:
        members = tuple(i + 1 for i in model.blocks[b])
        if not set(members) <= tracked:
            raise ConfigError("targets", f"block {b + 1} is not fully tracked")
        cols = [next(s for s in summary.spikes if s.spike == m) for m in members]
        scaled = np.column_stack([math.sqrt(reg.p) * s.delta for s in cols])
        empirical = -np.sort(-scaled, axis=1)
        params = _block_params(cfg, b)
        draws = sample_block_matrices(params, empirical.shape[0], replication_seed(cfg.master_seed, 2**40 + b))
        reference = np.linalg.eigvalsh(draws)[:, ::-1]
        ks = tuple(ks_two_sample(empirical[:, j], reference[:, j]) for j in range(len(members)))
        variances = tuple(
            multi_spike_cov(h, k, h, k, params) for h in range(params.size) for k in range(h, params.size)
        )
        out.append(BlockComparison(b + 1, members, model.spikes[members[0] - 1], empirical, reference, ks, variances))
    return out


def block_law_check(
    source: ExperimentConfig | ExperimentSummary, blocks: Sequence[int] | None = None
) -> list[BlockComparison]:
    """Marginal two-sample KS per order statistic for each multiplicity block.

    ``blocks`` are one-based block numbers; by default every block with
    multiplicity >= 2.  A block of size one compares against scalar
    ``N(0, sigma^2)`` draws.
    """
    summary = source if isinstance(source, ExperimentSummary) else run_experiment(source)
    if blocks is None and summary.config.mode is not Mode.CLT_BLOCK:
        raise ConfigError("mode", "block_law_check expects a clt_block experiment")
    chosen = None if blocks is None else [b - 1 for b in blocks]
    return _compare_blocks(summary, chosen)
