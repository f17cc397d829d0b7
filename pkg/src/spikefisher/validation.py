"""Acceptance criteria as runnable checks.

Each ``criterion_<k>`` returns a :class:`CriterionResult`.  ``quick=True``
shrinks the replication counts; tolerances that are statistical widen by
``sqrt(R_full / R_quick)`` around their nominal centre, deterministic ones
stay put.  Full / quick settings:

====  ======================================  ===========  ==========
 #    check                                    full         quick
====  ======================================  ===========  ==========
 1    CLT, Gaussian, spikes 1 and q            1000 reps    200 reps
 2    CLT variance, Rademacher (nu = 1)        1000 reps    200 reps
 3    consistency + size monotonicity          200 reps     50 reps
 4    Stieltjes transform vs simulated F0      20 seeds     5 seeds
 5    theta residual and fixed-q cross-check   exact        exact
 6    m_tilde decay rate                       1 draw       1 draw
 7    block law, multiplicity two              500 reps     200 reps
 8    thread-count determinism of criterion 1  1000 reps    200 reps
 9    4x4 pencils vs determinant scan          100 pairs    100 pairs
====  ======================================  ===========  ==========
"""

from __future__ import annotations

import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
from scipy.optimize import brentq

from .limitlaw import classical_limit, solve_theta, wachter_stieltjes, wachter_support
from .model import Regime, build_spike_model, paper_spike_schedule
from .montecarlo import THREADS_ENV, ExperimentConfig, ExperimentSummary, Mode, consistency_table, run_experiment
from .report import RunManifest, write_summary
from .sampling import CovariancePair, draw_samples, make_generator
from .spectra import empirical_m_tilde, empirical_stieltjes, f0_eigenvalues, fisher_eigenvalues

__all__ = [
    "CriterionResult",
    "CRITERIA",
    "SUITES",
    "run_suite",
    "paper_config",
    "block_config",
    "determinant_scan_roots",
    "threads_env",
]

DESIGN_SIZES = (200, 1000, 600)  # p, n, T


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: list[str] = field(default_factory=list)
    metrics: dict[str, float] = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number}: {self.title}" + (f" | {'; '.join(self.details)}" if self.details else "")


def paper_config(
    dist: str = "gaussian",
    replications: int = 1000,
    seed: int = 1,
    sizes: tuple[int, int, int] = DESIGN_SIZES,
    mode: Mode = Mode.CLT_SIMPLE,
    targets: tuple[int, ...] | None = "ends",  # type: ignore[assignment]
) -> ExperimentConfig:
    """The simulation design: geometric spikes, identity rotation, ``Sigma_2 = I``.

    ``targets="ends"`` tracks the largest and smallest spike only.
    """
    p, n, T = sizes
    q, spikes = paper_spike_schedule(p)
    if targets == "ends":
        targets = (1, q)
    return ExperimentConfig(
        regime=Regime(p, n, T, q),
        model=build_spike_model(spikes, dist=dist),
        replications=replications,
        master_seed=seed,
        targets=targets,
        mode=mode,
    )


def block_config(replications: int = 500, seed: int = 7, block_value: float = 200.0) -> ExperimentConfig:
    """One double spike at ``block_value`` on top of the simple schedule spikes below it."""
    p, n, T = DESIGN_SIZES
    _, schedule = paper_spike_schedule(p)
    rest = [s for s in schedule if s * 1.2 <= block_value]
    spikes = [block_value, block_value] + rest
    model = build_spike_model(spikes, [2] + [1] * len(rest))
    return ExperimentConfig(Regime(p, n, T, len(spikes)), model, replications, seed, None, Mode.CLT_BLOCK)


def _widen(nominal: float, centre: float, full: int, actual: int) -> float:
    return centre + (nominal - centre) * math.sqrt(full / actual)


def _clt_checks(
    summary: ExperimentSummary, full: int, mean_tol: float, var_lo: float, var_hi: float, ks_tol: float
) -> tuple[bool, list[str], dict[str, float]]:
    reps = summary.n_success
    mean_tol = _widen(mean_tol, 0.0, full, reps)
    var_lo, var_hi = _widen(var_lo, 1.0, full, reps), _widen(var_hi, 1.0, full, reps)
    ks_tol = _widen(ks_tol, 0.0, full, reps)
    ok = True
    details, metrics = [], {}
    for s in summary.spikes:
        st = s.stats
        this = abs(st.mean) <= mean_tol and var_lo <= st.variance <= var_hi and st.ks <= ks_tol
        ok &= this
        details.append(
            f"spike {s.spike}: mean {st.mean:+.3f} (<= {mean_tol:.3f}), var {st.variance:.3f} "
            f"(in [{var_lo:.3f}, {var_hi:.3f}]), KS {st.ks:.3f} (<= {ks_tol:.3f})"
        )
        metrics.update({f"mean_{s.spike}": st.mean, f"var_{s.spike}": st.variance, f"ks_{s.spike}": st.ks})
    return ok, details, metrics


def criterion_1(quick: bool = False, summary: ExperimentSummary | None = None) -> CriterionResult:
    reps = 200 if quick else 1000
    summary = summary or run_experiment(paper_config("gaussian", reps, seed=1))
    ok, details, metrics = _clt_checks(summary, 1000, 0.15, 0.80, 1.25, 0.065)
    return CriterionResult(1, "simple-spike CLT, Gaussian entries", ok, details, metrics)


def criterion_2(quick: bool = False) -> CriterionResult:
    reps = 200 if quick else 1000
    summary = run_experiment(paper_config("rademacher", reps, seed=2))
    var_lo, var_hi = _widen(0.80, 1.0, 1000, reps), _widen(1.30, 1.0, 1000, reps)
    ok = True
    details, metrics = [], {}
    for s in summary.spikes:
        v = s.stats.variance
        ok &= var_lo <= v <= var_hi
        details.append(f"spike {s.spike}: sigma^2 {s.sigma**2:.4f}, var {v:.3f} (in [{var_lo:.3f}, {var_hi:.3f}])")
        metrics[f"var_{s.spike}"] = v
    return CriterionResult(2, "CLT variance tracks nu (Rademacher, nu = 1)", ok, details, metrics)


def criterion_3(quick: bool = False) -> CriterionResult:
    reps = 50 if quick else 200
    ok = True
    details: list[str] = []
    metrics: dict[str, float] = {}
    gaps = []
    for k, sizes in enumerate(((100, 500, 300), (200, 1000, 600), (400, 2000, 1200))):
        cfg = paper_config("gaussian", reps, seed=30 + k, sizes=sizes, mode=Mode.CONSISTENCY, targets=None)
        rows = consistency_table(run_experiment(cfg))
        worst = max(row.gap for row in rows)
        gaps.append(worst)
        metrics[f"max_gap_p{sizes[0]}"] = worst
        if sizes == DESIGN_SIZES:
            limit = rows[0].limit
            bad = [row.spike for row in rows if row.gap > 0.05 * limit + row.kappa_diagnostic]
            ok &= not bad
            details.append(
                f"p=200: {len(rows) - len(bad)}/{len(rows)} spikes within 5% of {limit:.3f} + kappa term "
                f"(largest gap {worst:.4f}, smallest kappa term {min(r.kappa_diagnostic for r in rows):.3f})"
            )
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    ok &= monotone
    details.append("max gap over spikes by p=100,200,400: " + ", ".join(f"{g:.4f}" for g in gaps))
    return CriterionResult(3, "consistency of lambda_hat / lambda", ok, details, metrics)


def criterion_4(quick: bool = False) -> CriterionResult:
    seeds = 5 if quick else 20
    p, n, T = 800, 4000, 2400
    regime = Regime(p, n, T, 0)
    model = build_spike_model([])
    c, y = regime.c_tilde, regime.y_tilde
    _, b = wachter_support(c, y)
    zs = (b + 0.5, 2 * b, 5 * b)
    errors = np.empty((seeds, len(zs)))
    for k in range(seeds):
        mu = f0_eigenvalues(draw_samples(model, regime, 400 + k), regime)
        for j, z in enumerate(zs):
            exact = wachter_stieltjes(z, c, y)
            errors[k, j] = abs(exact - empirical_stieltjes(mu, z)) / abs(exact)
    med = np.median(errors, axis=0)
    ok = bool(np.all(med <= 0.02))
    details = [f"z={z:.3f}: median rel err {m:.2e}" for z, m in zip(zs, med)]
    return CriterionResult(4, "Stieltjes transform vs simulated F0", ok, details, {f"z{j}": float(m) for j, m in enumerate(med)})


def criterion_5(quick: bool = False) -> CriterionResult:
    c, y = 1.0 / 3.0, 0.2
    ok = True
    details = []
    scaled = []
    for lam in (20.0, 50.0, 100.0, 500.0):
        sol = solve_theta(lam, c, y)
        ref = classical_limit(lam, c, y)
        rel = abs(sol.theta - ref) / ref
        ok &= abs(sol.residual) <= 1e-10 * sol.theta and rel <= 0.02
        scaled.append(sol.theta * (1 - y) / lam)
        details.append(f"lambda={lam:g}: theta {sol.theta:.6f}, residual {sol.residual:.1e}, vs fixed-q {rel:.1e}")
    gaps = [abs(s - 1.0) for s in scaled]
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    ok &= monotone
    details.append("|theta(1-y)/lambda - 1|: " + ", ".join(f"{g:.4f}" for g in gaps))
    return CriterionResult(5, "theta solver residual and fixed-q cross-check", ok, details)


def criterion_6(quick: bool = False) -> CriterionResult:
    p, n, T = DESIGN_SIZES
    q, spikes = paper_spike_schedule(p)
    regime = Regime(p, n, T, q)
    mu = f0_eigenvalues(draw_samples(build_spike_model(spikes), regime, 6), regime)
    top = float(mu[0])
    ok = True
    details = []
    for mult in (10, 20, 40):
        theta = mult * top
        here = theta * abs(empirical_m_tilde(mu, theta) - 1.0)
        there = 2 * theta * abs(empirical_m_tilde(mu, 2 * theta) - 1.0)
        ratio = here / there
        ok &= 0.8 <= ratio <= 1.2
        details.append(f"theta={mult}mu1: ratio {ratio:.4f}")
    return CriterionResult(6, "m_tilde(1) - 1 decays like 1/theta", ok, details)


def criterion_7(quick: bool = False) -> CriterionResult:
    reps = 200 if quick else 500
    summary = run_experiment(block_config(reps))
    tol = _widen(0.10, 0.0, 500, reps)
    ok = True
    details, metrics = [], {}
    for blk in summary.blocks:
        for j, d in enumerate(blk.ks):
            ok &= d <= tol
            emp = blk.empirical[:, j].mean()
            ref = blk.reference[:, j].mean()
            details.append(f"order stat {j + 1}: KS {d:.3f} (<= {tol:.3f}), mean {emp:+.3f} vs reference {ref:+.3f}")
            metrics[f"ks_{j + 1}"] = d
    return CriterionResult(7, "block law for a double spike", ok, details, metrics)


def _samples_bytes(summary: ExperimentSummary, directory: Path) -> dict[str, bytes]:
    write_summary(summary, RunManifest(summary.config), directory)
    return {f.name: f.read_bytes() for f in sorted(directory.glob("samples_*.csv"))}


@contextmanager
def threads_env(count: int) -> Iterator[None]:
    """Temporarily set ``SFL_THREADS``."""
    old = os.environ.get(THREADS_ENV)
    os.environ[THREADS_ENV] = str(count)
    try:
        yield
    finally:
        if old is None:
            del os.environ[THREADS_ENV]
        else:
            os.environ[THREADS_ENV] = old


def criterion_8(quick: bool = False, summary: ExperimentSummary | None = None) -> CriterionResult:
    """``summary``, if given, must come from a single-threaded run of criterion 1."""
    reps = 200 if quick else 1000
    cfg = summary.config if summary is not None else paper_config("gaussian", reps, seed=1)
    if summary is None:
        with threads_env(1):
            summary = run_experiment(cfg)
    with threads_env(8):
        eight = run_experiment(cfg)
    one = summary
    with tempfile.TemporaryDirectory() as tmp:
        a = _samples_bytes(one, Path(tmp) / "t1")
        b = _samples_bytes(eight, Path(tmp) / "t8")
    ok = bool(a) and a == b
    return CriterionResult(8, "samples CSVs identical for 1 and 8 threads", ok, [f"{len(a)} files compared"])


def determinant_scan_roots(S1: np.ndarray, S2: np.ndarray, grid: int = 20000) -> np.ndarray:
    """Roots of ``det(lam S2 - S1)`` by sign-change scanning plus Brent refinement."""
    dim = S1.shape[0]
    upper = np.trace(S1) * np.trace(np.linalg.inv(S2)) * 1.01

    def det(lam: float) -> float:
        return float(np.linalg.det(lam * S2 - S1))

    for size in (grid, 10 * grid, 100 * grid):
        pts = np.concatenate([[0.0], np.geomspace(1e-12 * upper, upper, size)])
        vals = np.linalg.det(pts[:, None, None] * S2 - S1)
        roots = [pts[k] for k in np.flatnonzero(vals == 0.0)]
        for k in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
            roots.append(brentq(det, pts[k], pts[k + 1], xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
        if len(roots) == dim:
            return np.sort(np.array(roots))[::-1]
    raise RuntimeError("determinant scan did not isolate every root")


def criterion_9(quick: bool = False) -> CriterionResult:
    rng = make_generator(9)
    worst = 0.0
    for _ in range(100):
        a = rng.standard_normal((4, 8))
        b = rng.standard_normal((4, 8))
        S1 = a @ a.T / 8 + 0.05 * np.eye(4)
        S2 = b @ b.T / 8 + 0.05 * np.eye(4)
        got = fisher_eigenvalues(CovariancePair.from_matrices(S1, S2))
        ref = determinant_scan_roots(S1, S2)
        worst = max(worst, float(np.max(np.abs(got - ref) / np.abs(ref))))
    ok = worst <= 1e-8
    return CriterionResult(9, "4x4 pencils match determinant-scan roots", ok, [f"max rel err {worst:.2e}"])


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}

SUITES: dict[str, tuple[int, ...]] = {
    "consistency": (3, 4, 5, 6, 9),
    "clt": (1, 2, 8),
    "block": (7,),
    "all": tuple(range(1, 10)),
}


def run_suite(name: str, quick: bool = False, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    """Run every criterion of suite ``name``; criterion 8 reuses criterion 1's run."""
    results = []
    clt_summary = None
    for number in SUITES[name]:
        if number in (1, 8) and clt_summary is None:
            with threads_env(1):
                clt_summary = run_experiment(paper_config("gaussian", 200 if quick else 1000, seed=1))
        if number in (1, 8):
            result = CRITERIA[number](quick, summary=clt_summary)
        else:
            result = CRITERIA[number](quick)
        results.append(result)
        if echo is not None:
            echo(result.line())
    return results
