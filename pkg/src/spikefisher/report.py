"""Persisting experiment summaries: JSON, per-sample CSV, qq CSV and a run manifest."""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .config import config_to_dict
from .montecarlo import ExperimentConfig, ExperimentSummary

__all__ = ["RunManifest", "summary_to_dict", "write_summary", "fmt_float", "ReportIOError"]


class ReportIOError(OSError):
    """Writing an output file failed; ``path`` names it."""

    def __init__(self, path: str, cause: OSError) -> None:
        super().__init__(f"cannot write {path}: {cause}")
        self.path = path


def fmt_float(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def _clean(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


@dataclass
class RunManifest:
    config: ExperimentConfig
    version: str = __version__
    timestamp: str = field(default_factory=_utcnow)
    files: list[str] = field(default_factory=list)
    duration_seconds: float | None = None
    status: str = "running"

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": config_to_dict(self.config),
            "version": self.version,
            "timestamp": self.timestamp,
            "master_seed": self.config.master_seed,
            "files": list(self.files),
            "duration_seconds": self.duration_seconds,
            "status": self.status,
        }

    def write(self, directory: str | os.PathLike[str]) -> Path:
        path = Path(directory) / "manifest.json"
        _write_text(path, json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


def _write_text(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(str(path), exc) from exc


def summary_to_dict(summary: ExperimentSummary) -> dict[str, Any]:
    reg = summary.config.regime
    spikes = []
    for s in summary.spikes:
        spikes.append(
            {
                "spike": s.spike,
                "lambda": s.lam,
                "theta": s.theta,
                "sigma": s.sigma,
                "normalized": {k: _clean(v) for k, v in s.stats.to_dict().items()},
                "variance_defined": s.stats.variance_defined,
                "ratio": {
                    "mean": _clean(s.ratio_stats.mean),
                    "variance": _clean(s.ratio_stats.variance),
                    "limit": s.ratio_limit,
                    "gap": _clean(s.ratio_gap),
                },
            }
        )
    blocks = [
        {
            "block": b.block,
            "spikes": list(b.spikes),
            "lambda": b.lam,
            "ks_per_order_statistic": list(b.ks),
            "entry_variances": list(b.entry_variances),
            "count": int(b.empirical.shape[0]),
        }
        for b in summary.blocks
    ]
    return {
        "config": config_to_dict(summary.config),
        "ratios": {"y_p": reg.y_p, "c_p": reg.c_p, "y_tilde": reg.y_tilde, "c_tilde": reg.c_tilde},
        "replications": {
            "requested": summary.config.replications,
            "succeeded": summary.n_success,
            "failed": summary.n_failed,
            "failures": {str(k): v for k, v in summary.failures.items()},
        },
        "bulk": {
            "edge": summary.bulk_edge,
            "top_eigenvalue_mean": _clean(summary.top_bulk.mean),
            "top_eigenvalue_variance": _clean(summary.top_bulk.variance),
        },
        "spikes": spikes,
        "blocks": blocks,
    }


def write_summary(
    summary: ExperimentSummary, manifest: RunManifest, directory: str | os.PathLike[str]
) -> list[Path]:
    """Write ``summary.json``, ``samples_<i>.csv``, ``qq_<i>.csv`` and ``manifest.json``.

    Returns the paths written, manifest last.
    """
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(str(out), exc) from exc
    written: list[Path] = []

    path = out / "summary.json"
    _write_text(path, json.dumps(summary_to_dict(summary), indent=2, sort_keys=True) + "\n")
    written.append(path)

    for s in summary.spikes:
        lines = ["replication,lambda_hat,delta,normalized"]
        for r, lam_hat, delta, z in zip(s.replications, s.lambda_hat, s.delta, s.normalized):
            lines.append(f"{int(r)},{fmt_float(lam_hat)},{fmt_float(delta)},{fmt_float(z)}")
        path = out / f"samples_{s.spike}.csv"
        _write_text(path, "\n".join(lines) + "\n")
        written.append(path)

        quantiles, ordered = s.qq()
        lines = ["normal_quantile,sample_quantile"]
        lines += [f"{fmt_float(a)},{fmt_float(b)}" for a, b in zip(quantiles, ordered)]
        path = out / f"qq_{s.spike}.csv"
        _write_text(path, "\n".join(lines) + "\n")
        written.append(path)

    manifest.files = [p.name for p in written] + ["manifest.json"]
    written.append(manifest.write(out))
    return written
