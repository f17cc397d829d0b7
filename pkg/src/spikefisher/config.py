"""JSON experiment configuration.

Schema (unknown keys are rejected)::

    {
      "p": 200, "n": 1000, "T": 600,          # required positive integers, n > p
      "spikes": [476.49, ...] | "paper",      # one value per spiked index, or the
                                              # geometric schedule for this p
      "multiplicities": [1, 1, ...],          # optional, default all ones
      "rotation": [[...], ...],               # optional q x q orthogonal matrix, row-major
      "dist": "gaussian",                     # gaussian | rademacher | uniform
      "seed": 0,                              # master seed, unsigned 64-bit
      "replications": 1000,                   # optional, default 1000
      "targets": [1, 11],                     # optional one-based spike numbers
      "mode": "clt_simple"                    # consistency | clt_simple | clt_block
    }
"""

from __future__ import annotations

import json
import os
from typing import Any, Mapping

import numpy as np

from .errors import (
    ConfigError,
    InvalidRotationError,
    InvalidSpectrumError,
    SpikeFisherError,
    SubcriticalSpikeError,
)
from .model import EntryDist, Regime, build_spike_model, paper_spike_schedule
from .montecarlo import ExperimentConfig, Mode

__all__ = ["CONFIG_KEYS", "config_from_dict", "config_to_dict", "load_config", "dump_config"]

CONFIG_KEYS = ("p", "n", "T", "spikes", "multiplicities", "rotation", "dist", "seed", "replications", "targets", "mode")
_REQUIRED = ("p", "n", "T", "spikes")


def _int(data: Mapping[str, Any], key: str, default: int | None = None) -> int:
    value = data.get(key, default)
    if value is None:
        raise ConfigError(key, "is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(key, f"must be an integer, got {value!r}")
    return int(value)


def config_from_dict(data: Mapping[str, Any]) -> ExperimentConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("<root>", "configuration must be a JSON object")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(key, "is required")

    p, n, T = _int(data, "p"), _int(data, "n"), _int(data, "T")
    spikes = data["spikes"]
    if spikes == "paper":
        try:
            _, spikes = paper_spike_schedule(p)
        except SpikeFisherError as exc:
            raise ConfigError("spikes", str(exc)) from exc
    if not isinstance(spikes, (list, tuple)) or not all(
        isinstance(s, (int, float)) and not isinstance(s, bool) for s in spikes
    ):
        raise ConfigError("spikes", "must be a list of numbers or \"paper\"")

    if p < 1:
        raise ConfigError("p", "must be positive")
    if T < 1:
        raise ConfigError("T", "must be positive")
    if n <= p:
        raise ConfigError("n", f"must exceed p={p}")
    if len(spikes) >= p:
        raise ConfigError("spikes", f"need fewer than p={p} spikes")
    regime = Regime(p, n, T, len(spikes))

    try:
        dist = EntryDist.parse(data.get("dist", "gaussian"))
    except ValueError as exc:
        raise ConfigError("dist", f"unknown distribution {data.get('dist')!r}") from exc
    rotation = data.get("rotation")
    if rotation is not None:
        try:
            rotation = np.array(rotation, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ConfigError("rotation", "must be a square matrix of numbers") from exc
    try:
        model = build_spike_model(spikes, data.get("multiplicities"), rotation, dist)
    except InvalidRotationError as exc:
        raise ConfigError("rotation", str(exc)) from exc
    except (InvalidSpectrumError, SubcriticalSpikeError) as exc:
        key = "multiplicities" if "multiplicit" in str(exc) else "spikes"
        raise ConfigError(key, str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError("multiplicities", str(exc)) from exc

    targets = data.get("targets")
    if targets is not None and (
        not isinstance(targets, (list, tuple)) or not all(isinstance(t, int) and not isinstance(t, bool) for t in targets)
    ):
        raise ConfigError("targets", "must be a list of integers")
    mode = data.get("mode", Mode.CLT_SIMPLE.value)
    try:
        mode = Mode(mode)
    except ValueError as exc:
        raise ConfigError("mode", f"unknown mode {mode!r}") from exc
    return ExperimentConfig(
        regime=regime,
        model=model,
        replications=_int(data, "replications", 1000),
        master_seed=_int(data, "seed", 0),
        targets=None if targets is None else tuple(targets),
        mode=mode,
    )


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    reg, model = config.regime, config.model
    out: dict[str, Any] = {
        "p": reg.p,
        "n": reg.n,
        "T": reg.T,
        "spikes": list(model.spikes),
        "multiplicities": list(model.multiplicities),
        "dist": model.entry_dist.value,
        "seed": config.master_seed,
        "replications": config.replications,
        "mode": config.mode.value,
    }
    if not model.is_identity_rotation:
        out["rotation"] = model.rotation.tolist()
    if config.targets is not None:
        out["targets"] = list(config.targets)
    return out


def load_config(path: str | os.PathLike[str]) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return config_from_dict(data)


def dump_config(config: ExperimentConfig, path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
