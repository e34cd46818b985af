"""Engine configuration: one JSON document drives every tunable."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .drift import Thresholds
from .embedding import EmbedderSpec
from .errors import ConfigError
from .scoring import CoherenceParams, UtilityWeights

_TOP_LEVEL_KEYS = {
    "data_dir",
    "listen_address",
    "embedder",
    "thresholds",
    "coherence",
    "weights",
    "rendering",
    "fsync",
}


@dataclass(frozen=True)
class EngineConfig:
    """data_dir None means ephemeral (no persistence), used by tests."""

    data_dir: str | None = None
    listen_address: str = "127.0.0.1:8400"
    embedder: EmbedderSpec = field(default_factory=EmbedderSpec)
    thresholds: Thresholds = field(default_factory=Thresholds)
    coherence: CoherenceParams = field(default_factory=CoherenceParams)
    weights: UtilityWeights = field(default_factory=UtilityWeights)
    include_assumptions: bool = True
    fsync: bool = True

    def to_json_dict(self) -> dict:
        return {
            "data_dir": self.data_dir,
            "listen_address": self.listen_address,
            "embedder": self.embedder.to_json_dict(),
            "thresholds": self.thresholds.to_json_dict(),
            "coherence": self.coherence.to_json_dict(),
            "weights": self.weights.to_json_dict(),
            "rendering": {"include_assumptions": self.include_assumptions},
            "fsync": self.fsync,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - _TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            embedder = EmbedderSpec(**data.get("embedder", {}))
            thresholds = Thresholds(**data.get("thresholds", {}))
            coherence = CoherenceParams(**data.get("coherence", {}))
            weights = UtilityWeights(**data.get("weights", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        rendering = data.get("rendering", {})
        if not isinstance(rendering, dict) or set(rendering) - {"include_assumptions"}:
            raise ConfigError("rendering accepts only include_assumptions")
        return cls(
            data_dir=data.get("data_dir"),
            listen_address=data.get("listen_address", "127.0.0.1:8400"),
            embedder=embedder,
            thresholds=thresholds,
            coherence=coherence,
            weights=weights,
            include_assumptions=bool(rendering.get("include_assumptions", True)),
            fsync=bool(data.get("fsync", True)),
        )

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "EngineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def ensure_data_dir(self) -> str:
        if self.data_dir is None:
            raise ConfigError("data_dir is required for persistent engines")
        os.makedirs(self.data_dir, exist_ok=True)
        if not os.access(self.data_dir, os.W_OK):
            raise ConfigError(f"data_dir {self.data_dir} is not writable")
        return self.data_dir
