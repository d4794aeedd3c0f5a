"""Run configuration: a flat ``key = value`` file, overridable from the command line."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .aligncore import AlignConfig
from .forest import ForestParams
from .lexres import Resources

RESOURCE_KEYS = ("normalization", "synonym", "similar_to", "antonym", "hypernym",
                 "hyponym", "taxonomy", "ppdb", "embeddings")


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    normalization: str | None = None
    synonym: str | None = None
    similar_to: str | None = None
    antonym: str | None = None
    hypernym: str | None = None
    hyponym: str | None = None
    taxonomy: str | None = None
    ppdb: str | None = None
    embeddings: str | None = None
    gamma: float = 1.1
    prune_threshold: float = 0.0
    max_group_size: int = 2
    hash_dim: int = 512
    num_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    feature_fraction: float | None = None
    seed: int = 42
    jobs: int = 0           # 0 -> number of processors
    exclude_punct: bool = False

    def validate(self) -> "RunConfig":
        for key in RESOURCE_KEYS:
            path = getattr(self, key)
            if path and not Path(path).is_file():
                raise ConfigError(f"{key}: file not found: {path}")
        if not self.gamma > 0:
            raise ConfigError("gamma must be > 0")
        if self.hash_dim < 2:
            raise ConfigError("hash_dim must be >= 2")
        if self.max_group_size not in (1, 2, 3):
            raise ConfigError("max_group_size must be 1, 2 or 3")
        if self.num_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ConfigError("num_trees, max_depth and min_leaf must be >= 1")
        if self.feature_fraction is not None and not 0 < self.feature_fraction <= 1:
            raise ConfigError("feature_fraction must be in (0, 1]")
        if self.jobs < 0:
            raise ConfigError("jobs must be >= 0")
        return self

    @property
    def workers(self) -> int:
        return self.jobs or os.cpu_count() or 1

    def align_config(self) -> AlignConfig:
        return AlignConfig(gamma=self.gamma, prune_threshold=self.prune_threshold,
                           max_group_size=self.max_group_size)

    def forest_params(self) -> ForestParams:
        return ForestParams(self.num_trees, self.max_depth, self.min_leaf,
                            self.feature_fraction, self.seed)

    def load_resources(self) -> Resources:
        return Resources.load(**{k: getattr(self, k) for k in RESOURCE_KEYS})

    def set(self, key: str, raw: str):
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        kind = types[key]
        try:
            if key in RESOURCE_KEYS:
                value = raw or None
            elif kind == "bool":
                value = _bool(raw)
            elif kind == "int":
                value = int(raw)
            elif raw.strip().lower() in ("", "none") and "None" in kind:
                value = None
            else:
                value = float(raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
        setattr(self, key, value)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        cfg = cls()
        base = Path(path).resolve().parent
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (p.strip() for p in line.split("=", 1))
                if key in RESOURCE_KEYS and value and not os.path.isabs(value):
                    value = str(base / value)
                try:
                    cfg.set(key, value)
                except ConfigError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from None
        return cfg
