"""Run configuration shared by the command-line pipeline."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .errors import ConfigError

_PATH_FIELDS = (
    "facts_dir",
    "predictions",
    "embeddings_dir",
    "token_profiles",
    "labeled_dir",
)


@dataclass(frozen=True)
class RunConfig:
    facts_dir: str | None = None
    output_dir: str | None = None
    corpus_shards: str | None = None
    predictions: str | None = None
    embeddings_dir: str | None = None
    token_profiles: str | None = None
    labeled_dir: str | None = None
    ref_lang: str = "eng_Latn"
    steps: tuple[int, ...] = ()
    seed: int = 0
    bootstrap_runs: int = 5000
    bootstrap_fraction: float = 0.9
    bins: int = 20
    dominance: float = 0.9
    top_tokens: int = 4
    exclude_identical: bool = False
    on_missing: str = "error"
    jobs: int = 1

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        if "steps" in raw:
            raw["steps"] = tuple(int(s) for s in raw["steps"])
        return cls(**raw)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply non-None overrides; command-line flags win over the file."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        if "steps" in updates:
            updates["steps"] = tuple(int(s) for s in updates["steps"])
        return replace(self, **updates)

    def validate(self, required: tuple[str, ...] = ()) -> None:
        for name in required:
            if getattr(self, name) in (None, (), ""):
                raise ConfigError(f"missing required config field {name!r}")
        for name in _PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{name} path does not exist: {value}")
        if self.steps and list(self.steps) != sorted(set(self.steps)):
            raise ConfigError(f"steps must be strictly increasing, got {list(self.steps)}")
        if self.on_missing not in ("error", "incorrect"):
            raise ConfigError(f"on_missing must be 'error' or 'incorrect', got {self.on_missing!r}")
        if not 0 < self.bootstrap_fraction <= 1:
            raise ConfigError(f"bootstrap_fraction must be in (0, 1], got {self.bootstrap_fraction}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["steps"] = list(self.steps)
        return out
