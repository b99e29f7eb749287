"""Declarative run configuration.

One YAML document drives a whole run: the model registry (aliases ->
endpoint + model id + credential env var + capability flags), the role
assignments (generator / searcher / test_model / judges), and every
tunable the pipeline exposes.  Config files never hold secrets - each
model names the environment variable its API key is read from.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import yaml

from .core import canonical_dumps, digest_text
from .errors import ConfigError

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ModelConfig:
    """One registered backend model."""

    alias: str
    model: str  # wire-format model id sent in requests
    endpoint: str = ""
    api_key_env: str = ""
    supports_search: bool = False
    supports_logprobs: bool = False

    def validate(self) -> None:
        if not self.alias:
            raise ConfigError("model alias must be non-empty")
        if not self.model:
            raise ConfigError(f"model {self.alias!r}: model id must be non-empty")


@dataclass(frozen=True)
class RolesConfig:
    generator: str
    searcher: str
    test_model: str
    judges: tuple[str, ...]

    def validate(self, models: Mapping[str, ModelConfig]) -> None:
        for role, alias in (
            ("generator", self.generator),
            ("searcher", self.searcher),
            ("test_model", self.test_model),
        ):
            if alias not in models:
                raise ConfigError(f"role {role!r} names unknown model {alias!r}")
        if not self.judges:
            raise ConfigError("judge panel must not be empty")
        if len(self.judges) % 2 == 0:
            raise ConfigError(
                f"judge panel size must be odd, got {len(self.judges)} "
                "(majority is ambiguous at ties)"
            )
        for alias in self.judges:
            if alias not in models:
                raise ConfigError(f"judge names unknown model {alias!r}")


@dataclass(frozen=True)
class PipelineConfig:
    models: Mapping[str, ModelConfig]
    roles: RolesConfig
    static_dataset: str
    static_format: str = "jsonl"
    sample_count: int = 10
    knowledge_points_per_item: int = 2
    epsilon: float = 0.05
    max_iterations: int = 8
    target_precision: Optional[float] = None  # overrides the measured baseline
    bloom_mode: bool = True
    seed: int = 0
    retries: int = 3
    max_regen: int = 3
    similarity_threshold: float = 0.85
    max_explanation_chars: int = 1600
    generation_temperature: Optional[float] = None
    max_workers: int = 4
    cache_dir: Optional[str] = None

    def validate(self) -> None:
        for m in self.models.values():
            m.validate()
        model_ids = [m.model for m in self.models.values()]
        if len(set(model_ids)) != len(model_ids):
            raise ConfigError(
                "model ids must be unique across aliases (requests are "
                "routed by model id)"
            )
        self.roles.validate(self.models)
        if not self.static_dataset:
            raise ConfigError("static_dataset path must be set")
        if self.static_format not in ("jsonl", "json"):
            raise ConfigError(f"unknown static_format {self.static_format!r}")
        if self.sample_count < 1:
            raise ConfigError("sample_count must be >= 1")
        if self.knowledge_points_per_item < 1:
            raise ConfigError("knowledge_points_per_item must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if self.target_precision is not None and not 0.0 <= self.target_precision <= 1.0:
            raise ConfigError("target_precision must lie in [0, 1]")
        if self.retries < 0 or self.max_regen < 0:
            raise ConfigError("retry counts must be >= 0")
        if not 0.0 < self.similarity_threshold <= 1.0:
            raise ConfigError("similarity_threshold must lie in (0, 1]")
        if self.max_explanation_chars < 1:
            raise ConfigError("max_explanation_chars must be >= 1")
        if self.generation_temperature is not None and self.generation_temperature < 0:
            raise ConfigError("generation_temperature must be >= 0")
        if self.max_workers < 1:
            raise ConfigError("max_workers must be >= 1")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")

    def model_for_role(self, alias: str) -> ModelConfig:
        return self.models[alias]

    def snapshot(self) -> dict:
        """JSON-ready view embedded in manifests; deterministic key order."""
        return {
            "models": {
                alias: {
                    "model": m.model,
                    "endpoint": m.endpoint,
                    "api_key_env": m.api_key_env,
                    "supports_search": m.supports_search,
                    "supports_logprobs": m.supports_logprobs,
                }
                for alias, m in sorted(self.models.items())
            },
            "roles": {
                "generator": self.roles.generator,
                "searcher": self.roles.searcher,
                "test_model": self.roles.test_model,
                "judges": list(self.roles.judges),
            },
            "static_dataset": self.static_dataset,
            "static_format": self.static_format,
            "sample_count": self.sample_count,
            "knowledge_points_per_item": self.knowledge_points_per_item,
            "epsilon": self.epsilon,
            "max_iterations": self.max_iterations,
            "target_precision": self.target_precision,
            "bloom_mode": self.bloom_mode,
            "seed": self.seed,
            "retries": self.retries,
            "max_regen": self.max_regen,
            "similarity_threshold": self.similarity_threshold,
            "max_explanation_chars": self.max_explanation_chars,
            "generation_temperature": self.generation_temperature,
            "max_workers": self.max_workers,
        }

    def digest(self) -> str:
        return digest_text(canonical_dumps(self.snapshot()))

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed)


def _expect(mapping: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return mapping[key]


def parse_config(doc: Mapping[str, Any]) -> PipelineConfig:
    if not isinstance(doc, Mapping):
        raise ConfigError("config document must be a mapping")

    raw_models = _expect(doc, "models", "config")
    if not isinstance(raw_models, Mapping) or not raw_models:
        raise ConfigError("models must be a non-empty mapping")
    models = {}
    for alias, body in raw_models.items():
        if not isinstance(body, Mapping):
            raise ConfigError(f"model {alias!r}: body must be a mapping")
        models[str(alias)] = ModelConfig(
            alias=str(alias),
            model=str(_expect(body, "model", f"model {alias!r}")),
            endpoint=str(body.get("endpoint", "")),
            api_key_env=str(body.get("api_key_env", "")),
            supports_search=bool(body.get("supports_search", False)),
            supports_logprobs=bool(body.get("supports_logprobs", False)),
        )

    raw_roles = _expect(doc, "roles", "config")
    if not isinstance(raw_roles, Mapping):
        raise ConfigError("roles must be a mapping")
    judges = _expect(raw_roles, "judges", "roles")
    if not isinstance(judges, (list, tuple)):
        raise ConfigError("roles.judges must be a list")
    roles = RolesConfig(
        generator=str(_expect(raw_roles, "generator", "roles")),
        searcher=str(_expect(raw_roles, "searcher", "roles")),
        test_model=str(_expect(raw_roles, "test_model", "roles")),
        judges=tuple(str(j) for j in judges),
    )

    defaults = PipelineConfig.__dataclass_fields__

    def opt(key: str, cast):
        if key not in doc or doc[key] is None:
            return defaults[key].default
        try:
            return cast(doc[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc

    config = PipelineConfig(
        models=models,
        roles=roles,
        static_dataset=str(_expect(doc, "static_dataset", "config")),
        static_format=opt("static_format", str),
        sample_count=opt("sample_count", int),
        knowledge_points_per_item=opt("knowledge_points_per_item", int),
        epsilon=opt("epsilon", float),
        max_iterations=opt("max_iterations", int),
        target_precision=(
            None
            if doc.get("target_precision") is None
            else float(doc["target_precision"])
        ),
        bloom_mode=opt("bloom_mode", bool),
        seed=opt("seed", int),
        retries=opt("retries", int),
        max_regen=opt("max_regen", int),
        similarity_threshold=opt("similarity_threshold", float),
        max_explanation_chars=opt("max_explanation_chars", int),
        generation_temperature=(
            None
            if doc.get("generation_temperature") is None
            else float(doc["generation_temperature"])
        ),
        max_workers=opt("max_workers", int),
        cache_dir=(None if doc.get("cache_dir") is None else str(doc["cache_dir"])),
    )
    config.validate()
    return config


def load_config(path: PathLike) -> PipelineConfig:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if doc is None:
        raise ConfigError(f"config {path} is empty")
    return parse_config(doc)
