"""Configuration objects: operator thresholds, evaluation settings, run settings."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

ENV_AGENT_ENDPOINT = "PIPECRAFT_AGENT_ENDPOINT"
ENV_EMBEDDER_ENDPOINT = "PIPECRAFT_EMBEDDER_ENDPOINT"
ENV_SCREENER_ENDPOINT = "PIPECRAFT_SCREENER_ENDPOINT"
ENV_TRAINER_ENDPOINT = "PIPECRAFT_TRAINER_ENDPOINT"
ENV_CACHE_ROOT = "PIPECRAFT_CACHE_ROOT"


class ConfigError(ValueError):
    """Invalid or missing configuration."""


@dataclass(frozen=True)
class MinhashConfig:
    shingle_size: int = 5
    num_permutations: int = 128
    bands: int = 16
    rows_per_band: int = 8
    jaccard_threshold: float = 0.8

    def __post_init__(self) -> None:
        if self.bands * self.rows_per_band != self.num_permutations:
            raise ConfigError("bands * rows_per_band must equal num_permutations")
        if not 0.0 <= self.jaccard_threshold <= 1.0:
            raise ConfigError("jaccard_threshold must be in [0, 1]")
        if self.shingle_size < 1:
            raise ConfigError("shingle_size must be >= 1")


@dataclass(frozen=True)
class NgramConfig:
    n: int = 5
    max_repetition_ratio: float = 0.3

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError("ngram n must be >= 1")
        if not 0.0 <= self.max_repetition_ratio <= 1.0:
            raise ConfigError("max_repetition_ratio must be in [0, 1]")


@dataclass(frozen=True)
class OperatorConfig:
    """Thresholds for the cleaning filters and the selection keep fraction."""

    minhash: MinhashConfig = field(default_factory=MinhashConfig)
    special_char_range: tuple[float, float] = (0.0, 0.25)
    token_range: tuple[int, int] = (10, 4096)
    ngram: NgramConfig = field(default_factory=NgramConfig)
    selection_keep_fraction: float = 0.5

    def __post_init__(self) -> None:
        lo, hi = self.special_char_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ConfigError("special_char_range must satisfy 0 <= lo <= hi <= 1")
        tlo, thi = self.token_range
        if tlo < 0 or tlo > thi:
            raise ConfigError("token_range must satisfy 0 <= lo <= hi")
        if not 0.0 < self.selection_keep_fraction <= 1.0:
            raise ConfigError("selection_keep_fraction must be in (0, 1]")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class TrainerConfig:
    base_model: str = ""
    epochs: int = 3
    validation_set: str = ""

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")


DEFAULT_PROXY_WEIGHTS = (0.4, 0.3, 0.2, 0.1)


@dataclass(frozen=True)
class EvalConfig:
    """mode "proxy" scores datasets directly; "trainer" delegates to a trainer client."""

    mode: str = "proxy"
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    proxy_weights: tuple[float, float, float, float] = DEFAULT_PROXY_WEIGHTS

    def __post_init__(self) -> None:
        if self.mode not in ("proxy", "trainer"):
            raise ConfigError(f"unknown eval mode {self.mode!r}")
        if len(self.proxy_weights) != 4 or any(w < 0 for w in self.proxy_weights):
            raise ConfigError("proxy_weights must be four non-negative numbers")
        if abs(sum(self.proxy_weights) - 1.0) > 1e-9:
            raise ConfigError("proxy_weights must sum to 1")


@dataclass(frozen=True)
class Endpoints:
    agent: str | None = None
    embedder: str | None = None
    screener: str | None = None
    trainer: str | None = None


@dataclass(frozen=True)
class RunConfig:
    dataset: str = ""
    sampling_rate: float = 0.20
    initial_group_size: int = 4
    max_group_size: int = 6
    max_rounds: int = 5
    temperature: float = 0.6
    seed: int = 0
    operators: OperatorConfig = field(default_factory=OperatorConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    endpoints: Endpoints = field(default_factory=Endpoints)
    cache_root: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.sampling_rate <= 1.0:
            raise ConfigError("sampling_rate must be in (0, 1]")
        if self.initial_group_size < 1:
            raise ConfigError("initial_group_size must be >= 1")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")


def _tuple2(value, caster):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"expected a two-element range, got {value!r}")
    return (caster(value[0]), caster(value[1]))


def _operator_config(raw: dict) -> OperatorConfig:
    kwargs = {}
    if "minhash" in raw:
        kwargs["minhash"] = MinhashConfig(**raw["minhash"])
    if "special_char_range" in raw:
        kwargs["special_char_range"] = _tuple2(raw["special_char_range"], float)
    if "token_range" in raw:
        kwargs["token_range"] = _tuple2(raw["token_range"], int)
    if "ngram" in raw:
        kwargs["ngram"] = NgramConfig(**raw["ngram"])
    if "selection_keep_fraction" in raw:
        kwargs["selection_keep_fraction"] = float(raw["selection_keep_fraction"])
    return OperatorConfig(**kwargs)


def _eval_config(raw: dict) -> EvalConfig:
    kwargs = {}
    if "mode" in raw:
        kwargs["mode"] = raw["mode"]
    if "trainer" in raw:
        kwargs["trainer"] = TrainerConfig(**raw["trainer"])
    if "proxy_weights" in raw:
        weights = raw["proxy_weights"]
        if not isinstance(weights, (list, tuple)) or len(weights) != 4:
            raise ConfigError("proxy_weights must be a four-element list")
        kwargs["proxy_weights"] = tuple(float(w) for w in weights)
    return EvalConfig(**kwargs)


def load_run_config(path: str | Path) -> RunConfig:
    """Read a JSON run config; endpoint and cache-root env vars take precedence."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a JSON object")

    endpoints_raw = raw.get("endpoints", {}) or {}
    endpoints = Endpoints(
        agent=os.environ.get(ENV_AGENT_ENDPOINT, endpoints_raw.get("agent")),
        embedder=os.environ.get(ENV_EMBEDDER_ENDPOINT, endpoints_raw.get("embedder")),
        screener=os.environ.get(ENV_SCREENER_ENDPOINT, endpoints_raw.get("screener")),
        trainer=os.environ.get(ENV_TRAINER_ENDPOINT, endpoints_raw.get("trainer")),
    )
    try:
        return RunConfig(
            dataset=raw.get("dataset", ""),
            sampling_rate=float(raw.get("sampling_rate", 0.20)),
            initial_group_size=int(raw.get("initial_group_size", 4)),
            max_group_size=int(raw.get("max_group_size", 6)),
            max_rounds=int(raw.get("max_rounds", 5)),
            temperature=float(raw.get("temperature", 0.6)),
            seed=int(raw.get("seed", 0)),
            operators=_operator_config(raw.get("operators", {}) or {}),
            evaluation=_eval_config(raw.get("evaluation", {}) or {}),
            endpoints=endpoints,
            cache_root=os.environ.get(ENV_CACHE_ROOT, raw.get("cache_root")),
        )
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc


def run_config_snapshot(cfg: RunConfig) -> dict:
    """JSON-serializable snapshot written into the run artifacts directory."""
    return asdict(cfg)
