"""The four processing teams and their operators.

Cleaning operators are native and deterministic: MinHash/LSH near-duplicate
removal, noise stripping, and threshold filters on special-character ratio,
token count, and word n-gram repetition. Optimization, Generation, and
Selection are model-backed and run behind :class:`~pipecraft.clients.ModelClient`;
they fail open (pass the sample through with a flag) so one bad call cannot
abort a long search.

Optimization and Generation route only screener-noisy samples through the
model; screener-clean samples pass through byte-identical.
"""
from __future__ import annotations

import hashlib
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .clients import ClientError, ModelClient
from .config import MinhashConfig, OperatorConfig
from .corpus import Dataset, Sample
from .strategy import Strategy, Team
from .textstats import (
    clean_text,
    ngram_repetition_ratio,
    special_char_ratio,
    token_count,
)
from .timing import NULL_TIMER, PhaseTimer

if TYPE_CHECKING:
    from .clients import AgentClient, EmbeddingClient, TrainerClient
    from .screener import Screener

logger = logging.getLogger(__name__)

META_OPTIMIZED = "optimized"
META_OPTIMIZE_ERROR = "optimize_error"
META_GENERATED = "generated"
META_GENERATE_ERROR = "generate_error"

GENERATION_SHOT_COUNT = 3

# ---------------------------------------------------------------------------
# MinHash / LSH near-duplicate removal
# ---------------------------------------------------------------------------

_PERMUTATION_SEED = 0x5EED_CAFE
_EMPTY_SENTINEL = np.uint64(0xFFFF_FFFF_FFFF_FFFF)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)


def sample_shingle_text(sample: Sample) -> str:
    """Normalized view used for duplicate detection: noise-stripped fields.

    Shingling the stripped text keeps dedup decisions stable across repeated
    cleaning passes and matches markup variants of the same content.
    """
    return clean_text(sample.question) + "\n" + clean_text(sample.answer)


def shingle_set(text: str, shingle_size: int) -> frozenset[str]:
    """Character shingles; texts shorter than the shingle size yield the whole
    text as a single shingle (empty text yields no shingles)."""
    if not text:
        return frozenset()
    if len(text) < shingle_size:
        return frozenset((text,))
    return frozenset(text[i : i + shingle_size] for i in range(len(text) - shingle_size + 1))


def _shingle_hashes(shingles: frozenset[str]) -> np.ndarray:
    values = [
        int.from_bytes(hashlib.blake2b(s.encode("utf-8"), digest_size=8).digest(), "big")
        for s in shingles
    ]
    return np.asarray(values, dtype=np.uint64)


@lru_cache(maxsize=8)
def _permutation_seeds(num: int) -> np.ndarray:
    rng = np.random.default_rng(_PERMUTATION_SEED)
    return rng.integers(0, 1 << 64, size=num, dtype=np.uint64)


def _mix64(values: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps mod 2**64 by design
    values = (values ^ (values >> np.uint64(30))) * _MIX_1
    values = (values ^ (values >> np.uint64(27))) * _MIX_2
    return values ^ (values >> np.uint64(31))


def minhash_signature(shingles: frozenset[str], cfg: MinhashConfig) -> np.ndarray:
    """MinHash signature: per permutation, the minimum of a seeded 64-bit mix
    of the shingle hashes. The empty shingle set gets a sentinel signature so
    two empty texts still hash identically."""
    if not shingles:
        return np.full(cfg.num_permutations, _EMPTY_SENTINEL, dtype=np.uint64)
    hashes = _shingle_hashes(shingles)
    seeds = _permutation_seeds(cfg.num_permutations)
    mixed = _mix64(hashes[:, None] ^ seeds[None, :])
    return mixed.min(axis=0)


def estimated_jaccard(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
    return float(np.mean(sig_a == sig_b))


def duplicate_pairs(dataset: Dataset, cfg: OperatorConfig) -> set[tuple[int, int]]:
    """Index pairs (i < j) judged near-duplicates: LSH band collision followed
    by a signature-estimated Jaccard check against the threshold."""
    mcfg = cfg.minhash
    signatures = [
        minhash_signature(shingle_set(sample_shingle_text(s), mcfg.shingle_size), mcfg)
        for s in dataset
    ]
    buckets: dict[tuple[int, bytes], list[int]] = defaultdict(list)
    for idx, sig in enumerate(signatures):
        for band in range(mcfg.bands):
            chunk = sig[band * mcfg.rows_per_band : (band + 1) * mcfg.rows_per_band]
            buckets[(band, chunk.tobytes())].append(idx)
    candidates: set[tuple[int, int]] = set()
    for members in buckets.values():
        if len(members) < 2:
            continue
        for pos, i in enumerate(members):
            for j in members[pos + 1 :]:
                candidates.add((min(i, j), max(i, j)))
    return {
        (i, j)
        for i, j in candidates
        if estimated_jaccard(signatures[i], signatures[j]) >= mcfg.jaccard_threshold
    }


class _UnionFind:
    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # keep the smaller index as representative
            if rx > ry:
                rx, ry = ry, rx
            self.parent[ry] = rx


def minhash_dedup(dataset: Dataset, cfg: OperatorConfig) -> Dataset:
    """Remove near-duplicates, keeping the earliest sample of each cluster;
    output order follows input order."""
    if len(dataset) < 2:
        return dataset
    uf = _UnionFind(len(dataset))
    for i, j in duplicate_pairs(dataset, cfg):
        uf.union(i, j)
    kept = [s for idx, s in enumerate(dataset) if uf.find(idx) == idx]
    return Dataset.from_samples(kept)


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------


def strip_noise(sample: Sample) -> Sample:
    """Remove markup, entity escapes, control characters; collapse whitespace.
    Only question/answer change; id and meta are untouched."""
    question = clean_text(sample.question)
    answer = clean_text(sample.answer)
    if question == sample.question and answer == sample.answer:
        return sample
    return sample.with_fields(question=question, answer=answer)


def filter_violations(text: str, cfg: OperatorConfig) -> list[str]:
    """Threshold-filter violations for one combined text, as reason ids."""
    reasons = []
    lo, hi = cfg.special_char_range
    if not lo <= special_char_ratio(text) <= hi:
        reasons.append("special-char-ratio")
    tlo, thi = cfg.token_range
    if not tlo <= token_count(text) <= thi:
        reasons.append("token-count")
    if ngram_repetition_ratio(text, cfg.ngram.n) > cfg.ngram.max_repetition_ratio:
        reasons.append("ngram-repetition")
    return reasons


def passes_filters(text: str, cfg: OperatorConfig) -> bool:
    return not filter_violations(text, cfg)


def apply_cleaning(dataset: Dataset, cfg: OperatorConfig) -> Dataset:
    """Dedup, then strip noise, then drop threshold violators. Order-preserving
    and idempotent."""
    deduped = minhash_dedup(dataset, cfg)
    stripped = [strip_noise(s) for s in deduped]
    kept = [s for s in stripped if passes_filters(s.combined_text, cfg)]
    return Dataset.from_samples(kept)


# ---------------------------------------------------------------------------
# Model-backed operators
# ---------------------------------------------------------------------------


def optimize_sample(sample: Sample, mode: str, client: ModelClient) -> Sample:
    """Replace the targeted non-empty field(s) with the optimizer's output.
    Client failure passes the sample through with an error flag."""
    if mode not in ("question", "answer", "both"):
        raise ValueError(f"unknown optimize mode {mode!r}")
    fields = ("question", "answer") if mode == "both" else (mode,)
    updates: dict[str, str] = {}
    for field_name in fields:
        text = getattr(sample, field_name)
        if not text:
            raise ValueError(f"cannot optimize empty field {field_name!r} of {sample.id!r}")
        try:
            response = client.complete(
                {"role": "optimizer", "mode": field_name, "text": text, "seed": 0}
            )
        except ClientError as exc:
            logger.warning("optimizer failed on %s: %s", sample.id, exc)
            return sample.with_fields(meta_updates={META_OPTIMIZE_ERROR: str(exc)})
        updates[field_name] = response["text"]
    return sample.with_fields(
        question=updates.get("question"),
        answer=updates.get("answer"),
        meta_updates={META_OPTIMIZED: mode},
    )


def _shots_payload(shots: Sequence[Sample]) -> list[dict[str, str]]:
    return [{"question": s.question, "answer": s.answer} for s in shots]


def generate_missing(sample: Sample, shots: Sequence[Sample], client: ModelClient) -> Sample:
    """Fill exactly the empty field(s). With both fields empty the question is
    generated first and the answer is conditioned on it. Samples with nothing
    missing are returned unchanged without any client call."""
    missing = [name for name in ("question", "answer") if not getattr(sample, name)]
    if not missing:
        return sample
    if not shots:
        logger.warning("no shots available to generate fields of %s", sample.id)
        return sample.with_fields(meta_updates={META_GENERATE_ERROR: "no-shots"})
    question, answer = sample.question, sample.answer
    for field_name in missing:  # question first, answer conditioned on it
        try:
            response = client.complete(
                {
                    "role": "generator",
                    "mode": field_name,
                    "question": question,
                    "answer": answer,
                    "shots": _shots_payload(shots),
                    "seed": 0,
                }
            )
        except ClientError as exc:
            logger.warning("generator failed on %s: %s", sample.id, exc)
            return sample.with_fields(meta_updates={META_GENERATE_ERROR: str(exc)})
        if field_name == "question":
            question = response["text"]
        else:
            answer = response["text"]
    return sample.with_fields(
        question=question, answer=answer, meta_updates={META_GENERATED: ",".join(missing)}
    )


def select_high_quality(
    dataset: Dataset, scorer: ModelClient, keep_fraction: float
) -> Dataset:
    """Keep the top ``ceil(keep_fraction * n)`` samples by score; ties break to
    the earlier position, output keeps the original relative order. A scorer
    failure scores that sample -inf."""
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must be in (0, 1]")
    if len(dataset) == 0:
        return dataset
    scores: list[float] = []
    for sample in dataset:
        try:
            response = scorer.complete(
                {
                    "role": "scorer",
                    "mode": "score",
                    "question": sample.question,
                    "answer": sample.answer,
                    "seed": 0,
                }
            )
            scores.append(float(response["score"]))
        except ClientError as exc:
            logger.warning("scorer failed on %s: %s", sample.id, exc)
            scores.append(float("-inf"))
    keep = math.ceil(keep_fraction * len(dataset))
    ranked = sorted(range(len(dataset)), key=lambda i: (-scores[i], i))
    chosen = sorted(ranked[:keep])
    return Dataset.from_samples(dataset[i] for i in chosen)


# ---------------------------------------------------------------------------
# Team-level application
# ---------------------------------------------------------------------------


@dataclass
class ExecutionContext:
    """Everything a team application needs: thresholds, clients, the screener,
    and per-run counters. Evaluation-side handles (cache, run log, trainer)
    ride along so one context drives a whole search."""

    cfg: OperatorConfig
    screener: "Screener"
    optimizer: ModelClient
    generator: ModelClient
    scorer: ModelClient
    embedder: "EmbeddingClient | None" = None
    agent: "AgentClient | None" = None
    trainer: "TrainerClient | None" = None
    cache: object | None = None
    run_log: object | None = None
    timer: PhaseTimer = NULL_TIMER
    seed: int = 0
    team_invocations: dict[Team, int] = field(default_factory=dict)

    @classmethod
    def with_defaults(
        cls,
        cfg: OperatorConfig | None = None,
        seed: int = 0,
        timer: PhaseTimer = NULL_TIMER,
        **overrides,
    ) -> "ExecutionContext":
        from .clients import HashingEmbedder, HeuristicScorer, NormalizingOptimizer, TemplateGenerator
        from .screener import Screener

        cfg = cfg or OperatorConfig()
        kwargs = dict(
            cfg=cfg,
            screener=Screener(cfg, timer=timer),
            optimizer=NormalizingOptimizer(),
            generator=TemplateGenerator(),
            scorer=HeuristicScorer(cfg),
            embedder=HashingEmbedder(),
            timer=timer,
            seed=seed,
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def count_invocation(self, team: Team) -> None:
        self.team_invocations[team] = self.team_invocations.get(team, 0) + 1

    def total_invocations(self) -> int:
        return sum(self.team_invocations.values())


def _optimize_mode(sample: Sample) -> str | None:
    has_q, has_a = bool(sample.question), bool(sample.answer)
    if has_q and has_a:
        return "both"
    if has_q:
        return "question"
    if has_a:
        return "answer"
    return None


def _generation_shots(clean: Dataset, full: Dataset) -> list[Sample]:
    shots = [s for s in clean if s.question and s.answer][:GENERATION_SHOT_COUNT]
    if not shots:
        shots = [s for s in full if s.question and s.answer][:GENERATION_SHOT_COUNT]
    return shots


def apply_team(team: Team, dataset: Dataset, ctx: ExecutionContext) -> Dataset:
    """Apply one team. Cleaning and Selection act on the whole dataset;
    Optimization and Generation act only on the screener-noisy partition and
    pass screener-clean samples through byte-identical."""
    ctx.count_invocation(team)
    if team is Team.CLEANING:
        return apply_cleaning(dataset, ctx.cfg)
    if team is Team.SELECTION:
        return select_high_quality(dataset, ctx.scorer, ctx.cfg.selection_keep_fraction)

    processed: list[Sample] = []
    if team is Team.OPTIMIZATION:
        for sample in dataset:
            if ctx.screener.classify(sample).is_noisy:
                mode = _optimize_mode(sample)
                sample = optimize_sample(sample, mode, ctx.optimizer) if mode else sample
            processed.append(sample)
        return Dataset.from_samples(processed)

    if team is Team.GENERATION:
        clean, _ = ctx.screener.partition(dataset)
        shots = _generation_shots(clean, dataset)
        for sample in dataset:
            if ctx.screener.classify(sample).is_noisy:
                sample = generate_missing(sample, shots, ctx.generator)
            processed.append(sample)
        return Dataset.from_samples(processed)

    raise ValueError(f"unknown team {team!r}")


def apply_strategy(strategy: Strategy, dataset: Dataset, ctx: ExecutionContext) -> Dataset:
    """Apply a full strategy left to right, without any caching."""
    current = dataset
    for team in strategy.teams:
        current = apply_team(team, current, ctx)
    return current
