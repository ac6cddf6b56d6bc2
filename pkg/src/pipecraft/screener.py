"""Binary clean/noisy screening of samples.

The screener decides which samples get routed through model-backed teams and
how the sampler stratifies. The default is a deterministic rule set sharing
its thresholds with the cleaning filters; a remote classifier can be dropped
in behind the same interface and falls back to the rules on failure.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .clients import ScreenerClient
from .config import OperatorConfig
from .corpus import Dataset, Sample
from .textstats import (
    clean_text,
    ngram_repetition_ratio,
    special_char_ratio,
    token_count,
)
from .timing import NULL_TIMER, PhaseTimer

logger = logging.getLogger(__name__)

LABEL_CLEAN = 0
LABEL_NOISY = 1

REASON_MISSING_QUESTION = "missing-question"
REASON_MISSING_ANSWER = "missing-answer"
REASON_MARKUP = "markup"
REASON_SPECIAL_CHARS = "special-char-ratio"
REASON_TOKEN_COUNT = "token-count"
REASON_NGRAM = "ngram-repetition"
REASON_REMOTE_FALLBACK = "remote-fallback"


@dataclass(frozen=True)
class ScreenerVerdict:
    label: int
    reasons: tuple[str, ...] = ()

    @property
    def is_noisy(self) -> bool:
        return self.label == LABEL_NOISY


def heuristic_verdict(sample: Sample, cfg: OperatorConfig) -> ScreenerVerdict:
    """Noisy iff a field is missing, markup/noise is present, or any cleaning
    threshold is violated. Thresholds are measured on the noise-stripped text,
    matching what the cleaning filters would see."""
    reasons: list[str] = []
    if not sample.question:
        reasons.append(REASON_MISSING_QUESTION)
    if not sample.answer:
        reasons.append(REASON_MISSING_ANSWER)
    clean_q = clean_text(sample.question)
    clean_a = clean_text(sample.answer)
    if clean_q != sample.question or clean_a != sample.answer:
        reasons.append(REASON_MARKUP)
    stripped = clean_q + "\n" + clean_a
    lo, hi = cfg.special_char_range
    if not lo <= special_char_ratio(stripped) <= hi:
        reasons.append(REASON_SPECIAL_CHARS)
    tlo, thi = cfg.token_range
    if not tlo <= token_count(stripped) <= thi:
        reasons.append(REASON_TOKEN_COUNT)
    if ngram_repetition_ratio(stripped, cfg.ngram.n) > cfg.ngram.max_repetition_ratio:
        reasons.append(REASON_NGRAM)
    if reasons:
        return ScreenerVerdict(LABEL_NOISY, tuple(reasons))
    return ScreenerVerdict(LABEL_CLEAN)


class Screener:
    """Caching screener front-end.

    Verdicts are cached per (sample content, screener identity) because the
    same sample is screened by both the sampler and every clean/noisy routing
    pass; with a remote model behind the interface, re-screening would be the
    dominant cost.
    """

    def __init__(
        self,
        cfg: OperatorConfig | None = None,
        client: ScreenerClient | None = None,
        timer: PhaseTimer = NULL_TIMER,
    ) -> None:
        self.cfg = cfg or OperatorConfig()
        self.client = client
        self.timer = timer
        self._cache: dict[str, ScreenerVerdict] = {}
        self.classify_calls = 0

    @property
    def identity(self) -> str:
        if self.client is None:
            return f"heuristic:{self.cfg.digest()}"
        return f"remote:{getattr(self.client, 'endpoint', type(self.client).__name__)}"

    def classify(self, sample: Sample) -> ScreenerVerdict:
        key = sample.content_key()
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        with self.timer.phase("screening"):
            self.classify_calls += 1
            verdict = self._classify_uncached(sample)
        self._cache[key] = verdict
        return verdict

    def _classify_uncached(self, sample: Sample) -> ScreenerVerdict:
        if self.client is None:
            return heuristic_verdict(sample, self.cfg)
        try:
            label = self.client.classify(sample.question, sample.answer)
        except Exception as exc:  # noqa: BLE001 - remote failure falls back
            logger.warning("remote screener failed (%s); using heuristic fallback", exc)
            fallback = heuristic_verdict(sample, self.cfg)
            return ScreenerVerdict(
                fallback.label, fallback.reasons + (REASON_REMOTE_FALLBACK,)
            )
        return ScreenerVerdict(label)

    def partition(self, dataset: Dataset) -> tuple[Dataset, Dataset]:
        """Split into (clean, noisy), preserving order within each part."""
        clean: list[Sample] = []
        noisy: list[Sample] = []
        for sample in dataset:
            if self.classify(sample).is_noisy:
                noisy.append(sample)
            else:
                clean.append(sample)
        return Dataset.from_samples(clean), Dataset.from_samples(noisy)
