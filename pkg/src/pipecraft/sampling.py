"""Representative sub-sampling via greedy embedding similarity.

The sampler shrinks a corpus while preserving its structure: samples are
picked one at a time, each time taking the one whose embedding has the
highest summed cosine similarity to everything not yet selected. Selection
runs separately on the screener-clean and screener-noisy strata so the
sample keeps the corpus's noisy fraction.
"""
from __future__ import annotations

import math

import numpy as np

from .clients import EmbeddingClient
from .corpus import Dataset
from .screener import Screener
from .timing import NULL_TIMER, PhaseTimer


class EmbeddingError(RuntimeError):
    """Embedding failed or produced a degenerate vector; sampling aborts
    rather than proceed with a biased similarity landscape."""


def embed_all(dataset: Dataset, client: EmbeddingClient) -> np.ndarray:
    """One vector per sample, aligned by index. Zero-norm vectors are rejected
    because cosine similarity is undefined for them."""
    texts = [sample.combined_text for sample in dataset]
    try:
        vectors = client.embed_many(texts)
    except Exception as exc:
        raise EmbeddingError(f"embedding client failed: {exc}") from exc
    vectors = np.asarray(vectors, dtype=np.float64)
    if len(dataset) == 0:
        return vectors.reshape(0, getattr(client, "dimension", 0) or 0)
    if vectors.ndim != 2 or vectors.shape[0] != len(dataset):
        raise EmbeddingError(f"embedding shape {vectors.shape} misaligned with dataset")
    if not np.all(np.isfinite(vectors)):
        raise EmbeddingError("embedding produced non-finite values")
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmax(norms == 0.0))
        raise EmbeddingError(f"zero-norm embedding for sample {dataset[bad].id!r}")
    return vectors


def greedy_select(vectors: np.ndarray | list, n: int) -> list[int]:
    """Pick ``n`` indices greedily: at each step take the not-yet-selected
    index whose summed cosine similarity to the other not-yet-selected
    vectors is largest, ties to the lowest index.

    The candidate's own self-similarity is excluded from the sum; running
    sums are maintained incrementally instead of recomputed each step.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim == 1:
        vectors = vectors.reshape(len(vectors), 1) if len(vectors) else vectors.reshape(0, 0)
    count = vectors.shape[0]
    if not 0 <= n <= count:
        raise ValueError(f"cannot select {n} of {count} vectors")
    if n == 0:
        return []
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        raise EmbeddingError("zero-norm vector in greedy selection")
    unit = vectors / norms[:, None]

    remaining = list(range(count))
    pool_sum = unit.sum(axis=0)
    selected: list[int] = []
    for _ in range(n):
        candidates = unit[remaining]
        # Sum of cosines against the unselected pool, minus the self term.
        scores = candidates @ pool_sum - np.einsum("ij,ij->i", candidates, candidates)
        # Structural ties (e.g. duplicate vectors, or the two-candidate
        # endgame) must break to the lowest index even under float noise.
        best_pos = int(np.argmax(scores >= scores.max() - 1e-9))
        best_idx = remaining[best_pos]
        selected.append(best_idx)
        pool_sum -= unit[best_idx]
        remaining.pop(best_pos)
    return selected


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratum_counts(n_clean: int, n_noisy: int, rate: float) -> tuple[int, int]:
    """Per-stratum draw counts: round-half-up per stratum; if the pair misses
    the global target by one, the larger stratum absorbs the difference."""
    total_target = _round_half_up(rate * (n_clean + n_noisy))
    take_clean = min(n_clean, _round_half_up(rate * n_clean))
    take_noisy = min(n_noisy, _round_half_up(rate * n_noisy))
    diff = total_target - (take_clean + take_noisy)
    if diff != 0:
        clean_is_larger = n_clean >= n_noisy
        for _ in range(abs(diff)):
            step = 1 if diff > 0 else -1
            if clean_is_larger:
                adjusted = take_clean + step
                if 0 <= adjusted <= n_clean:
                    take_clean = adjusted
                else:
                    take_noisy = min(max(take_noisy + step, 0), n_noisy)
            else:
                adjusted = take_noisy + step
                if 0 <= adjusted <= n_noisy:
                    take_noisy = adjusted
                else:
                    take_clean = min(max(take_clean + step, 0), n_clean)
    return take_clean, take_noisy


def stratified_sample(
    dataset: Dataset,
    rate: float,
    screener: Screener,
    embed_client: EmbeddingClient,
    timer: PhaseTimer = NULL_TIMER,
) -> Dataset:
    """Greedy-select ``rate`` of each screener stratum independently and merge
    in original dataset order, so the sample mirrors the corpus's noisy
    fraction to within rounding granularity."""
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must be in (0, 1]")
    with timer.phase("sampling"):
        if rate == 1.0 or len(dataset) == 0:
            return dataset
        noisy_flags = [screener.classify(sample).is_noisy for sample in dataset]
        clean_indices = [i for i, flag in enumerate(noisy_flags) if not flag]
        noisy_indices = [i for i, flag in enumerate(noisy_flags) if flag]
        take_clean, take_noisy = stratum_counts(
            len(clean_indices), len(noisy_indices), rate
        )
        vectors = embed_all(dataset, embed_client)
        chosen: list[int] = []
        for indices, take in ((clean_indices, take_clean), (noisy_indices, take_noisy)):
            if not indices or take == 0:
                continue
            local = greedy_select(vectors[indices], take)
            chosen.extend(indices[pos] for pos in local)
        chosen.sort()
        return Dataset.from_samples(dataset[i] for i in chosen)
