from __future__ import annotations

import random

import pytest

from pipecraft.config import OperatorConfig
from pipecraft.corpus import Dataset, Sample


@pytest.fixture
def cfg() -> OperatorConfig:
    return OperatorConfig()


def make_words(rng: random.Random, n: int) -> str:
    bank = (
        "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo "
        "lima mike november oscar papa quebec romeo sierra tango uniform "
        "victor whiskey xray yankee zulu"
    ).split()
    return " ".join(rng.choice(bank) for _ in range(n))


def clean_sample(sample_id: str, rng: random.Random, q_words: int = 20, a_words: int = 25) -> Sample:
    return Sample(
        id=sample_id,
        question=make_words(rng, q_words) + f" q{sample_id}",
        answer=make_words(rng, a_words) + f" a{sample_id}",
    )


def clean_corpus(n: int, seed: int = 0) -> Dataset:
    rng = random.Random(seed)
    return Dataset.from_samples(clean_sample(f"s{i:03d}", rng) for i in range(n))
