"""Client interfaces for model-backed operators and external services.

Every external dependency (optimizer/generator/scorer models, the embedding
model, the remote quality screener, the fine-tune-and-validate trainer, and
the strategy agent) sits behind a small client interface. Each interface has
a deterministic default implementation so the whole engine runs without any
endpoint configured, plus an HTTP implementation speaking the documented
JSON wire contract.
"""
from __future__ import annotations

import hashlib
import json
import urllib.request
from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np

from .config import OperatorConfig
from .textstats import (
    clean_text,
    is_allowed_char,
    length_adequacy,
    ngram_repetition_ratio,
    special_char_ratio,
    token_count,
)

DEFAULT_TIMEOUT_S = 60.0


class ClientError(RuntimeError):
    """A client call failed after exhausting retries."""


def post_json(endpoint: str, payload: dict, timeout: float = DEFAULT_TIMEOUT_S) -> dict:
    """POST a JSON payload and decode the JSON response."""
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        endpoint, data=body, headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return json.loads(response.read().decode("utf-8"))


class ModelClient(ABC):
    """Text-model client for operator roles: optimizer, generator, scorer.

    Request: {"role", "mode", sample fields..., "seed"}.
    Response: {"text": str | "score": float, "status": "ok"}.
    """

    role: str = ""
    max_retries: int = 2

    def __init__(self) -> None:
        self.calls = 0

    def complete(self, request: dict) -> dict:
        self.calls += 1
        last_error: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                response = self._do_complete(request)
            except Exception as exc:  # noqa: BLE001 - retries wrap any failure
                last_error = exc
                continue
            if response.get("status") == "ok":
                return response
            last_error = ClientError(f"client returned status {response.get('status')!r}")
        raise ClientError(f"{self.role} client failed: {last_error}")

    @abstractmethod
    def _do_complete(self, request: dict) -> dict:
        ...


def normalize_text(text: str) -> str:
    """Deterministic text improvement: strip noise, drop disallowed special
    characters, collapse whitespace."""
    cleaned = clean_text(text)
    kept = [ch for ch in cleaned if is_allowed_char(ch)]
    return clean_text("".join(kept))


class NormalizingOptimizer(ModelClient):
    """Default optimizer: rewrites a field to its normalized form."""

    role = "optimizer"

    def _do_complete(self, request: dict) -> dict:
        return {"text": normalize_text(request["text"]), "status": "ok"}


class TemplateGenerator(ModelClient):
    """Default generator: fills a missing field from a snippet of the present
    one plus the shot count. Quoting only a snippet keeps the filled sample
    free of long repeated word sequences."""

    role = "generator"
    snippet_tokens = 10

    def _snippet(self, text: str) -> str:
        return " ".join(clean_text(text).split()[: self.snippet_tokens])

    def _do_complete(self, request: dict) -> dict:
        mode = request["mode"]
        shots = request.get("shots", [])
        if mode == "question":
            source = self._snippet(request.get("answer", ""))
            text = (
                "Considering the reference material, what should be asked about "
                f"the following topic? {source}"
            )
        else:
            source = self._snippet(request.get("question", ""))
            text = (
                f"In response to the question, here is a structured summary "
                f"derived from {len(shots)} reference examples: {source}"
            )
        return {"text": clean_text(text), "status": "ok"}


class HeuristicScorer(ModelClient):
    """Default scorer: per-sample quality heuristic in [0, 1].

    Mean of three indicators: passes the cleaning thresholds, has both fields
    present, and has adequate length.
    """

    role = "scorer"

    def __init__(self, cfg: OperatorConfig | None = None) -> None:
        super().__init__()
        self.cfg = cfg or OperatorConfig()

    def _do_complete(self, request: dict) -> dict:
        question = request.get("question", "")
        answer = request.get("answer", "")
        text = question + "\n" + answer
        lo, hi = self.cfg.special_char_range
        tlo, thi = self.cfg.token_range
        tokens = token_count(text)
        passes = (
            lo <= special_char_ratio(text) <= hi
            and tlo <= tokens <= thi
            and ngram_repetition_ratio(text, self.cfg.ngram.n)
            <= self.cfg.ngram.max_repetition_ratio
        )
        complete = bool(question) and bool(answer)
        adequacy = length_adequacy(text, 4 * max(1, self.cfg.token_range[0]))
        score = (float(passes) + float(complete) + adequacy) / 3.0
        return {"score": score, "status": "ok"}


class ConstantScorer(ModelClient):
    """Scores every sample identically; selection then keeps by position."""

    role = "scorer"

    def __init__(self, value: float = 0.5) -> None:
        super().__init__()
        self.value = value

    def _do_complete(self, request: dict) -> dict:
        return {"score": self.value, "status": "ok"}


class ScriptedModelClient(ModelClient):
    """Test/deterministic client driven by a user-supplied function."""

    def __init__(self, role: str, fn: Callable[[dict], dict]) -> None:
        super().__init__()
        self.role = role
        self._fn = fn

    def _do_complete(self, request: dict) -> dict:
        return self._fn(request)


class HttpModelClient(ModelClient):
    def __init__(self, role: str, endpoint: str, timeout: float = DEFAULT_TIMEOUT_S) -> None:
        super().__init__()
        self.role = role
        self.endpoint = endpoint
        self.timeout = timeout

    def _do_complete(self, request: dict) -> dict:
        return post_json(self.endpoint, request, timeout=self.timeout)


class EmbeddingClient(ABC):
    """Maps text to a fixed-dimension vector. Wire: {"text"} -> {"vector"}."""

    dimension: int = 0

    @abstractmethod
    def embed(self, text: str) -> np.ndarray:
        ...

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.stack([self.embed(text) for text in texts])


class HashingEmbedder(EmbeddingClient):
    """Deterministic feature-hash embedder over character trigrams.

    A constant bias component keeps every vector, including the one for empty
    text, away from zero norm.
    """

    def __init__(self, dimension: int = 64) -> None:
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        padded = f"^{text}$"
        for i in range(len(padded) - 2):
            gram = padded[i : i + 3].encode("utf-8")
            bucket = int.from_bytes(
                hashlib.blake2b(gram, digest_size=4).digest(), "big"
            ) % (self.dimension - 1)
            vec[bucket] += 1.0
        vec[self.dimension - 1] = 1.0
        return vec


class HttpEmbeddingClient(EmbeddingClient):
    def __init__(self, endpoint: str, dimension: int, timeout: float = DEFAULT_TIMEOUT_S) -> None:
        self.endpoint = endpoint
        self.dimension = dimension
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        response = post_json(self.endpoint, {"text": text}, timeout=self.timeout)
        vector = np.asarray(response["vector"], dtype=np.float64)
        if vector.shape != (self.dimension,):
            raise ClientError(
                f"embedding endpoint returned shape {vector.shape}, "
                f"expected ({self.dimension},)"
            )
        return vector


class ScreenerClient(ABC):
    """Remote binary quality screener. Wire: {"question", "answer"} -> {"label": 0|1}."""

    @abstractmethod
    def classify(self, question: str, answer: str) -> int:
        ...


class HttpScreenerClient(ScreenerClient):
    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT_S) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def classify(self, question: str, answer: str) -> int:
        response = post_json(
            self.endpoint, {"question": question, "answer": answer}, timeout=self.timeout
        )
        label = response.get("label")
        if label not in (0, 1):
            raise ClientError(f"screener endpoint returned label {label!r}")
        return int(label)


class TrainerClient(ABC):
    """Fine-tune-and-validate service.

    Wire: {"dataset": location, "base_model", "epochs", "validation_set"}
    -> {"score": float in [0, 1]}.
    """

    @abstractmethod
    def evaluate(
        self, dataset_path: str, base_model: str, epochs: int, validation_set: str
    ) -> float:
        ...


class HttpTrainerClient(TrainerClient):
    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT_S) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def evaluate(
        self, dataset_path: str, base_model: str, epochs: int, validation_set: str
    ) -> float:
        response = post_json(
            self.endpoint,
            {
                "dataset": dataset_path,
                "base_model": base_model,
                "epochs": epochs,
                "validation_set": validation_set,
            },
            timeout=self.timeout,
        )
        score = float(response["score"])
        if not 0.0 <= score <= 1.0:
            raise ClientError(f"trainer returned out-of-range score {score}")
        return score


class AgentClient(ABC):
    """Strategy-proposing agent.

    Wire: {"messages": [{"role", "content"}...], "temperature", "seed"}
    -> {"content": str}.
    """

    @abstractmethod
    def complete(self, messages: list[dict[str, str]], temperature: float, seed: int) -> str:
        ...


class HttpAgentClient(AgentClient):
    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT_S) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def complete(self, messages: list[dict[str, str]], temperature: float, seed: int) -> str:
        response = post_json(
            self.endpoint,
            {"messages": messages, "temperature": temperature, "seed": seed},
            timeout=self.timeout,
        )
        content = response.get("content")
        if not isinstance(content, str):
            raise ClientError("agent endpoint returned no content")
        return content


class ScriptedAgent(AgentClient):
    """Test agent replaying a fixed sequence of responses."""

    def __init__(self, responses: Sequence[str]) -> None:
        self._responses = list(responses)
        self.calls = 0

    def complete(self, messages: list[dict[str, str]], temperature: float, seed: int) -> str:
        if self.calls >= len(self._responses):
            raise ClientError("scripted agent ran out of responses")
        response = self._responses[self.calls]
        self.calls += 1
        return response
