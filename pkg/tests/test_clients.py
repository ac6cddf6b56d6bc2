from __future__ import annotations

import numpy as np
import pytest

from pipecraft import clients
from pipecraft.clients import (
    ClientError,
    ConstantScorer,
    HashingEmbedder,
    HeuristicScorer,
    HttpAgentClient,
    HttpEmbeddingClient,
    HttpModelClient,
    HttpScreenerClient,
    HttpTrainerClient,
    NormalizingOptimizer,
    ScriptedModelClient,
    TemplateGenerator,
    normalize_text,
)


class FlakyClient(ScriptedModelClient):
    """Fails a fixed number of times before succeeding."""

    def __init__(self, failures: int):
        super().__init__("optimizer", lambda req: {"text": "ok", "status": "ok"})
        self.failures = failures
        self.attempts = 0

    def _do_complete(self, request):
        self.attempts += 1
        if self.attempts <= self.failures:
            raise RuntimeError("transient")
        return super()._do_complete(request)


class TestRetry:
    def test_succeeds_after_two_failures(self):
        client = FlakyClient(failures=2)
        response = client.complete({"role": "optimizer", "mode": "question", "text": "x"})
        assert response["text"] == "ok"
        assert client.attempts == 3

    def test_gives_up_after_retries_exhausted(self):
        client = FlakyClient(failures=10)
        with pytest.raises(ClientError):
            client.complete({"role": "optimizer", "mode": "question", "text": "x"})
        assert client.attempts == 3  # initial try + two retries

    def test_bad_status_is_failure(self):
        client = ScriptedModelClient("scorer", lambda req: {"status": "overloaded"})
        with pytest.raises(ClientError):
            client.complete({"role": "scorer"})


class TestDefaults:
    def test_normalizing_optimizer(self):
        client = NormalizingOptimizer()
        out = client.complete(
            {"role": "optimizer", "mode": "answer", "text": "  spaced <b>out</b>  ## "}
        )
        assert out["text"] == "spaced out"

    def test_normalize_text_drops_disallowed(self):
        assert normalize_text("abc ### def") == "abc def"
        assert normalize_text("fine, text!") == "fine, text!"

    def test_template_generator_modes(self):
        client = TemplateGenerator()
        answer_out = client.complete(
            {
                "role": "generator",
                "mode": "answer",
                "question": "what about fevers",
                "answer": "",
                "shots": [{"question": "q", "answer": "a"}],
            }
        )
        assert "what about fevers" in answer_out["text"]
        question_out = client.complete(
            {
                "role": "generator",
                "mode": "question",
                "question": "",
                "answer": "rest and fluids",
                "shots": [],
            }
        )
        assert "rest and fluids" in question_out["text"]

    def test_generator_snippets_long_fields(self):
        client = TemplateGenerator()
        long_question = "word " * 100
        out = client.complete(
            {"role": "generator", "mode": "answer", "question": long_question,
             "answer": "", "shots": []}
        )
        assert len(out["text"].split()) < 40

    def test_heuristic_scorer_range_and_order(self):
        scorer = HeuristicScorer()
        good = scorer.complete(
            {"role": "scorer", "question": "w " * 30, "answer": "w x y z " * 10}
        )["score"]
        bad = scorer.complete({"role": "scorer", "question": "w", "answer": ""})["score"]
        assert 0.0 <= bad < good <= 1.0

    def test_constant_scorer(self):
        scorer = ConstantScorer(0.5)
        assert scorer.complete({"role": "scorer"})["score"] == 0.5


class TestHashingEmbedder:
    def test_identical_text_identical_vector(self):
        embedder = HashingEmbedder()
        a = embedder.embed("same text")
        b = embedder.embed("same text")
        assert np.array_equal(a, b)

    def test_no_zero_norm_even_for_empty(self):
        embedder = HashingEmbedder()
        assert np.linalg.norm(embedder.embed("")) > 0

    def test_fixed_corpus_reproducible(self):
        embedder = HashingEmbedder(dimension=16)
        texts = ["one", "two", "three"]
        first = embedder.embed_many(texts)
        second = HashingEmbedder(dimension=16).embed_many(texts)
        assert np.array_equal(first, second)
        assert first.shape == (3, 16)


class TestWireContracts:
    """The HTTP clients speak the documented JSON shapes."""

    def _capture(self, monkeypatch, response):
        seen = {}

        def fake_post(endpoint, payload, timeout=0):
            seen["endpoint"] = endpoint
            seen["payload"] = payload
            return response

        monkeypatch.setattr(clients, "post_json", fake_post)
        return seen

    def test_model_client(self, monkeypatch):
        seen = self._capture(monkeypatch, {"text": "better", "status": "ok"})
        client = HttpModelClient("optimizer", "http://svc/optimize")
        out = client.complete(
            {"role": "optimizer", "mode": "question", "text": "raw", "seed": 3}
        )
        assert out["text"] == "better"
        assert seen["payload"] == {
            "role": "optimizer", "mode": "question", "text": "raw", "seed": 3
        }

    def test_embedding_client(self, monkeypatch):
        seen = self._capture(monkeypatch, {"vector": [1.0, 2.0, 3.0]})
        client = HttpEmbeddingClient("http://svc/embed", dimension=3)
        vec = client.embed("hello")
        assert seen["payload"] == {"text": "hello"}
        assert vec.tolist() == [1.0, 2.0, 3.0]

    def test_embedding_dimension_mismatch(self, monkeypatch):
        self._capture(monkeypatch, {"vector": [1.0]})
        client = HttpEmbeddingClient("http://svc/embed", dimension=3)
        with pytest.raises(ClientError):
            client.embed("hello")

    def test_screener_client(self, monkeypatch):
        seen = self._capture(monkeypatch, {"label": 1})
        client = HttpScreenerClient("http://svc/screen")
        assert client.classify("q", "a") == 1
        assert seen["payload"] == {"question": "q", "answer": "a"}

    def test_screener_bad_label(self, monkeypatch):
        self._capture(monkeypatch, {"label": 7})
        client = HttpScreenerClient("http://svc/screen")
        with pytest.raises(ClientError):
            client.classify("q", "a")

    def test_trainer_client(self, monkeypatch):
        seen = self._capture(monkeypatch, {"score": 0.73})
        client = HttpTrainerClient("http://svc/train")
        score = client.evaluate("/data/d.jsonl", "base-model", 3, "val-1")
        assert score == 0.73
        assert seen["payload"] == {
            "dataset": "/data/d.jsonl",
            "base_model": "base-model",
            "epochs": 3,
            "validation_set": "val-1",
        }

    def test_trainer_out_of_range(self, monkeypatch):
        self._capture(monkeypatch, {"score": 1.5})
        client = HttpTrainerClient("http://svc/train")
        with pytest.raises(ClientError):
            client.evaluate("/d", "m", 1, "v")

    def test_agent_client(self, monkeypatch):
        seen = self._capture(monkeypatch, {"content": "###Combination[1]###"})
        client = HttpAgentClient("http://svc/agent")
        messages = [{"role": "user", "content": "prompt"}]
        reply = client.complete(messages, temperature=0.6, seed=4)
        assert reply == "###Combination[1]###"
        assert seen["payload"] == {"messages": messages, "temperature": 0.6, "seed": 4}
