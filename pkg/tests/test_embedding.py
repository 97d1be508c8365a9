"""Stub embedding determinism, cosine contracts, and provider behaviour."""

import math

import pytest
from hypothesis import given, strategies as st

import oracles
from wellspring.embedding import (
    EmbeddingProviderConfig,
    RemoteEmbeddingProvider,
    StubEmbeddingProvider,
    cosine_similarity,
    make_provider,
)
from wellspring.errors import ConfigError, ContractViolation, ProviderError


class TestStubProvider:
    def test_same_text_twice_is_bitwise_identical(self, stub_provider):
        assert stub_provider.embed_text("stress") == stub_provider.embed_text("stress")

    def test_fresh_provider_instance_agrees(self, stub_provider):
        # Determinism across "process restarts" is approximated by a fresh
        # instance; the hash is keyed on token bytes, not PYTHONHASHSEED.
        again = StubEmbeddingProvider(64)
        assert stub_provider.embed_text("sleep habits") == again.embed_text("sleep habits")

    def test_empty_text_is_all_zero_not_an_error(self, stub_provider):
        vec = stub_provider.embed_text("")
        assert vec == [0.0] * 64

    def test_matches_reference_oracle(self, stub_provider):
        for text in ("sleep habits", "exam stress STRESS", "a b c a", "punctuation, counts! too?"):
            assert stub_provider.embed_text(text) == oracles.stub_embed(text, 64)

    def test_vectors_are_unit_norm_or_zero(self, stub_provider):
        for text in ("one", "two words", ""):
            vec = stub_provider.embed_text(text)
            norm = math.sqrt(sum(v * v for v in vec))
            assert norm == pytest.approx(1.0, abs=1e-12) or norm == 0.0

    def test_order_insensitive(self, stub_provider):
        assert stub_provider.embed_text("sleep stress") == stub_provider.embed_text("stress sleep")

    def test_batch_equals_pointwise(self, stub_provider):
        texts = ["a", "b b", "c c c"]
        assert stub_provider.embed_batch(texts) == [stub_provider.embed_text(t) for t in texts]


class TestCosine:
    def test_identical_nonzero_vector_scores_one(self):
        vec = [0.3, -0.2, 0.9]
        assert cosine_similarity(vec, vec) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_vectors_score_zero(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_computed_example(self):
        assert cosine_similarity([1, 2, 3], [4, 5, 6]) == pytest.approx(0.974632, abs=1e-5)

    def test_zero_norm_is_fail_soft_zero(self):
        assert cosine_similarity([0.0, 0.0], [1.0, 2.0]) == 0.0
        assert cosine_similarity([0.0, 0.0], [0.0, 0.0]) == 0.0

    def test_dim_mismatch_raises(self):
        with pytest.raises(ContractViolation):
            cosine_similarity([1.0], [1.0, 2.0])

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=8),
        st.data(),
    )
    def test_symmetry(self, a, data):
        b = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=len(a), max_size=len(a)))
        assert cosine_similarity(a, b) == cosine_similarity(b, a)

    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=8),
        st.data(),
        st.floats(1e-3, 1e3),
    )
    def test_scale_invariance_and_range(self, a, data, c):
        b = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(a), max_size=len(a)))
        base = cosine_similarity(a, b)
        assert -1.0 - 1e-9 <= base <= 1.0 + 1e-9
        scaled = cosine_similarity([c * x for x in a], b)
        assert scaled == pytest.approx(base, abs=1e-9)


class TestProviderConfig:
    def test_dim_floor(self):
        with pytest.raises(ConfigError):
            EmbeddingProviderConfig(dim=4)

    def test_remote_requires_endpoint(self):
        with pytest.raises(ConfigError):
            EmbeddingProviderConfig(provider_kind="remote")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            EmbeddingProviderConfig(provider_kind="magic")

    def test_factory_builds_stub(self):
        provider = make_provider(EmbeddingProviderConfig(provider_kind="stub", dim=16))
        assert isinstance(provider, StubEmbeddingProvider)
        assert provider.dim == 16


class TestRemoteProvider:
    def _config(self):
        return EmbeddingProviderConfig(provider_kind="remote", dim=8, endpoint="https://emb.example/v1", max_retries=1)

    def test_unreachable_raises_retryable_not_zeros(self, monkeypatch):
        import httpx

        def boom(*args, **kwargs):
            raise httpx.ConnectError("no route")

        monkeypatch.setattr(httpx, "post", boom)
        monkeypatch.setattr("time.sleep", lambda s: None)
        provider = RemoteEmbeddingProvider(self._config())
        with pytest.raises(ProviderError) as excinfo:
            provider.embed_text("hello")
        assert excinfo.value.retryable

    def test_successful_round_trip(self, monkeypatch):
        import httpx

        calls = {"n": 0}

        class FakeResponse:
            def raise_for_status(self):
                return None

            def json(self):
                return {"vectors": [[0.1] * 8, [0.2] * 8]}

        def fake_post(url, json=None, headers=None, timeout=None):
            calls["n"] += 1
            assert json == {"texts": ["a", "b"]}
            return FakeResponse()

        monkeypatch.setattr(httpx, "post", fake_post)
        provider = RemoteEmbeddingProvider(self._config())
        vectors = provider.embed_batch(["a", "b"])
        assert calls["n"] == 1  # one batched call per shard
        assert vectors == [[0.1] * 8, [0.2] * 8]

    def test_wrong_dim_from_endpoint_is_an_error(self, monkeypatch):
        import httpx

        class FakeResponse:
            def raise_for_status(self):
                return None

            def json(self):
                return {"vectors": [[0.1] * 4]}

        monkeypatch.setattr(httpx, "post", lambda *a, **k: FakeResponse())
        provider = RemoteEmbeddingProvider(self._config())
        with pytest.raises(ProviderError) as excinfo:
            provider.embed_text("a")
        assert not excinfo.value.retryable
