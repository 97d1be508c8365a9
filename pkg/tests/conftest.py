"""Shared fixtures: the toy fixture corpus, stub providers, and engine builders."""

from __future__ import annotations

from pathlib import Path

import pytest

from wellspring.corpus import ChunkingParams, SourceDocument, build_corpus, load_manifest
from wellspring.embedding import StubEmbeddingProvider
from wellspring.errors import ProviderError
from wellspring.generation import ChatEngine, ScriptedLlmProvider, ScriptEntry
from wellspring.index import DocMeta, KnowledgeBase
from wellspring.retrieval import FusionConfig, StubWebClient
from wellspring.runtime import TickClock

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def stub_provider():
    return StubEmbeddingProvider(64)


@pytest.fixture(scope="session")
def fixture_manifest():
    return load_manifest(FIXTURES / "manifest.json")


@pytest.fixture(scope="session")
def fixture_kb(fixture_manifest, stub_provider):
    pairs = build_corpus(fixture_manifest.documents, fixture_manifest.chunking, stub_provider)
    docs = {
        d.doc_id: DocMeta(d.doc_id, d.category, d.title, d.uri, d.format)
        for d in fixture_manifest.documents
    }
    return KnowledgeBase(docs, pairs, fixture_manifest.chunking, {"provider": "stub", "dim": 64})


def make_kb(texts: dict[str, str], provider, category: str = "clinical") -> KnowledgeBase:
    """One single-chunk document per (doc_id, body) entry."""
    docs = [
        SourceDocument(doc_id, category, f"Title {doc_id}", f"https://example.org/{doc_id}", body)
        for doc_id, body in texts.items()
    ]
    chunking = ChunkingParams(chunk_size=10_000, overlap=0)
    pairs = build_corpus(docs, chunking, provider)
    meta = {d.doc_id: DocMeta(d.doc_id, d.category, d.title, d.uri, d.format) for d in docs}
    return KnowledgeBase(meta, pairs, chunking, {"provider": "stub", "dim": provider.dim})


def make_engine(
    kb: KnowledgeBase,
    provider,
    gen_script: list[ScriptEntry],
    safety_script: list[ScriptEntry],
    web_entries: list[dict] | None = None,
    **engine_kwargs,
) -> ChatEngine:
    clock = engine_kwargs.pop("clock", TickClock())
    return ChatEngine(
        kb=kb,
        embed_provider=provider,
        web_client=StubWebClient(web_entries or [], clock=clock),
        generation_llm=ScriptedLlmProvider(gen_script),
        safety_llm=ScriptedLlmProvider(safety_script),
        fusion=engine_kwargs.pop("fusion", FusionConfig()),
        clock=clock,
        **engine_kwargs,
    )


ALWAYS_SAFE = [ScriptEntry("", "SAFE - fine")]


class FailingEmbeddingProvider:
    """Raises on every call; for fail-soft paths."""

    kind = "failing"
    dim = 64

    def embed_text(self, text: str):
        raise ProviderError("embedding endpoint down", retryable=True)

    def embed_batch(self, texts):
        raise ProviderError("embedding endpoint down", retryable=True)


class FlakyEmbeddingProvider:
    """Fails the first ``fail_times`` calls, then behaves like the stub."""

    kind = "flaky"

    def __init__(self, fail_times: int, dim: int = 64):
        self._inner = StubEmbeddingProvider(dim)
        self.dim = dim
        self.remaining_failures = fail_times

    def embed_text(self, text: str):
        if self.remaining_failures > 0:
            self.remaining_failures -= 1
            raise ProviderError("transient embedding failure", retryable=True)
        return self._inner.embed_text(text)

    def embed_batch(self, texts):
        return [self.embed_text(t) for t in texts]
