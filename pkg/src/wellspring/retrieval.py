"""Three-arm retrieval: sparse + dense pools, web-search fallback, RRF fusion.

BM25 and cosine scores live on incomparable scales, so arms are merged with
reciprocal-rank fusion (scale-free, rank-only). The web arm runs only when
the two index arms look insufficient; its results are session-scoped and are
never written back into the knowledge base.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .corpus import Chunk
from .errors import ConfigError, ContractViolation, ProviderError
from .index import KnowledgeBase, ScoredHit, dense_search, sparse_search


@dataclass(frozen=True)
class WebResult:
    title: str
    uri: str
    snippet: str
    fetched_at: str = ""


@dataclass(frozen=True)
class FusionConfig:
    pool_per_arm: int = 10
    rrf_k: float = 60.0
    tau_dense: float = 0.35
    final_k: int = 5

    def __post_init__(self) -> None:
        if self.pool_per_arm < 1:
            raise ContractViolation(f"pool_per_arm must be >= 1, got {self.pool_per_arm}")
        if self.rrf_k <= 0:
            raise ContractViolation(f"rrf_k must be > 0, got {self.rrf_k}")
        if self.final_k < 1:
            raise ContractViolation(f"final_k must be >= 1, got {self.final_k}")
        if self.final_k > 3 * self.pool_per_arm:
            raise ContractViolation(
                f"final_k={self.final_k} exceeds the maximum pool of 3*pool_per_arm={3 * self.pool_per_arm}"
            )


@dataclass
class RetrievalBundle:
    query: str
    sparse_hits: list[ScoredHit]
    dense_hits: list[ScoredHit]
    web_hits: list[ScoredHit]
    fused: list[ScoredHit]
    web_triggered: bool
    web_chunks: dict[str, Chunk] = field(default_factory=dict)
    web_meta: dict[str, WebResult] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def pool_chunk_ids(self) -> set[str]:
        """Pre-truncation candidate pool: the union of all three arms."""
        pool = {h.chunk_id for h in self.sparse_hits}
        pool.update(h.chunk_id for h in self.dense_hits)
        pool.update(h.chunk_id for h in self.web_hits)
        return pool


def fuse_rrf(ranked_lists: Sequence[Sequence[ScoredHit]], rrf_k: float) -> list[ScoredHit]:
    """Reciprocal-rank fusion: fused(d) = sum over lists of 1 / (rrf_k + rank).

    Ranks are 1-based within each (already sorted) input list. The fused hit
    keeps the arm tag of its first appearance, scanning lists in input order.
    """
    scores: dict[str, float] = {}
    arm_of: dict[str, str] = {}
    for hits in ranked_lists:
        for rank, hit in enumerate(hits, start=1):
            scores[hit.chunk_id] = scores.get(hit.chunk_id, 0.0) + 1.0 / (rrf_k + rank)
            arm_of.setdefault(hit.chunk_id, hit.arm)
    fused = [ScoredHit(cid, score, arm_of[cid]) for cid, score in scores.items()]
    return sorted(fused, key=lambda h: (-h.score, h.chunk_id))


def needs_web_fallback(
    sparse_hits: Sequence[ScoredHit], dense_hits: Sequence[ScoredHit], cfg: FusionConfig
) -> bool:
    """True when the index arms look insufficient: the best dense cosine is
    below tau_dense (or there is none), or the combined distinct candidate
    count cannot even fill the final list.
    """
    distinct = {h.chunk_id for h in sparse_hits} | {h.chunk_id for h in dense_hits}
    if len(distinct) < cfg.final_k:
        return True
    if not dense_hits:
        return True
    return dense_hits[0].score < cfg.tau_dense


def wrap_web_result(result: WebResult) -> Chunk:
    """Wrap a search hit as a category-web chunk with a content-derived id."""
    digest = hashlib.sha1(f"{result.uri}\n{result.snippet}".encode("utf-8")).hexdigest()[:12]
    return Chunk(
        chunk_id=f"web#{digest}",
        doc_id="web",
        ordinal=0,
        text=result.snippet,
        token_count=len(result.snippet.split()),
    )


class StubWebClient:
    """Canned web search driven by a fixture: a list of
    ``{"pattern": <regex>, "results": [{"title", "uri", "snippet"}]}`` entries.
    The first entry whose pattern matches the query (case-insensitive) wins;
    an empty pattern matches everything. No match means no results.
    """

    kind = "stub"

    def __init__(self, entries: Sequence[dict], clock: Optional[Callable[[], str]] = None):
        self.entries = list(entries)
        self.clock = clock or (lambda: "")
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path, clock: Optional[Callable[[], str]] = None) -> "StubWebClient":
        try:
            entries = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"web stub fixture {path} unreadable: {exc}") from exc
        return cls(entries, clock=clock)

    def search(self, query: str, max_results: int) -> list[WebResult]:
        self.calls += 1
        for entry in self.entries:
            pattern = entry.get("pattern", "")
            if pattern == "" or re.search(pattern, query, re.IGNORECASE):
                results = []
                for item in entry.get("results", [])[:max_results]:
                    if not item.get("snippet"):
                        continue
                    results.append(
                        WebResult(
                            title=item.get("title", ""),
                            uri=item.get("uri", ""),
                            snippet=item["snippet"],
                            fetched_at=self.clock(),
                        )
                    )
                return results
        return []


class FailingWebClient:
    """Always raises; used to exercise the degrade-to-two-arms path."""

    kind = "failing"

    def __init__(self):
        self.calls = 0

    def search(self, query: str, max_results: int) -> list[WebResult]:
        self.calls += 1
        raise ProviderError("web search unavailable", retryable=True)


class LiveWebClient:
    """Minimal HTTP search client: GET endpoint?q=...&count=N with an optional
    bearer token from the environment; expects ``{"results": [...]}``.
    """

    kind = "live"

    def __init__(
        self,
        endpoint: str,
        api_key_env: Optional[str] = None,
        timeout_ms: int = 4000,
        clock: Optional[Callable[[], str]] = None,
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout_ms = timeout_ms
        self.clock = clock or (lambda: "")
        self.calls = 0

    def search(self, query: str, max_results: int) -> list[WebResult]:
        import httpx

        self.calls += 1
        headers = {}
        if self.api_key_env:
            import os

            key = os.environ.get(self.api_key_env)
            if not key:
                raise ProviderError(f"web API key env var {self.api_key_env} is unset", retryable=False)
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = httpx.get(
                self.endpoint,
                params={"q": query, "count": max_results},
                headers=headers,
                timeout=self.timeout_ms / 1000.0,
            )
            response.raise_for_status()
            payload = response.json()
        except Exception as exc:  # noqa: BLE001
            raise ProviderError(f"web search failed: {exc}", retryable=True) from exc
        results = []
        for item in payload.get("results", [])[:max_results]:
            if not item.get("snippet"):
                continue
            results.append(
                WebResult(
                    title=item.get("title", ""),
                    uri=item.get("uri", ""),
                    snippet=item["snippet"],
                    fetched_at=self.clock(),
                )
            )
        return results


def retrieve(query: str, cfg: FusionConfig, kb: KnowledgeBase, embed_provider, web_client) -> RetrievalBundle:
    """Run the full three-arm retrieval for one query.

    The web arm is consulted only when ``needs_web_fallback`` says the index
    arms are insufficient, and a web failure degrades to two-arm fusion with
    a warning rather than aborting the turn.
    """
    warnings: list[str] = []
    sparse_hits = sparse_search(query, cfg.pool_per_arm, kb.sparse)
    try:
        query_vec = embed_provider.embed_text(query)
        dense_hits = dense_search(query_vec, cfg.pool_per_arm, kb.dense)
    except ProviderError as exc:
        dense_hits = []
        warnings.append(f"dense arm unavailable: {exc}")

    web_triggered = needs_web_fallback(sparse_hits, dense_hits, cfg)
    web_hits: list[ScoredHit] = []
    web_chunks: dict[str, Chunk] = {}
    web_meta: dict[str, WebResult] = {}
    if web_triggered:
        try:
            results = web_client.search(query, cfg.pool_per_arm)
        except ProviderError as exc:
            results = []
            warnings.append(f"web arm failed, fused without it: {exc}")
        rank = 0
        for result in results:
            chunk = wrap_web_result(result)
            if chunk.chunk_id in web_chunks:
                continue
            rank += 1
            web_chunks[chunk.chunk_id] = chunk
            web_meta[chunk.chunk_id] = result
            # Provider order becomes the ranking; 1/rank keeps the list sorted.
            web_hits.append(ScoredHit(chunk.chunk_id, 1.0 / rank, "web"))

    fused = fuse_rrf([sparse_hits, dense_hits, web_hits], cfg.rrf_k)[: cfg.final_k]
    return RetrievalBundle(
        query=query,
        sparse_hits=sparse_hits,
        dense_hits=dense_hits,
        web_hits=web_hits,
        fused=fused,
        web_triggered=web_triggered,
        web_chunks=web_chunks,
        web_meta=web_meta,
        warnings=warnings,
    )
