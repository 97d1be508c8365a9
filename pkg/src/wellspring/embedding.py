"""Text-to-vector providers and vector similarity.

Two providers share one interface: a deterministic offline stub (hashed
bag-of-tokens, L2-normalized) that makes every downstream test runnable
without a network, and a remote HTTP provider for real embedding models.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigError, ContractViolation, ProviderError
from .textutil import tokenize

DEFAULT_DIM = 64

EmbeddingVector = list[float]


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    provider_kind: str = "stub"  # "stub" | "remote"
    dim: int = DEFAULT_DIM
    endpoint: Optional[str] = None
    api_key_env: Optional[str] = None
    timeout_ms: int = 5000
    max_retries: int = 2

    def __post_init__(self) -> None:
        if self.provider_kind not in ("stub", "remote"):
            raise ConfigError(f"embedding.provider must be 'stub' or 'remote', got {self.provider_kind!r}")
        if self.dim < 8:
            raise ConfigError(f"embedding.dim must be >= 8, got {self.dim}")
        if self.provider_kind == "remote" and not self.endpoint:
            raise ConfigError("embedding.endpoint is required for the remote provider")


class StubEmbeddingProvider:
    """Deterministic offline embedding.

    Each lowercased token is hashed to one of ``dim`` buckets, bucket counts
    are L2-normalized. Order-insensitive, cheap, and stable across processes
    (the hash is keyed on token bytes, not Python's randomized ``hash``).
    An input with no tokens maps to the all-zero vector, which downstream
    similarity treats as "matches nothing" rather than an error.
    """

    kind = "stub"

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 8:
            raise ConfigError(f"embedding.dim must be >= 8, got {dim}")
        self.dim = dim

    def embed_text(self, text: str) -> EmbeddingVector:
        buckets = [0.0] * self.dim
        for token in tokenize(text):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            buckets[int.from_bytes(digest, "big") % self.dim] += 1.0
        norm = math.sqrt(sum(v * v for v in buckets))
        if norm == 0.0:
            return buckets
        return [v / norm for v in buckets]

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self.embed_text(t) for t in texts]


class RemoteEmbeddingProvider:
    """HTTP embedding provider.

    Sends one batched POST per call: ``{"texts": [...]}`` and expects
    ``{"vectors": [[...], ...]}``. Transport failures are retried up to
    ``max_retries`` times and then surfaced as a retryable ``ProviderError``;
    a failure never degrades to zero vectors.
    """

    kind = "remote"

    def __init__(self, config: EmbeddingProviderConfig):
        if config.provider_kind != "remote":
            raise ConfigError("RemoteEmbeddingProvider requires provider_kind='remote'")
        self.config = config
        self.dim = config.dim

    def embed_text(self, text: str) -> EmbeddingVector:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        import httpx

        headers = {}
        if self.config.api_key_env:
            import os

            key = os.environ.get(self.config.api_key_env)
            if not key:
                raise ProviderError(
                    f"embedding API key env var {self.config.api_key_env} is unset", retryable=False
                )
            headers["Authorization"] = f"Bearer {key}"

        timeout = self.config.timeout_ms / 1000.0
        last_error: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            try:
                response = httpx.post(
                    self.config.endpoint, json={"texts": list(texts)}, headers=headers, timeout=timeout
                )
                response.raise_for_status()
                vectors = response.json()["vectors"]
                break
            except Exception as exc:  # noqa: BLE001 - transport errors funnel into ProviderError
                last_error = exc
                if attempt < self.config.max_retries:
                    time.sleep(min(0.25 * 2**attempt, 2.0))
        else:
            raise ProviderError(f"embedding endpoint unreachable: {last_error}", retryable=True)

        if len(vectors) != len(texts):
            raise ProviderError(
                f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} texts",
                retryable=False,
            )
        out = []
        for vec in vectors:
            if len(vec) != self.dim:
                raise ProviderError(
                    f"embedding endpoint returned dim {len(vec)}, configured dim {self.dim}",
                    retryable=False,
                )
            out.append([float(v) for v in vec])
        return out


def make_provider(config: EmbeddingProviderConfig):
    if config.provider_kind == "stub":
        return StubEmbeddingProvider(config.dim)
    return RemoteEmbeddingProvider(config)


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """dot(a,b) / (|a||b|), with zero-norm inputs mapping to 0.0.

    The zero-norm rule is fail-soft by design: an empty chunk or query must
    rank last, not abort retrieval.
    """
    if len(a) != len(b):
        raise ContractViolation(f"cosine_similarity dim mismatch: {len(a)} vs {len(b)}")
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (math.sqrt(na) * math.sqrt(nb))
