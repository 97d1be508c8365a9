"""Knowledge-base construction: manifest loading, chunking, embedding.

A corpus manifest is a single JSON file:

    {
      "chunking": {"chunk_size": 512, "overlap": 64},
      "documents": [
        {"doc_id": "clin-01", "category": "clinical", "title": "...",
         "uri": "https://...", "path": "corpus/clin-01.txt", "format": "plain"}
      ]
    }

Document paths are resolved relative to the manifest file. Bodies are read
from disk; nothing here touches the network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .embedding import EmbeddingVector
from .errors import ContractViolation, ManifestError, ProviderError

CATEGORIES = ("clinical", "scientific", "institutional", "web")
# "web" is reserved for wrapped search-fallback results and may not appear in
# a manifest.
MANIFEST_CATEGORIES = CATEGORIES[:3]

FORMATS = ("plain", "pdf-extracted-text", "html-extracted-text")

DEFAULT_CHUNK_SIZE = 512
DEFAULT_OVERLAP = 64


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    category: str
    title: str
    uri: str
    body: str
    format: str = "plain"


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    ordinal: int
    text: str
    token_count: int


@dataclass(frozen=True)
class ChunkingParams:
    chunk_size: int = DEFAULT_CHUNK_SIZE
    overlap: int = DEFAULT_OVERLAP

    def __post_init__(self) -> None:
        if self.chunk_size < 1:
            raise ContractViolation(f"chunk_size must be >= 1, got {self.chunk_size}")
        if not 0 <= self.overlap < self.chunk_size:
            raise ContractViolation(
                f"overlap must satisfy 0 <= overlap < chunk_size, got overlap={self.overlap} chunk_size={self.chunk_size}"
            )


@dataclass(frozen=True)
class CorpusManifest:
    documents: list[SourceDocument] = field(default_factory=list)
    chunking: ChunkingParams = field(default_factory=ChunkingParams)


def load_manifest(path: str | Path) -> CorpusManifest:
    """Read a manifest and all document bodies.

    Raises ManifestError naming the offending entry on a missing body file,
    duplicate doc_id, or unknown category/format.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc

    chunking_raw = raw.get("chunking", {})
    try:
        chunking = ChunkingParams(
            chunk_size=int(chunking_raw.get("chunk_size", DEFAULT_CHUNK_SIZE)),
            overlap=int(chunking_raw.get("overlap", DEFAULT_OVERLAP)),
        )
    except ContractViolation as exc:
        raise ManifestError(f"manifest {path}: {exc}") from exc

    documents: list[SourceDocument] = []
    seen: set[str] = set()
    for entry in raw.get("documents", []):
        doc_id = entry.get("doc_id")
        if not doc_id:
            raise ManifestError(f"manifest {path}: entry without doc_id: {entry!r}")
        if doc_id in seen:
            raise ManifestError(f"manifest {path}: duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        category = entry.get("category")
        if category not in MANIFEST_CATEGORIES:
            raise ManifestError(
                f"manifest {path}: doc {doc_id!r} has unknown category {category!r}"
                f" (expected one of {', '.join(MANIFEST_CATEGORIES)})"
            )
        fmt = entry.get("format", "plain")
        if fmt not in FORMATS:
            raise ManifestError(f"manifest {path}: doc {doc_id!r} has unknown format {fmt!r}")
        body_path = path.parent / entry.get("path", "")
        if not body_path.is_file():
            raise ManifestError(f"manifest {path}: doc {doc_id!r} body not readable: {body_path}")
        documents.append(
            SourceDocument(
                doc_id=doc_id,
                category=category,
                title=entry.get("title", doc_id),
                uri=entry.get("uri", ""),
                body=body_path.read_text(encoding="utf-8"),
                format=fmt,
            )
        )
    return CorpusManifest(documents=documents, chunking=chunking)


def chunk_document(doc: SourceDocument, chunk_size: int, overlap: int) -> list[Chunk]:
    """Sliding-window chunking over the whitespace token stream.

    Windows start at multiples of (chunk_size - overlap) while the start is
    inside the document; the last chunk may be short. An empty body yields no
    chunks.
    """
    params = ChunkingParams(chunk_size=chunk_size, overlap=overlap)  # validates
    tokens = doc.body.split()
    stride = params.chunk_size - params.overlap
    chunks: list[Chunk] = []
    start = 0
    while start < len(tokens):
        window = tokens[start : start + params.chunk_size]
        ordinal = len(chunks)
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}#{ordinal}",
                doc_id=doc.doc_id,
                ordinal=ordinal,
                text=" ".join(window),
                token_count=len(window),
            )
        )
        start += stride
    return chunks


def build_corpus(
    docs: Sequence[SourceDocument],
    chunking: ChunkingParams,
    provider,
) -> list[tuple[Chunk, EmbeddingVector]]:
    """Chunk every document and embed each chunk (one batched provider call
    per document). Output order is canonical: document order, then ordinal.
    """
    pairs: list[tuple[Chunk, EmbeddingVector]] = []
    for doc in docs:
        chunks = chunk_document(doc, chunking.chunk_size, chunking.overlap)
        if not chunks:
            continue
        try:
            vectors = provider.embed_batch([c.text for c in chunks])
        except ProviderError as exc:
            raise ProviderError(
                f"embedding failed for doc {doc.doc_id!r} ({len(chunks)} chunks): {exc}",
                retryable=exc.retryable,
            ) from exc
        pairs.extend(zip(chunks, vectors))
    return pairs
