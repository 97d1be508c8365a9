"""Sparse (Okapi BM25 inverted index) and dense (exhaustive cosine) retrieval.

BM25 uses the canonical Okapi defaults k1=1.2, b=0.75 with the non-negative
idf variant idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Dense search is an
exact full scan; both hot loops run on the kernel backend selected in
``wellspring.kernels`` and any accelerated path must reproduce the naive
semantics bit-for-bit on the same inputs.

Indexes are immutable once built; searches share them freely across threads.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import kernels
from .corpus import Chunk, ChunkingParams, SourceDocument
from .embedding import EmbeddingVector
from .errors import ContractViolation, SnapshotError
from .textutil import tokenize

K1 = 1.2
B = 0.75

SNAPSHOT_MAGIC = "wellspring.index"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class ScoredHit:
    chunk_id: str
    score: float
    arm: str  # "sparse" | "dense" | "web"


def _sort_hits(hits: list[ScoredHit]) -> list[ScoredHit]:
    # Score descending, chunk_id ascending on ties: the one deterministic
    # ordering every result list in the pipeline obeys.
    return sorted(hits, key=lambda h: (-h.score, h.chunk_id))


class SparseIndex:
    """Inverted index with BM25 statistics.

    ``postings`` maps term -> [(chunk_id, tf)] in corpus order; ``df`` is
    derived from posting lengths. Flat array mirrors of the postings are
    built lazily for the scoring kernel and cached (the index is immutable).
    """

    def __init__(self, chunk_ids: list[str], postings: dict[str, list[tuple[str, int]]], doc_len: dict[str, int]):
        self.chunk_ids = chunk_ids
        self.postings = postings
        self.doc_len = doc_len
        self.N = len(chunk_ids)
        self.avgdl = (sum(doc_len.values()) / self.N) if self.N else 0.0
        self.df = {term: len(plist) for term, plist in postings.items()}
        self._row_of = {cid: row for row, cid in enumerate(chunk_ids)}
        self._doc_len_arr = array("d", (float(doc_len[cid]) for cid in chunk_ids))
        self._term_arrays_cache: dict[str, tuple[array, array]] = {}

    def idf(self, term: str) -> float:
        df = self.df.get(term, 0)
        return math.log(1.0 + (self.N - df + 0.5) / (df + 0.5))

    def tf(self, term: str, chunk_id: str) -> int:
        for cid, tf in self.postings.get(term, ()):
            if cid == chunk_id:
                return tf
        return 0

    def _term_arrays(self, term: str) -> tuple[array, array]:
        cached = self._term_arrays_cache.get(term)
        if cached is None:
            plist = self.postings.get(term, ())
            rows = array("q", (self._row_of[cid] for cid, _ in plist))
            tfs = array("d", (float(tf) for _, tf in plist))
            cached = self._term_arrays_cache[term] = (rows, tfs)
        return cached


class DenseIndex:
    """Flat store of chunk embeddings, row-major in one contiguous buffer."""

    def __init__(self, chunk_ids: list[str], vectors: Sequence[EmbeddingVector], dim: int | None = None):
        if vectors:
            dims = {len(v) for v in vectors}
            if len(dims) != 1:
                raise ContractViolation(f"dense index got mixed vector dims: {sorted(dims)}")
            inferred = dims.pop()
            if dim is not None and dim != inferred:
                raise ContractViolation(f"dim argument {dim} disagrees with vectors ({inferred})")
            dim = inferred
        self.chunk_ids = chunk_ids
        self.dim = dim if dim is not None else 0
        self.flat = array("d")
        for vec in vectors:
            self.flat.extend(vec)
        self._row_of = {cid: row for row, cid in enumerate(chunk_ids)}

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def vector(self, chunk_id: str) -> EmbeddingVector:
        row = self._row_of[chunk_id]
        return list(self.flat[row * self.dim : (row + 1) * self.dim])

    def entries(self) -> Iterable[tuple[str, EmbeddingVector]]:
        for cid in self.chunk_ids:
            yield cid, self.vector(cid)


def build_indexes(pairs: Sequence[tuple[Chunk, EmbeddingVector]]) -> tuple[SparseIndex, DenseIndex]:
    """Build both indexes over the same chunk set. Duplicate chunk_ids are a
    build error; the two indexes always cover identical keys.
    """
    chunk_ids: list[str] = []
    seen: set[str] = set()
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_len: dict[str, int] = {}
    vectors: list[EmbeddingVector] = []
    for chunk, vec in pairs:
        if chunk.chunk_id in seen:
            raise ContractViolation(f"duplicate chunk_id {chunk.chunk_id!r}")
        seen.add(chunk.chunk_id)
        chunk_ids.append(chunk.chunk_id)
        vectors.append(vec)
        tokens = tokenize(chunk.text)
        doc_len[chunk.chunk_id] = len(tokens)
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((chunk.chunk_id, tf))
    return SparseIndex(chunk_ids, postings, doc_len), DenseIndex(chunk_ids, vectors)


def bm25_score(query_terms: Sequence[str], chunk_id: str, index: SparseIndex) -> float:
    """Okapi BM25 score of one chunk for a term list.

    Terms absent from the chunk contribute exactly 0; repeated query terms
    contribute once per occurrence. An empty term list scores 0.0.
    """
    if chunk_id not in index.doc_len:
        raise ContractViolation(f"unknown chunk_id {chunk_id!r}")
    dl = index.doc_len[chunk_id]
    total = 0.0
    for term in query_terms:
        tf = index.tf(term, chunk_id)
        if tf == 0:
            continue
        denom = tf + K1 * (1.0 - B + B * dl / index.avgdl)
        total += index.idf(term) * tf * (K1 + 1.0) / denom
    return total


def sparse_search(query: str, k: int, index: SparseIndex) -> list[ScoredHit]:
    """Top-k chunks containing at least one query term, ranked by BM25."""
    if k <= 0:
        return []
    terms = tokenize(query)
    if not terms:
        return []
    candidates: set[str] = set()
    idfs = array("d")
    term_rows: list[array] = []
    term_tfs: list[array] = []
    for term in terms:  # in query order, repeats included, matching bm25_score
        plist = index.postings.get(term)
        if not plist:
            continue
        candidates.update(cid for cid, _ in plist)
        rows, tfs = index._term_arrays(term)
        idfs.append(index.idf(term))
        term_rows.append(rows)
        term_tfs.append(tfs)
    if not candidates:
        return []
    scores = kernels.bm25_scores(index.N, index._doc_len_arr, index.avgdl, K1, B, idfs, term_rows, term_tfs)
    hits = [ScoredHit(cid, scores[index._row_of[cid]], "sparse") for cid in candidates]
    return _sort_hits(hits)[:k]


def dense_search(query_vec: Sequence[float], k: int, index: DenseIndex) -> list[ScoredHit]:
    """Top-k chunks by cosine similarity, exact full scan."""
    if k <= 0 or len(index) == 0:
        return []
    if len(query_vec) != index.dim:
        raise ContractViolation(f"query dim {len(query_vec)} != index dim {index.dim}")
    scores = kernels.dense_scores(index.flat, len(index), index.dim, array("d", query_vec))
    hits = [ScoredHit(cid, scores[row], "dense") for row, cid in enumerate(index.chunk_ids)]
    return _sort_hits(hits)[:k]


# --- persisted knowledge base -------------------------------------------------


@dataclass(frozen=True)
class DocMeta:
    doc_id: str
    category: str
    title: str
    uri: str
    format: str = "plain"


class KnowledgeBase:
    """Everything a serving process needs from one ingest run."""

    def __init__(
        self,
        documents: dict[str, DocMeta],
        pairs: list[tuple[Chunk, EmbeddingVector]],
        chunking: ChunkingParams,
        embedding_meta: dict,
        content_hash: str = "",
    ):
        self.documents = documents
        self.chunks = {chunk.chunk_id: chunk for chunk, _ in pairs}
        self.sparse, self.dense = build_indexes(pairs)
        self.chunking = chunking
        self.embedding_meta = embedding_meta
        self.content_hash = content_hash

    def doc_for_chunk(self, chunk_id: str) -> DocMeta:
        return self.documents[self.chunks[chunk_id].doc_id]

    @property
    def dim(self) -> int:
        return self.dense.dim


def save_snapshot(
    path: str | Path,
    documents: Sequence[SourceDocument | DocMeta],
    pairs: Sequence[tuple[Chunk, EmbeddingVector]],
    chunking: ChunkingParams,
    embedding_meta: dict,
) -> str:
    """Write a versioned snapshot; returns its content hash.

    Plain JSON with a magic header: human-inspectable, and byte-stable for
    the same inputs so re-ingesting identical fixtures reproduces an
    identical file.
    """
    payload = {
        "magic": SNAPSHOT_MAGIC,
        "version": SNAPSHOT_VERSION,
        "embedding": dict(embedding_meta),
        "chunking": {"chunk_size": chunking.chunk_size, "overlap": chunking.overlap},
        "documents": [
            {"doc_id": d.doc_id, "category": d.category, "title": d.title, "uri": d.uri, "format": d.format}
            for d in documents
        ],
        "chunks": [
            {
                "chunk_id": c.chunk_id,
                "doc_id": c.doc_id,
                "ordinal": c.ordinal,
                "text": c.text,
                "token_count": c.token_count,
            }
            for c, _ in pairs
        ],
        "vectors": [list(v) for _, v in pairs],
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # Write-then-rename so a concurrent reader sees the old or the new
    # snapshot, never a torn one.
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    tmp_path.write_text(text, encoding="utf-8")
    os.replace(tmp_path, path)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_snapshot(path: str | Path) -> KnowledgeBase:
    path = Path(path)
    if not path.is_file():
        raise SnapshotError(f"snapshot not found: {path}")
    raw_bytes = path.read_bytes()
    try:
        payload = json.loads(raw_bytes)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"snapshot {path} is not valid JSON: {exc}") from exc
    if payload.get("magic") != SNAPSHOT_MAGIC:
        raise SnapshotError(f"snapshot {path} has wrong magic {payload.get('magic')!r}")
    if payload.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"snapshot {path} is format version {payload.get('version')!r}; this build reads {SNAPSHOT_VERSION}"
        )
    documents = {
        d["doc_id"]: DocMeta(d["doc_id"], d["category"], d["title"], d["uri"], d.get("format", "plain"))
        for d in payload["documents"]
    }
    chunks = [
        Chunk(c["chunk_id"], c["doc_id"], c["ordinal"], c["text"], c["token_count"]) for c in payload["chunks"]
    ]
    vectors = [[float(x) for x in vec] for vec in payload["vectors"]]
    if len(chunks) != len(vectors):
        raise SnapshotError(f"snapshot {path}: {len(chunks)} chunks but {len(vectors)} vectors")
    chunking_raw = payload["chunking"]
    return KnowledgeBase(
        documents=documents,
        pairs=list(zip(chunks, vectors)),
        chunking=ChunkingParams(chunking_raw["chunk_size"], chunking_raw["overlap"]),
        embedding_meta=payload["embedding"],
        content_hash=hashlib.sha256(raw_bytes).hexdigest(),
    )
