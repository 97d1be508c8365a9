"""BM25 conformance, dense-scan exactness, and snapshot persistence."""

import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import make_kb
from wellspring.corpus import Chunk, ChunkingParams, SourceDocument
from wellspring.embedding import StubEmbeddingProvider
from wellspring.errors import ContractViolation, SnapshotError
from wellspring.index import (
    bm25_score,
    build_indexes,
    dense_search,
    load_snapshot,
    save_snapshot,
    sparse_search,
)

TOY_TEXTS = {"d1": "stress sleep", "d2": "sleep habits", "d3": "exam stress stress"}


@pytest.fixture(scope="module")
def toy_kb():
    return make_kb(TOY_TEXTS, StubEmbeddingProvider(64))


@pytest.fixture(scope="module")
def toy_oracle():
    return oracles.ReferenceBM25(TOY_TEXTS)


def _pairs(texts: dict[str, str], provider):
    return [
        (Chunk(f"{doc_id}#0", doc_id, 0, body, len(body.split())), provider.embed_text(body))
        for doc_id, body in texts.items()
    ]


class TestBuildIndexes:
    def test_empty_input(self):
        sparse, dense = build_indexes([])
        assert sparse.N == 0
        assert sparse.avgdl == 0.0
        assert len(dense) == 0

    def test_statistics(self, stub_provider):
        sparse, dense = build_indexes(_pairs(TOY_TEXTS, stub_provider))
        assert sparse.N == 3
        assert sparse.avgdl == pytest.approx((2 + 2 + 3) / 3)
        assert sparse.df["stress"] == 2
        assert sparse.df["habits"] == 1
        assert sparse.doc_len["d3#0"] == 3
        assert set(dense.chunk_ids) == set(sparse.chunk_ids)

    def test_duplicate_chunk_id_is_a_build_error(self, stub_provider):
        chunk = Chunk("same#0", "same", 0, "text", 1)
        vec = stub_provider.embed_text("text")
        with pytest.raises(ContractViolation, match="same#0"):
            build_indexes([(chunk, vec), (chunk, vec)])


class TestBm25Score:
    def test_absent_term_contributes_zero(self, toy_kb):
        assert bm25_score(["habits"], "d1#0", toy_kb.sparse) == 0.0

    def test_empty_query_scores_zero(self, toy_kb):
        assert bm25_score([], "d3#0", toy_kb.sparse) == 0.0

    def test_matches_reference_oracle_on_toy_corpus(self, toy_kb, toy_oracle):
        for doc_id in TOY_TEXTS:
            for query in ("stress", "sleep habits", "exam", "stress stress"):
                terms = query.split()
                expected = toy_oracle.score(terms, doc_id)
                actual = bm25_score(terms, f"{doc_id}#0", toy_kb.sparse)
                assert actual == pytest.approx(expected, abs=1e-9)

    def test_toy_ranking_d3_d1_d2(self, toy_kb):
        scores = {d: bm25_score(["stress"], f"{d}#0", toy_kb.sparse) for d in TOY_TEXTS}
        assert scores["d3"] > scores["d1"] > scores["d2"] == 0.0

    def test_unknown_chunk_id_raises(self, toy_kb):
        with pytest.raises(ContractViolation):
            bm25_score(["stress"], "missing#0", toy_kb.sparse)

    def test_monotone_in_tf_for_equal_length(self, stub_provider):
        texts = {"a": "term pad pad pad", "b": "term term pad pad"}
        sparse, _ = build_indexes(_pairs(texts, stub_provider))
        low = bm25_score(["term"], "a#0", sparse)
        high = bm25_score(["term"], "b#0", sparse)
        assert high > low

    def test_saturation_bound(self, stub_provider):
        texts = {"a": " ".join(["term"] * 50), "b": "other words entirely here"}
        sparse, _ = build_indexes(_pairs(texts, stub_provider))
        bound = sparse.idf("term") * (1.2 + 1.0)
        assert bm25_score(["term"], "a#0", sparse) < bound


class TestSparseSearch:
    def test_k_zero_is_empty(self, toy_kb):
        assert sparse_search("stress", 0, toy_kb.sparse) == []

    def test_single_chunk_corpus(self, stub_provider):
        sparse, _ = build_indexes(_pairs({"only": "lonely token"}, stub_provider))
        hits = sparse_search("token", 5, sparse)
        assert [h.chunk_id for h in hits] == ["only#0"]
        assert hits[0].arm == "sparse"

    def test_toy_query_order_matches_oracle(self, toy_kb, toy_oracle):
        hits = sparse_search("stress", 2, toy_kb.sparse)
        assert [h.chunk_id for h in hits] == ["d3#0", "d1#0"]
        ranked = toy_oracle.rank("stress")
        for hit, (doc_id, score) in zip(hits, ranked):
            assert hit.chunk_id == f"{doc_id}#0"
            assert hit.score == pytest.approx(score, abs=1e-9)

    def test_no_shared_terms_means_no_hits(self, toy_kb):
        assert sparse_search("quantum flux", 5, toy_kb.sparse) == []

    def test_repeated_query_terms_count_twice(self, toy_kb):
        single = sparse_search("stress", 3, toy_kb.sparse)
        double = sparse_search("stress stress", 3, toy_kb.sparse)
        assert [h.chunk_id for h in single] == [h.chunk_id for h in double]
        for s, d in zip(single, double):
            assert d.score == pytest.approx(2 * s.score, abs=1e-12)

    def test_deterministic(self, toy_kb):
        first = sparse_search("sleep stress", 3, toy_kb.sparse)
        second = sparse_search("sleep stress", 3, toy_kb.sparse)
        assert first == second


class TestDenseSearch:
    def _random_entries(self, n, dim, seed):
        rng = random.Random(seed)
        return {f"c{i:03d}": [rng.uniform(-1, 1) for _ in range(dim)] for i in range(n)}

    def _index_of(self, entries):
        from wellspring.index import DenseIndex

        return DenseIndex(list(entries), [entries[cid] for cid in entries])

    def test_k_larger_than_corpus_returns_everything_sorted(self):
        entries = self._random_entries(5, 8, seed=3)
        index = self._index_of(entries)
        hits = dense_search([1.0] * 8, 50, index)
        assert len(hits) == 5
        assert all(a.score >= b.score for a, b in zip(hits, hits[1:]))

    def test_exact_stored_vector_ranks_first_with_one(self):
        entries = self._random_entries(10, 8, seed=4)
        index = self._index_of(entries)
        hits = dense_search(entries["c004"], 3, index)
        assert hits[0].chunk_id == "c004"
        assert hits[0].score == pytest.approx(1.0, abs=1e-9)

    def test_matches_naive_full_scan_oracle(self):
        entries = self._random_entries(20, 16, seed=5)
        index = self._index_of(entries)
        rng = random.Random(99)
        for _ in range(10):
            query = [rng.uniform(-1, 1) for _ in range(16)]
            hits = dense_search(query, 5, index)
            expected = oracles.naive_dense_topk(entries, query, 5)
            assert [(h.chunk_id) for h in hits] == [cid for cid, _ in expected]
            for hit, (_, score) in zip(hits, expected):
                assert hit.score == pytest.approx(score, abs=1e-12)

    def test_topk_prefix_property(self):
        entries = self._random_entries(30, 8, seed=6)
        index = self._index_of(entries)
        query = [0.5] * 8
        for k in range(1, 12):
            smaller = dense_search(query, k, index)
            bigger = dense_search(query, k + 1, index)
            assert bigger[:k] == smaller

    def test_dim_mismatch_raises(self):
        index = self._index_of(self._random_entries(3, 8, seed=7))
        with pytest.raises(ContractViolation):
            dense_search([1.0] * 4, 2, index)

    def test_empty_index_returns_empty(self):
        from wellspring.index import DenseIndex

        assert dense_search([1.0] * 8, 3, DenseIndex([], [], dim=8)) == []


class TestSnapshot:
    def _save(self, tmp_path, provider):
        docs = [
            SourceDocument("d1", "clinical", "One", "u:1", "stress sleep"),
            SourceDocument("d2", "scientific", "Two", "u:2", "sleep habits"),
        ]
        pairs = _pairs({d.doc_id: d.body for d in docs}, provider)
        path = tmp_path / "index.json"
        digest = save_snapshot(path, docs, pairs, ChunkingParams(), {"provider": "stub", "dim": 64})
        return path, digest, pairs

    def test_round_trip(self, tmp_path, stub_provider):
        path, digest, pairs = self._save(tmp_path, stub_provider)
        kb = load_snapshot(path)
        assert kb.content_hash == digest
        assert set(kb.chunks) == {"d1#0", "d2#0"}
        assert kb.documents["d2"].category == "scientific"
        assert kb.dense.vector("d1#0") == pairs[0][1]
        assert kb.sparse.N == 2

    def test_re_save_is_byte_identical(self, tmp_path, stub_provider):
        path1, digest1, _ = self._save(tmp_path / "a", stub_provider)
        path2, digest2, _ = self._save(tmp_path / "b", stub_provider)
        assert path1.read_bytes() == path2.read_bytes()
        assert digest1 == digest2

    def test_version_mismatch_fails_loudly(self, tmp_path, stub_provider):
        path, _, _ = self._save(tmp_path, stub_provider)
        text = path.read_text(encoding="utf-8").replace('"version":1', '"version":99')
        path.write_text(text, encoding="utf-8")
        with pytest.raises(SnapshotError, match="99"):
            load_snapshot(path)

    def test_wrong_magic_fails(self, tmp_path):
        path = tmp_path / "bogus.json"
        path.write_text('{"magic": "something.else", "version": 1}', encoding="utf-8")
        with pytest.raises(SnapshotError, match="magic"):
            load_snapshot(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SnapshotError):
            load_snapshot(tmp_path / "absent.json")


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_dense_search_determinism_property(seed):
    rng = random.Random(seed)
    provider = StubEmbeddingProvider(16)
    texts = {f"d{i}": " ".join(rng.choices("alpha beta gamma delta".split(), k=5)) for i in range(6)}
    kb = make_kb(texts, provider)
    query = provider.embed_text("alpha delta")
    assert dense_search(query, 4, kb.dense) == dense_search(query, 4, kb.dense)
