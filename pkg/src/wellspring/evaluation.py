"""Retrieval and generation quality metrics, plus the batch harness.

Conventions, pinned so numbers are self-consistent and reproducible:

* P@k uses a fixed denominator k; slots the retriever left empty count as
  misses. R@k divides by |gold|.
* Lexical metrics normalize SQuAD-style: lowercase, strip punctuation,
  collapse whitespace (articles are kept). token_f1 is bag-of-token overlap,
  rouge_l is token-level LCS with beta=1; both take the max over gold
  answers.
* "semantic_sim" is the cosine similarity of provider embeddings between
  prediction and best gold. It is NOT BERTScore and is never labeled as
  such.
* Dataset aggregation is a macro average (mean of per-example scores).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .embedding import cosine_similarity
from .errors import ContractViolation, ProviderError

_PUNCT_RE = re.compile(r"[^\w\s]")


def normalize_text(text: str) -> list[str]:
    """Lowercase, replace punctuation with spaces, split on whitespace."""
    return _PUNCT_RE.sub(" ", text.lower()).split()


def precision_at_k(retrieved: Sequence[str], gold: set[str], k: int) -> float:
    if k < 1:
        raise ContractViolation(f"k must be >= 1, got {k}")
    hits = sum(1 for cid in retrieved[:k] if cid in gold)
    return hits / k


def recall_at_k(retrieved: Sequence[str], gold: set[str], k: int) -> float:
    if not gold:
        raise ContractViolation("recall_at_k requires a non-empty gold set")
    hits = sum(1 for cid in retrieved[:k] if cid in gold)
    return hits / len(gold)


def _f1_single(prediction: str, gold: str) -> float:
    pred = normalize_text(prediction)
    ref = normalize_text(gold)
    if not pred and not ref:
        return 1.0
    if not pred or not ref:
        return 0.0
    ref_counts: dict[str, int] = {}
    for tok in ref:
        ref_counts[tok] = ref_counts.get(tok, 0) + 1
    overlap = 0
    for tok in pred:
        if ref_counts.get(tok, 0) > 0:
            ref_counts[tok] -= 1
            overlap += 1
    if overlap == 0:
        return 0.0
    p = overlap / len(pred)
    r = overlap / len(ref)
    return 2 * p * r / (p + r)


def token_f1(prediction: str, gold_answers: Sequence[str]) -> float:
    """Bag-of-token F1 against each gold answer; best gold wins."""
    if not gold_answers:
        return 0.0
    return max(_f1_single(prediction, gold) for gold in gold_answers)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Classic two-row DP.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        row = [0] * (len(b) + 1)
        for j, tok_b in enumerate(b, start=1):
            row[j] = prev[j - 1] + 1 if tok_a == tok_b else max(prev[j], row[j - 1])
        prev = row
    return prev[len(b)]


def _rouge_l_single(prediction: str, gold: str) -> float:
    pred = normalize_text(prediction)
    ref = normalize_text(gold)
    if not pred or not ref:
        return 0.0
    lcs = _lcs_length(pred, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(pred)
    r = lcs / len(ref)
    return 2 * p * r / (p + r)


def rouge_l(prediction: str, gold_answers: Sequence[str]) -> float:
    """Token-level LCS F-measure (beta=1); best gold wins; empty side -> 0."""
    if not gold_answers:
        return 0.0
    return max(_rouge_l_single(prediction, gold) for gold in gold_answers)


def semantic_similarity(prediction: str, gold_answers: Sequence[str], provider) -> float:
    """Provider-embedding cosine between prediction and best gold answer."""
    if not gold_answers:
        return 0.0
    pred_vec = provider.embed_text(prediction)
    return max(cosine_similarity(pred_vec, provider.embed_text(gold)) for gold in gold_answers)


# --- datasets and reports -------------------------------------------------------


@dataclass(frozen=True)
class QaExample:
    query: str
    gold_chunk_ids: frozenset[str]
    gold_answers: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.gold_chunk_ids:
            raise ContractViolation(f"example {self.query!r} has no gold chunk ids")
        if not self.gold_answers:
            raise ContractViolation(f"example {self.query!r} has no gold answers")


def load_qa_dataset(path: str | Path) -> list[QaExample]:
    """One JSON object per line: {"query", "gold_chunk_ids", "gold_answers"}."""
    examples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            examples.append(
                QaExample(
                    query=raw["query"],
                    gold_chunk_ids=frozenset(raw["gold_chunk_ids"]),
                    gold_answers=tuple(raw["gold_answers"]),
                )
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise ContractViolation(f"{path}:{lineno}: bad dataset record: {exc}") from exc
    return examples


def config_hash(config: Mapping) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class MetricsReport:
    kind: str  # "retrieval" | "generation"
    dataset_id: str
    config_hash: str
    rows: list[dict] = field(default_factory=list)
    failed_examples: int = 0

    def to_json(self) -> str:
        payload = {
            "schema_version": 1,
            "kind": self.kind,
            "dataset_id": self.dataset_id,
            "config_hash": self.config_hash,
            "rows": self.rows,
            "failed_examples": self.failed_examples,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def to_table(self) -> str:
        """Aligned text table, one row per method/mode."""
        if not self.rows:
            return "(no rows)"
        metric_names = list(self.rows[0]["metrics"].keys())
        name_width = max(len(r["name"]) for r in self.rows + [{"name": "method"}])
        header = "method".ljust(name_width) + "".join(f"  {m:>12}" for m in metric_names)
        lines = [header]
        for row in self.rows:
            cells = "".join(f"  {row['metrics'][m]:>12.4f}" for m in metric_names)
            lines.append(row["name"].ljust(name_width) + cells)
        return "\n".join(lines)


RetrieverFn = Callable[[str, int], list[str]]  # (query, k) -> ranked chunk_ids
PipelineFn = Callable[[str], str]  # query -> prediction text


def run_retrieval_eval(
    dataset: Sequence[QaExample],
    methods: Mapping[str, RetrieverFn],
    ks: Sequence[int] = (3, 5),
    known_chunk_ids: Optional[set[str]] = None,
    dataset_id: str = "dataset",
    config: Optional[Mapping] = None,
) -> MetricsReport:
    """Macro-averaged P@k / R@k per method.

    Gold ids are validated against the corpus before any retrieval runs, so
    a bad dataset fails fast instead of producing silently wrong numbers.
    """
    if known_chunk_ids is not None:
        for example in dataset:
            unknown = example.gold_chunk_ids - known_chunk_ids
            if unknown:
                raise ContractViolation(
                    f"example {example.query!r} references unknown chunk ids: {sorted(unknown)}"
                )
    report = MetricsReport(
        kind="retrieval", dataset_id=dataset_id, config_hash=config_hash(config or {"ks": list(ks)})
    )
    max_k = max(ks)
    for name, retriever in methods.items():
        sums = {}
        for k in ks:
            sums[f"p@{k}"] = 0.0
            sums[f"r@{k}"] = 0.0
        for example in dataset:
            retrieved = retriever(example.query, max_k)
            gold = set(example.gold_chunk_ids)
            for k in ks:
                sums[f"p@{k}"] += precision_at_k(retrieved, gold, k)
                sums[f"r@{k}"] += recall_at_k(retrieved, gold, k)
        n = len(dataset) or 1
        metrics = {key: value / n for key, value in sums.items()}
        report.rows.append({"name": name, "metrics": metrics})
    return report


def run_generation_eval(
    dataset: Sequence[QaExample],
    modes: Mapping[str, PipelineFn],
    embed_provider,
    dataset_id: str = "dataset",
    config: Optional[Mapping] = None,
) -> MetricsReport:
    """Macro-averaged token_f1 / rouge_l / semantic_sim per pipeline mode.

    A provider failure marks that example failed for that mode and excludes
    it from the mean; the count is reported rather than hidden.
    """
    report = MetricsReport(
        kind="generation", dataset_id=dataset_id, config_hash=config_hash(config or {"modes": sorted(modes)})
    )
    for name, pipeline in modes.items():
        sums = {"token_f1": 0.0, "rouge_l": 0.0, "semantic_sim": 0.0}
        evaluated = 0
        failed = 0
        for example in dataset:
            try:
                prediction = pipeline(example.query)
            except ProviderError:
                failed += 1
                continue
            golds = list(example.gold_answers)
            sums["token_f1"] += token_f1(prediction, golds)
            sums["rouge_l"] += rouge_l(prediction, golds)
            sums["semantic_sim"] += semantic_similarity(prediction, golds, embed_provider)
            evaluated += 1
        n = evaluated or 1
        report.rows.append({"name": name, "metrics": {key: value / n for key, value in sums.items()}})
        report.failed_examples += failed
    return report


# --- standard method/mode factories ---------------------------------------------


def make_retrieval_methods(kb, embed_provider, web_client, fusion) -> dict[str, RetrieverFn]:
    """The comparison set: each index arm alone, and the fused three-arm run."""
    from .index import dense_search, sparse_search
    from .retrieval import FusionConfig, retrieve

    def sparse_fn(query: str, k: int) -> list[str]:
        return [h.chunk_id for h in sparse_search(query, k, kb.sparse)]

    def dense_fn(query: str, k: int) -> list[str]:
        vec = embed_provider.embed_text(query)
        return [h.chunk_id for h in dense_search(vec, k, kb.dense)]

    def hybrid_fn(query: str, k: int) -> list[str]:
        cfg = FusionConfig(
            pool_per_arm=fusion.pool_per_arm,
            rrf_k=fusion.rrf_k,
            tau_dense=fusion.tau_dense,
            final_k=k,
        )
        bundle = retrieve(query, cfg, kb, embed_provider, web_client)
        return [h.chunk_id for h in bundle.fused]

    return {"sparse": sparse_fn, "dense": dense_fn, "hybrid": hybrid_fn}


def make_generation_modes(engine, modes: Sequence[str] = ("rag", "zero_shot")) -> dict[str, PipelineFn]:
    available: dict[str, PipelineFn] = {
        "rag": lambda query: engine.answer_once(query, use_retrieval=True),
        "zero_shot": lambda query: engine.answer_once(query, use_retrieval=False),
    }
    unknown = [m for m in modes if m not in available]
    if unknown:
        raise ContractViolation(f"unknown generation modes: {unknown} (expected rag, zero_shot)")
    return {name: available[name] for name in modes}
