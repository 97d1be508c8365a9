#!/usr/bin/env python3
"""Benchmark the pure-Python scoring kernels against the compiled extension.

Builds a synthetic corpus (flat embedding matrix + BM25 posting arrays),
runs both backends on identical buffers, and reports per-query times and the
speedup. Also asserts the two backends agree, so a benchmark run doubles as
a parity check.

Usage: python benchmarks/bench_kernels.py [--chunks 20000] [--dim 64] [--queries 20]
"""

import argparse
import random
import statistics
import time
from array import array

from wellspring.kernels import _pykernels

try:
    from wellspring.kernels import _ckernels
except ImportError:
    _ckernels = None


def _time_per_call(fn, args, repeats):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        result = fn(*args)
        times.append(time.perf_counter() - started)
    return statistics.median(times), result


def bench_dense(n, dim, queries, rng):
    flat = array("d", (rng.uniform(-1, 1) for _ in range(n * dim)))
    query_vecs = [array("d", (rng.uniform(-1, 1) for _ in range(dim))) for _ in range(queries)]

    rows = []
    reference = None
    for backend in [b for b in (_pykernels, _ckernels) if b is not None]:
        per_query = []
        last = None
        for qv in query_vecs:
            elapsed, last = _time_per_call(backend.dense_scores, (flat, n, dim, qv), repeats=1)
            per_query.append(elapsed)
        if reference is None:
            reference = list(last)
        else:
            worst = max(abs(a - b) for a, b in zip(reference, last))
            assert worst < 1e-12, f"backend disagreement: {worst}"
        rows.append((backend.BACKEND, statistics.median(per_query)))
    return rows


def bench_bm25(n, vocab_size, query_terms, rng):
    doc_len = array("d", (float(rng.randint(20, 140)) for _ in range(n)))
    avgdl = sum(doc_len) / n
    # Zipf-ish document frequencies: a few common terms, many rare ones.
    term_rows, term_tfs, idfs = [], [], array("d")
    for t in range(query_terms):
        df = max(1, int(n / (2 ** (t + 1))))
        rows = sorted(rng.sample(range(n), df))
        term_rows.append(array("q", rows))
        term_tfs.append(array("d", (float(rng.randint(1, 5)) for _ in rows)))
        idfs.append(1.0 + t * 0.7)

    rows_out = []
    reference = None
    for backend in [b for b in (_pykernels, _ckernels) if b is not None]:
        elapsed, result = _time_per_call(
            backend.bm25_scores, (n, doc_len, avgdl, 1.2, 0.75, idfs, term_rows, term_tfs), repeats=5
        )
        if reference is None:
            reference = list(result)
        else:
            worst = max(abs(a - b) for a, b in zip(reference, result))
            assert worst < 1e-12, f"backend disagreement: {worst}"
        rows_out.append((backend.BACKEND, elapsed))
    return rows_out


def _print_table(title, rows):
    print(f"\n{title}")
    base = dict(rows).get("python")
    for name, seconds in rows:
        speedup = f"{base / seconds:6.1f}x" if base and name != "python" else "  1.0x"
        print(f"  {name:<10} {seconds * 1000:10.3f} ms/query  {speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--chunks", type=int, default=20_000)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--queries", type=int, default=20)
    args = parser.parse_args()

    if _ckernels is None:
        print("note: compiled kernels not built; benchmarking the pure backend only")
    rng = random.Random(12345)

    print(f"corpus: {args.chunks} chunks, dim {args.dim}, {args.queries} queries")
    _print_table("dense cosine scan", bench_dense(args.chunks, args.dim, args.queries, rng))
    _print_table("bm25 posting accumulation (4 query terms)", bench_bm25(args.chunks, 2000, 4, rng))


if __name__ == "__main__":
    main()
