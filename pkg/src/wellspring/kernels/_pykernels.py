"""Pure-Python scoring kernels.

These are the reference semantics for the hot loops: the compiled extension
in ``_ckernels.pyx`` mirrors them operation-for-operation (same accumulation
order) so both backends agree to the last ulp on the same inputs.

All buffers are flat ``array('d')`` / ``array('q')`` values so the two
backends can share data without copies.
"""

from array import array
from math import sqrt

BACKEND = "python"


def dense_scores(flat: array, n: int, d: int, query: array) -> array:
    """Cosine similarity of ``query`` against each row of a row-major matrix.

    ``flat`` holds ``n`` rows of ``d`` doubles. Rows (or a query) with zero
    norm score 0.0 rather than raising: retrieval must keep ranking even when
    a degenerate chunk slipped into the corpus.
    """
    out = array("d", bytes(8 * n))
    qq = 0.0
    for j in range(d):
        qq += query[j] * query[j]
    if qq == 0.0:
        return out
    qnorm = sqrt(qq)
    for i in range(n):
        base = i * d
        dot = 0.0
        rr = 0.0
        for j in range(d):
            v = flat[base + j]
            dot += v * query[j]
            rr += v * v
        if rr != 0.0:
            out[i] = dot / (sqrt(rr) * qnorm)
    return out


def bm25_scores(
    n: int,
    doc_len: array,
    avgdl: float,
    k1: float,
    b: float,
    idfs: array,
    term_rows: list[array],
    term_tfs: list[array],
) -> array:
    """Accumulate Okapi BM25 contributions, term-major.

    For query term ``t``, ``term_rows[t]`` / ``term_tfs[t]`` are parallel
    arrays of row indices and in-row term frequencies, and ``idfs[t]`` its
    idf. Rows never touched by a posting keep score 0.0 (a term absent from
    a chunk contributes nothing).
    """
    out = array("d", bytes(8 * n))
    for t in range(len(idfs)):
        idf = idfs[t]
        rows = term_rows[t]
        tfs = term_tfs[t]
        for p in range(len(rows)):
            i = rows[p]
            tf = tfs[p]
            denom = tf + k1 * (1.0 - b + b * doc_len[i] / avgdl)
            out[i] += idf * tf * (k1 + 1.0) / denom
    return out
