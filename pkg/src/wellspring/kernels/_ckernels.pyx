# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernels.

Mirrors ``_pykernels`` exactly: same formulas, same accumulation order, so
results match the pure-Python backend to the last ulp. Keep the two files in
sync when touching either.
"""

from array import array

from libc.math cimport sqrt


BACKEND = "compiled"


def dense_scores(double[::1] flat, Py_ssize_t n, Py_ssize_t d, double[::1] query):
    out = array("d", bytes(8 * n))
    cdef double[::1] o = out
    cdef Py_ssize_t i, j, base
    cdef double qq = 0.0, qnorm, dot, rr, v
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
            o[i] = dot / (sqrt(rr) * qnorm)
    return out


def bm25_scores(
    Py_ssize_t n,
    double[::1] doc_len,
    double avgdl,
    double k1,
    double b,
    double[::1] idfs,
    list term_rows,
    list term_tfs,
):
    out = array("d", bytes(8 * n))
    cdef double[::1] o = out
    cdef long long[::1] rows
    cdef double[::1] tfs
    cdef Py_ssize_t t, p, i
    cdef double idf, tf, denom
    for t in range(idfs.shape[0]):
        idf = idfs[t]
        rows = term_rows[t]
        tfs = term_tfs[t]
        for p in range(rows.shape[0]):
            i = rows[p]
            tf = tfs[p]
            denom = tf + k1 * (1.0 - b + b * doc_len[i] / avgdl)
            o[i] += idf * tf * (k1 + 1.0) / denom
    return out
