"""Scoring kernel backend selection.

The compiled extension is preferred when it built; the pure-Python module is
the always-available fallback with identical semantics. Set
``WELLSPRING_KERNELS=python`` (or ``compiled``) to force a backend, e.g. for
the benchmark in ``benchmarks/bench_kernels.py``.
"""

import os

from . import _pykernels

_forced = os.environ.get("WELLSPRING_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = _pykernels
elif _forced == "compiled":
    from . import _ckernels as _impl  # ImportError here is deliberate: the override was explicit
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
dense_scores = _impl.dense_scores
bm25_scores = _impl.bm25_scores

__all__ = ["BACKEND", "dense_scores", "bm25_scores"]
