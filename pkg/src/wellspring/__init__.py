"""Knowledge-grounded, memory-augmented wellbeing chat engine.

Subpackages and modules:

- ``embedding`` — text-to-vector providers (deterministic stub + remote HTTP)
- ``corpus`` — manifest loading, chunking, embedded-corpus construction
- ``index`` — BM25 inverted index, dense cosine index, snapshots
- ``retrieval`` — sparse/dense/web arms fused with reciprocal-rank fusion
- ``memory`` — short-term window + long-term vector recall per session
- ``generation`` — prompt assembly, LLM providers, fail-closed safety gate
- ``evaluation`` — P/R@k, token F1, ROUGE-L, semantic-sim harness
- ``service`` — FastAPI app (sessions, messages, transcripts, health)
- ``kernels`` — compiled/pure scoring kernels selected at import
"""

__version__ = "0.1.0"

from .embedding import StubEmbeddingProvider, cosine_similarity
from .generation import ChatEngine
from .index import build_indexes, load_snapshot, save_snapshot
from .retrieval import FusionConfig, retrieve

__all__ = [
    "__version__",
    "StubEmbeddingProvider",
    "cosine_similarity",
    "ChatEngine",
    "build_indexes",
    "load_snapshot",
    "save_snapshot",
    "FusionConfig",
    "retrieve",
]
