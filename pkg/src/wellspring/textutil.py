"""Shared text helpers.

One tokenizer is used for both the stub embedding and the sparse query/index
side so that retrieval behaviour stays deterministic and model-free.
"""

import re

_TOKEN_RE = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation boundaries."""
    return _TOKEN_RE.findall(text.lower())
