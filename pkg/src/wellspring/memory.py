"""Dual-tier conversation memory.

Per session: a short-term window of the last 5 turns, plus a long-term store
that embeds every past (query, response) pair and recalls the top-K most
similar to the current query. The two tiers are fused into one deduplicated
memory state per turn.

A session's memory is mutated by at most one in-flight turn at a time (the
service serializes per session); distinct sessions share nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .embedding import EmbeddingVector, cosine_similarity
from .errors import ProviderError
from .runtime import SystemClock

SHORT_TERM_WINDOW = 5
DEFAULT_RECALL_K = 3

# Query and response are joined with a single newline before embedding:
# unambiguous, and display code can split the stored text back apart.
PAIR_SEPARATOR = "\n"


@dataclass(frozen=True)
class ConversationTurn:
    turn_index: int
    query: str
    response: str
    timestamp: str = ""


@dataclass
class MemoryEntry:
    turn_index: int
    text: str
    embedding: Optional[EmbeddingVector]  # None while the embed call is pending retry


@dataclass(frozen=True)
class MemoryState:
    """Fused memory for one turn.

    ``fused`` lists (turn, tier) pairs: the short-term window first (in
    chronological order), then recalled long-term turns that fall outside
    the window. No turn appears twice.
    """

    short_term: list[ConversationTurn]
    long_term: list[MemoryEntry]
    fused: list[tuple[ConversationTurn, str]]
    warnings: tuple[str, ...] = ()

    def used_indices(self) -> dict[str, list[int]]:
        return {
            "short_term": [t.turn_index for t, tier in self.fused if tier == "short_term"],
            "long_term": [t.turn_index for t, tier in self.fused if tier == "long_term"],
        }


@dataclass
class SessionMemory:
    """One session's history, long-term store, and append-only log."""

    session_id: str
    provider: object
    clock: Callable[[], str] = field(default_factory=SystemClock)
    log_path: Optional[Path] = None
    turns: list[ConversationTurn] = field(default_factory=list)
    entries: list[MemoryEntry] = field(default_factory=list)
    turn_meta: dict[int, dict] = field(default_factory=dict)

    def record_turn(self, query: str, response: str, meta: Optional[dict] = None) -> MemoryEntry:
        """Append the turn, embed query+response into the long-term store,
        and persist one log record. A provider failure leaves the embedding
        pending (excluded from recall, retried on later calls) instead of
        losing the turn.
        """
        self._retry_pending()
        turn = ConversationTurn(
            turn_index=len(self.turns) + 1,
            query=query,
            response=response,
            timestamp=self.clock(),
        )
        text = query + PAIR_SEPARATOR + response
        try:
            embedding: Optional[EmbeddingVector] = self.provider.embed_text(text)
        except ProviderError:
            embedding = None
        entry = MemoryEntry(turn_index=turn.turn_index, text=text, embedding=embedding)
        self.turns.append(turn)
        self.entries.append(entry)
        if meta is not None:
            self.turn_meta[turn.turn_index] = meta
        self._append_log(
            {
                "record": "turn",
                "turn_index": turn.turn_index,
                "query": query,
                "response": response,
                "timestamp": turn.timestamp,
                "embedding": embedding,
                "meta": meta or {},
            }
        )
        return entry

    def short_term(self) -> list[ConversationTurn]:
        """Last 5 recorded turns, chronological."""
        return self.turns[-SHORT_TERM_WINDOW:]

    def long_term_recall(self, query: str, k: int = DEFAULT_RECALL_K) -> list[MemoryEntry]:
        entries, _ = self._recall(query, k)
        return entries

    def build_memory(self, query: str, k: int = DEFAULT_RECALL_K) -> MemoryState:
        """Short-term window plus long-term recall, union-deduplicated:
        recalled turns already inside the window are dropped.
        """
        short = self.short_term()
        long_entries, warnings = self._recall(query, k)
        window = {t.turn_index for t in short}
        fused: list[tuple[ConversationTurn, str]] = [(t, "short_term") for t in short]
        for entry in long_entries:
            if entry.turn_index in window:
                continue
            fused.append((self.turns[entry.turn_index - 1], "long_term"))
        return MemoryState(short_term=short, long_term=long_entries, fused=fused, warnings=tuple(warnings))

    # -- internals -------------------------------------------------------

    def _recall(self, query: str, k: int) -> tuple[list[MemoryEntry], list[str]]:
        self._retry_pending()
        if k <= 0 or not self.entries:
            return [], []
        try:
            query_vec = self.provider.embed_text(query)
        except ProviderError as exc:
            return [], [f"long-term recall skipped, query embedding failed: {exc}"]
        scored = [
            (cosine_similarity(entry.embedding, query_vec), entry)
            for entry in self.entries
            if entry.embedding is not None
        ]
        # Similarity descending; ties go to the more recent turn.
        scored.sort(key=lambda pair: (-pair[0], -pair[1].turn_index))
        return [entry for _, entry in scored[:k]], []

    def _retry_pending(self) -> None:
        for entry in self.entries:
            if entry.embedding is not None:
                continue
            try:
                entry.embedding = self.provider.embed_text(entry.text)
            except ProviderError:
                continue
            self._append_log(
                {"record": "embedding", "turn_index": entry.turn_index, "embedding": entry.embedding}
            )

    def _append_log(self, record: dict) -> None:
        if self.log_path is None:
            return
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    @classmethod
    def load(
        cls,
        session_id: str,
        log_path: Path,
        provider,
        clock: Optional[Callable[[], str]] = None,
    ) -> "SessionMemory":
        """Replay an append-only log into a live session."""
        session = cls(
            session_id=session_id,
            provider=provider,
            clock=clock or SystemClock(),
            log_path=log_path,
        )
        if not log_path.is_file():
            return session
        for line in log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if record["record"] == "turn":
                session.turns.append(
                    ConversationTurn(
                        turn_index=record["turn_index"],
                        query=record["query"],
                        response=record["response"],
                        timestamp=record["timestamp"],
                    )
                )
                session.entries.append(
                    MemoryEntry(
                        turn_index=record["turn_index"],
                        text=record["query"] + PAIR_SEPARATOR + record["response"],
                        embedding=record["embedding"],
                    )
                )
                if record.get("meta"):
                    session.turn_meta[record["turn_index"]] = record["meta"]
            elif record["record"] == "embedding":
                for entry in session.entries:
                    if entry.turn_index == record["turn_index"]:
                        entry.embedding = record["embedding"]
        return session
