"""Clock and id sources.

Injected everywhere a timestamp or fresh id is minted so that a deterministic
deployment (stub providers, fixed config) replays to byte-identical
transcripts and logs.
"""

from __future__ import annotations

import datetime as _dt
import uuid

TICK_EPOCH = _dt.datetime(2026, 1, 1, tzinfo=_dt.timezone.utc)


class SystemClock:
    def __call__(self) -> str:
        return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class TickClock:
    """Deterministic clock: starts at a fixed epoch, advances 1s per call."""

    def __init__(self, start: _dt.datetime = TICK_EPOCH):
        self._next = start

    def __call__(self) -> str:
        stamp = self._next.isoformat(timespec="seconds")
        self._next += _dt.timedelta(seconds=1)
        return stamp


class UuidIds:
    def __call__(self) -> str:
        return uuid.uuid4().hex


class SequentialIds:
    """Deterministic ids s0001, s0002, ... ``start`` lets a restarted store
    resume past already-persisted sessions."""

    def __init__(self, prefix: str = "s", start: int = 1):
        self.prefix = prefix
        self._next = start

    def __call__(self) -> str:
        value = f"{self.prefix}{self._next:04d}"
        self._next += 1
        return value
