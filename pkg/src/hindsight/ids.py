"""Sortable 128-bit identifiers.

Layout follows the ULID convention: 48-bit millisecond timestamp followed
by 80 random bits, rendered as 26 characters of Crockford base32. Within a
process the generator is monotonic — ids minted in the same millisecond
increment the random tail — so lexicographic order always equals creation
order, which the version-chain and event-log invariants rely on.
"""

from __future__ import annotations

import secrets
import threading
import time

_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"

_lock = threading.Lock()
_last_ms = -1
_last_tail = 0


def now_ms() -> int:
    """Current UTC time in integer milliseconds."""
    return time.time_ns() // 1_000_000


def _encode(value: int, length: int) -> str:
    chars = []
    for _ in range(length):
        chars.append(_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


def new_id(at_ms: int | None = None) -> str:
    """Mint a new sortable id, optionally pinned to a timestamp."""
    global _last_ms, _last_tail
    ms = now_ms() if at_ms is None else at_ms
    with _lock:
        if ms <= _last_ms:
            # Same (or rewound) millisecond: bump the tail to stay monotonic.
            ms = _last_ms
            _last_tail += 1
        else:
            _last_ms = ms
            _last_tail = secrets.randbits(80)
        tail = _last_tail & ((1 << 80) - 1)
    return _encode(ms & ((1 << 48) - 1), 10) + _encode(tail, 16)


def timestamp_of(identifier: str) -> int:
    """Recover the millisecond timestamp prefix from an id."""
    value = 0
    for ch in identifier[:10]:
        value = (value << 5) | _ALPHABET.index(ch)
    return value
