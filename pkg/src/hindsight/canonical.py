"""Canonical JSON: the single wire and storage format.

Canonical form is UTF-8 JSON with sorted keys, compact separators, and no
non-finite floats. Every persisted artifact (event log lines, snapshots,
API responses) is rendered through `dumps` so byte-level comparisons and
hashes are meaningful.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def dumps(obj: Any) -> str:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def loads(text: str | bytes) -> Any:
    return json.loads(text)


def digest(obj: Any) -> str:
    """SHA-256 hex digest of the canonical serialization."""
    return hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()
