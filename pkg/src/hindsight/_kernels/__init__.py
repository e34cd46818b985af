"""Kernel backend selection.

Importing this package picks the compiled extension when it built, and the
numpy fallback otherwise. `BACKEND` names the active choice; `get_backend`
returns a specific one (the benchmark compares them side by side).
"""

from __future__ import annotations

from types import ModuleType

from . import fallback

try:
    from . import _core as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else fallback

BACKEND: str = "compiled" if _compiled is not None else "fallback"

fnv1a_counts = _active.fnv1a_counts
dot_scores = _active.dot_scores


def available_backends() -> list[str]:
    names = ["fallback"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name: str) -> ModuleType:
    if name == "fallback":
        return fallback
    if name == "compiled" and _compiled is not None:
        return _compiled
    raise ValueError(f"kernel backend '{name}' is not available")
