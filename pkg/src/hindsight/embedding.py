"""Text embedding and the similarity algebra everything else builds on.

The default embedder is a deterministic hashed bag-of-tokens: lowercase,
split on non-alphanumeric runs, FNV-1a hash each token into one of `dims`
buckets, L2-normalize the counts. It needs no model download, the same
text always yields bit-identical vectors, and it provides exactly what the
drift/resonance machinery requires: a vector space with cosine.

An external HTTP provider is the hook for transformer embeddings
(POST {"texts": [...]} -> {"vectors": [[...]]}).

Degenerate (zero-norm) vectors carry no alignment evidence, so cosine
returns None for them and callers map that marker per their own contract.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, ExternalServiceUnavailable

DEFAULT_DIMS = 256
MIN_DIMS = 8

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-dimension real vector with its L2 norm cached at construction."""

    dims: int
    values: np.ndarray
    norm: float

    @classmethod
    def from_values(cls, values: np.ndarray | list[float]) -> "EmbeddingVector":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("embedding values must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding values must be finite")
        return cls(dims=arr.shape[0], values=arr, norm=float(np.linalg.norm(arr)))

    @property
    def degenerate(self) -> bool:
        return self.norm == 0.0

    def to_json_dict(self) -> dict:
        return {"dims": self.dims, "values": self.values.tolist(), "norm": self.norm}


@dataclass(frozen=True)
class EmbedderSpec:
    """Provider configuration; endpoint is required exactly for external."""

    provider: str = "deterministic_hash"
    dims: int = DEFAULT_DIMS
    endpoint: str | None = None
    timeout_s: float = 2.0

    def __post_init__(self):
        if self.provider not in ("deterministic_hash", "external_service"):
            raise ValueError(f"unknown embedder provider '{self.provider}'")
        if self.dims < MIN_DIMS:
            raise ValueError(f"dims must be >= {MIN_DIMS}")
        if (self.provider == "external_service") != (self.endpoint is not None):
            raise ValueError("endpoint must be set exactly for the external_service provider")

    def to_json_dict(self) -> dict:
        out = {"provider": self.provider, "dims": self.dims}
        if self.endpoint is not None:
            out["endpoint"] = self.endpoint
            out["timeout_s"] = self.timeout_s
        return out


def tokenize(text: str) -> list[bytes]:
    """Lowercased alphanumeric runs, UTF-8 encoded for hashing."""
    return [t.encode("utf-8") for t in _TOKEN_RE.findall(text.lower())]


class HashedEmbedder:
    """Deterministic hashed bag-of-tokens embedder. Pure and thread-safe."""

    provider = "deterministic_hash"

    def __init__(self, dims: int = DEFAULT_DIMS, kernel=None):
        if dims < MIN_DIMS:
            raise ValueError(f"dims must be >= {MIN_DIMS}")
        self.dims = dims
        self._kernel = kernel if kernel is not None else _kernels

    def raw_counts(self, text: str) -> np.ndarray:
        return self._kernel.fnv1a_counts(tokenize(text), self.dims)

    def embed(self, text: str) -> EmbeddingVector:
        counts = self.raw_counts(text)
        norm = float(np.linalg.norm(counts))
        if norm > 0.0:
            counts = counts / norm
            norm = 1.0
        return EmbeddingVector(dims=self.dims, values=counts, norm=norm)

    def embed_many(self, texts: list[str]) -> list[EmbeddingVector]:
        return [self.embed(t) for t in texts]


class ExternalEmbedder:
    """HTTP embedding provider. Concurrent requests are allowed; each call
    applies the configured timeout."""

    provider = "external_service"

    def __init__(self, endpoint: str, dims: int = DEFAULT_DIMS, timeout_s: float = 2.0):
        self.endpoint = endpoint
        self.dims = dims
        self.timeout_s = timeout_s

    def embed_many(self, texts: list[str]) -> list[EmbeddingVector]:
        import httpx

        try:
            response = httpx.post(
                self.endpoint, json={"texts": texts}, timeout=self.timeout_s
            )
            response.raise_for_status()
            vectors = response.json()["vectors"]
        except Exception as exc:
            raise ExternalServiceUnavailable(str(exc)) from exc
        if len(vectors) != len(texts):
            raise ExternalServiceUnavailable("embedding service returned wrong vector count")
        out = []
        for vec in vectors:
            if len(vec) != self.dims:
                raise ExternalServiceUnavailable(
                    f"embedding service returned {len(vec)} dims, expected {self.dims}"
                )
            out.append(EmbeddingVector.from_values(vec))
        return out

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_many([text])[0]


def build_embedder(spec: EmbedderSpec):
    if spec.provider == "deterministic_hash":
        return HashedEmbedder(dims=spec.dims)
    return ExternalEmbedder(endpoint=spec.endpoint, dims=spec.dims, timeout_s=spec.timeout_s)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float | None:
    """Cosine similarity, or None when either vector is degenerate."""
    if a.dims != b.dims:
        raise DimensionMismatch(f"dims {a.dims} != {b.dims}")
    if a.norm == 0.0 or b.norm == 0.0:
        return None
    value = float(np.dot(a.values, b.values)) / (a.norm * b.norm)
    if math.isnan(value):
        return None
    return value
