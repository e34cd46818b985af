"""Drift monitoring: entropy, drift, resonance, alignment, and scans.

The scoring primitives here are pure functions over embedding vectors and
coherence weights:

  entropy    H(M) = -sum(p_i * ln(p_i)),  p_i = c_i / sum(c)
  drift      1 - cosine(v_original, v_reused), range [0, 2]
  resonance  mean cosine between a reasoning vector and a reference set

Natural log throughout (nats); the base only rescales entropy and no
invariant depends on it. Degenerate (zero-norm) embeddings are never
silently scored: drift over a degenerate pair is defined as 1.0 and the
resulting flag carries the degenerate cause.

`scan_for_drift` walks a store and emits open reports for two situations:

  reuse_divergence   a trace's head rationale has drifted from its
                     original beyond tau_drift
  reference_update   a document the trace links to was updated after
                     capture (re-versioned, or re-ingested as a successor
                     trace carrying a derived_from edge) and the update
                     drifted beyond tau_drift

Scans are idempotent: a report's identity is (trace, cause, original
version, current version), and known identities are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from . import ids
from .embedding import EmbeddingVector, cosine
from .errors import (
    AllCoherenceZero,
    AllReferencesDegenerate,
    EmptyReferenceSet,
)

if TYPE_CHECKING:  # pragma: no cover
    from .engine import Engine

OUTDATED_REFERENCE_MESSAGE = "Past rationale based on outdated guideline. Review suggested."
REUSE_DIVERGENCE_MESSAGE = "Current rationale has drifted from the original insight. Review suggested."
DEGENERATE_MESSAGE = "Rationale produced a degenerate embedding; alignment cannot be scored. Review suggested."

FLAG_CAUSES = ("reuse_divergence", "reference_update", "cross_modal", "degenerate_embedding")
FLAG_STATUSES = ("open", "accepted", "revised", "retired")


@dataclass(frozen=True)
class Thresholds:
    """Flagging thresholds; defaults are engine calibration, all configurable."""

    tau_drift: float = 0.30
    tau_res: float = 0.50
    tau_align: float = 0.70

    def __post_init__(self):
        if not 0.0 < self.tau_drift < 2.0:
            raise ValueError("tau_drift must be in (0, 2)")
        if not -1.0 < self.tau_res < 1.0:
            raise ValueError("tau_res must be in (-1, 1)")
        if not -1.0 < self.tau_align < 1.0:
            raise ValueError("tau_align must be in (-1, 1)")

    def to_json_dict(self) -> dict:
        return {
            "tau_drift": self.tau_drift,
            "tau_res": self.tau_res,
            "tau_align": self.tau_align,
        }


@dataclass(frozen=True)
class DriftReport:
    """A flagged misalignment awaiting human review."""

    flag_id: str
    trace_id: str
    original_version: str
    current_version: str | None
    external_context: str | None
    drift: float
    cause: str
    status: str
    message: str
    created_at: int

    def __post_init__(self):
        if not 0.0 <= self.drift <= 2.0:
            raise ValueError("drift must be in [0, 2]")
        if self.cause not in FLAG_CAUSES:
            raise ValueError(f"unknown cause {self.cause}")
        if self.status not in FLAG_STATUSES:
            raise ValueError(f"unknown status {self.status}")
        if (self.current_version is None) == (self.external_context is None):
            raise ValueError("exactly one of current_version/external_context must be set")

    def identity(self) -> tuple[str, str, str, str]:
        return (
            self.trace_id,
            self.cause,
            self.original_version,
            self.current_version or self.external_context or "",
        )

    def with_status(self, status: str) -> "DriftReport":
        if self.status != "open":
            raise ValueError("only open flags transition")
        return DriftReport(
            flag_id=self.flag_id,
            trace_id=self.trace_id,
            original_version=self.original_version,
            current_version=self.current_version,
            external_context=self.external_context,
            drift=self.drift,
            cause=self.cause,
            status=status,
            message=self.message,
            created_at=self.created_at,
        )

    def to_json_dict(self) -> dict:
        return {
            "flag_id": self.flag_id,
            "trace_id": self.trace_id,
            "original_version": self.original_version,
            "current_version": self.current_version,
            "external_context": self.external_context,
            "drift": self.drift,
            "cause": self.cause,
            "status": self.status,
            "message": self.message,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DriftReport":
        return cls(
            flag_id=data["flag_id"],
            trace_id=data["trace_id"],
            original_version=data["original_version"],
            current_version=data.get("current_version"),
            external_context=data.get("external_context"),
            drift=float(data["drift"]),
            cause=data["cause"],
            status=data["status"],
            message=data.get("message", ""),
            created_at=int(data["created_at"]),
        )


def contextual_entropy(coherences: Iterable[float]) -> float:
    """Shannon-style dispersion of normalized coherence weights, in nats.

    Zero-weight entries contribute nothing (0 * ln 0 := 0). Raises when no
    entry carries positive weight.
    """
    weights = [float(c) for c in coherences]
    if any(c < 0 for c in weights):
        raise ValueError("coherence weights must be non-negative")
    total = sum(weights)
    if total <= 0.0:
        raise AllCoherenceZero("no trace carries positive coherence")
    entropy = 0.0
    for c in weights:
        if c > 0.0:
            p = c / total
            entropy -= p * math.log(p)
    return max(0.0, entropy)


def insight_drift(v_original: EmbeddingVector, v_reused: EmbeddingVector) -> float:
    """Cosine distance between an insight and its reinterpretation.

    A degenerate pair scores 1.0 — no evidence of alignment; callers that
    need to distinguish that case check degeneracy via `cosine` first.
    """
    similarity = cosine(v_original, v_reused)
    if similarity is None:
        return 1.0
    return min(2.0, max(0.0, 1.0 - similarity))


def resonance(current: EmbeddingVector, references: Sequence[EmbeddingVector]) -> float:
    """Mean cosine similarity against a historical reference set.

    Degenerate references are skipped (with k reduced accordingly); it is
    an error for the reference set to be empty or entirely degenerate.
    """
    if len(references) == 0:
        raise EmptyReferenceSet("resonance needs at least one reference")
    similarities = []
    for ref in references:
        value = cosine(current, ref)
        if value is not None:
            similarities.append(value)
    if not similarities:
        raise AllReferencesDegenerate("no reference produced a defined cosine")
    value = sum(similarities) / len(similarities)
    return min(1.0, max(-1.0, value))


@dataclass(frozen=True)
class AlignmentResult:
    score: float | None  # None marks a degenerate rendering
    misaligned: bool

    def to_json_dict(self) -> dict:
        return {"score": self.score, "misaligned": self.misaligned}


def cross_modal_alignment(
    rendering_a: str,
    rendering_b: str,
    embedder,
    tau_align: float = 0.70,
) -> AlignmentResult:
    """Semantic agreement between two renderings of the same insight."""
    similarity = cosine(embedder.embed(rendering_a), embedder.embed(rendering_b))
    if similarity is None:
        return AlignmentResult(score=None, misaligned=True)
    return AlignmentResult(score=similarity, misaligned=similarity < tau_align)


def _drift_and_cause(v_o: EmbeddingVector, v_r: EmbeddingVector, default_cause: str):
    similarity = cosine(v_o, v_r)
    if similarity is None:
        return 1.0, "degenerate_embedding"
    return min(2.0, max(0.0, 1.0 - similarity)), default_cause


def scan_for_drift(engine: "Engine", thresholds: Thresholds | None = None) -> list[DriftReport]:
    """Sweep the store and emit open reports for newly detected drift.

    Re-scanning an unchanged store emits nothing: every candidate report's
    identity is checked against the already-flagged set.
    """
    thresholds = thresholds if thresholds is not None else engine.thresholds
    state = engine.state
    candidates: list[tuple[str, str, str | None, float, str, str]] = []

    for trace_id in state.trace_order:
        record = state.traces[trace_id]
        if record.redacted:
            continue

        # Reinterpretation of the trace's own rationale.
        if len(record.versions) >= 2:
            v_o = engine.vector_for_version(record.original())
            v_r = engine.vector_for_version(record.head())
            drift, cause = _drift_and_cause(v_o, v_r, "reuse_divergence")
            if drift > thresholds.tau_drift:
                message = (
                    DEGENERATE_MESSAGE
                    if cause == "degenerate_embedding"
                    else REUSE_DIVERGENCE_MESSAGE
                )
                candidates.append(
                    (
                        trace_id,
                        record.original().version_id,
                        record.head().version_id,
                        drift,
                        cause,
                        message,
                    )
                )

        # Updates to referenced documents after this trace was captured.
        for target_id, linked_at in state.links_out.get(trace_id, ()):
            target = state.traces.get(target_id)
            if target is None or target.redacted:
                continue
            baseline = target.head_as_of(record.captured_event_at) or target.original()

            updated: list[tuple[int, "object"]] = []
            for version, event_at in zip(target.versions, target.version_event_at):
                if event_at > record.captured_event_at and version.version_id != baseline.version_id:
                    updated.append((event_at, version))
            successor_id = state.newest_successor(target_id)
            successor_head = None
            if successor_id != target_id:
                successor_record = state.traces.get(successor_id)
                if (
                    successor_record is not None
                    and not successor_record.redacted
                    and successor_record.captured_event_at > record.captured_event_at
                ):
                    successor_head = successor_record.head()

            current = None
            if successor_head is not None:
                current = successor_head
            elif updated:
                current = target.versions[-1]
            if current is None or current.version_id == baseline.version_id:
                continue

            v_o = engine.vector_for_version(baseline)
            v_r = engine.vector_for_version(current)
            drift, cause = _drift_and_cause(v_o, v_r, "reference_update")
            if drift > thresholds.tau_drift:
                message = (
                    DEGENERATE_MESSAGE
                    if cause == "degenerate_embedding"
                    else OUTDATED_REFERENCE_MESSAGE
                )
                candidates.append(
                    (trace_id, baseline.version_id, current.version_id, drift, cause, message)
                )

    reports = []
    for trace_id, original_version, current_version, drift, cause, message in candidates:
        identity = (trace_id, cause, original_version, current_version or "")
        if identity in state.flag_identity:
            continue
        now = engine.clock()
        reports.append(
            DriftReport(
                flag_id=ids.new_id(now),
                trace_id=trace_id,
                original_version=original_version,
                current_version=current_version,
                external_context=None,
                drift=drift,
                cause=cause,
                status="open",
                message=message,
                created_at=now,
            )
        )
    return reports
