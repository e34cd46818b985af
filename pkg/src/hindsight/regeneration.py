"""Context regeneration: deterministic retrieval plus lineage stitching.

A bundle is a pure function of (store state, query, as_of, k): items are
the ranked as-of search hits with their full rationale lineage stitched in
— original rationale, head rationale at the requested time, change notes,
and any drift flags open at that time. Nothing generative happens here;
missing rationale is never guessed at, because an auditable gap is worth
more than a plausible fabrication.

Determinism note: `assembled_at` and the entropy figure are pinned to the
state clock (the latest event timestamp, capped by as_of), not wall time,
so identical state + query + as_of yields a bit-identical bundle.

Reconstructability operationalizes "how auditable is a retained subset"
as the fraction of a closed audit-question set answerable from the subset
alone. A question is answerable iff the field it asks about was retained.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

from .errors import EmptyQuestionSet

if TYPE_CHECKING:  # pragma: no cover
    from .engine import Engine

AUDIT_QUESTIONS = (
    "has_rationale",
    "has_alternatives",
    "has_assumptions",
    "has_actor",
    "has_lineage",
    "has_flag_history",
)

_QUESTION_FIELD = {
    "has_rationale": "rationale",
    "has_alternatives": "alternatives",
    "has_assumptions": "assumptions",
    "has_actor": "actor",
    "has_lineage": "lineage",
    "has_flag_history": "flag_history",
}


@dataclass(frozen=True)
class ReconstructabilityScore:
    value: float
    answered: int
    total: int

    def to_json_dict(self) -> dict:
        return {"value": self.value, "answered": self.answered, "total": self.total}


@dataclass(frozen=True)
class BundleItem:
    trace_id: str
    subject: str
    rationale: str  # head rationale at the bundle's as-of time
    original_rationale: str
    change_notes: tuple[str, ...]
    alternatives: tuple[dict, ...]
    assumptions: tuple[str, ...]
    signals: tuple[dict, ...]
    actor: dict
    created_at: int
    version_id: str
    seq: int
    lineage_depth: int
    similarity: float
    utility: float
    rank: int
    open_flags: tuple[dict, ...]

    def to_json_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "subject": self.subject,
            "rationale": self.rationale,
            "original_rationale": self.original_rationale,
            "change_notes": list(self.change_notes),
            "alternatives": list(self.alternatives),
            "assumptions": list(self.assumptions),
            "signals": list(self.signals),
            "actor": self.actor,
            "created_at": self.created_at,
            "version_id": self.version_id,
            "seq": self.seq,
            "lineage_depth": self.lineage_depth,
            "similarity": self.similarity,
            "utility": self.utility,
            "rank": self.rank,
            "open_flags": list(self.open_flags),
        }

    def audit_fields(self) -> dict:
        """Project this item onto the closed audit-field set."""
        return {
            "rationale": self.rationale,
            "alternatives": list(self.alternatives),
            "assumptions": list(self.assumptions),
            "actor": self.actor,
            "lineage": {
                "depth": self.lineage_depth,
                "original_rationale": self.original_rationale,
                "change_notes": list(self.change_notes),
            },
            "flag_history": list(self.open_flags),
        }


@dataclass(frozen=True)
class ContextBundle:
    query: str
    as_of: int | None
    items: tuple[BundleItem, ...]
    entropy_at_assembly: float | None
    assembled_at: int

    def to_json_dict(self) -> dict:
        return {
            "query": self.query,
            "as_of": self.as_of,
            "items": [item.to_json_dict() for item in self.items],
            "entropy_at_assembly": self.entropy_at_assembly,
            "assembled_at": self.assembled_at,
        }


def regenerate(engine: "Engine", query: str, k: int, as_of: int | None = None) -> ContextBundle:
    """Assemble the ranked, provenance-annotated context for a query."""
    if k < 1:
        raise ValueError("k must be >= 1")
    state = engine.state
    hits = engine.search(query, k, as_of=as_of)
    clock = state.last_event_at if as_of is None else min(as_of, state.last_event_at)

    items = []
    for hit in hits:
        record = state.traces[hit.trace_id]
        versions = record.versions if as_of is None else record.versions_as_of(as_of)
        head = versions[-1]
        flags = [
            rec.report.to_json_dict()
            for rec in state.open_flags(hit.trace_id, as_of=as_of)
        ]
        items.append(
            BundleItem(
                trace_id=hit.trace_id,
                subject=record.trace.subject,
                rationale=head.rationale,
                original_rationale=versions[0].rationale,
                change_notes=tuple(v.change_note for v in versions[1:]),
                alternatives=tuple(a.to_json_dict() for a in record.trace.alternatives),
                assumptions=record.trace.assumptions,
                signals=tuple(s.to_json_dict() for s in record.trace.signals),
                actor=record.trace.actor.to_json_dict(),
                created_at=record.trace.created_at,
                version_id=head.version_id,
                seq=head.seq,
                lineage_depth=len(versions),
                similarity=hit.similarity,
                utility=hit.utility,
                rank=hit.rank,
                open_flags=tuple(flags),
            )
        )

    entropy = engine.entropy_value(now=clock, as_of=as_of)
    return ContextBundle(
        query=query,
        as_of=as_of,
        items=tuple(items),
        entropy_at_assembly=entropy,
        assembled_at=clock,
    )


def _normalize_question(question: str) -> str:
    name = question.strip().rstrip("?")
    if name not in _QUESTION_FIELD:
        raise ValueError(f"unknown audit question '{question}'")
    return name


def reconstructability(
    subset,
    audit_questions: Sequence[str] = AUDIT_QUESTIONS,
) -> ReconstructabilityScore:
    """Fraction of the audit-question set answerable from a retained subset.

    Accepts a single retained-field mapping, a ContextBundle, or a list of
    either; a bundle counts every item as one decision. An empty or absent
    subset answers nothing.
    """
    if not audit_questions:
        raise EmptyQuestionSet("the audit question set must be non-empty")
    fields = [_QUESTION_FIELD[_normalize_question(q)] for q in audit_questions]

    if isinstance(subset, ContextBundle):
        decisions: list[Mapping] = [item.audit_fields() for item in subset.items]
    elif isinstance(subset, BundleItem):
        decisions = [subset.audit_fields()]
    elif subset is None:
        decisions = []
    elif isinstance(subset, Mapping):
        decisions = [subset]
    else:
        decisions = [
            item.audit_fields() if isinstance(item, BundleItem) else item for item in subset
        ]

    if not decisions:
        return ReconstructabilityScore(value=0.0, answered=0, total=len(fields))

    answered = 0
    total = len(fields) * len(decisions)
    for decision in decisions:
        for field_name in fields:
            if field_name in decision:
                answered += 1
    return ReconstructabilityScore(value=answered / total, answered=answered, total=total)
