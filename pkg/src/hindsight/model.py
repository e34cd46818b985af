"""Canonical data model: traces, context taxonomy, versions, actors.

Every record a decision leaves behind is built from the types here. A
MemoryTrace captures one decision — its rationale, the alternatives that
were rejected, the assumptions it rests on, and the context signals that
shaped it. RationaleVersions form the immutable revision chain of that
rationale. All invariants are enforced at construction: nothing else in
the system re-validates these records.

Serialization notes:
  - field names in JSON are exactly the attribute names below
  - enums serialize as lower-case strings and round-trip bit-exactly
  - timestamps are integer UTC epoch-milliseconds

The taxonomy enums are closed sets; unknown strings are rejected rather
than coerced so that audit semantics stay crisp.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import ids
from .errors import (
    TraceValidationError,
    Violation,
)

MAX_LABEL_LENGTH = 128


class SignalKind(str, enum.Enum):
    TEMPORAL = "temporal"
    EMOTIONAL = "emotional"
    SOCIAL = "social"
    PROCEDURAL = "procedural"
    STRATEGIC = "strategic"
    HISTORICAL = "historical"


class SignalSource(str, enum.Enum):
    USER = "user"
    SYSTEM = "system"
    AMBIENT = "ambient"
    ORGANIZATIONAL = "organizational"
    DOCUMENT = "document"


class SignalScope(str, enum.Enum):
    TASK = "task"
    PROCESS = "process"
    ENTERPRISE = "enterprise"


class SignalState(str, enum.Enum):
    ACTIVE = "active"
    LATENT = "latent"
    DECAYED = "decayed"
    CONTRADICTORY = "contradictory"


class RetentionPolicy(str, enum.Enum):
    DEFAULT = "default"
    EXTENDED = "extended"
    MINIMAL = "minimal"


@dataclass(frozen=True, slots=True)
class ActorRef:
    """Who did something. Role is recorded, never enforced."""

    actor_id: str
    role: str = ""

    def to_json_dict(self) -> dict:
        return {"actor_id": self.actor_id, "role": self.role}

    @classmethod
    def from_json_dict(cls, data: dict) -> "ActorRef":
        return cls(actor_id=data["actor_id"], role=data.get("role", ""))


@dataclass(frozen=True, slots=True)
class ContextSignal:
    """One typed piece of situational metadata on four taxonomy dimensions."""

    kind: SignalKind
    source: SignalSource
    scope: SignalScope
    state: SignalState
    label: str
    payload: str = ""

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "source": self.source.value,
            "scope": self.scope.value,
            "state": self.state.value,
            "label": self.label,
            "payload": self.payload,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ContextSignal":
        return cls(
            kind=SignalKind(data["kind"]),
            source=SignalSource(data["source"]),
            scope=SignalScope(data["scope"]),
            state=SignalState(data["state"]),
            label=data["label"],
            payload=data.get("payload", ""),
        )


@dataclass(frozen=True, slots=True)
class Alternative:
    """A discarded option and why it was rejected."""

    option: str
    reason_rejected: str = ""

    def to_json_dict(self) -> dict:
        return {"option": self.option, "reason_rejected": self.reason_rejected}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Alternative":
        return cls(option=data["option"], reason_rejected=data.get("reason_rejected", ""))


@dataclass(frozen=True, slots=True)
class Retention:
    policy: RetentionPolicy = RetentionPolicy.DEFAULT
    redacted: bool = False

    def to_json_dict(self) -> dict:
        return {"policy": self.policy.value, "redacted": self.redacted}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Retention":
        return cls(
            policy=RetentionPolicy(data.get("policy", "default")),
            redacted=bool(data.get("redacted", False)),
        )


@dataclass(frozen=True, slots=True)
class MemoryTrace:
    """One captured decision or insight.

    ``links`` holds opaque external reference strings (ticket ids, patient
    ids, other trace ids); values that name known traces additionally get
    lineage edges when the trace is captured.
    """

    trace_id: str
    subject: str
    rationale: str
    alternatives: tuple[Alternative, ...]
    assumptions: tuple[str, ...]
    signals: tuple[ContextSignal, ...]
    actor: ActorRef
    created_at: int
    retention: Retention = field(default_factory=Retention)
    links: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "subject": self.subject,
            "rationale": self.rationale,
            "alternatives": [a.to_json_dict() for a in self.alternatives],
            "assumptions": list(self.assumptions),
            "signals": [s.to_json_dict() for s in self.signals],
            "actor": self.actor.to_json_dict(),
            "created_at": self.created_at,
            "retention": self.retention.to_json_dict(),
            "links": list(self.links),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MemoryTrace":
        return cls(
            trace_id=data["trace_id"],
            subject=data.get("subject", ""),
            rationale=data["rationale"],
            alternatives=tuple(Alternative.from_json_dict(a) for a in data.get("alternatives", [])),
            assumptions=tuple(data.get("assumptions", [])),
            signals=tuple(ContextSignal.from_json_dict(s) for s in data.get("signals", [])),
            actor=ActorRef.from_json_dict(data["actor"]),
            created_at=int(data["created_at"]),
            retention=Retention.from_json_dict(data.get("retention", {})),
            links=tuple(data.get("links", [])),
        )

    def redacted_copy(self) -> "MemoryTrace":
        """Tombstoned form: free text scrubbed, skeleton preserved for audit."""
        return MemoryTrace(
            trace_id=self.trace_id,
            subject="",
            rationale="",
            alternatives=(),
            assumptions=(),
            signals=(),
            actor=self.actor,
            created_at=self.created_at,
            retention=Retention(policy=self.retention.policy, redacted=True),
            links=self.links,
        )


@dataclass(frozen=True, slots=True)
class RationaleVersion:
    """Immutable node in a trace's revision chain.

    seq increases by exactly 1 along the chain; supersedes is empty iff
    seq == 1.
    """

    version_id: str
    trace_id: str
    seq: int
    rationale: str
    author: ActorRef
    created_at: int
    supersedes: str | None = None
    change_note: str = ""

    def __post_init__(self):
        if self.seq < 1:
            raise ValueError("seq must be >= 1")
        if (self.supersedes is None) != (self.seq == 1):
            raise ValueError("supersedes must be empty exactly for the first version")

    def to_json_dict(self) -> dict:
        return {
            "version_id": self.version_id,
            "trace_id": self.trace_id,
            "seq": self.seq,
            "rationale": self.rationale,
            "author": self.author.to_json_dict(),
            "created_at": self.created_at,
            "supersedes": self.supersedes,
            "change_note": self.change_note,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RationaleVersion":
        return cls(
            version_id=data["version_id"],
            trace_id=data["trace_id"],
            seq=int(data["seq"]),
            rationale=data["rationale"],
            author=ActorRef.from_json_dict(data["author"]),
            created_at=int(data["created_at"]),
            supersedes=data.get("supersedes"),
            change_note=data.get("change_note", ""),
        )

    def scrubbed_copy(self) -> "RationaleVersion":
        return RationaleVersion(
            version_id=self.version_id,
            trace_id=self.trace_id,
            seq=self.seq,
            rationale="",
            author=self.author,
            created_at=self.created_at,
            supersedes=self.supersedes,
            change_note="",
        )


_TRACE_FIELDS = {
    "trace_id",
    "subject",
    "rationale",
    "alternatives",
    "assumptions",
    "signals",
    "actor",
    "created_at",
    "retention",
    "links",
}

_SIGNAL_DIMENSIONS = (
    ("kind", SignalKind),
    ("source", SignalSource),
    ("scope", SignalScope),
    ("state", SignalState),
)


def _check_signal(index: int, raw: object, violations: list[Violation]) -> ContextSignal | None:
    prefix = f"signals[{index}]"
    if not isinstance(raw, dict):
        violations.append(Violation("MalformedField", prefix, "signal must be an object"))
        return None
    parsed = {}
    ok = True
    for name, enum_cls in _SIGNAL_DIMENSIONS:
        value = raw.get(name)
        if value is None:
            violations.append(
                Violation(
                    "MissingTaxonomyDimension",
                    f"{prefix}.{name}",
                    f"taxonomy dimension '{name}' is required",
                )
            )
            ok = False
            continue
        try:
            parsed[name] = enum_cls(value)
        except ValueError:
            violations.append(
                Violation(
                    "InvalidValue",
                    f"{prefix}.{name}",
                    f"'{value}' is not a recognized {name}",
                )
            )
            ok = False
    label = raw.get("label", "")
    if not isinstance(label, str) or not label:
        violations.append(Violation("InvalidValue", f"{prefix}.label", "label must be non-empty"))
        ok = False
    elif len(label) > MAX_LABEL_LENGTH:
        violations.append(
            Violation(
                "LabelTooLong",
                f"{prefix}.label",
                f"label exceeds {MAX_LABEL_LENGTH} characters",
            )
        )
        ok = False
    if not ok:
        return None
    return ContextSignal(
        kind=parsed["kind"],
        source=parsed["source"],
        scope=parsed["scope"],
        state=parsed["state"],
        label=label,
        payload=str(raw.get("payload", "")),
    )


def validate_trace(
    candidate: dict,
    *,
    now: int | None = None,
    trace_id: str | None = None,
) -> MemoryTrace:
    """Construct a MemoryTrace from raw fields, or raise with every violation.

    Missing trace_id / created_at are minted here, so the same function
    serves fresh captures and re-validation of stored records. Validation
    is idempotent: a valid trace's own JSON dict validates to an equal
    trace.
    """
    if not isinstance(candidate, dict):
        raise TraceValidationError(
            [Violation("MalformedField", "", "trace must be a JSON object")]
        )
    now = ids.now_ms() if now is None else now
    violations: list[Violation] = []

    unknown = sorted(set(candidate) - _TRACE_FIELDS)
    for name in unknown:
        violations.append(Violation("UnknownField", name, "unknown field"))

    retention_raw = candidate.get("retention", {})
    redacted = False
    retention = Retention()
    if isinstance(retention_raw, dict):
        extra = sorted(set(retention_raw) - {"policy", "redacted"})
        for name in extra:
            violations.append(Violation("UnknownField", f"retention.{name}", "unknown field"))
        try:
            retention = Retention.from_json_dict(retention_raw)
            redacted = retention.redacted
        except ValueError:
            violations.append(
                Violation("InvalidValue", "retention.policy", "unrecognized retention policy")
            )
    else:
        violations.append(Violation("MalformedField", "retention", "retention must be an object"))

    rationale = candidate.get("rationale", "")
    if not isinstance(rationale, str):
        violations.append(Violation("MalformedField", "rationale", "rationale must be text"))
    elif not rationale.strip() and not redacted:
        violations.append(
            Violation("EmptyRationale", "rationale", "rationale is required unless redacted")
        )

    created_at = candidate.get("created_at")
    if created_at is None:
        created_at = now
    elif not isinstance(created_at, int) or isinstance(created_at, bool):
        violations.append(
            Violation("MalformedField", "created_at", "created_at must be epoch-milliseconds")
        )
        created_at = now
    elif created_at > now:
        violations.append(
            Violation("FutureTimestamp", "created_at", "created_at is in the future")
        )

    actor_raw = candidate.get("actor")
    actor = ActorRef(actor_id="")
    if not isinstance(actor_raw, dict) or not actor_raw.get("actor_id"):
        violations.append(Violation("InvalidValue", "actor.actor_id", "actor_id is required"))
    else:
        actor = ActorRef(actor_id=str(actor_raw["actor_id"]), role=str(actor_raw.get("role", "")))

    alternatives: list[Alternative] = []
    alts_raw = candidate.get("alternatives", [])
    if not isinstance(alts_raw, list):
        violations.append(Violation("MalformedField", "alternatives", "must be a list"))
    else:
        for i, alt in enumerate(alts_raw):
            if not isinstance(alt, dict) or not alt.get("option"):
                violations.append(
                    Violation("InvalidValue", f"alternatives[{i}]", "option is required")
                )
                continue
            alternatives.append(
                Alternative(option=str(alt["option"]), reason_rejected=str(alt.get("reason_rejected", "")))
            )

    assumptions_raw = candidate.get("assumptions", [])
    assumptions: list[str] = []
    if not isinstance(assumptions_raw, list):
        violations.append(Violation("MalformedField", "assumptions", "must be a list"))
    else:
        assumptions = [str(a) for a in assumptions_raw]

    signals: list[ContextSignal] = []
    signals_raw = candidate.get("signals", [])
    if not isinstance(signals_raw, list):
        violations.append(Violation("MalformedField", "signals", "must be a list"))
    else:
        for i, raw in enumerate(signals_raw):
            signal = _check_signal(i, raw, violations)
            if signal is not None:
                signals.append(signal)

    links_raw = candidate.get("links", [])
    links: list[str] = []
    if not isinstance(links_raw, list):
        violations.append(Violation("MalformedField", "links", "must be a list"))
    else:
        links = [str(x) for x in links_raw]

    if violations:
        raise TraceValidationError(violations)

    final_id = candidate.get("trace_id") or trace_id or ids.new_id(created_at)
    return MemoryTrace(
        trace_id=str(final_id),
        subject=str(candidate.get("subject", "")),
        rationale=rationale,
        alternatives=tuple(alternatives),
        assumptions=tuple(assumptions),
        signals=tuple(signals),
        actor=actor,
        created_at=created_at,
        retention=retention,
        links=tuple(links),
    )


def next_version(
    trace_id: str,
    previous: RationaleVersion | None,
    rationale: str,
    author: ActorRef,
    change_note: str = "",
    *,
    version_id: str | None = None,
    created_at: int | None = None,
) -> RationaleVersion:
    """Build the successor version in a chain; seq/supersedes derive from it."""
    created_at = ids.now_ms() if created_at is None else created_at
    return RationaleVersion(
        version_id=version_id or ids.new_id(created_at),
        trace_id=trace_id,
        seq=1 if previous is None else previous.seq + 1,
        rationale=rationale,
        author=author,
        created_at=created_at,
        supersedes=None if previous is None else previous.version_id,
        change_note=change_note,
    )
