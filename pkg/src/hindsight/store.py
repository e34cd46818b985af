"""Event-sourced state: append-only log, fold, lineage graph, snapshots.

All persistent truth is the event log. The in-memory state is a pure fold
over it: `replay` of the log is bit-identical (under canonical
serialization) to the live state that produced it, which makes crash
recovery, auditing, and export/import round-trips trivial to reason
about. Derived structures (vectors, utility caches) live outside this
module and are rebuilt from state, never persisted.

Event payload schemas, by kind:
  trace_captured    trace JSON, plus optional "idempotency_key"
  version_added     version JSON
  link_added        {from_id, to_id, relation}
  drift_flagged     drift report JSON (status "open")
  flag_resolved     {flag_id, action, actor, note, new_version_id|null}
  trace_redacted    {trace_id, actor}
  feedback_recorded {trace_id, endorsement, actor, note}
  reuse_recorded    {trace_id, reusing_trace_id}

Redaction scrubs free text from state but never removes events: the log
is append-only and immutable.
"""

from __future__ import annotations

import bisect
import enum
import io
import os
from dataclasses import dataclass, field

import numpy as np

from . import canonical
from .drift import DriftReport
from .errors import (
    CorruptLog,
    SchemaViolation,
    StorageFailure,
    TraceValidationError,
)
from .model import MemoryTrace, RationaleVersion, validate_trace


class EventKind(str, enum.Enum):
    TRACE_CAPTURED = "trace_captured"
    VERSION_ADDED = "version_added"
    LINK_ADDED = "link_added"
    DRIFT_FLAGGED = "drift_flagged"
    FLAG_RESOLVED = "flag_resolved"
    TRACE_REDACTED = "trace_redacted"
    FEEDBACK_RECORDED = "feedback_recorded"
    REUSE_RECORDED = "reuse_recorded"


class EdgeRelation(str, enum.Enum):
    SUPERSEDES = "supersedes"
    DERIVED_FROM = "derived_from"
    REUSED_IN = "reused_in"
    LINKS_TO = "links_to"


@dataclass(frozen=True, slots=True)
class Event:
    event_id: str
    kind: EventKind
    at: int
    payload: dict

    def to_json_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "kind": self.kind.value,
            "at": self.at,
            "payload": self.payload,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Event":
        return cls(
            event_id=data["event_id"],
            kind=EventKind(data["kind"]),
            at=int(data["at"]),
            payload=data["payload"],
        )


@dataclass(frozen=True, slots=True)
class LineageEdge:
    from_id: str
    to_id: str
    relation: EdgeRelation

    def to_json_dict(self) -> dict:
        return {
            "from_id": self.from_id,
            "to_id": self.to_id,
            "relation": self.relation.value,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "LineageEdge":
        return cls(
            from_id=data["from_id"],
            to_id=data["to_id"],
            relation=EdgeRelation(data["relation"]),
        )


@dataclass(frozen=True, slots=True)
class SearchHit:
    trace_id: str
    version_id: str
    similarity: float
    utility: float
    rank: int

    def to_json_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "version_id": self.version_id,
            "similarity": self.similarity,
            "utility": self.utility,
            "rank": self.rank,
        }


REVIEW_UNREVIEWED = "unreviewed"
REVIEW_CONFIRMED = "confirmed"
REVIEW_RETIRED = "retired"


@dataclass(slots=True)
class TraceRecord:
    """Per-trace folded state, including the event times queries bisect on."""

    trace: MemoryTrace
    captured_event_at: int
    versions: list[RationaleVersion] = field(default_factory=list)
    version_event_at: list[int] = field(default_factory=list)
    redacted_at: int | None = None
    reuse_at: list[int] = field(default_factory=list)
    feedback: list[tuple[int, float]] = field(default_factory=list)
    review_history: list[tuple[int, str]] = field(default_factory=list)
    row: int = -1  # vector-index row; derived, not part of canonical state

    @property
    def redacted(self) -> bool:
        return self.redacted_at is not None

    def head(self) -> RationaleVersion:
        return self.versions[-1]

    def original(self) -> RationaleVersion:
        return self.versions[0]

    def head_as_of(self, at: int) -> RationaleVersion | None:
        idx = bisect.bisect_right(self.version_event_at, at)
        if idx == 0:
            return None
        return self.versions[idx - 1]

    def versions_as_of(self, at: int) -> list[RationaleVersion]:
        idx = bisect.bisect_right(self.version_event_at, at)
        return self.versions[:idx]

    def reuse_count(self, as_of: int | None = None) -> int:
        if as_of is None:
            return len(self.reuse_at)
        return bisect.bisect_right(self.reuse_at, as_of)

    def feedback_mean(self, as_of: int | None = None) -> float | None:
        values = [v for at, v in self.feedback if as_of is None or at <= as_of]
        if not values:
            return None
        return sum(values) / len(values)

    def review_status(self, as_of: int | None = None) -> str:
        status = REVIEW_UNREVIEWED
        for at, st in self.review_history:
            if as_of is not None and at > as_of:
                break
            status = st
        return status

    def to_json_dict(self) -> dict:
        return {
            "trace": self.trace.to_json_dict(),
            "captured_event_at": self.captured_event_at,
            "redacted_at": self.redacted_at,
            "reuse_at": list(self.reuse_at),
            "feedback": [[at, v] for at, v in self.feedback],
            "review_history": [[at, s] for at, s in self.review_history],
        }


@dataclass(slots=True)
class FlagRecord:
    report: DriftReport
    flagged_event_at: int
    resolved_at: int | None = None
    resolution: dict | None = None

    def open_as_of(self, at: int) -> bool:
        if self.flagged_event_at > at:
            return False
        return self.resolved_at is None or self.resolved_at > at

    def to_json_dict(self) -> dict:
        return {
            "report": self.report.to_json_dict(),
            "flagged_event_at": self.flagged_event_at,
            "resolved_at": self.resolved_at,
            "resolution": self.resolution,
        }


class StoreState:
    """Pure fold of the event log. Mutated only through `apply`."""

    def __init__(self):
        self.position = 0
        self.last_event_id: str | None = None
        self.last_event_at = 0
        self.traces: dict[str, TraceRecord] = {}
        self.trace_order: list[str] = []  # insertion order == vector rows
        self.versions_by_id: dict[str, RationaleVersion] = {}
        self.edges: list[tuple[LineageEdge, int]] = []
        self._edge_set: set[tuple[str, str, str]] = set()
        # adjacency used by drift scanning, lineage, and alignment scoring
        self.links_out: dict[str, list[tuple[str, int]]] = {}
        self.successors: dict[str, list[tuple[str, int]]] = {}  # derived_from, reversed
        self._derivation_out: dict[str, set[str]] = {}  # derived_from + supersedes
        self.reused_in: dict[str, list[tuple[str, int]]] = {}
        self.flags: dict[str, FlagRecord] = {}
        self.flag_identity: set[tuple[str, str, str, str]] = set()
        self.flags_by_trace: dict[str, list[str]] = {}
        self.idempotency: dict[str, str] = {}

    # -- queries -------------------------------------------------------

    def require_trace(self, trace_id: str) -> TraceRecord:
        record = self.traces.get(trace_id)
        if record is None:
            raise KeyError(trace_id)
        return record

    def open_flags(self, trace_id: str, as_of: int | None = None) -> list[FlagRecord]:
        out = []
        for fid in self.flags_by_trace.get(trace_id, ()):  # insertion order
            rec = self.flags[fid]
            if as_of is None:
                if rec.resolution is None:
                    out.append(rec)
            elif rec.open_as_of(as_of):
                out.append(rec)
        return out

    def newest_successor(self, trace_id: str, as_of: int | None = None) -> str:
        """Follow derived_from succession forward to the newest replacement."""
        current = trace_id
        seen = {current}
        while True:
            candidates = [
                (at, tid)
                for tid, at in self.successors.get(current, ())
                if (as_of is None or at <= as_of) and tid not in seen
            ]
            if not candidates:
                return current
            _, current = max(candidates)
            seen.add(current)

    def _derivation_reaches(self, start: str, goal: str) -> bool:
        stack = [start]
        seen = set()
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self._derivation_out.get(node, ()))
        return False

    # -- fold ----------------------------------------------------------

    def apply(self, event: Event) -> int:
        """Validate and fold one event; returns the new log position."""
        if self.last_event_id is not None and event.event_id <= self.last_event_id:
            raise SchemaViolation(
                f"event_id {event.event_id} not increasing past {self.last_event_id}"
            )
        handler = _HANDLERS.get(event.kind)
        if handler is None:
            raise SchemaViolation(f"unhandled event kind {event.kind}")
        handler(self, event)
        self.position += 1
        self.last_event_id = event.event_id
        self.last_event_at = max(self.last_event_at, event.at)
        return self.position

    def _add_edge(self, edge: LineageEdge, at: int) -> None:
        if edge.from_id == edge.to_id:
            raise SchemaViolation("self-edges are not allowed")
        key = (edge.from_id, edge.to_id, edge.relation.value)
        if key in self._edge_set:
            raise SchemaViolation(f"duplicate edge {key}")
        known = (
            lambda x: x in self.traces or x in self.versions_by_id
        )
        if not known(edge.from_id) or not known(edge.to_id):
            raise SchemaViolation(f"edge endpoint unknown: {edge.from_id} -> {edge.to_id}")
        if edge.relation in (EdgeRelation.SUPERSEDES, EdgeRelation.DERIVED_FROM):
            # acyclicity of the derivation subgraph
            if self._derivation_reaches(edge.to_id, edge.from_id):
                raise SchemaViolation(
                    f"derivation cycle via {edge.from_id} -> {edge.to_id}"
                )
            self._derivation_out.setdefault(edge.from_id, set()).add(edge.to_id)
        self.edges.append((edge, at))
        self._edge_set.add(key)
        if edge.relation == EdgeRelation.LINKS_TO:
            self.links_out.setdefault(edge.from_id, []).append((edge.to_id, at))
        elif edge.relation == EdgeRelation.DERIVED_FROM:
            self.successors.setdefault(edge.to_id, []).append((edge.from_id, at))
        elif edge.relation == EdgeRelation.REUSED_IN:
            self.reused_in.setdefault(edge.from_id, []).append((edge.to_id, at))

    def _apply_trace_captured(self, event: Event) -> None:
        payload = dict(event.payload)
        key = payload.pop("idempotency_key", None)
        try:
            trace = validate_trace(payload, now=event.at)
        except TraceValidationError as exc:
            raise SchemaViolation(f"invalid trace payload: {exc}") from exc
        if "trace_id" not in payload:
            raise SchemaViolation("trace_captured payload must carry trace_id")
        if trace.trace_id in self.traces:
            raise SchemaViolation(f"duplicate trace_id {trace.trace_id}")
        record = TraceRecord(trace=trace, captured_event_at=event.at)
        self.traces[trace.trace_id] = record
        self.trace_order.append(trace.trace_id)
        if key is not None:
            self.idempotency[str(key)] = trace.trace_id

    def _apply_version_added(self, event: Event) -> None:
        try:
            version = RationaleVersion.from_json_dict(event.payload)
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaViolation(f"malformed version payload: {exc}") from exc
        record = self.traces.get(version.trace_id)
        if record is None:
            raise SchemaViolation(f"version references unknown trace {version.trace_id}")
        if record.redacted:
            raise SchemaViolation(f"trace {version.trace_id} is redacted")
        if version.version_id in self.versions_by_id:
            raise SchemaViolation(f"duplicate version_id {version.version_id}")
        expected_seq = len(record.versions) + 1
        if version.seq != expected_seq:
            raise SchemaViolation(
                f"version seq {version.seq} != expected {expected_seq}"
            )
        expected_supersedes = record.versions[-1].version_id if record.versions else None
        if version.supersedes != expected_supersedes:
            raise SchemaViolation("version supersedes mismatch")
        if version.created_at > event.at:
            raise SchemaViolation("version created_at is in the future")
        record.versions.append(version)
        record.version_event_at.append(event.at)
        self.versions_by_id[version.version_id] = version
        if version.supersedes is not None:
            self._add_edge(
                LineageEdge(version.version_id, version.supersedes, EdgeRelation.SUPERSEDES),
                event.at,
            )

    def _apply_link_added(self, event: Event) -> None:
        try:
            edge = LineageEdge.from_json_dict(event.payload)
        except (KeyError, ValueError) as exc:
            raise SchemaViolation(f"malformed edge payload: {exc}") from exc
        if edge.relation == EdgeRelation.SUPERSEDES:
            raise SchemaViolation("supersedes edges derive from version events")
        self._add_edge(edge, event.at)

    def _apply_drift_flagged(self, event: Event) -> None:
        try:
            report = DriftReport.from_json_dict(event.payload)
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaViolation(f"malformed drift report: {exc}") from exc
        if report.status != "open":
            raise SchemaViolation("drift reports are flagged open")
        if report.trace_id not in self.traces:
            raise SchemaViolation(f"flag references unknown trace {report.trace_id}")
        if report.original_version not in self.versions_by_id:
            raise SchemaViolation("flag references unknown original version")
        if report.current_version is not None and report.current_version not in self.versions_by_id:
            raise SchemaViolation("flag references unknown current version")
        if report.flag_id in self.flags:
            raise SchemaViolation(f"duplicate flag_id {report.flag_id}")
        identity = report.identity()
        if identity in self.flag_identity:
            raise SchemaViolation(f"duplicate flag for {identity}")
        self.flags[report.flag_id] = FlagRecord(report=report, flagged_event_at=event.at)
        self.flag_identity.add(identity)
        self.flags_by_trace.setdefault(report.trace_id, []).append(report.flag_id)

    def _apply_flag_resolved(self, event: Event) -> None:
        payload = event.payload
        flag_id = payload.get("flag_id")
        record = self.flags.get(flag_id)
        if record is None:
            raise SchemaViolation(f"resolution references unknown flag {flag_id}")
        if record.resolution is not None:
            raise SchemaViolation(f"flag {flag_id} already resolved")
        action = payload.get("action")
        if action not in ("accepted", "revised", "retired"):
            raise SchemaViolation(f"unknown resolution action {action}")
        new_version_id = payload.get("new_version_id")
        if action == "revised":
            if not new_version_id or new_version_id not in self.versions_by_id:
                raise SchemaViolation("revised resolution must name the created version")
        record.report = record.report.with_status(action)
        record.resolved_at = event.at
        record.resolution = {
            "action": action,
            "actor": payload.get("actor", {}),
            "note": payload.get("note", ""),
            "new_version_id": new_version_id,
        }
        trace_record = self.traces.get(record.report.trace_id)
        if trace_record is not None:
            status = REVIEW_RETIRED if action == "retired" else REVIEW_CONFIRMED
            trace_record.review_history.append((event.at, status))

    def _apply_trace_redacted(self, event: Event) -> None:
        trace_id = event.payload.get("trace_id")
        record = self.traces.get(trace_id)
        if record is None:
            raise SchemaViolation(f"redaction references unknown trace {trace_id}")
        if record.redacted:
            raise SchemaViolation(f"trace {trace_id} already redacted")
        record.trace = record.trace.redacted_copy()
        record.versions = [v.scrubbed_copy() for v in record.versions]
        for version in record.versions:
            self.versions_by_id[version.version_id] = version
        record.redacted_at = event.at

    def _apply_feedback_recorded(self, event: Event) -> None:
        payload = event.payload
        trace_id = payload.get("trace_id")
        record = self.traces.get(trace_id)
        if record is None:
            raise SchemaViolation(f"feedback references unknown trace {trace_id}")
        if record.redacted:
            raise SchemaViolation(f"trace {trace_id} is redacted")
        endorsement = payload.get("endorsement")
        if not isinstance(endorsement, (int, float)) or not 0.0 <= float(endorsement) <= 1.0:
            raise SchemaViolation("endorsement must be in [0, 1]")
        record.feedback.append((event.at, float(endorsement)))

    def _apply_reuse_recorded(self, event: Event) -> None:
        payload = event.payload
        trace_id = payload.get("trace_id")
        reusing = payload.get("reusing_trace_id")
        if trace_id == reusing:
            raise SchemaViolation("a trace cannot reuse itself")
        record = self.traces.get(trace_id)
        if record is None or record.redacted:
            raise SchemaViolation(f"reuse references unknown trace {trace_id}")
        if reusing not in self.traces:
            raise SchemaViolation(f"reuse references unknown trace {reusing}")
        record.reuse_at.append(event.at)
        self._add_edge(
            LineageEdge(trace_id, reusing, EdgeRelation.REUSED_IN), event.at
        )

    # -- snapshots -----------------------------------------------------

    def snapshot_dict(self) -> dict:
        return {
            "position": self.position,
            "traces": {
                tid: self.traces[tid].to_json_dict() for tid in self.trace_order
            },
            "versions": {
                tid: [
                    {"version": v.to_json_dict(), "event_at": at}
                    for v, at in zip(
                        self.traces[tid].versions, self.traces[tid].version_event_at
                    )
                ]
                for tid in self.trace_order
            },
            "edges": [
                {**edge.to_json_dict(), "at": at} for edge, at in self.edges
            ],
            "flags": {fid: rec.to_json_dict() for fid, rec in self.flags.items()},
            "idempotency": dict(self.idempotency),
            "last_event_id": self.last_event_id,
            "last_event_at": self.last_event_at,
        }

    def digest(self) -> str:
        return canonical.digest(self.snapshot_dict())


_HANDLERS = {
    EventKind.TRACE_CAPTURED: StoreState._apply_trace_captured,
    EventKind.VERSION_ADDED: StoreState._apply_version_added,
    EventKind.LINK_ADDED: StoreState._apply_link_added,
    EventKind.DRIFT_FLAGGED: StoreState._apply_drift_flagged,
    EventKind.FLAG_RESOLVED: StoreState._apply_flag_resolved,
    EventKind.TRACE_REDACTED: StoreState._apply_trace_redacted,
    EventKind.FEEDBACK_RECORDED: StoreState._apply_feedback_recorded,
    EventKind.REUSE_RECORDED: StoreState._apply_reuse_recorded,
}


def replay(events) -> StoreState:
    """Fold an event sequence into fresh state; CorruptLog names the first
    invalid event's 1-based position."""
    state = StoreState()
    for i, event in enumerate(events, start=1):
        try:
            if not isinstance(event, Event):
                event = Event.from_json_dict(event)
            state.apply(event)
        except (SchemaViolation, KeyError, ValueError, TypeError) as exc:
            raise CorruptLog(i, str(exc)) from exc
    return state


class EventLog:
    """Append-only JSON-Lines event log.

    One canonical-JSON event per line, UTF-8, LF-terminated. Appends are
    flushed before returning; fsync per append is configurable because
    bulk imports batch it.
    """

    def __init__(self, path: str | os.PathLike, fsync: bool = True):
        self.path = os.fspath(path)
        self.fsync = fsync
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self._fh: io.TextIOWrapper | None = None

    def _handle(self) -> io.TextIOWrapper:
        if self._fh is None or self._fh.closed:
            self._fh = open(self.path, "a", encoding="utf-8", newline="\n")
        return self._fh

    def append(self, event: Event) -> None:
        try:
            fh = self._handle()
            fh.write(canonical.dumps(event.to_json_dict()) + "\n")
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot append to {self.path}: {exc}") from exc

    def sync(self) -> None:
        if self._fh is not None and not self._fh.closed:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None and not self._fh.closed:
            self.sync()
            self._fh.close()

    def read_events(self, after_position: int = 0):
        if not os.path.exists(self.path):
            return
        with open(self.path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                if i <= after_position or not line.strip():
                    continue
                try:
                    yield Event.from_json_dict(canonical.loads(line))
                except (KeyError, ValueError, TypeError) as exc:
                    raise CorruptLog(i, f"unparseable event: {exc}") from exc


class VectorIndex:
    """Growable row store of normalized embeddings, scanned brute force."""

    def __init__(self, dims: int, capacity: int = 1024):
        self.dims = dims
        self._matrix = np.zeros((max(capacity, 16), dims), dtype=np.float64)
        self._alive = np.zeros(max(capacity, 16), dtype=bool)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def add(self, values: np.ndarray, alive: bool = True) -> int:
        if self._n == self._matrix.shape[0]:
            grown = np.zeros((self._matrix.shape[0] * 2, self.dims), dtype=np.float64)
            grown[: self._n] = self._matrix[: self._n]
            self._matrix = grown
            alive_grown = np.zeros(grown.shape[0], dtype=bool)
            alive_grown[: self._n] = self._alive[: self._n]
            self._alive = alive_grown
        row = self._n
        self._matrix[row] = values
        self._alive[row] = alive
        self._n += 1
        return row

    def set_row(self, row: int, values: np.ndarray) -> None:
        self._matrix[row] = values

    def kill_row(self, row: int) -> None:
        self._alive[row] = False
        self._matrix[row] = 0.0

    def matrix(self) -> np.ndarray:
        return self._matrix[: self._n]

    def alive(self) -> np.ndarray:
        return self._alive[: self._n]
