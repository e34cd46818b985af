"""The engine: single writer over the event log, many readers.

Every mutation funnels through `_commit`, which appends one atomic event
cluster under the writer lock: state fold first (validation backstop),
then the log write. Readers (search, lineage, regenerate, metrics) never
take the writer path. Utility scores are a derived cache refreshed
asynchronously — mutations only enqueue trace ids; a background refresher
(or an explicit `refresh_scores`) drains them, and the contract is
visibility within five seconds, not immediacy.

Search ranking is a total order: similarity desc, utility desc,
created_at desc, trace_id asc. A degenerate (empty) query scores every
candidate 0.0, which turns search into a utility-ranked browse.
"""

from __future__ import annotations

import os
import threading
from typing import Iterable

import numpy as np

from . import canonical, ids
from ._kernels import dot_scores
from .config import EngineConfig
from .drift import (
    DriftReport,
    Thresholds,
    cross_modal_alignment,
    insight_drift,
    resonance,
    scan_for_drift,
)
from .embedding import EmbeddingVector, build_embedder
from .errors import (
    AllReferencesDegenerate,
    AlreadyRedacted,
    CorruptLog,
    FlagAlreadyResolved,
    MissingRevisionPayload,
    OutOfRange,
    SchemaViolation,
    SelfReuse,
    TraceRedacted,
    UnknownFlag,
    UnknownTrace,
)
from .model import ActorRef, MemoryTrace, RationaleVersion, next_version, validate_trace
from .regeneration import ContextBundle, regenerate as _regenerate
from .scoring import UtilityInputs, coherence, utility
from .store import (
    Event,
    EventKind,
    EventLog,
    LineageEdge,
    EdgeRelation,
    SearchHit,
    StoreState,
    TraceRecord,
    VectorIndex,
    replay,
)
from .drift import contextual_entropy

SNAPSHOT_FILENAME = "snapshot.json"
LOG_FILENAME = "events.jsonl"


class _Column:
    """Growable float64 column kept in lockstep with the vector index."""

    def __init__(self):
        self._data = np.zeros(16, dtype=np.float64)
        self._n = 0

    def append(self, value: float) -> None:
        if self._n == self._data.shape[0]:
            grown = np.zeros(self._data.shape[0] * 2, dtype=np.float64)
            grown[: self._n] = self._data[: self._n]
            self._data = grown
        self._data[self._n] = value
        self._n += 1

    def set(self, row: int, value: float) -> None:
        self._data[row] = value

    def view(self) -> np.ndarray:
        return self._data[: self._n]


class Engine:
    def __init__(self, config: EngineConfig | None = None, *, clock=None):
        self.config = config if config is not None else EngineConfig()
        self.embedder = build_embedder(self.config.embedder)
        self.thresholds: Thresholds = self.config.thresholds
        self._clock_fn = clock if clock is not None else ids.now_ms
        self._lock = threading.RLock()
        self.state = StoreState()
        self._index = VectorIndex(self.config.embedder.dims)
        self._utility_col = _Column()
        self._created_col = _Column()
        self._version_vectors: dict[str, EmbeddingVector] = {}
        self._dirty: set[str] = set()
        self._refresher: _ScoreRefresher | None = None
        self._memlog: list[Event] | None = None
        self._log: EventLog | None = None
        if self.config.data_dir is None:
            self._memlog = []
        else:
            self.config.ensure_data_dir()
            self._log = EventLog(
                os.path.join(self.config.data_dir, LOG_FILENAME), fsync=self.config.fsync
            )
            self._recover()

    # -- plumbing --------------------------------------------------------

    def clock(self) -> int:
        return max(self._clock_fn(), self.state.last_event_at)

    def _commit(self, builders: list[tuple[EventKind, dict]], at: int) -> list[Event]:
        """Apply and persist one atomic event cluster."""
        events = [
            Event(event_id=ids.new_id(at), kind=kind, at=at, payload=payload)
            for kind, payload in builders
        ]
        for event in events:
            self.state.apply(event)
            self._post_apply(event)
        for event in events:
            if self._log is not None:
                self._log.append(event)
            else:
                self._memlog.append(event)
        return events

    def _post_apply(self, event: Event) -> None:
        """Maintain derived structures (vectors, columns, dirty set)."""
        kind = event.kind
        if kind == EventKind.TRACE_CAPTURED:
            trace_id = event.payload["trace_id"]
            record = self.state.traces[trace_id]
            record.row = self._index.add(
                np.zeros(self._index.dims), alive=not record.redacted
            )
            self._created_col.append(record.trace.created_at)
            self._utility_col.append(0.0)
            self._dirty.add(trace_id)
        elif kind == EventKind.VERSION_ADDED:
            trace_id = event.payload["trace_id"]
            record = self.state.traces[trace_id]
            vector = self.vector_for_version(record.head())
            self._index.set_row(record.row, vector.values)
            self._dirty.add(trace_id)
        elif kind == EventKind.TRACE_REDACTED:
            trace_id = event.payload["trace_id"]
            record = self.state.traces[trace_id]
            self._index.kill_row(record.row)
            for version in record.versions:
                self._version_vectors.pop(version.version_id, None)
            self._dirty.discard(trace_id)
        elif kind in (EventKind.FEEDBACK_RECORDED, EventKind.REUSE_RECORDED):
            self._dirty.add(event.payload["trace_id"])
        elif kind == EventKind.LINK_ADDED:
            from_id = event.payload["from_id"]
            if from_id in self.state.traces:
                self._dirty.add(from_id)
            # a new successor shifts alignment for everything linking to it
            if event.payload["relation"] == EdgeRelation.DERIVED_FROM.value:
                target = event.payload["to_id"]
                for other, links in self.state.links_out.items():
                    if any(t == target for t, _ in links):
                        self._dirty.add(other)

    def _require_trace(self, trace_id: str) -> TraceRecord:
        record = self.state.traces.get(trace_id)
        if record is None:
            raise UnknownTrace(trace_id)
        return record

    def _render(self, record: TraceRecord, version: RationaleVersion) -> str:
        """The text rendering that gets embedded for a version."""
        parts = [version.rationale]
        if self.config.include_assumptions and record.trace.assumptions:
            parts.extend(record.trace.assumptions)
        return "\n".join(parts)

    def vector_for_version(self, version: RationaleVersion) -> EmbeddingVector:
        vector = self._version_vectors.get(version.version_id)
        if vector is None:
            record = self.state.traces[version.trace_id]
            vector = self.embedder.embed(self._render(record, version))
            self._version_vectors[version.version_id] = vector
        return vector

    # -- mutations -------------------------------------------------------

    def capture(
        self,
        raw: dict,
        *,
        idempotency_key: str | None = None,
        derived_from: Iterable[str] = (),
    ) -> tuple[MemoryTrace, bool]:
        """Validate and record one decision trace (plus its first version).

        A repeated idempotency key returns the original trace without
        appending anything.
        """
        with self._lock:
            if idempotency_key is not None:
                existing = self.state.idempotency.get(idempotency_key)
                if existing is not None:
                    return self.state.traces[existing].trace, False
            at = self.clock()
            trace = validate_trace(raw, now=at)
            if trace.trace_id in self.state.traces:
                raise SchemaViolation(f"trace_id {trace.trace_id} already exists")
            parents = list(dict.fromkeys(derived_from))
            for parent in parents:
                if parent not in self.state.traces:
                    raise UnknownTrace(parent)
                if parent == trace.trace_id:
                    raise SchemaViolation("a trace cannot derive from itself")

            payload = trace.to_json_dict()
            if idempotency_key is not None:
                payload["idempotency_key"] = idempotency_key
            builders: list[tuple[EventKind, dict]] = [(EventKind.TRACE_CAPTURED, payload)]
            first = next_version(
                trace.trace_id,
                None,
                trace.rationale,
                trace.actor,
                version_id=ids.new_id(at),
                created_at=trace.created_at,
            )
            builders.append((EventKind.VERSION_ADDED, first.to_json_dict()))
            for parent in parents:
                builders.append(
                    (
                        EventKind.LINK_ADDED,
                        LineageEdge(trace.trace_id, parent, EdgeRelation.DERIVED_FROM).to_json_dict(),
                    )
                )
            seen_links = set(parents)
            for link in trace.links:
                if link in self.state.traces and link != trace.trace_id and link not in seen_links:
                    seen_links.add(link)
                    builders.append(
                        (
                            EventKind.LINK_ADDED,
                            LineageEdge(trace.trace_id, link, EdgeRelation.LINKS_TO).to_json_dict(),
                        )
                    )
            self._commit(builders, at)
            return trace, True

    def new_version(
        self,
        trace_id: str,
        rationale: str,
        author: ActorRef,
        change_note: str = "",
    ) -> RationaleVersion:
        with self._lock:
            record = self._require_trace(trace_id)
            if record.redacted:
                raise TraceRedacted(trace_id)
            at = self.clock()
            version = next_version(
                trace_id,
                record.head(),
                rationale,
                author,
                change_note,
                version_id=ids.new_id(at),
                created_at=at,
            )
            self._commit([(EventKind.VERSION_ADDED, version.to_json_dict())], at)
            return version

    def redact(self, trace_id: str, actor: ActorRef) -> MemoryTrace:
        with self._lock:
            record = self._require_trace(trace_id)
            if record.redacted:
                raise AlreadyRedacted(trace_id)
            at = self.clock()
            self._commit(
                [
                    (
                        EventKind.TRACE_REDACTED,
                        {"trace_id": trace_id, "actor": actor.to_json_dict()},
                    )
                ],
                at,
            )
            return record.trace

    def record_reuse(self, trace_id: str, reusing_trace_id: str) -> None:
        with self._lock:
            if trace_id == reusing_trace_id:
                raise SelfReuse(trace_id)
            record = self.state.traces.get(trace_id)
            if record is None or record.redacted:
                # redacted targets are indistinguishable from unknown ones
                raise UnknownTrace(trace_id)
            if reusing_trace_id not in self.state.traces:
                raise UnknownTrace(reusing_trace_id)
            at = self.clock()
            self._commit(
                [
                    (
                        EventKind.REUSE_RECORDED,
                        {"trace_id": trace_id, "reusing_trace_id": reusing_trace_id},
                    )
                ],
                at,
            )

    def record_feedback(
        self, trace_id: str, endorsement: float, actor: ActorRef, note: str = ""
    ) -> None:
        with self._lock:
            record = self._require_trace(trace_id)
            if record.redacted:
                raise TraceRedacted(trace_id)
            if not isinstance(endorsement, (int, float)) or not 0.0 <= float(endorsement) <= 1.0:
                raise OutOfRange(f"endorsement {endorsement} outside [0, 1]")
            at = self.clock()
            self._commit(
                [
                    (
                        EventKind.FEEDBACK_RECORDED,
                        {
                            "trace_id": trace_id,
                            "endorsement": float(endorsement),
                            "actor": actor.to_json_dict(),
                            "note": note,
                        },
                    )
                ],
                at,
            )

    def scan_for_drift(self, thresholds: Thresholds | None = None) -> list[DriftReport]:
        with self._lock:
            reports = scan_for_drift(self, thresholds)
            if reports:
                at = self.clock()
                self._commit(
                    [(EventKind.DRIFT_FLAGGED, r.to_json_dict()) for r in reports], at
                )
                for report in reports:
                    self._dirty.add(report.trace_id)
            return reports

    def resolve_flag(
        self,
        flag_id: str,
        action: str,
        actor: ActorRef,
        note: str = "",
        revised_rationale: str | None = None,
    ) -> tuple[DriftReport, RationaleVersion | None]:
        with self._lock:
            record = self.state.flags.get(flag_id)
            if record is None:
                raise UnknownFlag(flag_id)
            if record.resolution is not None:
                raise FlagAlreadyResolved(flag_id)
            if action not in ("accepted", "revised", "retired"):
                raise OutOfRange(f"unknown resolution action '{action}'")
            version = None
            at = self.clock()
            builders: list[tuple[EventKind, dict]] = []
            if action == "revised":
                if not revised_rationale or not revised_rationale.strip():
                    raise MissingRevisionPayload(flag_id)
                trace_record = self._require_trace(record.report.trace_id)
                if trace_record.redacted:
                    raise TraceRedacted(record.report.trace_id)
                version = next_version(
                    record.report.trace_id,
                    trace_record.head(),
                    revised_rationale,
                    actor,
                    change_note=note,
                    version_id=ids.new_id(at),
                    created_at=at,
                )
                builders.append((EventKind.VERSION_ADDED, version.to_json_dict()))
            builders.append(
                (
                    EventKind.FLAG_RESOLVED,
                    {
                        "flag_id": flag_id,
                        "action": action,
                        "actor": actor.to_json_dict(),
                        "note": note,
                        "new_version_id": version.version_id if version else None,
                    },
                )
            )
            self._commit(builders, at)
            return self.state.flags[flag_id].report, version

    # -- reads -----------------------------------------------------------

    def get_trace(self, trace_id: str) -> MemoryTrace:
        return self._require_trace(trace_id).trace

    def search(self, query: str, k: int, as_of: int | None = None) -> list[SearchHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        query_vec = self.embedder.embed(query)
        if as_of is None:
            return self._search_current(query_vec, k)
        return self._search_as_of(query_vec, k, as_of)

    def _search_current(self, query_vec: EmbeddingVector, k: int) -> list[SearchHit]:
        with self._lock:
            n = len(self._index)
            alive = self._index.alive().copy()
            order = list(self.state.trace_order)
        if n == 0 or not alive.any():
            return []
        matrix = self._index.matrix()[:n]
        if query_vec.degenerate:
            scores = np.zeros(n, dtype=np.float64)
        else:
            scores = np.asarray(dot_scores(matrix, np.ascontiguousarray(query_vec.values)))
        alive_idx = np.flatnonzero(alive[:n])
        alive_scores = scores[alive_idx]
        utilities = self._utility_col.view()[:n]
        created = self._created_col.view()[:n]

        k_eff = min(k, alive_idx.shape[0])
        if alive_idx.shape[0] > k_eff:
            threshold = np.partition(alive_scores, alive_idx.shape[0] - k_eff)[
                alive_idx.shape[0] - k_eff
            ]
            boundary = alive_idx[alive_scores >= threshold]
        else:
            boundary = alive_idx
        ranked = sorted(
            boundary.tolist(),
            key=lambda i: (-scores[i], -utilities[i], -created[i], order[i]),
        )[:k_eff]
        hits = []
        for rank, row in enumerate(ranked, start=1):
            trace_id = order[row]
            record = self.state.traces[trace_id]
            hits.append(
                SearchHit(
                    trace_id=trace_id,
                    version_id=record.head().version_id,
                    similarity=float(scores[row]),
                    utility=float(utilities[row]),
                    rank=rank,
                )
            )
        return hits

    def _search_as_of(self, query_vec: EmbeddingVector, k: int, as_of: int) -> list[SearchHit]:
        candidates = []
        for trace_id in self.state.trace_order:
            record = self.state.traces[trace_id]
            if record.redacted or record.captured_event_at > as_of:
                continue
            head = record.head_as_of(as_of)
            if head is None:
                continue
            vector = self.vector_for_version(head)
            similarity = (
                0.0
                if query_vec.degenerate or vector.degenerate
                else float(np.dot(query_vec.values, vector.values))
            )
            candidates.append(
                (
                    trace_id,
                    head.version_id,
                    similarity,
                    self._utility_for(record, as_of=as_of),
                    record.trace.created_at,
                )
            )
        candidates.sort(key=lambda c: (-c[2], -c[3], -c[4], c[0]))
        return [
            SearchHit(
                trace_id=tid,
                version_id=vid,
                similarity=sim,
                utility=util,
                rank=rank,
            )
            for rank, (tid, vid, sim, util, _) in enumerate(candidates[:k], start=1)
        ]

    def lineage(self, trace_id: str) -> dict:
        record = self._require_trace(trace_id)
        relevant = {trace_id} | {v.version_id for v in record.versions}
        edges = [
            edge.to_json_dict()
            for edge, _ in self.state.edges
            if edge.from_id in relevant or edge.to_id in relevant
        ]
        flag_history = [
            self.state.flags[fid].to_json_dict()
            for fid in self.state.flags_by_trace.get(trace_id, ())
        ]
        return {
            "trace_id": trace_id,
            "redacted": record.redacted,
            "versions": [v.to_json_dict() for v in record.versions],
            "edges": edges,
            "flag_history": flag_history,
        }

    def list_flags(self, status: str | None = None) -> list[dict]:
        records = sorted(
            self.state.flags.values(), key=lambda r: (r.flagged_event_at, r.report.flag_id)
        )
        out = []
        for rec in records:
            if status is not None and rec.report.status != status:
                continue
            out.append(self._flag_view(rec))
        return out

    def _flag_view(self, rec) -> dict:
        report = rec.report
        trace_record = self.state.traces.get(report.trace_id)
        original = self.state.versions_by_id.get(report.original_version)
        current = (
            self.state.versions_by_id.get(report.current_version)
            if report.current_version
            else None
        )
        view = report.to_json_dict()
        view["trace_subject"] = trace_record.trace.subject if trace_record else ""
        view["original_text"] = original.rationale if original else ""
        view["current_text"] = (
            current.rationale if current is not None else (report.external_context or "")
        )
        view["utility"] = (
            float(self._utility_col.view()[trace_record.row])
            if trace_record is not None and trace_record.row >= 0
            else 0.0
        )
        view["resolution"] = rec.resolution
        return view

    def regenerate(self, query: str, k: int, as_of: int | None = None) -> ContextBundle:
        return _regenerate(self, query, k, as_of=as_of)

    def alignment(self, rendering_a: str, rendering_b: str):
        return cross_modal_alignment(
            rendering_a, rendering_b, self.embedder, self.thresholds.tau_align
        )

    # -- scoring ---------------------------------------------------------

    def _alignment_references(self, record: TraceRecord, as_of: int | None):
        refs = []
        for target_id, linked_at in self.state.links_out.get(record.trace.trace_id, ()):
            if as_of is not None and linked_at > as_of:
                continue
            resolved_id = self.state.newest_successor(target_id, as_of)
            target = self.state.traces.get(resolved_id)
            if target is None or target.redacted:
                continue
            head = target.head() if as_of is None else target.head_as_of(as_of)
            if head is None:
                continue
            refs.append(self.vector_for_version(head))
        return refs

    def _utility_inputs(self, record: TraceRecord, as_of: int | None = None) -> UtilityInputs:
        reuse_count = record.reuse_count(as_of)
        feedback_mean = record.feedback_mean(as_of)
        feedback = 0.5 if feedback_mean is None else feedback_mean

        versions = record.versions if as_of is None else record.versions_as_of(as_of)
        head = versions[-1]
        head_vec = self.vector_for_version(head)

        refs = self._alignment_references(record, as_of)
        if refs:
            try:
                alignment = max(0.0, min(1.0, resonance(head_vec, refs)))
            except AllReferencesDegenerate:
                alignment = 0.0
        else:
            alignment = 1.0

        if len(versions) >= 2:
            drift = min(1.0, insight_drift(self.vector_for_version(versions[0]), head_vec))
        else:
            drift = 0.0
        return UtilityInputs(
            reuse_count=reuse_count, feedback=feedback, alignment=alignment, drift=drift
        )

    def _utility_for(self, record: TraceRecord, as_of: int | None = None) -> float:
        if record.redacted or not record.versions:
            return 0.0
        return utility(self._utility_inputs(record, as_of), self.config.weights)

    def refresh_scores(self, limit: int | None = None) -> int:
        """Drain the dirty set, recomputing cached utilities. Returns count."""
        refreshed = 0
        while self._dirty:
            if limit is not None and refreshed >= limit:
                break
            with self._lock:
                if not self._dirty:
                    break
                trace_id = self._dirty.pop()
                record = self.state.traces.get(trace_id)
                if record is None or record.row < 0:
                    continue
                self._utility_col.set(record.row, self._utility_for(record))
                refreshed += 1
        return refreshed

    def pending_refresh(self) -> int:
        return len(self._dirty)

    def start_refresher(self, interval_s: float = 0.25) -> None:
        if self._refresher is None or not self._refresher.is_alive():
            self._refresher = _ScoreRefresher(self, interval_s)
            self._refresher.start()

    def stop_refresher(self) -> None:
        if self._refresher is not None:
            self._refresher.stop()
            self._refresher.join(timeout=5.0)
            self._refresher = None

    # -- metrics ---------------------------------------------------------

    def _coherence_view(self, now: int | None, as_of: int | None) -> list[float]:
        now = self.clock() if now is None else now
        weights = []
        for trace_id in self.state.trace_order:
            record = self.state.traces[trace_id]
            if record.redacted:
                continue
            if as_of is not None and record.captured_event_at > as_of:
                continue
            weights.append(
                coherence(
                    record.trace.created_at,
                    max(now, record.trace.created_at),
                    record.review_status(as_of),
                    self.config.coherence,
                )
            )
        return weights

    def entropy_value(self, now: int | None = None, as_of: int | None = None) -> float | None:
        weights = self._coherence_view(now, as_of)
        positive = [w for w in weights if w > 0]
        if not positive:
            return None
        return contextual_entropy(weights)

    def entropy_metrics(self, now: int | None = None) -> dict:
        weights = self._coherence_view(now, None)
        positive = [w for w in weights if w > 0]
        if not positive:
            return {"entropy": None, "n": 0}
        return {"entropy": contextual_entropy(weights), "n": len(positive)}

    # -- persistence -----------------------------------------------------

    def iter_events(self):
        if self._memlog is not None:
            yield from self._memlog
        else:
            yield from self._log.read_events()

    def export_events(self, path: str | os.PathLike) -> int:
        count = 0
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for event in self.iter_events():
                fh.write(canonical.dumps(event.to_json_dict()) + "\n")
                count += 1
        return count

    def import_events(self, events: Iterable[Event | dict]) -> int:
        """Load a full event stream into an empty engine.

        The whole stream is validated against a throwaway fold before
        anything is appended, so a bad line leaves the engine untouched
        and is reported with its 1-based position.
        """
        if self.state.position != 0:
            raise SchemaViolation("import requires an empty engine")
        materialized: list[Event] = []
        for i, event in enumerate(events, start=1):
            try:
                materialized.append(
                    event if isinstance(event, Event) else Event.from_json_dict(event)
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptLog(i, f"unparseable event: {exc}") from exc
        replay(materialized)
        with self._lock:
            batched = self._log is not None and self._log.fsync
            if batched:
                self._log.fsync = False
            try:
                for event in materialized:
                    self.state.apply(event)
                    self._post_apply(event)
                    if self._log is not None:
                        self._log.append(event)
                    else:
                        self._memlog.append(event)
            finally:
                if batched:
                    self._log.fsync = True
                    self._log.sync()
            self.refresh_scores()
        return len(materialized)

    def state_digest(self) -> str:
        return self.state.digest()

    def snapshot_path(self) -> str | None:
        if self.config.data_dir is None:
            return None
        return os.path.join(self.config.data_dir, SNAPSHOT_FILENAME)

    def write_snapshot(self) -> str | None:
        path = self.snapshot_path()
        if path is None:
            return None
        with self._lock:
            payload = canonical.dumps(self.state.snapshot_dict())
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
        return path

    def _recover(self) -> None:
        snapshot_file = self.snapshot_path()
        start_position = 0
        if snapshot_file and os.path.exists(snapshot_file):
            with open(snapshot_file, encoding="utf-8") as fh:
                snapshot = canonical.loads(fh.read())
            self.state = StoreState.from_snapshot_dict(snapshot)
            start_position = self.state.position
        for event in self._log.read_events(after_position=start_position):
            try:
                self.state.apply(event)
            except SchemaViolation as exc:
                raise CorruptLog(self.state.position + 1, str(exc)) from exc
        self._rebuild_derived()

    def _rebuild_derived(self) -> None:
        self._index = VectorIndex(self.config.embedder.dims)
        self._utility_col = _Column()
        self._created_col = _Column()
        self._version_vectors = {}
        for trace_id in self.state.trace_order:
            record = self.state.traces[trace_id]
            if record.redacted or not record.versions:
                record.row = self._index.add(np.zeros(self._index.dims), alive=False)
                self._utility_col.append(0.0)
            else:
                vector = self.vector_for_version(record.head())
                record.row = self._index.add(vector.values, alive=True)
                self._utility_col.append(0.0)
            self._created_col.append(record.trace.created_at)
            if not record.redacted:
                self._dirty.add(trace_id)
        self.refresh_scores()

    def close(self) -> None:
        self.stop_refresher()
        if self._log is not None:
            self.write_snapshot()
            self._log.close()


def _events_of(*_args):  # pragma: no cover - placeholder, removed below
    return []


class _ScoreRefresher(threading.Thread):
    """Drains the utility dirty set on a short interval."""

    def __init__(self, engine: Engine, interval_s: float = 0.25):
        super().__init__(name="hindsight-score-refresher", daemon=True)
        self._engine = engine
        self._interval = interval_s
        self._stop = threading.Event()

    def run(self) -> None:
        while not self._stop.is_set():
            try:
                self._engine.refresh_scores()
            except Exception:  # pragma: no cover - background resilience
                pass
            self._stop.wait(self._interval)

    def stop(self) -> None:
        self._stop.set()
