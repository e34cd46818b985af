"""Exception taxonomy shared across the engine and its service surface."""

from __future__ import annotations

from dataclasses import dataclass


class EngineError(Exception):
    """Base class for all engine-raised errors."""


@dataclass(frozen=True)
class Violation:
    """One constructed-input violation; validation reports all of them."""

    code: str
    field: str
    message: str

    def to_json_dict(self) -> dict:
        return {"code": self.code, "field": self.field, "message": self.message}


class TraceValidationError(EngineError):
    """Raised with the complete list of violations, not just the first."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        summary = "; ".join(f"{v.code}({v.field})" for v in violations)
        super().__init__(f"invalid trace: {summary}")


class UnknownTrace(EngineError):
    pass


class UnknownVersion(EngineError):
    pass


class TraceRedacted(EngineError):
    pass


class AlreadyRedacted(EngineError):
    pass


class UnknownFlag(EngineError):
    pass


class FlagAlreadyResolved(EngineError):
    pass


class MissingRevisionPayload(EngineError):
    pass


class SelfReuse(EngineError):
    pass


class OutOfRange(EngineError):
    pass


class DimensionMismatch(EngineError):
    pass


class EmptyReferenceSet(EngineError):
    pass


class AllReferencesDegenerate(EngineError):
    pass


class AllCoherenceZero(EngineError):
    pass


class EmptyQuestionSet(EngineError):
    pass


class SchemaViolation(EngineError):
    pass


class StorageFailure(EngineError):
    pass


class CorruptLog(EngineError):
    """First invalid event in a replayed log; position is 1-based."""

    def __init__(self, position: int, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"corrupt log at event {position}: {reason}")


class ExternalServiceUnavailable(EngineError):
    pass


class ConfigError(EngineError):
    pass
