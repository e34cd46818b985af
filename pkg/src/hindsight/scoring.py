"""Coherence weighting and memory utility.

Coherence c(m) in [0, 1] combines exponential recency decay (configurable
half-life) with a review-status factor; it feeds the entropy
normalization. Utility is a weighted linear blend of reuse frequency,
endorsement feedback, contextual alignment, and anti-drift — linear so the
monotonicity properties stay trivially testable and the weights stay
interpretable. Reuse is log-compressed and capped so one hot insight
cannot saturate rankings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

DEFAULT_REVIEW_FACTORS = {"confirmed": 1.0, "unreviewed": 0.5, "retired": 0.1}


@dataclass(frozen=True)
class CoherenceParams:
    half_life_days: float = 30.0
    review_factor: dict = field(default_factory=lambda: dict(DEFAULT_REVIEW_FACTORS))

    def __post_init__(self):
        if not (self.half_life_days > 0 and math.isfinite(self.half_life_days)):
            raise ValueError("half_life_days must be finite and positive")
        for status, factor in self.review_factor.items():
            if not 0.0 <= factor <= 1.0:
                raise ValueError(f"review factor for '{status}' must be in [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "half_life_days": self.half_life_days,
            "review_factor": dict(self.review_factor),
        }


@dataclass(frozen=True)
class UtilityWeights:
    w_reuse: float = 0.3
    w_feedback: float = 0.2
    w_alignment: float = 0.3
    w_antidrift: float = 0.2
    reuse_cap: int = 100

    def __post_init__(self):
        weights = (self.w_reuse, self.w_feedback, self.w_alignment, self.w_antidrift)
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if self.reuse_cap < 1:
            raise ValueError("reuse_cap must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "w_reuse": self.w_reuse,
            "w_feedback": self.w_feedback,
            "w_alignment": self.w_alignment,
            "w_antidrift": self.w_antidrift,
            "reuse_cap": self.reuse_cap,
        }


@dataclass(frozen=True)
class UtilityInputs:
    """Normalized utility components; all in their stated ranges."""

    reuse_count: int = 0
    feedback: float = 0.0
    alignment: float = 0.0
    drift: float = 0.0

    def __post_init__(self):
        if self.reuse_count < 0:
            raise ValueError("reuse_count must be >= 0")
        for name in ("feedback", "alignment", "drift"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


MS_PER_DAY = 86_400_000.0


def coherence(
    created_at: int,
    now: int,
    review_status: str = "unreviewed",
    params: CoherenceParams | None = None,
) -> float:
    """c(m) = 2^(-age/half_life) * review_factor, clamped to [0, 1]."""
    params = params if params is not None else CoherenceParams()
    if now < created_at:
        raise ValueError("now precedes the trace's creation")
    age_days = (now - created_at) / MS_PER_DAY
    decay = math.exp(-math.log(2.0) * age_days / params.half_life_days)
    factor = params.review_factor.get(review_status, params.review_factor["unreviewed"])
    return min(1.0, max(0.0, decay * factor))


def normalized_reuse(reuse_count: int, cap: int = 100) -> float:
    """Log-compressed reuse frequency, saturating at the cap."""
    capped = min(reuse_count, cap)
    return math.log1p(capped) / math.log1p(cap)


def utility(inputs: UtilityInputs, weights: UtilityWeights | None = None) -> float:
    weights = weights if weights is not None else UtilityWeights()
    value = (
        weights.w_reuse * normalized_reuse(inputs.reuse_count, weights.reuse_cap)
        + weights.w_feedback * inputs.feedback
        + weights.w_alignment * inputs.alignment
        + weights.w_antidrift * (1.0 - inputs.drift)
    )
    return min(1.0, max(0.0, value))
