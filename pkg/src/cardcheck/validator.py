"""The monotonicity oracle: compare root estimates of a restricted query pair.

A query made strictly more restrictive must not receive a larger root
estimate than the original.  Estimates are only compared when the two
plans are structurally similar; otherwise the pair is incomparable and
no verdict about the estimator is implied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .planmodel import PlanNode, flatten, root_estimate
from .similarity import DEFAULT_THRESHOLD, edit_distance


@dataclass(frozen=True)
class Pass:
    original_estimate: float
    restricted_estimate: float


@dataclass(frozen=True)
class Violation:
    original_estimate: float
    restricted_estimate: float
    margin: float


@dataclass(frozen=True)
class Incomparable:
    distance: int


Verdict = Union[Pass, Violation, Incomparable]


def check_pair(
    plan_q: PlanNode,
    plan_q_prime: PlanNode,
    epsilon: float = 0.0,
    similarity_threshold: int = DEFAULT_THRESHOLD,
) -> Verdict:
    """Classify one (original, restricted) plan pair.

    Raises MissingEstimate when either root lacks an estimate.  The
    property is non-strict: equal estimates pass with epsilon 0.
    """
    original = root_estimate(plan_q)
    restricted = root_estimate(plan_q_prime)
    distance = edit_distance(flatten(plan_q), flatten(plan_q_prime))
    if distance > similarity_threshold:
        return Incomparable(distance)
    if restricted > original + epsilon:
        return Violation(original, restricted, restricted - original)
    return Pass(original, restricted)
