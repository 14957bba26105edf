"""Shared domain types for multi-stage binary decision fusion.

Every sensor in a fleet is abstracted to the pair (p, q): the probability
of reporting 1 when the event is present and when it is absent.  All
types here are immutable after construction and all operations are pure,
so they are safe to share across threads and processes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Alpha",
    "DetectionError",
    "FusionTrajectory",
    "Hypothesis",
    "InfeasibleError",
    "OperatingPoint",
    "SensorProfile",
    "ValidationError",
    "as_alpha",
    "normalize_sensor",
    "odds_ratio",
    "require_productive",
]


class DetectionError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DetectionError, ValueError):
    """Inputs violate a construction contract (domain, type, or config)."""


class InfeasibleError(DetectionError):
    """The requested computation is numerically infeasible.

    Raised for blind sensors (p == q), non-productive fleets where a
    productive one is required, and similar dead ends that are not mere
    type errors.
    """


class Hypothesis(enum.IntEnum):
    """The binary hypothesis: H0 (event absent) or H1 (event present)."""

    H0 = 0
    H1 = 1


def _require_prob(x: object, name: str, *, open_interval: bool) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{name} must be a real number, got {x!r}")
    v = float(x)
    if not math.isfinite(v):
        raise ValidationError(f"{name} must be finite, got {v!r}")
    # Strict comparisons with no epsilon: boundary values are rejected
    # exactly when the open interval is required.
    if open_interval:
        if not 0.0 < v < 1.0:
            raise ValidationError(f"{name} must lie strictly inside (0, 1), got {v}")
    elif not 0.0 <= v <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {v}")
    return v


@dataclass(frozen=True)
class SensorProfile:
    """Per-sensor detection/false-alarm probability pair.

    ``p`` is P(report 1 | event present) and ``q`` is P(report 1 | event
    absent).  Both must be interior probabilities; a profile with p > q
    is called productive, p == q blind, and p < q counterproductive
    (fixable by flipping the output, see :func:`normalize_sensor`).
    """

    p: float
    q: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _require_prob(self.p, "p", open_interval=True))
        object.__setattr__(self, "q", _require_prob(self.q, "q", open_interval=True))

    @property
    def productive(self) -> bool:
        return self.p > self.q


@dataclass(frozen=True)
class OperatingPoint:
    """A (false-alarm, detection) probability pair reached by a fusion rule."""

    q0: float
    p0: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "q0", _require_prob(self.q0, "q0", open_interval=False))
        object.__setattr__(self, "p0", _require_prob(self.p0, "p0", open_interval=False))


@dataclass(frozen=True)
class Alpha:
    """False-alarm ceiling, strictly inside (0, 1).

    The boundary values are rejected on purpose: alpha = 0 forces the
    trivial never-declare rule and alpha = 1 degenerates the
    randomization factor, and several closed forms used downstream
    divide by alpha and by (1 - alpha).
    """

    value: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "value", _require_prob(self.value, "alpha", open_interval=True)
        )


def as_alpha(alpha: Alpha | float) -> float:
    """Coerce an ``Alpha`` or bare float to a validated interior float."""
    if isinstance(alpha, Alpha):
        return alpha.value
    return Alpha(alpha).value


def odds_ratio(s: SensorProfile) -> float:
    """Sensitivity metric p/(1-p) * (1-q)/q.

    Equals 1 for a blind sensor and exceeds 1 for a productive one.  It
    is invariant under complementing both probabilities, in the sense
    that odds_ratio(p, q) * odds_ratio(1-p, 1-q) == 1.
    """
    return s.p / (1.0 - s.p) * (1.0 - s.q) / s.q


def normalize_sensor(s: SensorProfile) -> tuple[SensorProfile, bool]:
    """Flip a counterproductive sensor so that p > q.

    Returns the (possibly flipped) profile and whether a flip happened.
    A blind sensor (p == q, compared exactly) carries no information and
    is rejected rather than silently passed through.
    """
    if s.p == s.q:
        raise InfeasibleError(
            f"blind sensor (p == q == {s.p}) cannot be made productive"
        )
    if s.p > s.q:
        return s, False
    return SensorProfile(1.0 - s.p, 1.0 - s.q), True


def require_productive(
    profiles: Iterable[SensorProfile],
) -> tuple[SensorProfile, ...]:
    """Validate that every profile satisfies p > q and return them as a tuple."""
    fleet = tuple(profiles)
    if not fleet:
        raise ValidationError("fleet must contain at least one sensor")
    for i, s in enumerate(fleet):
        if not isinstance(s, SensorProfile):
            raise ValidationError(f"sensor {i} is not a SensorProfile: {s!r}")
        if not s.productive:
            raise InfeasibleError(
                f"sensor {i} is not productive (p={s.p}, q={s.q}); "
                "flip it with normalize_sensor first"
            )
    return fleet


@dataclass(frozen=True)
class FusionTrajectory:
    """Per-stage record of a multi-stage fusion run.

    ``p0[k-1]`` and ``q0[k-1]`` are the stage-k detection and false-alarm
    probabilities.  For the per-stage-optimal algorithm the threshold
    sequence (``log_t``, ``lam``) is recorded as well; the stationary
    two-threshold rule has constant thresholds so it leaves them None.
    ``converged_at`` is the 1-based stage where an early-stop criterion
    fired, or None if the run went to full length.
    """

    algorithm: str
    p0: np.ndarray
    q0: np.ndarray
    log_t: np.ndarray | None = None
    lam: np.ndarray | None = None
    converged_at: int | None = None

    def __post_init__(self) -> None:
        for name in ("p0", "q0", "log_t", "lam"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.p0.shape != self.q0.shape:
            raise ValidationError("p0 and q0 must have the same length")

    def __len__(self) -> int:
        return len(self.p0)


def profile_arrays(
    profiles: Sequence[SensorProfile],
) -> tuple[np.ndarray, np.ndarray]:
    """Stack a fleet's (p, q) values into two read-only float arrays."""
    p = np.array([s.p for s in profiles], dtype=np.float64)
    q = np.array([s.q for s in profiles], dtype=np.float64)
    p.setflags(write=False)
    q.setflags(write=False)
    return p, q
