"""Single-stage Neyman-Pearson decision fusion over binary messages.

The fused statistic for a message vector u is the likelihood ratio
P(u | H1) / P(u | H0), which for n conditionally independent binary
sensors factors into per-bit ratios and takes at most 2**n distinct
values.  This module enumerates those values in the log domain, groups
ties, solves the alpha-constrained randomized threshold test, and
exposes the piecewise-linear ROC geometry of the optimal fusion rule.

The randomized test declares 1 when the log likelihood ratio exceeds
``log_t``, 0 when it falls below, and 1 with probability ``lam`` at
equality; equality is always judged against the same absolute tie
tolerance the table was built with, so the solver, the operating-point
evaluation, and any bit-level simulation classify outcomes identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Alpha,
    InfeasibleError,
    OperatingPoint,
    SensorProfile,
    ValidationError,
    as_alpha,
    odds_ratio,
    profile_arrays,
    require_productive,
)

__all__ = [
    "ENUMERATION_LIMIT",
    "LOG_LR_TIE_TOL",
    "OutcomeAtom",
    "OutcomeTable",
    "RandomizedThreshold",
    "RocCurve",
    "enumerate_outcomes",
    "merge_ties",
    "operating_point",
    "roc_curve",
    "roc_extension_intersection",
    "solve_threshold",
]

#: Absolute tolerance on log likelihood ratios below which two joint
#: outcomes are treated as a single tied value.  Log-domain products of
#: bounded per-bit ratios accumulate only a few ulp of error, so 1e-9 is
#: scale-free and far above float noise.
LOG_LR_TIE_TOL = 1e-9

#: Hard cap on fleet size for exhaustive enumeration (2**n outcomes).
ENUMERATION_LIMIT = 24


@dataclass(frozen=True)
class OutcomeAtom:
    """One distinct likelihood-ratio value with its mass under each hypothesis."""

    log_lr: float
    prob_h0: float
    prob_h1: float


@dataclass(frozen=True)
class RandomizedThreshold:
    """Randomized LR test parameters: threshold (log domain) and tie probability."""

    log_t: float
    lam: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.log_t):
            raise ValidationError(f"log_t must be finite, got {self.log_t!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lam must lie in [0, 1], got {self.lam!r}")


@dataclass(frozen=True)
class OutcomeTable:
    """Distinct joint-outcome likelihood ratios, sorted ascending.

    ``log_lr[i]`` carries masses ``prob_h0[i]`` / ``prob_h1[i]`` under the
    two hypotheses.  Consecutive entries differ by more than ``tie_tol``,
    the tolerance the table was merged with; each mass vector sums to 1.
    """

    log_lr: np.ndarray
    prob_h0: np.ndarray
    prob_h1: np.ndarray
    n_sensors: int
    tie_tol: float = LOG_LR_TIE_TOL

    def __post_init__(self) -> None:
        for name in ("log_lr", "prob_h0", "prob_h1"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.log_lr) == len(self.prob_h0) == len(self.prob_h1)):
            raise ValidationError("table arrays must have equal length")
        if len(self.log_lr) == 0:
            raise ValidationError("table must contain at least one outcome")

    def __len__(self) -> int:
        return len(self.log_lr)

    @property
    def atoms(self) -> list[OutcomeAtom]:
        return [
            OutcomeAtom(float(l), float(a), float(b))
            for l, a, b in zip(self.log_lr, self.prob_h0, self.prob_h1)
        ]

    def validate(self, atol: float = 1e-10) -> None:
        """Check normalization, ordering, and log-ratio consistency."""
        if abs(float(self.prob_h0.sum()) - 1.0) > atol:
            raise ValidationError("H0 masses do not sum to 1")
        if abs(float(self.prob_h1.sum()) - 1.0) > atol:
            raise ValidationError("H1 masses do not sum to 1")
        if np.any(self.prob_h0 <= 0.0) or np.any(self.prob_h1 <= 0.0):
            raise ValidationError("all outcome masses must be positive")
        if len(self) > 1 and np.any(np.diff(self.log_lr) <= self.tie_tol):
            raise ValidationError("log_lr values must increase by more than tie_tol")
        ratio = self.prob_h1 / self.prob_h0
        if np.any(np.abs(np.log(ratio) - self.log_lr) > 1e-9 * np.maximum(1.0, np.abs(self.log_lr))):
            raise ValidationError("log_lr inconsistent with mass ratio")


@dataclass(frozen=True)
class RocCurve:
    """Piecewise-linear ROC of the optimal fusion rule.

    ``q[i]``/``p[i]`` are the vertex coordinates from (0, 0) to (1, 1),
    scanned from the largest likelihood ratio down; ``slopes[i]`` is the
    slope of segment i, equal to that outcome's mass ratio
    prob_h1/prob_h0, so the slopes are non-increasing left to right.
    """

    q: np.ndarray
    p: np.ndarray
    slopes: np.ndarray

    def __post_init__(self) -> None:
        for name in ("q", "p", "slopes"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.q) != len(self.p) or len(self.q) != len(self.slopes) + 1:
            raise ValidationError("vertex arrays must be one longer than slopes")
        if abs(self.q[0]) > 1e-12 or abs(self.p[0]) > 1e-12:
            raise ValidationError("ROC must start at (0, 0)")
        if abs(self.q[-1] - 1.0) > 1e-9 or abs(self.p[-1] - 1.0) > 1e-9:
            raise ValidationError("ROC must end at (1, 1)")
        if np.any(np.diff(self.q) < -1e-15) or np.any(np.diff(self.p) < -1e-15):
            raise ValidationError("ROC coordinates must be non-decreasing")

    @property
    def vertices(self) -> list[OperatingPoint]:
        return [
            OperatingPoint(q0=min(max(float(a), 0.0), 1.0), p0=min(max(float(b), 0.0), 1.0))
            for a, b in zip(self.q, self.p)
        ]

    def __len__(self) -> int:
        return len(self.slopes)


def _merge_arrays(
    log_lr: np.ndarray,
    prob_h0: np.ndarray,
    prob_h1: np.ndarray,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Group consecutive sorted values whose gaps are within ``tol``.

    Masses add within a group; a merged group's representative log ratio
    is recomputed as log(sum_h1 / sum_h0), which always lies inside the
    group's range.  Singleton groups keep their original value.
    """
    if len(log_lr) <= 1:
        return log_lr.copy(), prob_h0.copy(), prob_h1.copy()
    gap_ok = np.diff(log_lr) > tol
    if gap_ok.all():
        return log_lr, prob_h0, prob_h1
    new_group = np.empty(len(log_lr), dtype=np.int64)
    new_group[0] = 0
    np.cumsum(gap_ok, out=new_group[1:])
    p0 = np.bincount(new_group, weights=prob_h0)
    p1 = np.bincount(new_group, weights=prob_h1)
    counts = np.bincount(new_group)
    starts = np.searchsorted(new_group, np.arange(len(counts)))
    merged_lr = log_lr[starts].copy()
    multi = counts > 1
    if np.any(multi):
        merged_lr[multi] = np.log(p1[multi] / p0[multi])
    return merged_lr, p0, p1


def merge_ties(atoms: Sequence[OutcomeAtom], tol: float) -> list[OutcomeAtom]:
    """Merge consecutive atoms whose log ratios differ by at most ``tol``.

    The input must already be sorted by log_lr ascending.
    """
    if any(b.log_lr < a.log_lr for a, b in zip(atoms, atoms[1:])):
        raise ValidationError("atoms must be sorted by log_lr ascending")
    if not atoms:
        return []
    l = np.array([a.log_lr for a in atoms])
    p0 = np.array([a.prob_h0 for a in atoms])
    p1 = np.array([a.prob_h1 for a in atoms])
    ml, m0, m1 = _merge_arrays(l, p0, p1, tol)
    return [OutcomeAtom(float(a), float(b), float(c)) for a, b, c in zip(ml, m0, m1)]


def _is_homogeneous(profiles: Sequence[SensorProfile]) -> bool:
    first = profiles[0]
    return all(s.p == first.p and s.q == first.q for s in profiles)


def _binomial_table(s: SensorProfile, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # n identical sensors: the LR depends only on the number of ones, so
    # the 2**n outcomes collapse to n + 1 binomially weighted values.
    m = np.arange(n + 1, dtype=np.float64)
    log_lr = m * math.log(s.p / s.q) + (n - m) * math.log((1.0 - s.p) / (1.0 - s.q))
    comb = np.array([math.comb(n, k) for k in range(n + 1)], dtype=np.float64)
    prob_h0 = comb * s.q**m * (1.0 - s.q) ** (n - m)
    prob_h1 = comb * s.p**m * (1.0 - s.p) ** (n - m)
    return log_lr, prob_h0, prob_h1


def _full_table(profiles: Sequence[SensorProfile]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Doubling construction: sensor i occupies bit i of the outcome
    # index, so each step stacks the bit-0 block under the bit-1 block.
    log_lr = np.zeros(1)
    prob_h0 = np.ones(1)
    prob_h1 = np.ones(1)
    for s in profiles:
        weights = np.array([math.log((1.0 - s.p) / (1.0 - s.q)), math.log(s.p / s.q)])
        log_lr = (weights[:, None] + log_lr[None, :]).ravel()
        prob_h0 = (np.array([1.0 - s.q, s.q])[:, None] * prob_h0[None, :]).ravel()
        prob_h1 = (np.array([1.0 - s.p, s.p])[:, None] * prob_h1[None, :]).ravel()
    return log_lr, prob_h0, prob_h1


def enumerate_outcomes(
    profiles: Sequence[SensorProfile],
    tie_tol: float = LOG_LR_TIE_TOL,
    *,
    collapse_homogeneous: bool = True,
    max_sensors: int = ENUMERATION_LIMIT,
) -> OutcomeTable:
    """Build the sorted, tie-merged outcome table for a fleet.

    Each of the 2**n message vectors contributes its joint probability
    under both hypotheses and the sum of its per-bit log ratios.  Fleets
    of bit-identical sensors are collapsed directly to the n + 1
    binomially weighted values unless ``collapse_homogeneous`` is off
    (the general path must produce the same table, which tests exploit).

    Sorting is deterministic: ascending log_lr, with any exact ties
    ordered by H0 mass then H1 mass descending before merging.

    ``max_sensors`` guards the exponential cost; the multi-stage solver
    raises it by one to fold its memory bit into a full-size fleet.
    """
    fleet = tuple(profiles)
    n = len(fleet)
    if not 1 <= n <= max_sensors:
        raise ValidationError(
            f"fleet size {n} outside supported range 1..{max_sensors} "
            "(enumeration is exponential in n)"
        )
    for i, s in enumerate(fleet):
        if not isinstance(s, SensorProfile):
            raise ValidationError(f"sensor {i} is not a SensorProfile: {s!r}")
    if collapse_homogeneous and _is_homogeneous(fleet):
        log_lr, prob_h0, prob_h1 = _binomial_table(fleet[0], n)
    else:
        log_lr, prob_h0, prob_h1 = _full_table(fleet)
    order = np.argsort(log_lr, kind="stable")
    if np.any(np.diff(log_lr[order]) == 0.0):
        # Exact duplicates: fall back to the deterministic full ordering
        # (H0 mass then H1 mass descending within a tied value).
        order = np.lexsort((-prob_h1, -prob_h0, log_lr))
    log_lr, prob_h0, prob_h1 = _merge_arrays(
        log_lr[order], prob_h0[order], prob_h1[order], tie_tol
    )
    return OutcomeTable(
        log_lr=log_lr,
        prob_h0=prob_h0,
        prob_h1=prob_h1,
        n_sensors=n,
        tie_tol=tie_tol,
    )


def solve_threshold(table: OutcomeTable, alpha: Alpha | float) -> RandomizedThreshold:
    """Solve the alpha-constrained randomized threshold over a table.

    Scanning from the largest likelihood ratio downward, pick the lowest
    value whose strictly-above H0 mass does not exceed alpha, and spend
    the remaining false-alarm budget on that value via the randomization
    factor.  The resulting operating point satisfies q0 == alpha up to a
    couple of ulp, which is what makes the constraint active at every
    stage of the multi-stage algorithms.

    When alpha exactly equals a cumulative mass the scan settles on the
    lower neighbouring value with lam == 0 rather than the upper one
    with lam == 1; both describe the same operating point.
    """
    a = as_alpha(alpha)
    j, mass_above = _select_threshold_index(table.prob_h0, a)
    lam = (a - mass_above) / float(table.prob_h0[j])
    lam = min(max(lam, 0.0), 1.0)
    return RandomizedThreshold(log_t=float(table.log_lr[j]), lam=lam)


def _select_threshold_index(p0: np.ndarray, a: float) -> tuple[int, float]:
    """Smallest index whose strictly-above H0 mass fits under ``a``.

    The coarse scan uses a cumulative sum; the boundary is then settled
    against plain slice summation, which is the same reduction the
    operating-point evaluation performs, so a boundary alpha resolves to
    the same index both ways and q0 round-trips to alpha exactly.
    """
    above = np.cumsum(p0[::-1])[::-1] - p0
    j = int(np.nonzero(above <= a)[0][0])
    while j > 0 and float(p0[j:].sum()) <= a:
        j -= 1
    while j + 1 < len(p0) and float(p0[j + 1 :].sum()) > a:
        j += 1
    return j, float(p0[j + 1 :].sum())


def _classify(table: OutcomeTable, thr: RandomizedThreshold) -> tuple[np.ndarray, np.ndarray]:
    tol = table.tie_tol
    above = table.log_lr > thr.log_t + tol
    equal = np.abs(table.log_lr - thr.log_t) <= tol
    return above, equal


def operating_point(table: OutcomeTable, thr: RandomizedThreshold) -> OperatingPoint:
    """Evaluate the (q0, p0) pair a randomized threshold reaches on a table.

    Mass strictly above the threshold counts fully; mass at the
    threshold (within the table's tie tolerance) counts with weight lam.
    """
    above, equal = _classify(table, thr)
    q0 = float(table.prob_h0[above].sum()) + thr.lam * float(table.prob_h0[equal].sum())
    p0 = float(table.prob_h1[above].sum()) + thr.lam * float(table.prob_h1[equal].sum())
    return OperatingPoint(q0=min(max(q0, 0.0), 1.0), p0=min(max(p0, 0.0), 1.0))


def point_with_complements(
    table: OutcomeTable, thr: RandomizedThreshold
) -> tuple[float, float, float, float]:
    """Return (q0, p0, 1-q0, 1-p0) with the complements summed directly.

    The complements are accumulated from the below-threshold mass rather
    than computed as 1 - x, so they stay accurate even when x is within
    float noise of 1.  Downstream fixed-point formulas divide by such
    complements and would otherwise lose most of their precision.
    """
    above, equal = _classify(table, thr)
    below = ~(above | equal)
    lam = thr.lam
    q0 = float(table.prob_h0[above].sum()) + lam * float(table.prob_h0[equal].sum())
    p0 = float(table.prob_h1[above].sum()) + lam * float(table.prob_h1[equal].sum())
    q0c = float(table.prob_h0[below].sum()) + (1.0 - lam) * float(table.prob_h0[equal].sum())
    p0c = float(table.prob_h1[below].sum()) + (1.0 - lam) * float(table.prob_h1[equal].sum())
    return q0, p0, q0c, p0c


def roc_curve(table: OutcomeTable) -> RocCurve:
    """Trace the fused ROC by accumulating masses from the largest LR down."""
    q = np.concatenate(([0.0], np.cumsum(table.prob_h0[::-1])))
    p = np.concatenate(([0.0], np.cumsum(table.prob_h1[::-1])))
    slopes = (table.prob_h1 / table.prob_h0)[::-1]
    return RocCurve(q=q, p=p, slopes=slopes)


def roc_extension_intersection(profiles: Sequence[SensorProfile]) -> OperatingPoint:
    """Intersection of the extended first and last ROC segments.

    The leftmost segment extends along p = (prod p / prod q) * q and the
    rightmost along p = 1 - (1 - q) * prod(1-p)/prod(1-q); they cross at

        q_m = (Q2 - 1) / (prod R - 1),   p_m = (prod R - Q1) / (prod R - 1)

    with Q1 = prod p / prod q and Q2 = prod(1-q) / prod(1-p).
    """
    fleet = require_productive(profiles)
    p, q = profile_arrays(fleet)
    prod_r = math.prod(odds_ratio(s) for s in fleet)
    if prod_r == 1.0:
        raise InfeasibleError("fleet odds-ratio product is 1 (blind fleet)")
    q1 = float(np.prod(p) / np.prod(q))
    q2 = float(np.prod(1.0 - q) / np.prod(1.0 - p))
    q_m = (q2 - 1.0) / (prod_r - 1.0)
    p_m = (prod_r - q1) / (prod_r - 1.0)
    return OperatingPoint(q0=q_m, p0=p_m)
