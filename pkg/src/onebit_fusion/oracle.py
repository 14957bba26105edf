"""Per-stage optimal fusion with the previous decision as a virtual sensor.

At stage k the fusion center tests the likelihood ratio of the n fresh
sensor messages times the likelihood ratio of its own stored decision
bit from stage k-1.  Because that bit's conditional distribution is the
previous stage's operating point, the stage-k problem is exactly a
single-stage solve over an augmented fleet of n + 1 sensors: the n real
ones plus a virtual sensor with profile (p0^{k-1}, q0^{k-1}).  Stage 1
uses the uninformative memory profile (0.5, 0.5), which contributes a
unit factor, so stage 1 reduces to the memoryless solve.

The per-stage cost is exponential in n (the augmented table has 2**(n+1)
outcomes); that cost is inherent to this algorithm and is the reason the
two-threshold rule in :mod:`onebit_fusion.fast` exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Alpha,
    FusionTrajectory,
    OperatingPoint,
    SensorProfile,
    ValidationError,
    as_alpha,
    odds_ratio,
    require_productive,
)
from .solver import (
    ENUMERATION_LIMIT,
    LOG_LR_TIE_TOL,
    OutcomeTable,
    RandomizedThreshold,
    _merge_arrays,
    _select_threshold_index,
    enumerate_outcomes,
    operating_point,
    solve_threshold,
)

__all__ = [
    "OracleState",
    "initial_memory",
    "oracle_asymptote",
    "oracle_decide",
    "oracle_run",
    "oracle_step",
    "oracle_table",
]


def initial_memory() -> tuple[float, float]:
    """Memory profile for stage 1: a blind (0.5, 0.5) virtual sensor."""
    return (0.5, 0.5)


@dataclass(frozen=True)
class OracleState:
    """One stage of the per-stage-optimal algorithm.

    ``mem`` is the memory profile (p_prev, q_prev) the stage was solved
    against; ``threshold`` and ``point`` are the resulting test and its
    operating point.  For every stage the false-alarm coordinate of
    ``point`` equals the ceiling, which is what keeps the constraint
    active along the whole run.
    """

    stage: int
    mem: tuple[float, float]
    threshold: RandomizedThreshold
    point: OperatingPoint


def _check_memory(mem: tuple[float, float]) -> tuple[float, float]:
    p_prev, q_prev = float(mem[0]), float(mem[1])
    if not (0.0 < p_prev < 1.0 and 0.0 < q_prev < 1.0):
        raise ValidationError(f"memory profile must be interior, got {mem!r}")
    return p_prev, q_prev


def oracle_table(
    profiles: Sequence[SensorProfile], mem: tuple[float, float]
) -> OutcomeTable:
    """Enumerate the augmented table of n sensors plus the memory bit."""
    p_prev, q_prev = _check_memory(mem)
    augmented = tuple(profiles) + (SensorProfile(p_prev, q_prev),)
    return enumerate_outcomes(augmented, max_sensors=ENUMERATION_LIMIT + 1)


def oracle_step(
    profiles: Sequence[SensorProfile],
    alpha: Alpha | float,
    mem: tuple[float, float] | None = None,
    *,
    stage: int = 1,
) -> OracleState:
    """Solve one stage given the previous stage's operating point.

    Builds the augmented 2**(n+1)-outcome table, solves the constrained
    threshold on it, and evaluates the stage operating point.
    """
    fleet = require_productive(profiles)
    a = as_alpha(alpha)
    mem = initial_memory() if mem is None else mem
    table = oracle_table(fleet, mem)
    thr = solve_threshold(table, a)
    point = operating_point(table, thr)
    return OracleState(stage=stage, mem=mem, threshold=thr, point=point)


def _solve_arrays(
    log_lr: np.ndarray, prob_h0: np.ndarray, prob_h1: np.ndarray, alpha: float
) -> tuple[float, float, float, float]:
    """Threshold solve on bare arrays; returns (log_t, lam, p0, q0)."""
    j, mass_above = _select_threshold_index(prob_h0, alpha)
    lam = min(max((alpha - mass_above) / float(prob_h0[j]), 0.0), 1.0)
    p0 = float(prob_h1[j + 1 :].sum()) + lam * float(prob_h1[j])
    q0 = mass_above + lam * float(prob_h0[j])
    return float(log_lr[j]), lam, p0, q0


def oracle_run(
    profiles: Sequence[SensorProfile],
    alpha: Alpha | float,
    stages: int,
    *,
    stop_early: bool = False,
    plateau_tol: float = 1e-14,
) -> FusionTrajectory:
    """Iterate the per-stage solve, threading each stage's operating point.

    The base table over the real sensors is enumerated once; each stage
    then folds in the current memory profile by splitting every base
    outcome into its memory-bit-0 and memory-bit-1 variants, re-sorting,
    and re-merging, which keeps the per-stage cost linear in the table
    size instead of redoing the full enumeration.

    With ``stop_early`` the run halts once the detection probability
    moves by less than ``plateau_tol`` between stages (the plateau stage
    is recorded in ``converged_at``); otherwise all ``stages`` stages are
    produced, which is what the convergence figures use.
    """
    fleet = require_productive(profiles)
    a = as_alpha(alpha)
    if stages < 1:
        raise ValidationError(f"stages must be >= 1, got {stages}")
    base = enumerate_outcomes(fleet)
    base_lr = base.log_lr
    base_h0 = base.prob_h0
    base_h1 = base.prob_h1

    p_out = np.empty(stages)
    q_out = np.empty(stages)
    t_out = np.empty(stages)
    l_out = np.empty(stages)
    p_prev, q_prev = initial_memory()
    converged_at = None
    used = 0
    for k in range(stages):
        w0 = math.log((1.0 - p_prev) / (1.0 - q_prev))
        w1 = math.log(p_prev / q_prev)
        log_lr = np.concatenate((base_lr + w0, base_lr + w1))
        prob_h0 = np.concatenate((base_h0 * (1.0 - q_prev), base_h0 * q_prev))
        prob_h1 = np.concatenate((base_h1 * (1.0 - p_prev), base_h1 * p_prev))
        order = np.argsort(log_lr, kind="stable")
        log_lr, prob_h0, prob_h1 = _merge_arrays(
            log_lr[order], prob_h0[order], prob_h1[order], LOG_LR_TIE_TOL
        )
        log_t, lam, p0, q0 = _solve_arrays(log_lr, prob_h0, prob_h1, a)
        t_out[k], l_out[k], p_out[k], q_out[k] = log_t, lam, p0, q0
        used = k + 1
        if stop_early and k > 0 and abs(p0 - p_out[k - 1]) < plateau_tol:
            converged_at = used
            break
        p_prev, q_prev = p0, a
    return FusionTrajectory(
        algorithm="oracle",
        p0=p_out[:used],
        q0=q_out[:used],
        log_t=t_out[:used],
        lam=l_out[:used],
        converged_at=converged_at,
    )


def oracle_asymptote(profiles: Sequence[SensorProfile], alpha: Alpha | float) -> float:
    """Limiting detection probability alpha*prod(R) / (1 + alpha*(prod(R) - 1)).

    Evaluated in the equivalent form 1 / (1 + (1-alpha)/(alpha*prod(R))),
    which stays accurate when the odds-ratio product is large.  A blind
    fleet (product exactly 1) degenerates to alpha itself.
    """
    fleet = tuple(profiles)
    if not fleet:
        raise ValidationError("fleet must contain at least one sensor")
    a = as_alpha(alpha)
    prod_r = math.prod(odds_ratio(s) for s in fleet)
    return 1.0 / (1.0 + (1.0 - a) / (a * prod_r))


def memory_log_weights(mem: tuple[float, float]) -> tuple[float, float]:
    """Log likelihood-ratio contribution of the stored bit being 0 or 1."""
    p_prev, q_prev = _check_memory(mem)
    return (
        math.log((1.0 - p_prev) / (1.0 - q_prev)),
        math.log(p_prev / q_prev),
    )


def oracle_decide(
    profiles: Sequence[SensorProfile],
    mem: tuple[float, float],
    thr: RandomizedThreshold,
    bits: Sequence[int],
    prev_bit: int,
    rng: np.random.Generator,
) -> int:
    """Apply one stage's randomized test to a realized message vector.

    The statistic is the sum of per-bit log ratios plus the memory bit's
    log ratio under ``mem``; comparison against the threshold uses the
    shared tie tolerance, and ties declare 1 with probability lam drawn
    from ``rng``.
    """
    fleet = tuple(profiles)
    b = np.asarray(bits)
    if b.shape != (len(fleet),):
        raise ValidationError(
            f"expected {len(fleet)} message bits, got shape {b.shape}"
        )
    w0, w1 = memory_log_weights(mem)
    stat = w1 if prev_bit else w0
    for s, bit in zip(fleet, b):
        stat += math.log(s.p / s.q) if bit else math.log((1.0 - s.p) / (1.0 - s.q))
    if stat > thr.log_t + LOG_LR_TIE_TOL:
        return 1
    if stat >= thr.log_t - LOG_LR_TIE_TOL:
        return int(rng.random() < thr.lam)
    return 0
