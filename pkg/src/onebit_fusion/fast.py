"""Stationary two-threshold fusion driven by the stored decision bit.

Instead of re-solving a constrained test every stage, the fusion center
precomputes two randomized thresholds offline and selects between them
with its one-bit memory: the stricter pair (t0, lam0) after a 0
decision, the looser pair (t1, lam1) after a 1.  Per stage this costs
one O(n) log-likelihood sum and an O(1) table lookup.

The design places (q00, p00) on the leftmost ROC segment and
(q01, p01) on the rightmost one, tied together by the constraint
q01 = 1 + q00 - q00/alpha that pins the limiting false alarm at alpha.
Any q00 in (0, q_star], with

    q_star = min(prod q_i, alpha/(1-alpha) * prod(1 - q_i)),

attains the same limiting detection probability as the per-stage-optimal
algorithm; larger q00 (explored by :func:`sweep_q00`) is strictly worse.

Both stage probabilities follow one-dimensional affine recursions, e.g.
p0^k = (p01 - p00) * p0^{k-1} + p00, so detection converges geometrically
with ratio a = p01 - p00, and that ratio is exactly the asymptotic rate
of the per-stage-optimal algorithm as well (see
:func:`convergence_rate`).
"""

from __future__ import annotations

import math
import warnings
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
    LOG_LR_TIE_TOL,
    OutcomeTable,
    RandomizedThreshold,
    enumerate_outcomes,
    point_with_complements,
    solve_threshold,
)

__all__ = [
    "FastFusionParams",
    "RateConstants",
    "convergence_rate",
    "design_fast",
    "export_params",
    "fast_asymptote",
    "fast_decide",
    "fast_false_alarm_closed_form",
    "fast_trajectory",
    "import_params",
    "sweep_q00",
]


@dataclass(frozen=True)
class FastFusionParams:
    """Precomputed two-threshold rule for one fleet and ceiling.

    (q00, p00) and (q01, p01) are the single-stage operating points of
    thr0 and thr1.  The complements ``p01_complement``/``q01_complement``
    equal 1 - p01 and 1 - q01 but are accumulated directly from
    below-threshold mass, so the fixed-point formulas that divide by
    them keep full precision even when p01 is within float noise of 1.
    ``optimal`` records whether q00 lies in the flat-optimum interval
    (0, q_star].
    """

    profiles: tuple[SensorProfile, ...]
    alpha: float
    thr0: RandomizedThreshold
    thr1: RandomizedThreshold
    p00: float
    q00: float
    p01: float
    q01: float
    q_star: float
    p01_complement: float
    q01_complement: float
    optimal: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.q00 < 1.0:
            raise ValidationError(f"q00 must be interior, got {self.q00}")
        target = 1.0 + self.q00 - self.q00 / self.alpha
        if abs(self.q01 - target) > 1e-12:
            raise ValidationError(
                f"q01={self.q01} violates the ceiling constraint (expected {target})"
            )
        # q00 < q01 except in the degenerate q00 == alpha corner where the
        # two thresholds coincide and the rule collapses to memoryless.
        if self.q00 > self.q01 + 1e-12:
            raise ValidationError(f"q00={self.q00} must not exceed q01={self.q01}")

    @property
    def log_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-sensor log ratios for message bit 0 and bit 1."""
        w0 = np.array(
            [math.log((1.0 - s.p) / (1.0 - s.q)) for s in self.profiles]
        )
        w1 = np.array([math.log(s.p / s.q) for s in self.profiles])
        w0.setflags(write=False)
        w1.setflags(write=False)
        return w0, w1


@dataclass(frozen=True)
class RateConstants:
    """Geometric convergence constants of both fusion algorithms.

    The error p0^k - p_inf shrinks by the factor ``a`` per stage once the
    recursion settles; ``b`` is the affine offset, so p_inf = b/(1 - a).
    """

    q3: float
    q4: float
    a: float
    b: float

    def __post_init__(self) -> None:
        if not 0.0 < self.a < 1.0:
            raise ValidationError(f"rate must lie in (0, 1), got {self.a}")


def _fleet_products(
    fleet: Sequence[SensorProfile],
) -> tuple[float, float, float, float]:
    prod_p = math.prod(s.p for s in fleet)
    prod_q = math.prod(s.q for s in fleet)
    prod_1mp = math.prod(1.0 - s.p for s in fleet)
    prod_1mq = math.prod(1.0 - s.q for s in fleet)
    return prod_p, prod_q, prod_1mp, prod_1mq


def optimal_q00_bound(profiles: Sequence[SensorProfile], alpha: Alpha | float) -> float:
    """Right endpoint q_star of the flat-optimum interval for q00."""
    fleet = require_productive(profiles)
    a = as_alpha(alpha)
    _, prod_q, _, prod_1mq = _fleet_products(fleet)
    return min(prod_q, a / (1.0 - a) * prod_1mq)


def _end_segment_params(
    fleet: tuple[SensorProfile, ...], alpha: float, q00: float
) -> FastFusionParams:
    # Closed-form design on the two extreme ROC segments: O(n) work, no
    # table enumeration.  thr0 sits on the all-ones outcome (largest LR)
    # and thr1 on the all-zeros outcome (smallest LR).
    prod_p, prod_q, prod_1mp, prod_1mq = _fleet_products(fleet)
    q_star = min(prod_q, alpha / (1.0 - alpha) * prod_1mq)
    log_top = math.fsum(math.log(s.p / s.q) for s in fleet)
    log_bot = math.fsum(math.log((1.0 - s.p) / (1.0 - s.q)) for s in fleet)
    # Exact arithmetic keeps both factors in [0, 1]; rounding can
    # overshoot by an ulp at the q_star branch boundaries, so clip.
    lam0 = min(q00 / prod_q, 1.0)
    one_minus_lam1 = min((1.0 - alpha) * q00 / (alpha * prod_1mq), 1.0)
    lam1 = 1.0 - one_minus_lam1
    q01 = 1.0 + q00 - q00 / alpha
    p00 = lam0 * prod_p
    p01c = one_minus_lam1 * prod_1mp
    q01c = one_minus_lam1 * prod_1mq
    return FastFusionParams(
        profiles=fleet,
        alpha=alpha,
        thr0=RandomizedThreshold(log_t=log_top, lam=lam0),
        thr1=RandomizedThreshold(log_t=log_bot, lam=lam1),
        p00=p00,
        q00=q00,
        p01=1.0 - p01c,
        q01=q01,
        q_star=q_star,
        p01_complement=p01c,
        q01_complement=q01c,
        optimal=True,
    )


def _general_params(
    fleet: tuple[SensorProfile, ...],
    alpha: float,
    q00: float,
    table: OutcomeTable | None = None,
) -> FastFusionParams:
    # Suboptimal q00: the operating points may sit on interior ROC
    # segments, so place both thresholds with the general solver.
    prod_p, prod_q, prod_1mp, prod_1mq = _fleet_products(fleet)
    q_star = min(prod_q, alpha / (1.0 - alpha) * prod_1mq)
    if table is None:
        table = enumerate_outcomes(fleet)
    q01 = 1.0 + q00 - q00 / alpha
    thr0 = solve_threshold(table, q00)
    thr1 = solve_threshold(table, q01)
    _, p00, _, _ = point_with_complements(table, thr0)
    _, p01, q01c, p01c = point_with_complements(table, thr1)
    return FastFusionParams(
        profiles=fleet,
        alpha=alpha,
        thr0=thr0,
        thr1=thr1,
        p00=p00,
        q00=q00,
        p01=p01,
        q01=q01,
        q_star=q_star,
        p01_complement=p01c,
        q01_complement=q01c,
        optimal=q00 <= q_star,
    )


def design_fast(
    profiles: Sequence[SensorProfile],
    alpha: Alpha | float,
    q00: float | None = None,
    *,
    allow_suboptimal: bool = False,
    table: OutcomeTable | None = None,
) -> FastFusionParams:
    """Design the two-threshold rule for a productive fleet.

    With the default q00 = q_star the thresholds come out in closed form:

        thr0 = (largest LR,  q00 / prod q_i)
        thr1 = (smallest LR, 1 + (alpha-1) q00 / (alpha prod(1-q_i)))

    Any explicit q00 in (0, q_star] keeps the same structure.  Values in
    (q_star, alpha) are only sensible for sweeps of the suboptimal
    region; they require ``allow_suboptimal`` and fall back to general
    threshold placement via the single-stage solver (``table`` can carry
    a pre-enumerated outcome table across sweep points).
    """
    fleet = require_productive(profiles)
    a = as_alpha(alpha)
    _, prod_q, _, prod_1mq = _fleet_products(fleet)
    q_star = min(prod_q, a / (1.0 - a) * prod_1mq)
    if q00 is None:
        q00 = q_star
    q00 = float(q00)
    if not 0.0 < q00 < 1.0:
        raise ValidationError(f"q00 must lie strictly inside (0, 1), got {q00}")
    if q00 <= q_star:
        return _end_segment_params(fleet, a, q00)
    if not allow_suboptimal:
        raise ValidationError(
            f"q00={q00} exceeds the optimal bound q_star={q_star}; "
            "pass allow_suboptimal=True to design in the suboptimal region"
        )
    if q00 >= a:
        raise ValidationError(
            f"q00={q00} is infeasible for alpha={a}: the companion level "
            "q01 = 1 + q00 - q00/alpha would leave [0, 1)"
        )
    return _general_params(fleet, a, q00, table=table)


def fast_decide(
    params: FastFusionParams,
    bits: Sequence[int],
    prev_bit: int,
    rng: np.random.Generator,
) -> int:
    """Apply the stationary rule to one message vector.

    Selects thr0 or thr1 from the previous decision bit (O(1)), sums the
    n per-bit log ratios (O(n)), and compares with tie randomization.
    """
    fleet = params.profiles
    b = np.asarray(bits)
    if b.shape != (len(fleet),):
        raise ValidationError(
            f"expected {len(fleet)} message bits, got shape {b.shape}"
        )
    thr = params.thr1 if prev_bit else params.thr0
    stat = 0.0
    for s, bit in zip(fleet, b):
        stat += math.log(s.p / s.q) if bit else math.log((1.0 - s.p) / (1.0 - s.q))
    if stat > thr.log_t + LOG_LR_TIE_TOL:
        return 1
    if stat >= thr.log_t - LOG_LR_TIE_TOL:
        return int(rng.random() < thr.lam)
    return 0


def fast_trajectory(
    params: FastFusionParams, stages: int, initial_thr: int = 0
) -> FusionTrajectory:
    """Analytic per-stage probabilities of the stationary rule.

    Stage 1 sits at (p00, q00) or (p01, q01) according to the initial
    threshold choice; conditioning on the previous decision then gives
    the affine recursions

        p0^k = (p01 - p00) p0^{k-1} + p00
        q0^k = (q01 - q00) q0^{k-1} + q00.
    """
    if stages < 1:
        raise ValidationError(f"stages must be >= 1, got {stages}")
    if initial_thr not in (0, 1):
        raise ValidationError(f"initial_thr must be 0 or 1, got {initial_thr!r}")
    p = np.empty(stages)
    q = np.empty(stages)
    if initial_thr == 0:
        p[0], q[0] = params.p00, params.q00
    else:
        p[0], q[0] = params.p01, params.q01
    ap = params.p01 - params.p00
    aq = params.q01 - params.q00
    for k in range(1, stages):
        p[k] = ap * p[k - 1] + params.p00
        q[k] = aq * q[k - 1] + params.q00
    return FusionTrajectory(algorithm="fast", p0=p, q0=q)


def fast_false_alarm_closed_form(params: FastFusionParams, stage: int) -> float:
    """Closed form q0^k = q00 (1 - r^k)/(1 - r), r = q01 - q00, for init thr0.

    Every partial sum of the geometric series stays strictly below the
    limit q00/(1 - r), which with the ceiling constraint equals alpha:
    starting from the strict threshold keeps the transient false alarm
    under the ceiling at every stage.
    """
    if stage < 1:
        raise ValidationError(f"stage must be >= 1, got {stage}")
    r = params.q01 - params.q00
    return params.q00 * (1.0 - r**stage) / (1.0 - r)


def fast_asymptote(params: FastFusionParams) -> OperatingPoint:
    """Fixed point of the affine recursions.

    p_inf = p00 / (1 - (p01 - p00)) and likewise for q_inf, evaluated
    with the denominator regrouped as (1 - p01) + p00 using the stored
    complement, which avoids the cancellation that the literal form
    suffers when p01 - p00 approaches 1.
    """
    p_inf = params.p00 / (params.p01_complement + params.p00)
    q_inf = params.q00 / (params.q01_complement + params.q00)
    return OperatingPoint(
        q0=min(max(q_inf, 0.0), 1.0), p0=min(max(p_inf, 0.0), 1.0)
    )


def convergence_rate(
    profiles: Sequence[SensorProfile], alpha: Alpha | float
) -> RateConstants:
    """Closed-form geometric rate shared by both fusion algorithms.

    With Q3 = (1-alpha)/(alpha prod R) and
    Q4 = alpha prod(1-q) / ((1-alpha) prod q):

        a = 1 - (1 + Q3)   prod p      if Q4 > 1
        a = 1 - (1 + 1/Q3) prod(1-p)   if Q4 <= 1

    and b makes b/(1 - a) the limiting detection probability; it equals
    prod p in the first case and Q4 * prod p in the second.  The same
    ``a`` equals p01 - p00 of the default two-threshold design.
    """
    fleet = require_productive(profiles)
    a_ceiling = as_alpha(alpha)
    prod_p, prod_q, prod_1mp, prod_1mq = _fleet_products(fleet)
    prod_r = math.prod(odds_ratio(s) for s in fleet)
    q3 = (1.0 - a_ceiling) / (a_ceiling * prod_r)
    q4 = a_ceiling * prod_1mq / ((1.0 - a_ceiling) * prod_q)
    if q4 > 1.0:
        shrink = (1.0 + q3) * prod_p
        b = prod_p
    else:
        shrink = (1.0 + 1.0 / q3) * prod_1mp
        b = q4 * prod_p
    rate = 1.0 - shrink
    # Internal consistency: the affine fixed point b/(1-a) must be the
    # same limit the odds-ratio formula gives.
    limit = 1.0 / (1.0 + q3)
    if abs(b / shrink - limit) > 1e-12:
        raise ValidationError(
            "rate constants inconsistent with the limiting detection probability"
        )
    return RateConstants(q3=q3, q4=q4, a=rate, b=b)


def export_params(params: FastFusionParams) -> dict:
    """JSON-ready form of a designed rule, for precomputing a deployment.

    Thresholds are exported in the log domain (``log_t0``/``log_t1``,
    natural log) with linear randomization factors ``lambda0``/``lambda1``;
    the remaining keys restore the full parameter object bit-for-bit via
    :func:`import_params`.
    """
    return {
        "sensors": [{"p": s.p, "q": s.q} for s in params.profiles],
        "alpha": params.alpha,
        "log_t0": params.thr0.log_t,
        "lambda0": params.thr0.lam,
        "log_t1": params.thr1.log_t,
        "lambda1": params.thr1.lam,
        "p00": params.p00,
        "q00": params.q00,
        "p01": params.p01,
        "q01": params.q01,
        "q_star": params.q_star,
        "p01_complement": params.p01_complement,
        "q01_complement": params.q01_complement,
        "optimal": params.optimal,
    }


def import_params(payload: dict) -> FastFusionParams:
    """Rebuild a :class:`FastFusionParams` from :func:`export_params` output."""
    try:
        return FastFusionParams(
            profiles=tuple(
                SensorProfile(s["p"], s["q"]) for s in payload["sensors"]
            ),
            alpha=float(payload["alpha"]),
            thr0=RandomizedThreshold(
                log_t=float(payload["log_t0"]), lam=float(payload["lambda0"])
            ),
            thr1=RandomizedThreshold(
                log_t=float(payload["log_t1"]), lam=float(payload["lambda1"])
            ),
            p00=float(payload["p00"]),
            q00=float(payload["q00"]),
            p01=float(payload["p01"]),
            q01=float(payload["q01"]),
            q_star=float(payload["q_star"]),
            p01_complement=float(payload["p01_complement"]),
            q01_complement=float(payload["q01_complement"]),
            optimal=bool(payload["optimal"]),
        )
    except KeyError as exc:
        raise ValidationError(f"parameter payload is missing key {exc}") from exc


def sweep_q00(
    profiles: Sequence[SensorProfile],
    alpha: Alpha | float,
    grid: Sequence[float],
) -> list[tuple[float, float]]:
    """Limiting detection probability as a function of q00.

    Every feasible grid point is designed with general threshold
    placement through the single-stage solver (interior ROC segments
    allowed, not just the two end segments) and evaluated at its fixed
    point; infeasible entries (outside (0, alpha)) are skipped with a
    warning.  The profile is flat at the optimum on (0, q_star] and
    strictly decreasing beyond it.
    """
    fleet = require_productive(profiles)
    a = as_alpha(alpha)
    table = enumerate_outcomes(fleet)
    out: list[tuple[float, float]] = []
    for g in grid:
        g = float(g)
        if not 0.0 < g < a:
            warnings.warn(
                f"skipping infeasible q00={g}: must lie in (0, alpha={a})",
                stacklevel=2,
            )
            continue
        params = _general_params(fleet, a, g, table=table)
        out.append((g, fast_asymptote(params).p0))
    return out
