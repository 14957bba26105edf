"""Gaussian sensor model and seeded Monte Carlo runs of the fusion rules.

Sensor side: each sensor observes a constant A in zero-mean Gaussian
noise (variance sigma2) and thresholds its reading at y_star, which
maps to the profile p = UpperTail((y_star - A)/sigma) and
q = UpperTail(y_star/sigma).  The tail is evaluated through the C
library's complementary error function, whose absolute error is far
below 1e-12 over the whole real line.

Reproducibility contract: every random draw comes from a Philox
counter-based generator whose stream is fully determined by
SeedSequence(entropy=seed, spawn_key=(hypothesis, trial)).  Within a
trial the uniforms are laid out stage-major as one (stages, n+1) block:
n bit draws per stage followed by one tie draw, consumed whether or not
the stage actually ties.  Trials therefore never share state, can run
in any order or batching, and aggregate by exact integer counts, so a
report is a pure function of (configuration, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Alpha,
    Hypothesis,
    SensorProfile,
    ValidationError,
    as_alpha,
    profile_arrays,
    require_productive,
)
from .fast import FastFusionParams, design_fast, fast_trajectory
from .oracle import oracle_run
from .solver import (
    LOG_LR_TIE_TOL,
    enumerate_outcomes,
    operating_point,
    solve_threshold,
)

__all__ = [
    "GaussianSensorModel",
    "MonteCarloReport",
    "model_from_snr",
    "model_profile",
    "monte_carlo",
    "simulate_run",
    "snr_db",
    "trial_stream",
]

_SQRT2 = math.sqrt(2.0)

ALGORITHMS = ("oracle", "fast", "memoryless")


@dataclass(frozen=True)
class GaussianSensorModel:
    """Constant-signal-in-Gaussian-noise sensor with a threshold rule.

    ``A`` is the signal amplitude (sensor units), ``sigma2`` the noise
    variance (units squared), and ``y_star`` the local decision
    threshold: the sensor reports 1 when its reading is at least y_star.
    """

    A: float
    sigma2: float
    y_star: float

    def __post_init__(self) -> None:
        for name in ("A", "sigma2", "y_star"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.sigma2 <= 0.0:
            raise ValidationError(f"sigma2 must be positive, got {self.sigma2}")


def _upper_tail(x: float) -> float:
    """P(Z >= x) for standard normal Z, via erfc."""
    return 0.5 * math.erfc(x / _SQRT2)


def model_profile(m: GaussianSensorModel) -> SensorProfile:
    """Detection/false-alarm pair of the thresholded Gaussian sensor."""
    sigma = math.sqrt(m.sigma2)
    return SensorProfile(
        p=_upper_tail((m.y_star - m.A) / sigma),
        q=_upper_tail(m.y_star / sigma),
    )


def snr_db(m: GaussianSensorModel) -> float:
    """Signal-to-noise ratio 10*log10(A/sigma2), in dB.  Requires A > 0."""
    if m.A <= 0.0:
        raise ValidationError(f"SNR requires a positive amplitude, got A={m.A}")
    return 10.0 * math.log10(m.A / m.sigma2)


def model_from_snr(A: float, snr: float, y_star: float) -> GaussianSensorModel:
    """Inverse of :func:`snr_db`: pick the noise variance hitting ``snr`` dB."""
    if not (isinstance(A, (int, float)) and math.isfinite(A)) or A <= 0.0:
        raise ValidationError(f"amplitude must be positive and finite, got {A!r}")
    return GaussianSensorModel(A=A, sigma2=A / 10.0 ** (snr / 10.0), y_star=y_star)


def trial_stream(seed: int, hypothesis: Hypothesis, trial: int) -> np.random.Generator:
    """The dedicated generator of one (hypothesis, trial) pair.

    Philox keyed by SeedSequence(entropy=seed, spawn_key=(hypothesis,
    trial)); this derivation is the whole reproducibility story, so it
    must not change.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(int(hypothesis), int(trial)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class _StagePlan:
    """Everything the decision loop needs, precomputed once per config.

    For the per-stage-optimal algorithm the threshold and the memory
    bit's log weights vary by stage (arrays of length ``stages``); the
    stationary rules use constant thresholds selected by the previous
    bit, with the memory weights all zero.
    """

    algo: str
    stages: int
    p_vec: np.ndarray  # per-sensor P(bit=1 | H1)
    q_vec: np.ndarray  # per-sensor P(bit=1 | H0)
    w_diff: np.ndarray  # log(p/q) - log((1-p)/(1-q)) per sensor
    w_base: float  # sum of log((1-p)/(1-q))
    log_t0: np.ndarray  # threshold if prev bit 0, per stage
    lam0: np.ndarray
    log_t1: np.ndarray  # threshold if prev bit 1, per stage
    lam1: np.ndarray
    mem_w0: np.ndarray  # memory-bit log weight if prev bit 0, per stage
    mem_w1: np.ndarray
    init_prev: int  # the stage-1 "previous bit"
    p0: np.ndarray  # analytic per-stage detection probability
    q0: np.ndarray  # analytic per-stage false-alarm probability


def _local_weights(profiles: Sequence[SensorProfile]) -> tuple[np.ndarray, float]:
    w1 = np.array([math.log(s.p / s.q) for s in profiles])
    w0 = np.array([math.log((1.0 - s.p) / (1.0 - s.q)) for s in profiles])
    return w1 - w0, float(w0.sum())


def build_stage_plan(
    profiles: Sequence[SensorProfile],
    algo: str,
    stages: int,
    alpha: Alpha | float,
    *,
    q00: float | None = None,
    initial_thr: int = 0,
    params: FastFusionParams | None = None,
) -> _StagePlan:
    """Precompute the per-stage decision data for one simulated config."""
    fleet = require_productive(profiles)
    a = as_alpha(alpha)
    if algo not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
    if stages < 1:
        raise ValidationError(f"stages must be >= 1, got {stages}")
    p_vec, q_vec = profile_arrays(fleet)
    w_diff, w_base = _local_weights(fleet)
    ones = np.ones(stages)

    if algo == "oracle":
        traj = oracle_run(fleet, a, stages)
        # Stage k's memory profile is the previous stage's analytic
        # operating point; stage 1 carries the blind (0.5, 0.5) memory,
        # whose log weights vanish.
        mem_p = np.concatenate(([0.5], traj.p0[:-1]))
        mem_q = np.concatenate(([0.5], np.full(stages - 1, a)))
        plan = _StagePlan(
            algo=algo,
            stages=stages,
            p_vec=p_vec,
            q_vec=q_vec,
            w_diff=w_diff,
            w_base=w_base,
            log_t0=traj.log_t.copy(),
            lam0=traj.lam.copy(),
            log_t1=traj.log_t.copy(),
            lam1=traj.lam.copy(),
            mem_w0=np.log((1.0 - mem_p) / (1.0 - mem_q)),
            mem_w1=np.log(mem_p / mem_q),
            init_prev=0,
            p0=traj.p0.copy(),
            q0=traj.q0.copy(),
        )
    elif algo == "fast":
        if params is None:
            params = design_fast(fleet, a, q00)
        traj = fast_trajectory(params, stages, initial_thr)
        plan = _StagePlan(
            algo=algo,
            stages=stages,
            p_vec=p_vec,
            q_vec=q_vec,
            w_diff=w_diff,
            w_base=w_base,
            log_t0=ones * params.thr0.log_t,
            lam0=ones * params.thr0.lam,
            log_t1=ones * params.thr1.log_t,
            lam1=ones * params.thr1.lam,
            mem_w0=np.zeros(stages),
            mem_w1=np.zeros(stages),
            init_prev=initial_thr,
            p0=traj.p0.copy(),
            q0=traj.q0.copy(),
        )
    else:  # memoryless: the same single-stage test at every stage
        table = enumerate_outcomes(fleet)
        thr = solve_threshold(table, a)
        pt = operating_point(table, thr)
        plan = _StagePlan(
            algo=algo,
            stages=stages,
            p_vec=p_vec,
            q_vec=q_vec,
            w_diff=w_diff,
            w_base=w_base,
            log_t0=ones * thr.log_t,
            lam0=ones * thr.lam,
            log_t1=ones * thr.log_t,
            lam1=ones * thr.lam,
            mem_w0=np.zeros(stages),
            mem_w1=np.zeros(stages),
            init_prev=0,
            p0=ones * pt.p0,
            q0=ones * pt.q0,
        )
    return plan


def _run_uniform_block(plan: _StagePlan, hypothesis: Hypothesis, u: np.ndarray) -> np.ndarray:
    """Drive the fusion chain on a (trials, stages, n+1) block of uniforms."""
    n = len(plan.p_vec)
    thresholds = plan.p_vec if hypothesis is Hypothesis.H1 else plan.q_vec
    bits = u[:, :, :n] < thresholds
    local = bits @ plan.w_diff + plan.w_base  # (trials, stages)
    tie_u = u[:, :, n]
    decisions = np.empty(local.shape, dtype=np.uint8)
    prev = np.full(local.shape[0], plan.init_prev, dtype=np.uint8)
    for k in range(plan.stages):
        sel = prev == 1
        stat = local[:, k] + np.where(sel, plan.mem_w1[k], plan.mem_w0[k])
        log_t = np.where(sel, plan.log_t1[k], plan.log_t0[k])
        lam = np.where(sel, plan.lam1[k], plan.lam0[k])
        above = stat > log_t + LOG_LR_TIE_TOL
        tie = np.abs(stat - log_t) <= LOG_LR_TIE_TOL
        decided = above | (tie & (tie_u[:, k] < lam))
        decisions[:, k] = decided
        prev = decisions[:, k]
    return decisions


def simulate_run(
    profiles: Sequence[SensorProfile],
    algo: str,
    hypothesis: Hypothesis,
    stages: int,
    seed: int,
    *,
    alpha: Alpha | float,
    trial: int = 0,
    q00: float | None = None,
    initial_thr: int = 0,
    plan: _StagePlan | None = None,
) -> np.ndarray:
    """One fusion run: the global decision bit at each stage.

    Per-sensor bits are drawn independently across sensors and stages
    from the profile row of the given (fixed) hypothesis, then fed
    through the algorithm's decision rule with the one-bit memory
    threaded.  The same (seed, hypothesis, trial) always reproduces the
    same sequence.
    """
    if plan is None:
        plan = build_stage_plan(
            profiles, algo, stages, alpha, q00=q00, initial_thr=initial_thr
        )
    hyp = Hypothesis(hypothesis)
    rng = trial_stream(seed, hyp, trial)
    u = rng.random((plan.stages, len(plan.p_vec) + 1))
    return _run_uniform_block(plan, hyp, u[np.newaxis])[0]


@dataclass(frozen=True)
class MonteCarloReport:
    """Per-stage empirical frequencies with 3-sigma binomial half-widths."""

    stages: np.ndarray  # stage index, 1-based
    trials: int
    p_hat: np.ndarray
    q_hat: np.ndarray
    halfwidth_p: np.ndarray
    halfwidth_q: np.ndarray

    def __post_init__(self) -> None:
        for name in ("stages", "p_hat", "q_hat", "halfwidth_p", "halfwidth_q"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _three_sigma(freq: np.ndarray, trials: int) -> np.ndarray:
    return 3.0 * np.sqrt(freq * (1.0 - freq) / trials)


def monte_carlo(
    profiles: Sequence[SensorProfile],
    algo: str,
    stages: int,
    trials: int,
    seed: int,
    *,
    alpha: Alpha | float,
    q00: float | None = None,
    initial_thr: int = 0,
    batch_size: int = 4096,
) -> MonteCarloReport:
    """Estimate per-stage detection and false-alarm frequencies.

    Runs ``trials`` independent chains under each hypothesis (trial t
    under hypothesis h uses the stream keyed by (h, t)) and counts
    declare-1 decisions per stage as exact integers, so the report is
    identical for any batch size or trial ordering.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if batch_size < 1:
        raise ValidationError(f"batch_size must be >= 1, got {batch_size}")
    plan = build_stage_plan(
        profiles, algo, stages, alpha, q00=q00, initial_thr=initial_thr
    )
    n_plus_1 = len(plan.p_vec) + 1
    counts = {h: np.zeros(plan.stages, dtype=np.int64) for h in Hypothesis}
    for hyp in (Hypothesis.H1, Hypothesis.H0):
        done = 0
        while done < trials:
            block = min(batch_size, trials - done)
            u = np.empty((block, plan.stages, n_plus_1))
            for i in range(block):
                rng = trial_stream(seed, hyp, done + i)
                u[i] = rng.random((plan.stages, n_plus_1))
            decisions = _run_uniform_block(plan, hyp, u)
            counts[hyp] += decisions.sum(axis=0, dtype=np.int64)
            done += block
    p_hat = counts[Hypothesis.H1] / trials
    q_hat = counts[Hypothesis.H0] / trials
    return MonteCarloReport(
        stages=np.arange(1, plan.stages + 1),
        trials=trials,
        p_hat=p_hat,
        q_hat=q_hat,
        halfwidth_p=_three_sigma(p_hat, trials),
        halfwidth_q=_three_sigma(q_hat, trials),
    )
