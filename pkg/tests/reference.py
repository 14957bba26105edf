"""Independent reference implementations used only to cross-check tests.

Nothing here may import from the package's solver internals: expected
values come from direct enumeration over message vectors, exhaustive
search over fusion rules, binomial counting, or high-precision
arithmetic, so they stay independent of the code paths they check.
"""

from __future__ import annotations

import itertools
import math

import mpmath as mp
import numpy as np


def enumerate_messages(profiles) -> list[tuple[float, float, float]]:
    """(log_lr, prob_h0, prob_h1) per message vector, by direct products."""
    rows = []
    for bits in itertools.product((0, 1), repeat=len(profiles)):
        p1 = 1.0
        p0 = 1.0
        for b, s in zip(bits, profiles):
            p1 *= s.p if b else 1.0 - s.p
            p0 *= s.q if b else 1.0 - s.q
        rows.append((math.log(p1 / p0), p0, p1))
    rows.sort()
    return rows


def binomial_atoms(p: float, q: float, n: int) -> list[tuple[float, float, float]]:
    """Tie-grouped atoms of n identical sensors, by binomial counting."""
    rows = []
    for m in range(n + 1):
        c = math.comb(n, m)
        rows.append(
            (
                m * math.log(p / q) + (n - m) * math.log((1 - p) / (1 - q)),
                c * q**m * (1 - q) ** (n - m),
                c * p**m * (1 - p) ** (n - m),
            )
        )
    rows.sort()
    return rows


def best_rule_detection(profiles, alpha: float) -> tuple[float, float]:
    """Exhaustive-search optima over fusion rules for a small fleet.

    Returns (best deterministic detection with q0 <= alpha, best
    two-rule-mixture detection with the mixture's q0 == alpha).  The
    second value is the Neyman-Pearson optimum over all randomized
    rules, since the optimum is always a mixture of two deterministic
    rules adjacent in the likelihood-ratio ordering.
    """
    msgs = enumerate_messages(profiles)
    m = len(msgs)
    if m > 8:
        raise ValueError("exhaustive rule search is limited to n <= 3")
    prob_h0 = np.array([r[1] for r in msgs])
    prob_h1 = np.array([r[2] for r in msgs])
    rules = np.arange(1 << m, dtype=np.uint32)
    masks = ((rules[:, None] >> np.arange(m, dtype=np.uint32)) & 1).astype(float)
    q = masks @ prob_h0
    p = masks @ prob_h1
    feasible = q <= alpha + 1e-15
    best_det = float(p[feasible].max())

    qa, qb = q[:, None], q[None, :]
    pa, pb = p[:, None], p[None, :]
    straddle = (qb <= alpha) & (qa > alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(straddle, (alpha - qb) / (qa - qb), 0.0)
    mix = np.where(straddle, theta * pa + (1.0 - theta) * pb, -np.inf)
    best_mix = max(best_det, float(mix.max()))
    return best_det, best_mix


def asymptote_formula(profiles, alpha: float) -> float:
    """Limiting detection probability evaluated literally."""
    prod_r = 1.0
    for s in profiles:
        prod_r *= s.p / (1.0 - s.p) * (1.0 - s.q) / s.q
    return alpha * prod_r / (1.0 + alpha * (prod_r - 1.0))


def mp_oracle_trajectory(
    p: float, q: float, n: int, alpha: float, stages: int, dps: int = 60
) -> tuple[list[mp.mpf], mp.mpf]:
    """High-precision per-stage detection of the augmented-solve algorithm.

    Homogeneous fleet only.  Works on exact likelihood-ratio values (not
    logs) with `dps` decimal digits, so trajectory differences remain
    meaningful far below float64 resolution.  Returns the stage values
    and the limiting detection probability at the same precision.
    """
    with mp.workdps(dps):
        pm, qm = mp.mpf(p), mp.mpf(q)
        alpha_mp = mp.mpf(alpha)
        base = []
        for m in range(n + 1):
            c = mp.binomial(n, m)
            base.append(
                (
                    (pm / qm) ** m * ((1 - pm) / (1 - qm)) ** (n - m),
                    c * qm**m * (1 - qm) ** (n - m),
                    c * pm**m * (1 - pm) ** (n - m),
                )
            )
        mem = (mp.mpf("0.5"), mp.mpf("0.5"))
        out = []
        for _ in range(stages):
            atoms = []
            for lr, h0, h1 in base:
                atoms.append((lr * (1 - mem[0]) / (1 - mem[1]), h0 * (1 - mem[1]), h1 * (1 - mem[0])))
                atoms.append((lr * mem[0] / mem[1], h0 * mem[1], h1 * mem[0]))
            atoms.sort(key=lambda a: a[0])
            merged: list[list[mp.mpf]] = []
            for lr, h0, h1 in atoms:
                if merged and abs(lr - merged[-1][0]) <= mp.mpf("1e-40") * max(1, abs(lr)):
                    merged[-1][1] += h0
                    merged[-1][2] += h1
                else:
                    merged.append([lr, h0, h1])
            j = len(merged) - 1
            above_h0 = mp.mpf(0)
            above_h1 = mp.mpf(0)
            while j > 0 and above_h0 + merged[j][1] <= alpha_mp:
                above_h0 += merged[j][1]
                above_h1 += merged[j][2]
                j -= 1
            lam = (alpha_mp - above_h0) / merged[j][1]
            p0 = above_h1 + lam * merged[j][2]
            out.append(p0)
            mem = (p0, alpha_mp)
        prod_r = ((pm / (1 - pm)) * ((1 - qm) / qm)) ** n
        limit = alpha_mp * prod_r / (1 + alpha_mp * (prod_r - 1))
        return out, limit
