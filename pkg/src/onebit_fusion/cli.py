"""Command-line front end: figure-ready CSV files plus JSON manifests.

Each subcommand reads a JSON config (see :mod:`onebit_fusion.config`),
optionally overridden by flags, and writes one CSV with a fixed,
documented header.  Numbers are serialized with 17 significant digits,
so a file is byte-identical across reruns of the same (config, seed).

Exit codes: 0 on success, 2 for config validation errors, 3 for numeric
infeasibility (for example a non-productive sensor).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_sha256, load_config
from .core import DetectionError, InfeasibleError, ValidationError
from .fast import design_fast, fast_asymptote, fast_trajectory, sweep_q00
from .oracle import oracle_asymptote, oracle_run
from .sim import model_from_snr, model_profile, monte_carlo
from .solver import enumerate_outcomes, operating_point, roc_curve, solve_threshold

__all__ = ["main"]


def _fmt(value: object) -> str:
    if isinstance(value, (bool, int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_csv(
    path: str, header: Sequence[str], rows: Iterable[Sequence[object]], preamble: str | None = None
) -> None:
    def emit(fh) -> None:
        if preamble is not None:
            fh.write(preamble + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    if path == "-":
        emit(sys.stdout)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            emit(fh)


def _write_manifest(path: str | None, command: str, cfg: ExperimentConfig) -> None:
    if path is None:
        return
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config_sha256": config_sha256(cfg),
        "config": cfg.raw,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    updates = {}
    for field in ("seed", "trials", "stages", "algo"):
        value = getattr(args, field, None)
        if value is not None:
            updates[field] = value
    if not updates:
        return cfg
    from .config import parse_config

    raw = dict(cfg.raw)
    raw.update(updates)
    return parse_config(raw)


def cmd_roc(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    rows = []

    def emit(name: str, profiles) -> None:
        curve = roc_curve(enumerate_outcomes(profiles))
        for i, slope in enumerate(curve.slopes, start=1):
            rows.append((name, i, curve.q[i], curve.p[i], slope))

    emit("fused", cfg.sensors)
    for i, sensor in enumerate(cfg.sensors, start=1):
        emit(f"sensor_{i}", (sensor,))
    _write_csv(args.out, ("detector", "segment_index", "q0", "p0", "slope"), rows)


def cmd_sweep_n(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    qs = {s.q for s in cfg.sensors}
    ps = {s.p for s in cfg.sensors}
    if len(qs) != 1 or len(ps) != 1:
        raise ValidationError("sweep-n requires a homogeneous fleet or a model config")
    base = cfg.sensors[0]
    n_min = args.n_min if args.n_min is not None else int(cfg.sweep.get("n_min", 1))
    n_max = args.n_max if args.n_max is not None else int(cfg.sweep.get("n_max", 10))
    if not 1 <= n_min <= n_max:
        raise ValidationError(f"invalid sensor-count range [{n_min}, {n_max}]")
    rows = []
    for n in range(n_min, n_max + 1):
        fleet = (base,) * n
        table = enumerate_outcomes(fleet)
        memoryless = operating_point(table, solve_threshold(table, cfg.alpha)).p0
        rows.append((n, "memoryless", memoryless))
        rows.append((n, "oracle", oracle_asymptote(fleet, cfg.alpha)))
        rows.append((n, "fast", fast_asymptote(design_fast(fleet, cfg.alpha)).p0))
    _write_csv(args.out, ("n", "algorithm", "p_steady"), rows)


def cmd_sweep_snr(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    if cfg.model is None:
        raise ValidationError("sweep-snr requires a model config (A, sigma2, y_star, count)")
    count = len(cfg.sensors)
    lo = args.snr_min if args.snr_min is not None else float(cfg.sweep.get("snr_min", -10.0))
    hi = args.snr_max if args.snr_max is not None else float(cfg.sweep.get("snr_max", 8.0))
    step = args.snr_step if args.snr_step is not None else float(cfg.sweep.get("snr_step", 2.0))
    if step <= 0 or hi < lo:
        raise ValidationError(f"invalid SNR grid [{lo}, {hi}] step {step}")
    alpha_is_q = cfg.raw.get("alpha") == "q"
    rows = []
    snr = lo
    while snr <= hi + 1e-9:
        profile = model_profile(model_from_snr(cfg.model.A, snr, cfg.model.y_star))
        fleet = (profile,) * count
        alpha = profile.q if alpha_is_q else cfg.alpha
        table = enumerate_outcomes(fleet)
        memoryless = operating_point(table, solve_threshold(table, alpha)).p0
        rows.append((snr, "memoryless", memoryless))
        rows.append((snr, "oracle", oracle_asymptote(fleet, alpha)))
        rows.append((snr, "fast", fast_asymptote(design_fast(fleet, alpha)).p0))
        snr += step
    _write_csv(args.out, ("snr_db", "algorithm", "p_steady"), rows)


def cmd_converge(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    stages = cfg.stages
    limit = oracle_asymptote(cfg.sensors, cfg.alpha)
    params = design_fast(cfg.sensors, cfg.alpha, cfg.q00)
    overlays = {}
    if args.mc_trials is not None:
        if args.mc_trials < 1:
            raise ValidationError(f"--mc-trials must be >= 1, got {args.mc_trials}")
        for algo, init in (("fast", 0), ("fast", 1), ("oracle", 0)):
            report = monte_carlo(
                cfg.sensors,
                algo,
                stages,
                args.mc_trials,
                cfg.seed,
                alpha=cfg.alpha,
                q00=cfg.q00,
                initial_thr=init,
            )
            overlays[(algo, init)] = report

    header = ["stage", "algorithm", "init", "p0", "q0", "abs_err_to_limit"]
    if overlays:
        header += ["p0_mc", "q0_mc"]
    rows = []

    def emit(algo: str, init_label: str, init: int, traj) -> None:
        overlay = overlays.get((algo, init))
        for k in range(len(traj)):
            row = [
                k + 1,
                algo,
                init_label,
                traj.p0[k],
                traj.q0[k],
                abs(traj.p0[k] - limit),
            ]
            if overlays:
                if overlay is None:
                    row += ["", ""]
                else:
                    row += [overlay.p_hat[k], overlay.q_hat[k]]
            rows.append(row)

    emit("fast", "t0", 0, fast_trajectory(params, stages, initial_thr=0))
    emit("fast", "t1", 1, fast_trajectory(params, stages, initial_thr=1))
    emit("oracle", "-", 0, oracle_run(cfg.sensors, cfg.alpha, stages))
    _write_csv(args.out, header, rows)


def cmd_sweep_q00(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    points = args.points if args.points is not None else int(cfg.sweep.get("q00_points", 40))
    if points < 1:
        raise ValidationError(f"q00 grid needs at least one point, got {points}")
    grid = [cfg.alpha * i / (points + 1) for i in range(1, points + 1)]
    rows = sweep_q00(cfg.sensors, cfg.alpha, grid)
    _write_csv(args.out, ("q00", "p_steady"), rows)


def cmd_montecarlo(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    algo = cfg.algo
    report = monte_carlo(
        cfg.sensors,
        algo,
        cfg.stages,
        cfg.trials,
        cfg.seed,
        alpha=cfg.alpha,
        q00=cfg.q00,
        initial_thr=cfg.initial_thr,
    )
    preamble = (
        f"# seed={cfg.seed} version={__version__} config_sha256={config_sha256(cfg)}"
    )
    rows = [
        (
            int(report.stages[k]),
            algo,
            report.p_hat[k],
            report.halfwidth_p[k],
            report.q_hat[k],
            report.halfwidth_q[k],
            report.trials,
        )
        for k in range(len(report.stages))
    ]
    _write_csv(
        args.out,
        ("stage", "algorithm", "p_hat", "halfwidth_p", "q_hat", "halfwidth_q", "trials"),
        rows,
        preamble=preamble,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-fusion",
        description="Multi-stage distributed detection experiments (CSV output).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="Path to a JSON experiment config")
        p.add_argument("--out", default="-", help="Output CSV path (default: stdout)")
        p.add_argument("--manifest", default=None, help="Optional JSON manifest sidecar path")
        p.add_argument("--seed", type=int, default=None, help="Override the config seed")
        p.add_argument("--trials", type=int, default=None, help="Override the config trial count")
        p.add_argument("--stages", type=int, default=None, help="Override the config stage count")
        p.add_argument(
            "--algo",
            choices=("oracle", "fast", "memoryless"),
            default=None,
            help="Override the config algorithm",
        )

    p = sub.add_parser("roc", help="Fused and per-sensor ROC segments")
    common(p)
    p.set_defaults(handler=cmd_roc)

    p = sub.add_parser("sweep-n", help="Steady-state detection vs sensor count")
    common(p)
    p.add_argument("--n-min", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.set_defaults(handler=cmd_sweep_n)

    p = sub.add_parser("sweep-snr", help="Steady-state detection vs sensor SNR")
    common(p)
    p.add_argument("--snr-min", type=float, default=None)
    p.add_argument("--snr-max", type=float, default=None)
    p.add_argument("--snr-step", type=float, default=None)
    p.set_defaults(handler=cmd_sweep_snr)

    p = sub.add_parser("converge", help="Per-stage trajectories of both algorithms")
    common(p)
    p.add_argument(
        "--mc-trials",
        type=int,
        default=None,
        help="Add Monte Carlo overlay columns computed with this many trials",
    )
    p.set_defaults(handler=cmd_converge)

    p = sub.add_parser("sweep-q00", help="Steady-state detection vs the q00 design knob")
    common(p)
    p.add_argument("--points", type=int, default=None, help="Grid size inside (0, alpha)")
    p.set_defaults(handler=cmd_sweep_q00)

    p = sub.add_parser("montecarlo", help="Empirical per-stage frequencies")
    common(p)
    p.set_defaults(handler=cmd_montecarlo)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        args.handler(cfg, args)
        _write_manifest(args.manifest, args.command, cfg)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except DetectionError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
