"""Experiment configuration files: a JSON key/value tree.

Exactly one of ``sensors`` (explicit profile list) or ``model``
(Gaussian sensor model plus replica count) describes the fleet; the
remaining keys carry the ceiling, algorithm selection, run sizes, the
seed, and optional sweep ranges.  ``alpha`` may be the string "q",
meaning "use the (homogeneous) fleet's own false-alarm probability",
which is how the sensor-count and SNR sweeps are usually configured.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Mapping

from .core import Alpha, SensorProfile, ValidationError
from .sim import ALGORITHMS, GaussianSensorModel, model_profile

__all__ = ["ExperimentConfig", "config_sha256", "load_config", "parse_config"]

_TOP_KEYS = {
    "sensors",
    "model",
    "alpha",
    "algo",
    "stages",
    "trials",
    "seed",
    "q00",
    "initial_thr",
    "sweep",
}


@dataclass(frozen=True)
class ExperimentConfig:
    sensors: tuple[SensorProfile, ...]
    model: GaussianSensorModel | None
    alpha: float
    algo: str
    stages: int
    trials: int
    seed: int
    q00: float | None
    initial_thr: int
    sweep: Mapping[str, Any]
    raw: Mapping[str, Any]


def _require_int(raw: Mapping[str, Any], key: str, default: int, minimum: int) -> int:
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"config key {key!r} must be an integer, got {v!r}")
    if v < minimum:
        raise ValidationError(f"config key {key!r} must be >= {minimum}, got {v}")
    return v


def parse_config(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a parsed JSON tree into an ExperimentConfig."""
    if not isinstance(raw, Mapping):
        raise ValidationError("config root must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")

    has_sensors = "sensors" in raw
    has_model = "model" in raw
    if has_sensors == has_model:
        raise ValidationError(
            "config must contain exactly one of 'sensors' or 'model'"
        )

    model = None
    if has_sensors:
        spec = raw["sensors"]
        if not isinstance(spec, list) or not spec:
            raise ValidationError("'sensors' must be a non-empty list of {p, q} objects")
        sensors = []
        for i, item in enumerate(spec):
            if not isinstance(item, Mapping) or set(item) != {"p", "q"}:
                raise ValidationError(
                    f"sensor {i} must be an object with exactly the keys p and q"
                )
            try:
                sensors.append(SensorProfile(p=item["p"], q=item["q"]))
            except ValidationError as exc:
                raise ValidationError(f"sensor {i}: {exc}") from exc
        sensors = tuple(sensors)
    else:
        spec = raw["model"]
        if not isinstance(spec, Mapping) or set(spec) - {"A", "sigma2", "y_star", "count"}:
            raise ValidationError(
                "'model' must be an object with keys A, sigma2, y_star, count"
            )
        missing = {"A", "sigma2", "y_star", "count"} - set(spec)
        if missing:
            raise ValidationError(f"'model' is missing keys: {sorted(missing)}")
        count = spec["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ValidationError(f"model count must be a positive integer, got {count!r}")
        model = GaussianSensorModel(A=spec["A"], sigma2=spec["sigma2"], y_star=spec["y_star"])
        sensors = (model_profile(model),) * count

    alpha_raw = raw.get("alpha")
    if alpha_raw == "q":
        qs = {s.q for s in sensors}
        if len(qs) != 1:
            raise ValidationError(
                "alpha='q' requires a homogeneous fleet (all sensors share one q)"
            )
        alpha = sensors[0].q
    elif alpha_raw is None:
        raise ValidationError("config must set 'alpha' (a number in (0,1), or 'q')")
    else:
        alpha = Alpha(alpha_raw).value

    algo = raw.get("algo", "fast")
    if algo not in ALGORITHMS:
        raise ValidationError(f"algo must be one of {ALGORITHMS}, got {algo!r}")

    q00 = raw.get("q00")
    if q00 is not None:
        if isinstance(q00, bool) or not isinstance(q00, (int, float)):
            raise ValidationError(f"q00 must be a number, got {q00!r}")
        q00 = float(q00)

    initial_thr = _require_int(raw, "initial_thr", 0, 0)
    if initial_thr not in (0, 1):
        raise ValidationError(f"initial_thr must be 0 or 1, got {initial_thr}")

    sweep = raw.get("sweep", {})
    if not isinstance(sweep, Mapping):
        raise ValidationError("'sweep' must be an object")

    return ExperimentConfig(
        sensors=sensors,
        model=model,
        alpha=alpha,
        algo=algo,
        stages=_require_int(raw, "stages", 200, 1),
        trials=_require_int(raw, "trials", 10_000, 1),
        seed=_require_int(raw, "seed", 0, 0),
        q00=q00,
        initial_thr=initial_thr,
        sweep=dict(sweep),
        raw=dict(raw),
    )


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path!r} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def config_sha256(cfg: ExperimentConfig) -> str:
    """Canonical digest of the raw config tree (sorted keys, tight JSON)."""
    blob = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
