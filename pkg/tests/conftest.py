from __future__ import annotations

import numpy as np
import pytest

from onebit_fusion import SensorProfile


@pytest.fixture
def example_fleet() -> tuple[SensorProfile, ...]:
    """Three heterogeneous sensors whose fused ROC has 8 distinct segments."""
    return (
        SensorProfile(0.74, 0.16),
        SensorProfile(0.66, 0.32),
        SensorProfile(0.61, 0.39),
    )


@pytest.fixture
def homogeneous_fleet() -> tuple[SensorProfile, ...]:
    """Four identical low-SNR sensors; used with alpha = q = 0.39."""
    return (SensorProfile(0.61, 0.39),) * 4


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)


def random_productive_fleet(
    rng: np.random.Generator, n: int, margin: float = 1e-3
) -> tuple[SensorProfile, ...]:
    """Draw q uniformly, then p uniformly above it, keeping both interior."""
    sensors = []
    for _ in range(n):
        while True:
            q = float(rng.uniform(margin, 1.0 - 2.0 * margin))
            p = float(rng.uniform(q + margin, 1.0 - margin))
            if p > q:
                sensors.append(SensorProfile(p, q))
                break
    return tuple(sensors)
