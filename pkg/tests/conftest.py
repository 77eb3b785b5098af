from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from clustergpd.core_algebra import CompatiblePair, a2_pair, b2_pair, g2_pair

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

RANK2 = {
    "A2": a2_pair(),
    "B2": b2_pair(),
    "G2": g2_pair(),
}

# seed pairs paired with a known period and its permutation
PERIODS = {
    "A2": (a2_pair(), (1, 2, 1, 2, 1), (2, 1)),
    "B2": (b2_pair(), (1, 2) * 3, (1, 2)),
    "G2": (g2_pair(), (1, 2) * 4, (1, 2)),
    "A2r21": (a2_pair((2, 1)), (1, 2) * 3, (1, 2)),
}


def frozen_pair() -> CompatiblePair:
    """A2 with two frozen rows; the same data as ``scenarios/a2_frozen.json``."""
    h = Fraction(1, 2)
    W = [[0, 3 * h, h, 0], [-3 * h, 0, 0, h], [-h, 0, 0, h], [0, -h, -h, 0]]
    return CompatiblePair.build([[0, 1], [-1, 0], [1, 0], [0, 1]], (1, 1), Omega=W)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
