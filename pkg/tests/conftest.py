import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geolift.integrate import IntegratorOptions
from geolift.manifolds import catalog_manifold

CATALOG_IDS = [
    "euclidean(2)",
    "sphere2",
    "cylinder_flat",
    "minkowski2",
    "minkowski2_minus_point",
    "minkowski2_minus_quadrant",
    "minkowski2_strip",
    "desitter2",
]

# a safe interior base point per entry, away from excised sets
BASE_POINTS = {
    "euclidean(2)": np.array([0.0, 0.0]),
    "sphere2": np.array([0.0, 2.0]),
    "cylinder_flat": np.array([0.0, 0.0]),
    "minkowski2": np.array([0.0, 0.0]),
    "minkowski2_minus_point": np.array([0.0, 0.0]),
    "minkowski2_minus_quadrant": np.array([1.0, -1.0]),
    "minkowski2_strip": np.array([0.0, 0.5]),
    "desitter2": np.array([0.0, 0.0]),
}

# keeps random test paths inside the domain and clear of conjugate shells
SAFE_RADIUS = {
    "euclidean(2)": 2.0,
    "sphere2": 1.2,
    "cylinder_flat": 2.0,
    "minkowski2": 2.0,
    "minkowski2_minus_point": 0.6,
    "minkowski2_minus_quadrant": 0.6,
    "minkowski2_strip": 0.35,
    "desitter2": 1.2,
}


@pytest.fixture(scope="session")
def manifolds():
    return {name: catalog_manifold(name) for name in CATALOG_IDS}


@pytest.fixture(scope="session")
def opts():
    return IntegratorOptions()


@pytest.fixture(scope="session")
def fast_opts():
    return IntegratorOptions(rel_tol=1e-9, abs_tol=1e-11)
