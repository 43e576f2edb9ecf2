import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ecc_gof import PointCloud, prepare_reference, parse_spec
from ecc_gof.rand import stream

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def nine_points_path() -> str:
    return os.path.join(DATA_DIR, "nine_points.csv")


@pytest.fixture(scope="session")
def nine_points(nine_points_path) -> PointCloud:
    return PointCloud.from_csv(nine_points_path)


def random_cloud(seed: int, n: int, dim: int, spread: float = 1.0) -> PointCloud:
    """Deterministic test cloud, bounded coordinates, no duplicates."""
    pts = stream(seed, 1_000_001).uniform(-spread, spread, size=(n, dim))
    return PointCloud(pts)


@pytest.fixture(scope="session")
def model_1d_small():
    """Reduced-budget 1D null model shared across tests (seconds to build)."""
    return prepare_reference(parse_spec("normal(0,1)"), n=60, M=300, m=300,
                             alpha=0.05, seed=20_001)


@pytest.fixture(scope="session")
def model_2d_small():
    """Reduced-budget 2D null model shared across tests."""
    return prepare_reference(parse_spec("prod(normal(0,1),normal(0,1))"),
                             n=50, M=250, m=250, alpha=0.05, seed=20_002)


def assert_curves_match(a, b, tol: float) -> None:
    """Exact value match, breakpoints within tol (for dual-construction
    comparisons where float paths differ at the ulp level)."""
    assert len(a.breakpoints) == len(b.breakpoints), (
        f"breakpoint counts differ: {len(a.breakpoints)} vs {len(b.breakpoints)}")
    np.testing.assert_allclose(a.breakpoints, b.breakpoints, rtol=0.0, atol=tol)
    np.testing.assert_array_equal(a.values, b.values)
