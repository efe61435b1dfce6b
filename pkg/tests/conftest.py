"""Shared fixtures and finite-difference oracles."""

import numpy as np
import pytest

from lipdisc import SamplingConfig, benchmarks


@pytest.fixture(scope="session")
def bench():
    """All bundled benchmark specs, keyed by name."""
    return {name: benchmarks.load(name) for name in benchmarks.names()}


@pytest.fixture(scope="session")
def default_cfg():
    return SamplingConfig()


@pytest.fixture(scope="session")
def fast_cfg():
    return SamplingConfig(grid_per_axis=11, pair_budget=2000, seed=7, polish_iters=20)


def fd_step(value: float) -> float:
    return 1e-6 * max(1.0, abs(value))


def central_diff(fn, x, idx):
    """Central finite difference of fn in coordinate idx at x."""
    h = fd_step(x[idx])
    hi = np.array(x, dtype=float)
    lo = np.array(x, dtype=float)
    hi[idx] += h
    lo[idx] -= h
    return (fn(hi) - fn(lo)) / (2.0 * h)


def sample_points(spec, count, seed):
    """Seeded uniform points in D x U for a spec."""
    rng = np.random.default_rng(seed)
    xs = spec.region.lower + rng.random((count, spec.n)) * spec.region.width
    us = (
        spec.input_region.lower
        + rng.random((count, spec.m)) * spec.input_region.width
    )
    return xs, us
