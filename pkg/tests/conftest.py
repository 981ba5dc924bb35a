"""Shared fixtures and the acceptance summary printer."""

from __future__ import annotations

import numpy as np
import pytest

from okpca.simulators import SimConfig, academic_system, simulate_many
from okpca.trajectory import Trajectory

# (criterion, passed, detail) rows collected by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def academic_batch(angles, faulty=False, dt=0.01, duration=2.0, prefix="a") -> list[Trajectory]:
    """Academic-system trajectories starting on the unit circle at ``angles``."""
    angles = np.asarray(angles, dtype=float)
    ics = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    ids = [f"{prefix}{i:03d}" for i in range(len(angles))]
    return simulate_many(academic_system(faulty), ics, SimConfig(dt, duration), ids=ids)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def academic_train():
    """40 nominal academic trajectories, deterministic."""
    angles = np.random.default_rng(7).uniform(0, 2 * np.pi, 40)
    return academic_batch(angles, prefix="train")


@pytest.fixture(scope="session")
def academic_test():
    rng = np.random.default_rng(8)
    normal = academic_batch(rng.uniform(0, 2 * np.pi, 10), prefix="normal")
    faulty = academic_batch(rng.uniform(0, 2 * np.pi, 10), faulty=True, prefix="faulty")
    return normal, faulty


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
