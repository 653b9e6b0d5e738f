import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from speedplan import Instance

settings.register_profile("default", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow])
# HYPOTHESIS_PROFILE=explore draws fresh examples each run
settings.register_profile("explore", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_tiny(rng: np.random.Generator, n: int | None = None, const: bool = True) -> Instance:
    """Tiny base instance with bounds drawn from the benchmark ranges."""
    n = int(rng.integers(4, 7)) if n is None else n
    w_max = np.concatenate(([0.0], rng.uniform(0.01, 100.0, n - 2), [0.0]))
    m = n - 2
    A = rng.uniform(0.1, 100.0) if const else rng.uniform(0.1, 100.0, m)
    J = rng.uniform(0.01, 100.0) if const else rng.uniform(0.01, 100.0, m)
    return Instance(n=n, h=1.0, A=A, J=J, w_max=w_max)


@pytest.fixture
def dip_instance() -> Instance:
    """Minimum-speed counterexample with M = 100, h = 1, rho = 0.01."""
    M = 100.0
    return Instance(
        n=5,
        h=1.0,
        A=1e3,
        J=[1e6, 1.0, 1e6],
        w_max=[0.0, M, 1.0, 1.0, 0.0],
        w_min=[0.0, M, 0.0, 1.0, 0.0],
        rho=0.01,
    )


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[str, str] = {}


def record_criterion(key: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[key] = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip('abc')), k)):
            terminalreporter.write_line(ACCEPTANCE[key])
