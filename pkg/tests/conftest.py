import numpy as np
import pytest

from elastoblow import Grid, PhysParams, State, StencilConfig

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def random_state(rng, g: Grid, amp: float = 0.3) -> State:
    shape = g.shape
    rho = 1.0 + amp * rng.uniform(-1, 1, shape)
    u = rng.normal(size=(3, *shape))
    F = np.eye(3)[:, :, None, None, None] + amp * rng.normal(size=(3, 3, *shape))
    return State(0.0, rho, u, F)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def params():
    return PhysParams(A=1.0, gamma=2.0)


@pytest.fixture
def small_grid():
    return Grid.cube(12, 1.5)


@pytest.fixture
def sc2():
    return StencilConfig(order=2, dissipation_coeff=0.02)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
