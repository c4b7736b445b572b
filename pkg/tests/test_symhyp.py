import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastoblow import DegenerateDensity, PhysParams
from elastoblow.symhyp import (
    assemble,
    check_hyperbolicity,
    max_char_speed,
    max_char_speed_field,
    primitive_rhs,
    sym_rhs,
    sym_state,
    symbol,
)


def _eig_max(rho, u, F, p, n):
    return float(np.max(np.abs(np.linalg.eigvals(symbol(rho, u, F, n, p)))))


def _random_point(rng):
    rho = float(rng.uniform(0.05, 5.0))
    u = rng.normal(size=3)
    F = np.eye(3) + 0.5 * rng.normal(size=(3, 3))
    return rho, u, F


def test_sym_state_layout():
    p = PhysParams(A=1.0, gamma=2.0)
    F = np.arange(9.0).reshape(3, 3)
    V = sym_state(1.0, [1, 2, 3], F, p)
    assert V[0] == 2.0
    assert np.array_equal(V[1:4], [1, 2, 3])
    # columns of F follow the velocity
    assert np.array_equal(V[4:7], F[:, 0]) and np.array_equal(V[10:13], F[:, 2])


def test_equilibrium_structure():
    p = PhysParams(A=1.0, gamma=2.0)
    S = assemble(1.0, np.zeros(3), np.eye(3), p)
    assert np.array_equal(S.A0, np.diag([0.5] + [1.0] * 12))
    A1 = S.Ai[0]
    assert np.all(np.diag(A1) == 0)
    e1 = np.zeros(13)
    e1[1] = 1.0
    assert np.array_equal(A1[0], e1) and np.array_equal(A1[:, 0], e1)
    assert np.array_equal(A1[1:4, 4:7], -np.eye(3))
    assert np.array_equal(A1[4:7, 1:4], -np.eye(3))
    assert np.all(A1[1:4, 7:13] == 0)


def test_assemble_rejects_nonpositive_density():
    p = PhysParams()
    for rho in (0.0, -1.0):
        with pytest.raises(DegenerateDensity):
            assemble(rho, np.zeros(3), np.eye(3), p)


def test_hyperbolicity_sweep(rng):
    p = PhysParams(A=1.3, gamma=1.7)
    for _ in range(1000):
        rho, u, F = _random_point(rng)
        rep = check_hyperbolicity(rho, u, F, p)
        assert rep.passed and rep.symmetry_defect == 0.0 and rep.a0_min_diag > 0


def test_hyperbolicity_degenerate_flag():
    rep = check_hyperbolicity(0.0, np.zeros(3), np.eye(3), PhysParams())
    assert rep.degenerate_density and not rep.passed


def test_equilibrium_longitudinal_speed():
    p = PhysParams(A=1.0, gamma=2.0)
    lam = np.sort(np.real(np.linalg.eigvals(symbol(1.0, np.zeros(3), np.eye(3), [1, 0, 0], p))))
    assert lam[-1] == pytest.approx(np.sqrt(3.0), rel=1e-8)
    assert max_char_speed(1.0, np.zeros(3), np.eye(3), p) >= lam[-1] * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_speed_bound_dominates_eigensolve(seed):
    rng = np.random.default_rng(seed)
    p = PhysParams(A=float(rng.uniform(0.1, 3)), gamma=float(rng.uniform(1.1, 3)))
    rho, u, F = _random_point(rng)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    assert max_char_speed(rho, u, F, p) >= _eig_max(rho, u, F, p, n) * (1 - 1e-12)


def test_advection_dominates():
    p = PhysParams(A=1e-6, gamma=2.0)
    assert max_char_speed(1.0, [10.0, 0, 0], np.eye(3), p) >= 10.0


def test_stretching_increases_bound(rng):
    p = PhysParams()
    rho, u, F = _random_point(rng)
    assert max_char_speed(rho, u, 2 * F, p) > max_char_speed(rho, u, F, p)
    n = np.array([1.0, 0, 0])
    assert _eig_max(rho, u, 2 * F, p, n) > _eig_max(rho, u, F, p, n)


def test_field_speed_dominates_points(rng):
    p = PhysParams()
    rho = rng.uniform(0.5, 2, (2, 2, 2))
    u = rng.normal(size=(3, 2, 2, 2))
    F = np.eye(3)[:, :, None, None, None] + 0.3 * rng.normal(size=(3, 3, 2, 2, 2))
    bound = max_char_speed_field(rho, u, F, p)
    for idx in np.ndindex(2, 2, 2):
        pt = max_char_speed(rho[idx], u[(slice(None),) + idx], F[(slice(None), slice(None)) + idx], p)
        assert bound >= pt * (1 - 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sym_rhs_matches_primitive_pointwise(seed):
    # same derivatives fed to both forms: they must agree to roundoff
    rng = np.random.default_rng(seed)
    p = PhysParams(A=float(rng.uniform(0.2, 2)), gamma=float(rng.uniform(1.2, 2.5)))
    rho, u, F = _random_point(rng)
    grad_rho = rng.normal(size=3)
    grad_u = rng.normal(size=(3, 3))
    grad_F = rng.normal(size=(3, 3, 3))
    c2 = p.A * p.gamma * rho ** (p.gamma - 1)
    dV = np.zeros((3, 13))
    for k in range(3):
        dV[k, 0] = c2 / rho * grad_rho[k]
        dV[k, 1:4] = grad_u[k]
        dV[k, 4:13] = grad_F[k].T.ravel()
    a = sym_rhs(rho, u, F, dV, p)
    b = primitive_rhs(rho, u, F, grad_rho, grad_u, grad_F, p)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_sym_rhs_equals_matrix_form(rng):
    p = PhysParams(A=0.7, gamma=1.6)
    rho, u, F = _random_point(rng)
    dV = rng.normal(size=(3, 13))
    S = assemble(rho, u, F, p)
    ref = -np.linalg.solve(S.A0, sum(S.Ai[i] @ dV[i] for i in range(3)))
    assert np.allclose(sym_rhs(rho, u, F, dV, p), ref, rtol=1e-12, atol=1e-12)
