import math

import numpy as np
import pytest

from elastoblow import Grid, PhysParams, State, StencilConfig
from elastoblow import diagnostics as diag
from elastoblow.core import NonPositiveDensity
from elastoblow.eos import sound_speed_inf
from elastoblow.initdata import (
    BumpSpec,
    check_compatibility,
    check_hypotheses,
    check_viscosity,
    make_bump,
    make_equilibrium,
    profile,
    search_admissible,
)

# 4 pi * integral_0^1 (1 - s^2)^4 s^4 ds, evaluated symbolically once
RADIAL_MOMENT_4 = 512 * math.pi / 15015
# 4 pi * integral_0^1 (1 - s^2)^4 s^2 ds
RADIAL_MOMENT_2 = 512 * math.pi / 3465


def test_frozen_moments_against_sympy():
    sp = pytest.importorskip("sympy")
    s = sp.symbols("s")
    assert float(4 * sp.pi * sp.integrate((1 - s**2) ** 4 * s**4, (s, 0, 1))) == pytest.approx(RADIAL_MOMENT_4, rel=1e-15)
    assert float(4 * sp.pi * sp.integrate((1 - s**2) ** 4 * s**2, (s, 0, 1))) == pytest.approx(RADIAL_MOMENT_2, rel=1e-15)


def test_zero_amplitudes_give_equilibrium():
    p = PhysParams(rho_bar=1.4)
    g = Grid.cube(9, 2.0)
    a = make_bump(BumpSpec(), p, g)
    b = make_equilibrium(p, g)
    assert np.array_equal(a.rho, b.rho) and np.array_equal(a.u, b.u) and np.array_equal(a.F, b.F)


def test_bump_is_background_outside_support():
    p = PhysParams(R=0.9)
    g = Grid.cube(20, 2.0)
    s = make_bump(BumpSpec(0.3, 0.2, 0.4), p, g)
    out = g.radius >= p.R
    assert np.all(s.rho[out] == 1.0)
    assert np.all(s.u[:, out] == 0.0)
    assert np.allclose(s.F[:, :, out], np.eye(3)[:, :, None], atol=0)


def test_bump_rejects_bad_data():
    p = PhysParams()
    with pytest.raises(NonPositiveDensity):
        make_bump(BumpSpec(density_bump=-1.0), p, Grid.cube(8, 2.0))
    with pytest.raises(ValueError):
        make_bump(BumpSpec(0.1), p, Grid.cube(8, 1.0))


def test_radial_momentum_linear_in_amplitude():
    p = PhysParams(R=1.2, rho_bar=1.5)
    g = Grid.cube(64, 1.5)
    oracle = RADIAL_MOMENT_4 * p.R**4 * p.rho_bar
    vals = [diag.radial_momentum(make_bump(BumpSpec(v), p, g), p, g) for v in (0.5, 1.0, 3.0)]
    assert vals[0] / 0.5 == pytest.approx(vals[1], rel=1e-13)
    assert vals[2] / 3.0 == pytest.approx(vals[1], rel=1e-13)
    assert vals[1] == pytest.approx(oracle, rel=1e-3)


def test_mass_quadrature():
    p = PhysParams(R=1.0)
    g = Grid.cube(64, 1.5)
    m = diag.mass_deviation(make_bump(BumpSpec(density_bump=0.2), p, g), p, g)
    assert m == pytest.approx(0.2 * RADIAL_MOMENT_2, rel=1e-3)


def _div_rates(order, build, interior=False):
    sc = StencilConfig(order)
    e, hs = [], []
    w = sc.reach
    for n in (16, 32, 64):
        g = Grid.cube(n, 1.5)
        if interior:
            f = diag.div_residual_field(build(g), g, sc)[:, w:-w, w:-w, w:-w]
            e.append(np.max(np.abs(f)))
        else:
            e.append(diag.div_residual(build(g), g, sc))
        hs.append(g.h[0])
    return np.diff(np.log(e)) / np.diff(np.log(hs))


def test_bump_divergence_converges_at_second_order():
    p = PhysParams(R=1.0)
    rates = _div_rates(2, lambda g: make_bump(BumpSpec(0.0, 0.3, 0.5), p, g))
    assert np.all(rates > 1.5), rates


def test_bump_divergence_order4_limited_by_profile_regularity():
    # (1 - r^2)^4 has a jump in its fourth derivative at r = R, which caps
    # the max-norm order of the fourth-order stencil at three
    p = PhysParams(R=1.0)
    rates = _div_rates(4, lambda g: make_bump(BumpSpec(0.0, 0.3, 0.5), p, g))
    assert np.all(rates > 2.5), rates


@pytest.mark.parametrize("order", [2, 4])
def test_smooth_curl_rows_divergence_at_stencil_order(order):
    def build(g):
        x = g.coords
        psi = np.exp(-np.sum(x * x, axis=0))
        dpsi = -2 * x * psi
        Q = np.zeros((3, 3, *g.shape))
        for j in range(3):
            Q[j, j] = 1.0
            c = np.zeros(3)
            c[(j + 1) % 3] = 0.4
            # curl(psi c) = grad(psi) x c
            Q[j] += np.stack([
                dpsi[1] * c[2] - dpsi[2] * c[1],
                dpsi[2] * c[0] - dpsi[0] * c[2],
                dpsi[0] * c[1] - dpsi[1] * c[0],
            ])
        rho = np.ones(g.shape)
        return State(0.0, rho, np.zeros((3, *g.shape)), np.ascontiguousarray(np.swapaxes(Q, 0, 1)))

    # the field is not compactly supported, so skip the edge band
    rates = _div_rates(order, build, interior=True)
    assert np.all(rates > order - 0.5), rates


def test_equilibrium_report():
    p = PhysParams()
    g = Grid.cube(10, 2.0)
    rep = check_hypotheses(make_equilibrium(p, g), p, g)
    assert (rep.m0, rep.F0_functional, rep.E0, rep.trace0) == (0.0, 0.0, 0.0, 0.0)
    assert not rep.cond_FF and rep.T_upper is None


def test_identity_deformation_reduces_a2():
    p = PhysParams()
    g = Grid.cube(16, 2.0)
    rep = check_hypotheses(make_bump(BumpSpec(velocity_amplitude=0.5), p, g), p, g)
    assert rep.trace0 == 0.0
    assert rep.E0 > 0 and not rep.cond_a2


def test_blowup_time_at_twice_threshold():
    p = PhysParams(A=5e-5, gamma=2.0, R=1.0)
    g = Grid.cube(32, 1.5)
    unit = diag.radial_momentum(make_bump(BumpSpec(1.0), p, g), p, g)
    thr = diag.ff_threshold(sound_speed_inf(p), p.R, p.rho_bar)
    s0 = make_bump(BumpSpec(2 * thr / unit), p, g)
    rep = check_hypotheses(s0, p, g)
    assert rep.F0_functional == pytest.approx(2 * rep.threshold, rel=1e-13)
    assert rep.cond_FF
    closed = (2**0.25 - 1) * p.R / sound_speed_inf(p)
    assert rep.T_upper == pytest.approx(closed, rel=1e-10)


def test_trace_and_mass_relation_for_shrink():
    # pure density bump: F0 = (rho_bar / rho0) I, so rho0 tr(I - F0) = 3 (rho0 - rho_bar)
    p = PhysParams()
    g = Grid.cube(16, 2.0)
    rep = check_hypotheses(make_bump(BumpSpec(density_bump=0.4), p, g), p, g)
    assert rep.trace0 == pytest.approx(3 * rep.m0, rel=1e-12)


def test_compatibility_examples():
    p = PhysParams(mu=0.5)
    g = Grid.cube(12, 2.0)
    rep = check_compatibility(make_equilibrium(p, g), p, g)
    assert (rep.g_L2, rep.g_H1_semi, rep.sqrt_rho_g_L2, rep.flagged_cells) == (0.0, 0.0, 0.0, 0)
    assert rep.ok
    p0 = PhysParams()
    rep = check_compatibility(make_bump(BumpSpec(0.0, 0.0, 0.3), p0, g), p0, g)
    assert rep.g_L2 == 0.0 and rep.ok


def test_compatibility_pressure_gradient():
    # with u0 = 0 the recovered g is grad(P(rho0)) / rho0
    p = PhysParams(A=1.0, gamma=2.0, mu=0.1)
    sc = StencilConfig()
    errs = []
    for n in (24, 48):
        g = Grid.cube(n, 1.5)
        s = make_bump(BumpSpec(density_bump=0.2), p, g)
        rep = check_compatibility(s, p, g, sc)
        r = g.radius
        phi_r = np.where(r < 1, -8 * r * (1 - r**2) ** 3, 0.0)
        # d/dr A rho^2 = 2 A rho rho', so g = 2 A rho' along x / r
        g_exact_norm = np.sqrt(np.sum((2.0 * 0.2 * phi_r) ** 2) * g.cell_volume)
        errs.append(abs(rep.g_L2 - g_exact_norm) / g_exact_norm)
    assert errs[1] < errs[0] / 3


@pytest.mark.parametrize(
    "mu,lam,ok",
    [(1.0, 0.0, True), (1.0, 7.0, False), (0.0, 0.0, False), (0.1, -0.06, True)],
)
def test_check_viscosity(mu, lam, ok):
    assert check_viscosity(PhysParams(mu=mu, lam=lam)) is ok


def test_profile_shape():
    r = np.array([0.0, 0.5, 1.0, 2.0])
    assert np.allclose(profile(r, 1.0), [1.0, 0.75**4, 0.0, 0.0])


def test_search_admissible_finds_known_candidate():
    p = PhysParams(A=5e-5, gamma=2.0)
    g = Grid.cube(24, 1.5)
    spec, rep = search_admissible(BumpSpec(), p, g, density_bumps=[0.0, 1.2], velocity_amplitudes=[0.5, 3.5])
    assert spec == BumpSpec(3.5, 1.2, 0.0)
    assert rep.all_hold
    spec, rep = search_admissible(BumpSpec(), PhysParams(), g, density_bumps=[0.0], velocity_amplitudes=[0.1])
    assert spec is None and rep is not None and not rep.all_hold
