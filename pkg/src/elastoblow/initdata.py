"""Initial data builders and hypothesis checks.

Bumps use the radial profile phi(r) = (1 - r^2/R^2)^4 on r < R, zero
outside, so every field equals (rho_bar, 0, I) exactly for |x| >= R.
The deformation is built from curl potentials: row j of rho0 F0^T is

    rho_bar e_j + curl(psi(r) e_{j+1}),   psi = a (R/10)(1 - r^2/R^2)^5,

i.e. rho_bar e_j - (a/R) phi(r) (x cross e_{j+1}), which is analytically
divergence-free.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from . import diagnostics as diag
from .core import Grid, NonPositiveDensity, PhysParams, State, background_state
from .eos import pressure, sound_speed_inf
from .stencils import StencilConfig, d1, d2


@dataclass(frozen=True)
class BumpSpec:
    velocity_amplitude: float = 0.0
    density_bump: float = 0.0
    F_potential_amplitude: float = 0.0

    def __post_init__(self):
        for name in ("velocity_amplitude", "density_bump", "F_potential_amplitude"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class HypothesisReport:
    m0: float
    F0_functional: float
    E0: float
    trace0: float
    threshold: float
    rho0_max: float
    cond_FF1: bool
    cond_FF: bool
    cond_a2: bool
    T_upper: Optional[float]
    div_residual0: float

    @property
    def all_hold(self) -> bool:
        return self.cond_FF1 and self.cond_FF and self.cond_a2

    def margins(self) -> dict:
        return {
            "FF1": self.m0,
            "FF": self.F0_functional - self.threshold,
            "a2": self.trace0 - 2.0 * self.E0,
        }


@dataclass(frozen=True)
class CompatibilityReport:
    g_L2: float
    g_H1_semi: float
    sqrt_rho_g_L2: float
    flagged_cells: int

    @property
    def ok(self) -> bool:
        return self.flagged_cells == 0 and all(
            math.isfinite(v) for v in (self.g_L2, self.g_H1_semi, self.sqrt_rho_g_L2)
        )


def profile(r: np.ndarray, R: float) -> np.ndarray:
    s = np.clip(1.0 - (r / R) ** 2, 0.0, None)
    return s**4


def make_equilibrium(p: PhysParams, g: Grid) -> State:
    return background_state(p, g)


def make_bump(spec: BumpSpec, p: PhysParams, g: Grid) -> State:
    if spec.density_bump <= -p.rho_bar:
        raise NonPositiveDensity(
            f"density_bump {spec.density_bump!r} makes the density non-positive (rho_bar={p.rho_bar!r})"
        )
    if p.R >= g.half_width:
        raise ValueError(f"support radius R={p.R} must be smaller than the half-width {g.half_width}")
    x = g.coords
    phi = profile(g.radius, p.R)

    rho = p.rho_bar + spec.density_bump * phi
    u = spec.velocity_amplitude * phi * x / p.R

    Q = np.zeros((3, 3, *g.shape))
    for j in range(3):
        Q[j, j] = p.rho_bar
        c = np.zeros(3)
        c[(j + 1) % 3] = 1.0
        cross = np.stack([
            x[1] * c[2] - x[2] * c[1],
            x[2] * c[0] - x[0] * c[2],
            x[0] * c[1] - x[1] * c[0],
        ])
        Q[j] -= (spec.F_potential_amplitude / p.R) * phi * cross
    F = np.swapaxes(Q, 0, 1) / rho
    return State(0.0, rho, u, np.ascontiguousarray(F))


def check_hypotheses(s0: State, p: PhysParams, g: Grid, sc: Optional[StencilConfig] = None) -> HypothesisReport:
    sc = sc or StencilConfig()
    m0 = diag.mass_deviation(s0, p, g)
    F0 = diag.radial_momentum(s0, p, g)
    E0 = diag.energy(s0, p, g)
    trace0 = 0.0 - diag.trace_integral(s0, g)
    rho_max = float(np.max(s0.rho))
    sigma = sound_speed_inf(p)
    thr = diag.ff_threshold(sigma, p.R, rho_max)
    cond_ff = F0 > thr
    T = diag.blowup_time_upper_bound(F0, sigma, p.R, rho_max) if cond_ff else None
    return HypothesisReport(
        m0=m0,
        F0_functional=F0,
        E0=E0,
        trace0=trace0,
        threshold=thr,
        rho0_max=rho_max,
        cond_FF1=m0 >= 0,
        cond_FF=cond_ff,
        cond_a2=trace0 >= 2.0 * E0,
        T_upper=T,
        div_residual0=diag.div_residual(s0, g, sc),
    )


def check_compatibility(
    s0: State,
    p: PhysParams,
    g: Grid,
    sc: Optional[StencilConfig] = None,
    floor: Optional[float] = None,
    tol: float = 1e-10,
) -> CompatibilityReport:
    """Recover g from -mu lap u0 - (lambda+mu) grad div u0 + A grad rho0^gamma = rho0 g."""
    sc = sc or StencilConfig()
    floor = 1e-8 * p.rho_bar if floor is None else floor
    u = s0.u
    lap = sum(d2(u, k, g.h[k], sc.order) for k in range(3))
    divu = sum(d1(u[k], k, g.h[k], sc.order) for k in range(3))
    gd = np.stack([d1(divu, k, g.h[k], sc.order) for k in range(3)])
    P = pressure(s0.rho, p)
    gp = np.stack([d1(P, k, g.h[k], sc.order) for k in range(3)])
    lhs = -p.mu * lap - (p.lam + p.mu) * gd + gp

    ok = s0.rho > floor
    gfield = np.where(ok, lhs / np.where(ok, s0.rho, 1.0), 0.0)
    flagged = int(np.sum(~ok & (np.max(np.abs(lhs), axis=0) > tol)))
    dv = g.cell_volume
    l2 = math.sqrt(float(np.sum(gfield**2)) * dv)
    dg = np.stack([d1(gfield, k, g.h[k], sc.order) for k in range(3)])
    h1 = math.sqrt(float(np.sum(dg**2)) * dv)
    wl2 = math.sqrt(float(np.sum(s0.rho * gfield**2)) * dv)
    return CompatibilityReport(l2, h1, wl2, flagged)


def check_viscosity(p: PhysParams) -> bool:
    """Admissibility (mu >= 0, 3 lambda + 2 mu >= 0) together with 7 mu > lambda."""
    return p.mu >= 0 and 3 * p.lam + 2 * p.mu >= 0 and 7 * p.mu > p.lam


def search_admissible(
    base: BumpSpec,
    p: PhysParams,
    g: Grid,
    density_bumps: Iterable[float],
    potential_amplitudes: Iterable[float] = (0.0,),
    velocity_amplitudes: Optional[Iterable[float]] = None,
    sc: Optional[StencilConfig] = None,
):
    """Scan bump parameters for data meeting all three blowup hypotheses.

    A positive density bump with no potential is the isotropic shrink
    F0 = (rho_bar / rho0) I, whose diagonal of I - F0 lies in (0, 1). Returns
    (spec, report) for the candidate with the largest worst-case relative
    margin, or (None, best_report) when none passes.
    """
    vels = [base.velocity_amplitude] if velocity_amplitudes is None else list(velocity_amplitudes)
    best, best_score = None, -math.inf
    for v, b, a in itertools.product(vels, density_bumps, potential_amplitudes):
        spec = replace(base, velocity_amplitude=v, density_bump=b, F_potential_amplitude=a)
        try:
            rep = check_hypotheses(make_bump(spec, p, g), p, g, sc)
        except NonPositiveDensity:
            continue
        score = min(
            rep.m0 / max(abs(rep.trace0), 1e-300),
            (rep.F0_functional - rep.threshold) / rep.threshold,
            (rep.trace0 - 2 * rep.E0) / max(rep.trace0, 1e-300),
        )
        if score > best_score:
            best, best_score = (spec, rep), score
    if best is None:
        return None, None
    spec, rep = best
    return (spec if rep.all_hold else None), rep
