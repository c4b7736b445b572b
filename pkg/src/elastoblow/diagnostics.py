"""Monitored functionals, constraint residuals and blowup bounds.

All integrals use the midpoint rule (cell value times cell volume), which is
the quadrature under which the conservative scheme's cell sums are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .core import Grid, InvalidFunctional, PhysParams, State
from .eos import background_pressure, pressure, sound_speed_inf
from .stencils import StencilConfig, d1, div_mat_rows

CSV_COLUMNS = (
    "t", "m", "Ffun", "E", "trace", "div_res", "front",
    "front_bound", "bkm", "gradu_max", "rho_min", "riccati_lb",
)


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    m: float
    Ffun: float
    E: float
    trace: float
    div_res: float
    front: float
    front_bound: float
    bkm: float
    gradu_max: float
    rho_min: float
    riccati_lb: Optional[float] = None

    def values(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


# ---------------------------------------------------------------- functionals


def mass_deviation(s: State, p: PhysParams, g: Grid) -> float:
    return float(np.sum(s.rho - p.rho_bar) * g.cell_volume)


def radial_momentum(s: State, p: PhysParams, g: Grid) -> float:
    x = g.coords
    xu = x[0] * s.u[0] + x[1] * s.u[1] + x[2] * s.u[2]
    return float(np.sum(s.rho * xu) * g.cell_volume)


def energy_density(s: State, p: PhysParams) -> np.ndarray:
    kin = 0.5 * s.rho * np.sum(s.u * s.u, axis=0)
    G = s.F.copy()
    for i in range(3):
        G[i, i] -= 1.0
    ela = 0.5 * s.rho * np.sum(G * G, axis=(0, 1))
    pot = (pressure(s.rho, p) - background_pressure(p)) / (p.gamma - 1.0)
    return kin + ela + pot


def energy(s: State, p: PhysParams, g: Grid) -> float:
    return float(np.sum(energy_density(s, p)) * g.cell_volume)


def trace_integral(s: State, g: Grid) -> float:
    """Integral of rho tr(F - I)."""
    tr = s.F[0, 0] + s.F[1, 1] + s.F[2, 2] - 3.0
    return float(np.sum(s.rho * tr) * g.cell_volume)


def div_residual_field(s: State, g: Grid, sc: StencilConfig) -> np.ndarray:
    Q = s.rho * np.swapaxes(s.F, 0, 1)
    return div_mat_rows(Q, g, sc)


def div_residual(s: State, g: Grid, sc: StencilConfig) -> float:
    return float(np.max(np.abs(div_residual_field(s, g, sc))))


def deviation(s: State, p: PhysParams) -> np.ndarray:
    """Cell-wise max-abs distance from (rho_bar, 0, I)."""
    G = s.F.copy()
    for i in range(3):
        G[i, i] -= 1.0
    dev = np.abs(s.rho - p.rho_bar)
    dev = np.maximum(dev, np.max(np.abs(s.u), axis=0))
    return np.maximum(dev, np.max(np.abs(G), axis=(0, 1)))


def front_radius(s: State, p: PhysParams, g: Grid, tol: float = 1e-8) -> float:
    if not tol > 0:
        raise ValueError("tol must be positive")
    mask = deviation(s, p) > tol
    if not np.any(mask):
        return 0.0
    return float(np.max(g.radius[mask]))


def front_bound(t: float, p: PhysParams) -> float:
    return sound_speed_inf(p) * t + p.R


def velocity_gradient(s: State, g: Grid, sc: StencilConfig) -> np.ndarray:
    return np.stack([d1(s.u, k, g.h[k], sc.order) for k in range(3)])


def gradu_max(s: State, g: Grid, sc: StencilConfig) -> float:
    """max over cells of the Frobenius norm of the discrete velocity gradient."""
    gu = velocity_gradient(s, g, sc)
    return float(np.sqrt(np.max(np.sum(gu * gu, axis=(0, 1)))))


def bkm_accumulate(prev: float, gradu_max_now: float, gradu_max_prev: float, dt: float) -> float:
    """Trapezoidal increment of the time integral of ||grad u||_inf."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return prev + 0.5 * dt * (gradu_max_now + gradu_max_prev)


# ---------------------------------------------------------------- blowup bounds


def ff_threshold(sigma: float, R: float, rho0_max: float) -> float:
    return 16.0 * math.pi / 3.0 * sigma * R**4 * rho0_max


def riccati_lower_bound(t, F0: float, sigma: float, R: float, rho0_max: float):
    """Closed-form solution of y' = y^2 / ((4 pi / 3)(sigma t + R)^5 rho0_max), y(0) = F0.

    Returns +inf once the comparison solution has blown up. Vectorised over t.
    """
    if not F0 > 0:
        raise InvalidFunctional(f"riccati bound needs F(0) > 0, got {F0!r}")
    K = 3.0 / (16.0 * math.pi * sigma * rho0_max)
    t = np.asarray(t, dtype=float)
    denom = 1.0 / F0 - K * (R**-4 - (sigma * t + R) ** -4)
    with np.errstate(divide="ignore"):
        y = np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), np.inf)
    return float(y) if y.ndim == 0 else y


def blowup_time_upper_bound(F0: float, sigma: float, R: float, rho0_max: float) -> Optional[float]:
    """Time at which the Riccati comparison solution diverges; None if F0 is at or below threshold."""
    if not F0 > ff_threshold(sigma, R, rho0_max):
        return None
    base = R**-4 - 16.0 * math.pi * sigma * rho0_max / (3.0 * F0)
    return (base**-0.25 - R) / sigma


@dataclass(frozen=True)
class RiccatiContext:
    F0: float
    sigma: float
    R: float
    rho0_max: float

    @classmethod
    def from_report(cls, report, p: PhysParams) -> "RiccatiContext":
        return cls(report.F0_functional, sound_speed_inf(p), p.R, report.rho0_max)

    def __call__(self, t: float) -> float:
        return riccati_lower_bound(t, self.F0, self.sigma, self.R, self.rho0_max)


def sample(
    s: State,
    p: PhysParams,
    g: Grid,
    sc: StencilConfig,
    prev_row: Optional[DiagnosticsRow] = None,
    *,
    bkm: Optional[float] = None,
    riccati: Optional[RiccatiContext] = None,
    front_tol: float = 1e-8,
) -> DiagnosticsRow:
    """Evaluate every monitored quantity on one state.

    ``bkm`` overrides the running integral; otherwise it is advanced from
    ``prev_row`` by one trapezoid over [prev_row.t, s.t].
    """
    gmax = gradu_max(s, g, sc)
    if bkm is None:
        if prev_row is None:
            bkm = 0.0
        else:
            bkm = bkm_accumulate(prev_row.bkm, gmax, prev_row.gradu_max, s.t - prev_row.t)
    return DiagnosticsRow(
        t=float(s.t),
        m=mass_deviation(s, p, g),
        Ffun=radial_momentum(s, p, g),
        E=energy(s, p, g),
        trace=trace_integral(s, g),
        div_res=div_residual(s, g, sc),
        front=front_radius(s, p, g, front_tol),
        front_bound=front_bound(s.t, p),
        bkm=float(bkm),
        gradu_max=gmax,
        rho_min=float(np.min(s.rho)),
        riccati_lb=riccati(s.t) if riccati is not None else None,
    )
