"""Conservative time evolution of (rho, rho u, rho F^T).

The deformation variable Q = rho F^T obeys

    d_t Q_ab + d_k (u_k Q_ab - u_b Q_ak) = 0,

which differs from the transport equation for F only by u_b (div Q)_a. With
central differences, D_j D_k = D_k D_j makes the discrete row divergence of Q
exactly invariant under the flux part of the update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import diagnostics as diag
from .core import (
    CflViolation,
    ConservedState,
    DegenerateDensity,
    Grid,
    InvalidInitialData,
    InvalidParameter,
    PhysParams,
    State,
    background_packed,
    to_conserved,
    to_primitive,
)
from .eos import pressure, sound_speed_inf, sound_speed_sq
from . import _kernels
from .stencils import StencilConfig, check_grid, d1, d2, dissipation, flux_div

log = logging.getLogger(__name__)

INVISCID = "inviscid"
VISCOUS = "viscous"


@dataclass
class RunConfig:
    t_end: float
    cfl: float = 0.4
    mode: str = INVISCID
    rho_floor: Optional[float] = None
    gradu_ceiling: Optional[float] = None
    output_stride: int = 10
    front_tol: float = 1e-8
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not self.t_end > 0:
            raise InvalidParameter("t_end", f"must be > 0, got {self.t_end}")
        if not 0 < self.cfl <= 1:
            raise InvalidParameter("cfl", f"must lie in (0, 1], got {self.cfl}")
        if self.mode not in (INVISCID, VISCOUS):
            raise InvalidParameter("mode", f"must be 'inviscid' or 'viscous', got {self.mode!r}")
        if self.output_stride < 1:
            raise InvalidParameter("output_stride", "must be >= 1")
        for name in ("rho_floor", "gradu_ceiling"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidParameter(name, f"must be > 0, got {v}")
        if not self.front_tol > 0:
            raise InvalidParameter("front_tol", "must be > 0")

    def floor(self, p: PhysParams) -> float:
        return self.rho_floor if self.rho_floor is not None else 1e-8 * p.rho_bar

    def ceiling(self, p: PhysParams) -> float:
        if self.gradu_ceiling is not None:
            return self.gradu_ceiling
        return 1e4 * sound_speed_inf(p) / p.R


@dataclass
class RunOutcome:
    status: str
    final: ConservedState
    series: List[diag.DiagnosticsRow]
    reason: Optional[str] = None
    t_breakdown: Optional[float] = None
    steps: int = 0
    hypotheses: Optional[object] = None
    # time integral of the viscous dissipation rate, aligned with series
    dissipation: List[float] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.status == "completed"


# ---------------------------------------------------------------- tendencies


def _mask_collar(T: np.ndarray, width: int) -> None:
    for ax in range(1, 4):
        idx = [slice(None)] * 4
        idx[ax] = slice(0, width)
        T[tuple(idx)] = 0.0
        idx[ax] = slice(T.shape[ax] - width, None)
        T[tuple(idx)] = 0.0


def _primitives(U: np.ndarray):
    rho = U[0]
    if not np.all(rho > 0):
        raise DegenerateDensity(f"non-positive density (min {np.min(rho)!r})")
    u = U[1:4] / rho
    return rho, u


def max_speed_packed(U: np.ndarray, p: PhysParams) -> float:
    """Cell-wise |u| + sqrt(c^2 + |F|_F^2), maximised over the grid."""
    rho, u = _primitives(U)
    fsq = np.sum(U[4:13] ** 2, axis=0) / rho**2
    speed = np.sqrt(np.sum(u * u, axis=0)) + np.sqrt(sound_speed_sq(rho, p) + fsq)
    return float(np.max(speed))


def _dissipation_coeffs(g: Grid, sc: StencilConfig, speed: float) -> np.ndarray:
    sign = -1.0 if (sc.order + 2) % 4 == 0 else 1.0
    return np.array([sign * sc.dissipation_coeff * speed / hk for hk in g.h])


_FLUX_BUFFERS: dict = {}


def _flux_workspace(shape) -> np.ndarray:
    buf = _FLUX_BUFFERS.get(shape)
    if buf is None:
        _FLUX_BUFFERS.clear()
        buf = _FLUX_BUFFERS[shape] = np.empty((5, *shape))
    return buf


def _tendency_packed(
    U: np.ndarray,
    p: PhysParams,
    g: Grid,
    sc: StencilConfig,
    viscous: bool,
    speed: Optional[float],
    out: Optional[np.ndarray] = None,
) -> np.ndarray:
    rho, u = _primitives(U)
    if sc.dissipation_coeff > 0 and speed is None:
        speed = max_speed_packed(U, p)
    dcoef = _dissipation_coeffs(g, sc, speed) if sc.dissipation_coeff > 0 else np.zeros(3)
    T = np.empty_like(U) if out is None else out
    _kernels.tendency(
        U, float(p.A), float(p.gamma), np.asarray(g.h, dtype=float), dcoef, sc.order, sc.collar,
        T, _flux_workspace(U.shape[1:]),
    )
    if viscous and (p.mu != 0 or p.lam != 0):
        T[1:4] += viscous_force(u, p, g, sc)
        _mask_collar(T, sc.collar)
    return T


def _tendency_reference(
    U: np.ndarray,
    p: PhysParams,
    g: Grid,
    sc: StencilConfig,
    viscous: bool,
    speed: Optional[float],
) -> np.ndarray:
    """Same as _tendency_packed, built from the generic numpy stencils."""
    rho, u = _primitives(U)
    m = U[1:4]
    Q = U[4:13].reshape(3, 3, *rho.shape)
    P = pressure(rho, p)
    # elastic stress rho F F^T = Q^T Q / rho
    S = np.einsum("aixyz,akxyz->ikxyz", Q, Q) / rho

    flux = np.empty((3, *U.shape))
    for k in range(3):
        fk = flux[k]
        fk[0] = m[k]
        fk[1:4] = m * u[k] - S[:, k]
        fk[1 + k] += P
        fq = fk[4:13].reshape(3, 3, *rho.shape)
        np.multiply(u[k], Q, out=fq)
        fq -= Q[:, k][:, None] * u[None, :]
    T = -flux_div(flux, g, sc)

    if viscous and (p.mu != 0 or p.lam != 0):
        T[1:4] += viscous_force(u, p, g, sc)
    if sc.dissipation_coeff > 0:
        if speed is None:
            speed = max_speed_packed(U, p)
        T += dissipation(U, g, sc, speed)
    _mask_collar(T, sc.collar)
    return T


def viscous_force(u: np.ndarray, p: PhysParams, g: Grid, sc: StencilConfig) -> np.ndarray:
    """mu lap(u) + (mu + lambda) grad(div u).

    The pure second derivatives in grad(div u) use the compact d2 stencil and
    only mixed terms nest two first differences, so the operator never reads
    the unfilled edge band of an inner difference.
    """
    lap = sum(d2(u, k, g.h[k], sc.order) for k in range(3))
    gd = np.empty_like(u)
    for i in range(3):
        gd[i] = d2(u[i], i, g.h[i], sc.order)
        for j in range(3):
            if j != i:
                gd[i] += d1(d1(u[j], j, g.h[j], sc.order), i, g.h[i], sc.order)
    return p.mu * lap + (p.mu + p.lam) * gd


def viscous_dissipation_rate(U: np.ndarray, p: PhysParams, g: Grid, sc: StencilConfig) -> float:
    """sum over cells of [mu |grad u|^2 + (mu + lambda)(div u)^2] h^3."""
    _, u = _primitives(U)
    gu = np.stack([d1(u, k, g.h[k], sc.order) for k in range(3)])
    divu = gu[0, 0] + gu[1, 1] + gu[2, 2]
    dens = p.mu * np.sum(gu * gu, axis=(0, 1)) + (p.mu + p.lam) * divu**2
    return float(np.sum(dens) * g.cell_volume)


def _as_tendency(c: ConservedState, T: np.ndarray) -> ConservedState:
    return ConservedState.unpack(T, c.t)


def rhs_inviscid(c: ConservedState, p: PhysParams, g: Grid, sc: StencilConfig, speed=None) -> ConservedState:
    check_grid(g, sc)
    return _as_tendency(c, _tendency_packed(c.pack(), p, g, sc, False, speed))


def rhs_viscous(c: ConservedState, p: PhysParams, g: Grid, sc: StencilConfig, speed=None) -> ConservedState:
    check_grid(g, sc)
    return _as_tendency(c, _tendency_packed(c.pack(), p, g, sc, True, speed))


# ---------------------------------------------------------------- stepping


def rk4(U: np.ndarray, dt: float, f: Callable[[np.ndarray], np.ndarray], stage_hook=None):
    """Classical four-stage step. Returns (U_new, weighted hook integral)."""
    weights = (1.0, 2.0, 2.0, 1.0)
    offsets = (0.5, 0.5, 1.0)
    hooks = 0.0
    Y = U
    acc = np.empty_like(U)
    for stage in range(4):
        k = f(Y)
        if stage_hook is not None:
            hooks += weights[stage] * stage_hook(Y)
        if stage == 0:
            np.copyto(acc, k)
        else:
            _kernels.axpy(acc, acc, weights[stage], k)
        if stage < 3:
            if Y is U:
                Y = np.empty_like(U)
            _kernels.axpy(Y, U, offsets[stage] * dt, k)
    out = np.empty_like(U)
    _kernels.axpy(out, U, dt / 6.0, acc)
    return out, dt / 6.0 * hooks


def stable_dt(U: np.ndarray, p: PhysParams, g: Grid, cfl: float, viscous: bool, speed=None) -> float:
    if speed is None:
        speed = max_speed_packed(U, p)
    dt = cfl * g.hmin / speed
    if viscous:
        visc = 2.0 * (2.0 * p.mu + p.lam)
        if visc > 0:
            dt = min(dt, cfl * g.hmin**2 * float(np.min(U[0])) / (visc + 1e-300))
    return dt


def step_rk4(
    c: ConservedState,
    dt: float,
    p: PhysParams,
    g: Grid,
    sc: StencilConfig,
    mode: str = INVISCID,
    cfl: float = 0.4,
    check_cfl: bool = True,
) -> ConservedState:
    """One RK4 step. The far-field collar is re-pinned after every stage."""
    check_grid(g, sc)
    viscous = mode == VISCOUS
    U = c.pack()
    speed = max_speed_packed(U, p)
    if check_cfl:
        limit = stable_dt(U, p, g, cfl, viscous, speed)
        if abs(dt) > limit * (1 + 1e-12):
            raise CflViolation(f"|dt|={abs(dt)!r} exceeds stable limit {limit!r}")
    bg = background_packed(p)

    def f(Y):
        return _tendency_packed(Y, p, g, sc, viscous, speed)

    Unew, _ = rk4(U, dt, f)
    pin_collar(Unew, bg, sc.collar)
    return ConservedState.unpack(Unew, c.t + dt)


def pin_collar(U: np.ndarray, bg: np.ndarray, width: int) -> None:
    for ax in range(1, 4):
        idx = [slice(None)] * 4
        idx[ax] = slice(0, width)
        U[tuple(idx)] = bg.reshape(13, 1, 1, 1)
        idx[ax] = slice(U.shape[ax] - width, None)
        U[tuple(idx)] = bg.reshape(13, 1, 1, 1)


# ---------------------------------------------------------------- run loop


def validate_initial(s: State, p: PhysParams, g: Grid, sc: StencilConfig, tol: float = 1e-12) -> None:
    if s.rho.shape != g.shape or s.u.shape != (3, *g.shape) or s.F.shape != (3, 3, *g.shape):
        raise InvalidInitialData("field shapes do not match the grid")
    if not (np.all(np.isfinite(s.rho)) and np.all(np.isfinite(s.u)) and np.all(np.isfinite(s.F))):
        raise InvalidInitialData("non-finite initial data")
    if not np.all(s.rho > 0):
        raise InvalidInitialData("initial density must be positive")
    w = sc.collar
    edge = np.ones(g.shape, dtype=bool)
    edge[w:-w, w:-w, w:-w] = False
    dev = diag.deviation(s, p)
    if np.any(dev[edge] > tol):
        raise InvalidInitialData(
            f"initial data differ from the background in the boundary collar (max {np.max(dev[edge])!r})"
        )


def run(initial: State, p: PhysParams, g: Grid, sc: StencilConfig, rc: RunConfig) -> RunOutcome:
    check_grid(g, sc)
    viscous = rc.mode == VISCOUS
    if viscous:
        p.require_viscous()
    validate_initial(initial, p, g, sc)

    from .initdata import check_hypotheses

    hyp = check_hypotheses(initial, p, g, sc)
    ric = diag.RiccatiContext.from_report(hyp, p) if hyp.cond_FF else None

    floor = rc.floor(p)
    ceiling = rc.ceiling(p)
    bg = background_packed(p)
    U = to_conserved(initial).pack()
    t = float(initial.t)
    t_end = t + rc.t_end
    dt_min = 1e-12 * rc.t_end

    row = diag.sample(to_primitive(ConservedState.unpack(U, t)), p, g, sc, bkm=0.0, riccati=ric, front_tol=rc.front_tol)
    series = [row]
    diss_series = [0.0]
    gradu_prev = row.gradu_max
    bkm = 0.0
    diss = 0.0
    steps = 0
    status, reason, t_break = "completed", None, None

    def hook(Y):
        return viscous_dissipation_rate(Y, p, g, sc)

    kbuf = np.empty_like(U)

    while t < t_end:
        if steps >= rc.max_steps:
            status, reason, t_break = "breakdown", "max_steps", t
            break
        try:
            speed = max_speed_packed(U, p)
        except DegenerateDensity:
            status, reason, t_break = "breakdown", "rho_floor", t
            break
        dt = stable_dt(U, p, g, rc.cfl, viscous, speed)
        dt = min(dt, t_end - t)
        if not dt > dt_min and t_end - t > dt_min:
            status, reason, t_break = "breakdown", "dt_underflow", t
            break

        def f(Y):
            # each stage's k is consumed before the next evaluation
            return _tendency_packed(Y, p, g, sc, viscous, speed, out=kbuf)

        try:
            Unew, dd = rk4(U, dt, f, hook if viscous else None)
        except DegenerateDensity:
            status, reason, t_break = "breakdown", "rho_floor", t + dt
            break
        pin_collar(Unew, bg, sc.collar)
        steps += 1
        t_new = t + dt if t_end - (t + dt) > dt_min else t_end

        if not np.all(np.isfinite(Unew)):
            status, reason, t_break = "breakdown", "nonfinite", t_new
            break
        rho_min = float(np.min(Unew[0]))
        if rho_min < floor:
            status, reason, t_break = "breakdown", "rho_floor", t_new
            break
        U, t = Unew, t_new
        diss += dd
        s = to_primitive(ConservedState.unpack(U, t))
        gradu_now = diag.gradu_max(s, g, sc)
        bkm = diag.bkm_accumulate(bkm, gradu_now, gradu_prev, dt)
        gradu_prev = gradu_now
        if gradu_now > ceiling:
            status, reason, t_break = "breakdown", "gradu_ceiling", t
            series.append(diag.sample(s, p, g, sc, bkm=bkm, riccati=ric, front_tol=rc.front_tol))
            diss_series.append(diss)
            break
        if steps % rc.output_stride == 0 or t >= t_end:
            series.append(diag.sample(s, p, g, sc, bkm=bkm, riccati=ric, front_tol=rc.front_tol))
            diss_series.append(diss)

    if status != "completed" and series[-1].t < t:
        s = to_primitive(ConservedState.unpack(U, t))
        series.append(diag.sample(s, p, g, sc, bkm=bkm, riccati=ric, front_tol=rc.front_tol))
        diss_series.append(diss)
    if status != "completed":
        log.info("breakdown (%s) at t=%.6g after %d steps", reason, t_break, steps)
    return RunOutcome(
        status=status,
        final=ConservedState.unpack(U.copy(), t),
        series=series,
        reason=reason,
        t_breakdown=t_break,
        steps=steps,
        hypotheses=hyp,
        dissipation=diss_series,
    )
