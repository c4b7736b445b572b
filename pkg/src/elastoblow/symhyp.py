"""Symmetric-hyperbolic form of the inviscid system.

The 13-vector is V = (P_hat, u, F[:,0], F[:,1], F[:,2]). Evolution is never
done in these variables; they serve as a structural check and as the source
of characteristic speed bounds for the CFL limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DegenerateDensity, PhysParams
from .eos import p_hat, sound_speed_sq


@dataclass(frozen=True)
class SymbolMatrices:
    A0: np.ndarray
    Ai: tuple


@dataclass(frozen=True)
class HyperbolicityReport:
    symmetry_defect: float
    a0_min_diag: float
    degenerate_density: bool
    passed: bool


def sym_state(rho, u, F, p: PhysParams) -> np.ndarray:
    """Pack a point state into V."""
    F = np.asarray(F, dtype=float)
    return np.concatenate([[p_hat(rho, p)], np.asarray(u, dtype=float), F.T.ravel()])


def assemble(rho: float, u, F, p: PhysParams) -> SymbolMatrices:
    if not rho > 0:
        raise DegenerateDensity(f"assemble: density must be positive, got {rho!r}")
    u = np.asarray(u, dtype=float)
    F = np.asarray(F, dtype=float)
    a0 = 1.0 / sound_speed_sq(rho, p)
    I3 = np.eye(3)
    A0 = np.eye(13)
    A0[0, 0] = a0
    Ai = []
    for i in range(3):
        M = np.zeros((13, 13))
        M[0, 0] = u[i] * a0
        M[0, 1 + i] = 1.0
        M[1 + i, 0] = 1.0
        M[1:4, 1:4] = u[i] * I3
        for k in range(3):
            blk = slice(4 + 3 * k, 7 + 3 * k)
            M[1:4, blk] = -F[i, k] * I3
            M[blk, 1:4] = -F[i, k] * I3
            M[blk, blk] = u[i] * I3
        Ai.append(M)
    return SymbolMatrices(A0, tuple(Ai))


def symbol(rho, u, F, n, p: PhysParams) -> np.ndarray:
    """A0^{-1} sum_i n_i A_i for direction n."""
    S = assemble(rho, u, F, p)
    M = sum(ni * Ai for ni, Ai in zip(n, S.Ai))
    return M / np.diag(S.A0)[:, None]


def max_char_speed(rho: float, u, F, p: PhysParams) -> float:
    """Upper bound |u| + sqrt(c^2 + |F|_op^2) on every directional eigenvalue.

    For direction n the eigenvalues are u.n, u.n +- |F^T n| and
    u.n +- sqrt(c^2 + |F^T n|^2) with c^2 = A gamma rho^(gamma-1).
    """
    if not rho > 0:
        raise DegenerateDensity(f"max_char_speed: density must be positive, got {rho!r}")
    u = np.asarray(u, dtype=float)
    F = np.asarray(F, dtype=float)
    fop = np.linalg.norm(F, 2)
    return float(np.linalg.norm(u) + np.sqrt(sound_speed_sq(rho, p) + fop**2))


def max_char_speed_field(rho: np.ndarray, u: np.ndarray, F: np.ndarray, p: PhysParams) -> float:
    """Grid-wide version of max_char_speed using |F|_Frobenius >= |F|_op."""
    if not np.all(rho > 0):
        raise DegenerateDensity("max_char_speed_field: non-positive density")
    speed = np.sqrt(np.sum(u * u, axis=0)) + np.sqrt(
        sound_speed_sq(rho, p) + np.sum(F * F, axis=(0, 1))
    )
    return float(np.max(speed))


def check_hyperbolicity(rho, u, F, p: PhysParams) -> HyperbolicityReport:
    try:
        S = assemble(rho, u, F, p)
    except DegenerateDensity:
        return HyperbolicityReport(np.nan, np.nan, True, False)
    defect = max(float(np.max(np.abs(M - M.T))) for M in S.Ai)
    a0min = float(np.min(np.diag(S.A0)))
    off = S.A0 - np.diag(np.diag(S.A0))
    ok = defect == 0.0 and a0min > 0 and not np.any(off)
    return HyperbolicityReport(defect, a0min, False, ok)


def sym_rhs(rho, u, F, dV, p: PhysParams) -> np.ndarray:
    """V_t = -A0^{-1} sum_i A_i dV[i], evaluated on fields.

    ``dV`` has shape (3, 13, ...): spatial derivative index first. Fields may
    be arrays of any trailing shape; the block structure is applied directly
    instead of forming 13x13 matrices per cell.
    """
    rho = np.asarray(rho, dtype=float)
    c2 = sound_speed_sq(rho, p)
    out = np.zeros(dV.shape[1:])
    for i in range(3):
        d = dV[i]
        dP, du, dF = d[0], d[1:4], d[4:13].reshape(3, 3, *d.shape[1:])  # dF[k] = d_i F[:, k]
        # P_hat row: u_i a0 dP + du_i, then scaled by 1/a0 = c2
        out[0] -= u[i] * dP + c2 * du[i]
        out[1 + i] -= dP
        out[1:4] -= u[i] * du
        for k in range(3):
            out[1:4] += F[i, k] * dF[k]
            out[4 + 3 * k:7 + 3 * k] += F[i, k] * du - u[i] * dF[k]
    return out


def primitive_rhs(rho, u, F, grad_rho, grad_u, grad_F, p: PhysParams) -> np.ndarray:
    """Time derivative of V from the primitive (material-derivative) form.

    Written directly from the continuity/velocity/deformation equations with
    the constraint div(rho F^T) = 0 used to drop the non-symmetric stress
    term. grad_u[k, i] = d_k u_i and grad_F[k, a, b] = d_k F_ab.
    """
    rho = np.asarray(rho, dtype=float)
    c2 = sound_speed_sq(rho, p)
    # d_k P_hat = (c2 / rho) d_k rho
    grad_ph = c2 / rho * grad_rho
    divu = grad_u[0, 0] + grad_u[1, 1] + grad_u[2, 2]
    adv = lambda g: sum(u[k] * g[k] for k in range(3))  # noqa: E731
    out = np.zeros((13, *np.shape(rho)))
    out[0] = -adv(grad_ph) - c2 * divu
    for i in range(3):
        stress = sum(F[j, k] * grad_F[j, i, k] for j in range(3) for k in range(3))
        out[1 + i] = -adv(grad_u[:, i]) - grad_ph[i] + stress
    for k in range(3):
        for a in range(3):
            stretch = sum(grad_u[j, a] * F[j, k] for j in range(3))
            out[4 + 3 * k + a] = -adv(grad_F[:, a, k]) + stretch
    return out
