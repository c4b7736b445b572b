"""Gamma-law pressure and related thermodynamic quantities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DegenerateDensity, PhysParams


@dataclass(frozen=True)
class EosQuantities:
    P: np.ndarray
    P0: float
    P_hat: np.ndarray
    sigma: float


def pressure(rho, p: PhysParams):
    """P = A rho^gamma. Vacuum (rho = 0) is allowed."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DegenerateDensity("pressure: negative density")
    return p.A * rho ** p.gamma


def background_pressure(p: PhysParams) -> float:
    return p.A * p.rho_bar ** p.gamma


def p_hat(rho, p: PhysParams):
    """Enthalpy-like variable A gamma/(gamma-1) rho^(gamma-1)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DegenerateDensity("p_hat: non-positive density")
    return p.A * p.gamma / (p.gamma - 1.0) * rho ** (p.gamma - 1.0)


def sound_speed_sq(rho, p: PhysParams):
    """dP/drho = A gamma rho^(gamma-1)."""
    return p.A * p.gamma * np.asarray(rho, dtype=float) ** (p.gamma - 1.0)


def sound_speed_inf(p: PhysParams) -> float:
    return float(np.sqrt(p.A * p.gamma * p.rho_bar ** (p.gamma - 1.0)))


def front_speed_inf(p: PhysParams) -> float:
    """Fastest characteristic speed of the background state (rho_bar, 0, I).

    The elastic stress adds a unit shear modulus, so the longitudinal wave
    travels at sqrt(sigma^2 + 1) rather than sigma.
    """
    return float(np.sqrt(sound_speed_inf(p) ** 2 + 1.0))


def quantities(rho, p: PhysParams) -> EosQuantities:
    return EosQuantities(
        P=pressure(rho, p),
        P0=background_pressure(p),
        P_hat=p_hat(rho, p),
        sigma=sound_speed_inf(p),
    )
