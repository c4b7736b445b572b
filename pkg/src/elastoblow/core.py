"""Shared containers: physical parameters, the grid, and field states.

Fields are cell-centred numpy arrays with the three spatial axes last, so a
scalar field has shape ``(nx, ny, nz)``, a vector field ``(3, nx, ny, nz)``
and a matrix field ``(3, 3, nx, ny, nz)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np


class ElastoblowError(Exception):
    """Base class for all package errors."""


class DegenerateDensity(ElastoblowError):
    """Density is non-positive (or negative where zero is allowed)."""


class NonPositiveDensity(DegenerateDensity):
    pass


class InvalidParameter(ElastoblowError, ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class GridTooSmall(ElastoblowError):
    pass


class CflViolation(ElastoblowError):
    pass


class InvalidInitialData(ElastoblowError):
    pass


class InvalidFunctional(ElastoblowError, ValueError):
    pass


@dataclass(frozen=True)
class PhysParams:
    A: float = 1.0
    gamma: float = 2.0
    mu: float = 0.0
    lam: float = 0.0
    rho_bar: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        for name in ("A", "gamma", "mu", "lam", "rho_bar", "R"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameter(name, "must be finite")
        if self.A <= 0:
            raise InvalidParameter("A", f"pressure coefficient must be > 0, got {self.A}")
        if self.gamma <= 1:
            raise InvalidParameter("gamma", f"adiabatic exponent must be > 1, got {self.gamma}")
        if self.rho_bar <= 0:
            raise InvalidParameter("rho_bar", f"background density must be > 0, got {self.rho_bar}")
        if self.R <= 0:
            raise InvalidParameter("R", f"disturbance radius must be > 0, got {self.R}")
        if self.mu < 0:
            raise InvalidParameter("mu", f"admissibility requires mu >= 0, got {self.mu}")
        if 3 * self.lam + 2 * self.mu < 0:
            raise InvalidParameter(
                "lambda",
                f"admissibility requires 3*lambda + 2*mu >= 0, got {3 * self.lam + 2 * self.mu}",
            )

    @property
    def viscous_ok(self) -> bool:
        """Gate for viscous runs: 7*mu > lambda."""
        return 7 * self.mu > self.lam

    def require_viscous(self) -> None:
        if not self.viscous_ok:
            raise InvalidParameter(
                "lambda",
                f"viscous runs require 7*mu > lambda (mu={self.mu!r}, lambda={self.lam!r})",
            )


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on the cube [-L, L]^3."""

    n: Tuple[int, int, int]
    half_width: float

    def __post_init__(self):
        n = tuple(int(v) for v in np.broadcast_to(self.n, (3,)))
        object.__setattr__(self, "n", n)
        if any(v <= 0 for v in n):
            raise InvalidParameter("n", f"cell counts must be positive, got {n}")
        if not self.half_width > 0:
            raise InvalidParameter("half_width", f"must be > 0, got {self.half_width}")

    @classmethod
    def cube(cls, n: int, half_width: float) -> "Grid":
        return cls((n, n, n), half_width)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.n

    @cached_property
    def h(self) -> Tuple[float, float, float]:
        return tuple(2.0 * self.half_width / v for v in self.n)

    @property
    def hmin(self) -> float:
        return min(self.h)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def origin(self) -> Tuple[float, float, float]:
        return tuple(-self.half_width + 0.5 * hk for hk in self.h)

    @cached_property
    def axes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(o + hk * np.arange(nk) for o, hk, nk in zip(self.origin, self.h, self.n))

    @cached_property
    def coords(self) -> np.ndarray:
        """Cell-centre coordinates, shape (3, nx, ny, nz)."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        x = self.coords
        return np.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2)

    def index_to_coord(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=float)
        return np.asarray(self.origin) + idx * np.asarray(self.h)

    def coord_to_index(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.rint((x - np.asarray(self.origin)) / np.asarray(self.h)).astype(int)


@dataclass
class State:
    """Primitive fields (rho, u, F) at time t."""

    t: float
    rho: np.ndarray
    u: np.ndarray
    F: np.ndarray

    def copy(self) -> "State":
        return State(self.t, self.rho.copy(), self.u.copy(), self.F.copy())


@dataclass
class ConservedState:
    """Conserved fields (rho, m = rho u, Q = rho F^T) at time t."""

    t: float
    rho: np.ndarray
    m: np.ndarray
    Q: np.ndarray

    def copy(self) -> "ConservedState":
        return ConservedState(self.t, self.rho.copy(), self.m.copy(), self.Q.copy())

    def pack(self) -> np.ndarray:
        """Stack into one (13, nx, ny, nz) array: rho, m_i, Q_ab (row-major)."""
        shape = self.rho.shape
        return np.concatenate(
            [self.rho[None], self.m.reshape(3, *shape), self.Q.reshape(9, *shape)]
        )

    @classmethod
    def unpack(cls, U: np.ndarray, t: float = 0.0) -> "ConservedState":
        shape = U.shape[1:]
        return cls(t, U[0], U[1:4], U[4:13].reshape(3, 3, *shape))


def _check_positive(rho: np.ndarray) -> None:
    if not np.all(rho > 0):
        raise DegenerateDensity(f"density must be positive everywhere (min {np.min(rho)!r})")


def to_conserved(s: State) -> ConservedState:
    _check_positive(s.rho)
    Q = s.rho * np.swapaxes(s.F, 0, 1)
    return ConservedState(s.t, s.rho.copy(), s.rho * s.u, Q)


def to_primitive(c: ConservedState) -> State:
    _check_positive(c.rho)
    u = c.m / c.rho
    F = np.swapaxes(c.Q / c.rho, 0, 1)
    return State(c.t, c.rho.copy(), u, np.ascontiguousarray(F))


def background_state(p: PhysParams, g: Grid, t: float = 0.0) -> State:
    shape = g.shape
    rho = np.full(shape, float(p.rho_bar))
    u = np.zeros((3, *shape))
    F = np.zeros((3, 3, *shape))
    for i in range(3):
        F[i, i] = 1.0
    return State(t, rho, u, F)


def background_packed(p: PhysParams) -> np.ndarray:
    """Conserved background vector (13,) for (rho_bar, 0, I)."""
    v = np.zeros(13)
    v[0] = p.rho_bar
    v[4:13] = p.rho_bar * np.eye(3).ravel()
    return v
