"""Central finite-difference kernels on the cell-centred grid.

Every operator acts on the last three (spatial) axes and leaves any leading
component axes alone. Outputs are zero in the edge band the stencil cannot
reach; the solver keeps a pinned far-field collar there, where the exact
derivatives vanish anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GridTooSmall, Grid, InvalidParameter

# one-sided half of the antisymmetric first-derivative stencil, offsets 1..r
_FIRST = {
    2: (0.5,),
    4: (2.0 / 3.0, -1.0 / 12.0),
}
# symmetric second-derivative stencil: centre weight, then offsets 1..r
_SECOND = {
    2: (-2.0, (1.0,)),
    4: (-5.0 / 2.0, (4.0 / 3.0, -1.0 / 12.0)),
}


@dataclass(frozen=True)
class StencilConfig:
    order: int = 2
    dissipation_coeff: float = 0.02

    def __post_init__(self):
        if self.order not in (2, 4):
            raise InvalidParameter("order", f"must be 2 or 4, got {self.order}")
        if not self.dissipation_coeff >= 0:
            raise InvalidParameter(
                "dissipation_coeff", f"must be >= 0, got {self.dissipation_coeff}"
            )

    @property
    def reach(self) -> int:
        return self.order // 2

    @property
    def collar(self) -> int:
        """Width of the pinned boundary band."""
        return self.order // 2 + 1


def check_grid(g: Grid, c: StencilConfig) -> None:
    need = 2 * c.collar + 1
    if min(g.n) < need:
        raise GridTooSmall(f"grid {g.n} too small for order-{c.order} stencil (need >= {need} cells per axis)")


def _sl(ndim: int, axis: int, start: int, stop: int):
    idx = [slice(None)] * ndim
    idx[axis] = slice(start, stop)
    return tuple(idx)


def d1(f: np.ndarray, axis: int, h: float, order: int = 2) -> np.ndarray:
    """Central first derivative along spatial axis 0, 1 or 2."""
    ax = f.ndim - 3 + axis
    n = f.shape[ax]
    w = _FIRST[order]
    r = len(w)
    out = np.zeros_like(f)
    inner = out[_sl(f.ndim, ax, r, n - r)]
    for s, c in enumerate(w, start=1):
        inner += (c / h) * (f[_sl(f.ndim, ax, r + s, n - r + s)] - f[_sl(f.ndim, ax, r - s, n - r - s)])
    return out


def d2(f: np.ndarray, axis: int, h: float, order: int = 2) -> np.ndarray:
    """Compact central second derivative along one spatial axis."""
    ax = f.ndim - 3 + axis
    n = f.shape[ax]
    c0, w = _SECOND[order]
    r = len(w)
    out = np.zeros_like(f)
    inner = out[_sl(f.ndim, ax, r, n - r)]
    inner += (c0 / h**2) * f[_sl(f.ndim, ax, r, n - r)]
    for s, c in enumerate(w, start=1):
        inner += (c / h**2) * (f[_sl(f.ndim, ax, r + s, n - r + s)] + f[_sl(f.ndim, ax, r - s, n - r - s)])
    return out


def grad(field: np.ndarray, g: Grid, c: StencilConfig) -> np.ndarray:
    """Gradient; the new derivative index is prepended, so grad(u)[k, i] = d_k u_i."""
    check_grid(g, c)
    return np.stack([d1(field, k, g.h[k], c.order) for k in range(3)])


def div_vec(field: np.ndarray, g: Grid, c: StencilConfig) -> np.ndarray:
    check_grid(g, c)
    return sum(d1(field[k], k, g.h[k], c.order) for k in range(3))


def div_mat_rows(field: np.ndarray, g: Grid, c: StencilConfig) -> np.ndarray:
    """(div M)_i = sum_j d_j M_ij for a (3, 3, ...) matrix field."""
    check_grid(g, c)
    return sum(d1(field[:, j], j, g.h[j], c.order) for j in range(3))


def laplacian(field: np.ndarray, g: Grid, c: StencilConfig) -> np.ndarray:
    check_grid(g, c)
    return sum(d2(field, k, g.h[k], c.order) for k in range(3))


def flux_div(flux: np.ndarray, g: Grid, c: StencilConfig) -> np.ndarray:
    """sum_k d_k flux[k].

    The central stencil equals a difference of interface fluxes, so the cell
    sum of the result telescopes to zero for fluxes that are constant near
    the edges.
    """
    check_grid(g, c)
    return sum(d1(flux[k], k, g.h[k], c.order) for k in range(3))


def _undivided(f: np.ndarray, axis: int, power: int) -> np.ndarray:
    """Undivided central difference delta^power along one axis (power even)."""
    ax = f.ndim - 3 + axis
    n = f.shape[ax]
    r = power // 2
    coeffs = [(-1) ** k * _binom(power, k) for k in range(power + 1)]
    out = np.zeros_like(f)
    inner = out[_sl(f.ndim, ax, r, n - r)]
    for k, cf in enumerate(coeffs):
        s = k - r
        inner += cf * f[_sl(f.ndim, ax, r + s, n - r + s)]
    return out


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def dissipation(q: np.ndarray, g: Grid, c: StencilConfig, speed: float) -> np.ndarray:
    """Artificial dissipation of derivative order ``order + 2``.

    Order 2 adds -eps*speed*h^3 d^4 q, order 4 adds +eps*speed*h^5 d^6 q,
    both written with undivided differences. Constants are annihilated and
    the added truncation error is one order above the base scheme.
    """
    if c.dissipation_coeff == 0 or speed == 0:
        return np.zeros_like(q)
    power = c.order + 2
    sign = -1.0 if power % 4 == 0 else 1.0
    out = np.zeros_like(q)
    for k in range(3):
        out += (sign * c.dissipation_coeff * speed / g.h[k]) * _undivided(q, k, power)
    return out
