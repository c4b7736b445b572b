"""Refinement studies: resampling between grids and observed orders."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import Config
from .core import Grid, background_packed, to_primitive
from .diagnostics import div_residual, energy
from .runner import build_initial, execute


def lagrange_matrix(src: np.ndarray, dst: np.ndarray, degree: int = 5) -> np.ndarray:
    """Rows of degree-``degree`` Lagrange weights taking values on ``src`` to ``dst``.

    Each destination point uses the ``degree + 1`` consecutive source nodes
    centred on it, shifted inward near the ends.
    """
    n = len(src)
    m = degree + 1
    if n < m:
        raise ValueError(f"need at least {m} source nodes, got {n}")
    h = src[1] - src[0]
    W = np.zeros((len(dst), n))
    for r, x in enumerate(dst):
        start = int(math.floor((x - src[0]) / h)) - (m // 2 - 1)
        start = min(max(start, 0), n - m)
        nodes = src[start:start + m]
        for a in range(m):
            w = 1.0
            for b in range(m):
                if b != a:
                    w *= (x - nodes[b]) / (nodes[a] - nodes[b])
            W[r, start + a] = w
    return W


def resample(f: np.ndarray, src: Grid, dst: Grid, degree: int = 5) -> np.ndarray:
    """Tensor-product Lagrange interpolation over the last three axes."""
    out = f
    for k in range(3):
        W = lagrange_matrix(src.axes[k], dst.axes[k], degree)
        out = np.moveaxis(np.tensordot(W, np.moveaxis(out, out.ndim - 3 + k, 0), axes=(1, 0)), 0, out.ndim - 3 + k)
    return out


def richardson_order(e1: float, e2: float, h: Sequence[float], lo: float = 1e-3, hi: float = 20.0) -> float:
    """Solve (h1^p - h3^p) / (h2^p - h3^p) = e1 / e2 for p by bisection.

    e_i is the distance between the solution on grid i and the finest grid
    (h1 > h2 > h3). Results outside [lo, hi] are clamped.
    """
    h1, h2, h3 = h
    target = e1 / e2

    def ratio(p):
        return (h1**p - h3**p) / (h2**p - h3**p)

    if not math.isfinite(target) or target <= ratio(lo):
        return lo
    if target >= ratio(hi):
        return hi
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if ratio(mid) < target:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def fit_order(h: Sequence[float], err: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


@dataclass(frozen=True)
class OrderRow:
    name: str
    errors: Tuple[float, ...]
    order: Optional[float]  # None when every error is exactly zero

    @property
    def exact(self) -> bool:
        return self.order is None

    def passes(self, design: int) -> bool:
        return self.exact or (self.order is not None and self.order >= design - 0.5)


@dataclass(frozen=True)
class ConvergenceTable:
    resolutions: Tuple[int, int, int]
    h: Tuple[float, float, float]
    design_order: int
    rows: Tuple[OrderRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passes(self.design_order) for r in self.rows)

    def format(self) -> str:
        lines = [
            f"resolutions: {' '.join(str(n) for n in self.resolutions)}",
            f"design order: {self.design_order}",
            f"{'quantity':<18}{'e1':>14}{'e2':>14}{'e3':>14}  order",
        ]
        for r in self.rows:
            errs = "".join(f"{e:>14.6e}" for e in r.errors) + " " * 14 * (3 - len(r.errors))
            o = "exact" if r.exact else f"{r.order:.3f}"
            mark = "ok" if r.passes(self.design_order) else "FAIL"
            lines.append(f"{r.name:<18}{errs}  {o}  {mark}")
        return "\n".join(lines)


def _one(cfg: Config):
    s0 = build_initial(cfg)
    out = execute(cfg, s0)
    final = out.final.pack()
    sf = to_primitive(out.final)
    E0 = energy(s0, cfg.physics, cfg.grid)
    E1 = energy(sf, cfg.physics, cfg.grid)
    balance = E1 - E0 + (out.dissipation[-1] if cfg.viscous else 0.0)
    return out.status, out.reason, final, balance, div_residual(sf, cfg.grid, cfg.scheme)


def _order_row(name: str, h, errs) -> OrderRow:
    errs = tuple(float(e) for e in errs)
    if all(e == 0 for e in errs):
        return OrderRow(name, errs, None)
    if any(e == 0 for e in errs):
        return OrderRow(name, errs, math.inf)
    return OrderRow(name, errs, fit_order(h, errs))


def run_convergence(cfg: Config, resolutions: Optional[Sequence[int]] = None, workers: int = 1) -> ConvergenceTable:
    """Run the configured problem at three resolutions and report observed orders.

    Raises RuntimeError if any of the runs breaks down.
    """
    if resolutions is None:
        resolutions = cfg.resolutions
    if resolutions is None:
        n = cfg.grid.n[0]
        resolutions = (n, (3 * n) // 2, 2 * n)
    resolutions = tuple(int(v) for v in resolutions)
    cfgs = [cfg.with_resolution(n) for n in resolutions]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_one, cfgs))
    else:
        results = [_one(c) for c in cfgs]
    for n, (status, reason, *_rest) in zip(resolutions, results):
        if status != "completed":
            raise RuntimeError(f"run at n={n} ended in {status} ({reason})")

    grids = [c.grid for c in cfgs]
    h = tuple(g.h[0] for g in grids)
    coarse = grids[0]
    # interpolate the deviation from the background so undisturbed states stay exact
    bg = background_packed(cfg.physics).reshape(13, 1, 1, 1)
    V = [resample(r[2] - bg, g, coarse) if i else r[2] - bg for i, (r, g) in enumerate(zip(results, grids))]
    dv = coarse.cell_volume
    e1 = math.sqrt(float(np.sum((V[0] - V[2]) ** 2)) * dv)
    e2 = math.sqrt(float(np.sum((V[1] - V[2]) ** 2)) * dv)
    if e1 == 0 and e2 == 0:
        sol = OrderRow("solution", (e1, e2), None)
    elif e2 == 0:
        sol = OrderRow("solution", (e1, e2), math.inf)
    else:
        sol = OrderRow("solution", (e1, e2), richardson_order(e1, e2, h))

    rows: List[OrderRow] = [sol]
    label = "energy_balance" if cfg.viscous else "energy_drift"
    rows.append(_order_row(label, h, [abs(r[3]) for r in results]))
    rows.append(_order_row("div_residual", h, [r[4] for r in results]))
    return ConvergenceTable(resolutions, h, cfg.scheme.order, tuple(rows))
