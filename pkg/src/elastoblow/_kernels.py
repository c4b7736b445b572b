"""Compiled kernels for the inviscid tendency.

Fluxes, the central flux difference and the artificial dissipation are
computed one conserved component at a time. ``solver._tendency_reference``
computes the same quantity from the generic numpy operators and the test
suite holds the two together.
"""

from __future__ import annotations

from numba import njit


@njit(cache=True)
def assemble_component(flux, U, h, dcoef, order, collar, c, T):
    """T[c] = -sum_d D_d flux[d] + sum_d dcoef[d] * delta^(order+2)_d U[c] on non-collar cells.

    delta^p is the undivided central difference; collar cells get 0.
    """
    nx, ny, nz = U.shape[1], U.shape[2], U.shape[3]
    lo = collar
    if order == 2:
        w1, w2 = 0.5, 0.0
    else:
        w1, w2 = 2.0 / 3.0, -1.0 / 12.0
    for i in range(nx):
        t = T[c, i]
        t[:, :] = 0.0
        if i < lo or i >= nx - lo:
            continue
        a0, a1, a2 = w1 / h[0], w1 / h[1], w1 / h[2]
        b0, b1, b2 = w2 / h[0], w2 / h[1], w2 / h[2]
        e0, e1, e2 = dcoef[0], dcoef[1], dcoef[2]
        fxp, fxm = flux[0, i + 1], flux[0, i - 1]
        fxp2, fxm2 = flux[0, i + 2], flux[0, i - 2]
        fy, fz = flux[1, i], flux[2, i]
        u0 = U[c, i]
        up1, um1 = U[c, i + 1], U[c, i - 1]
        up2, um2 = U[c, i + 2], U[c, i - 2]
        for j in range(lo, ny - lo):
            for k in range(lo, nz - lo):
                acc = -(a0 * (fxp[j, k] - fxm[j, k]) + a1 * (fy[j + 1, k] - fy[j - 1, k])
                        + a2 * (fz[j, k + 1] - fz[j, k - 1]))
                if order == 4:
                    acc -= (b0 * (fxp2[j, k] - fxm2[j, k]) + b1 * (fy[j + 2, k] - fy[j - 2, k])
                            + b2 * (fz[j, k + 2] - fz[j, k - 2]))
                if order == 2:
                    c6 = 6.0 * u0[j, k]
                    dx = up2[j, k] + um2[j, k] - 4.0 * (up1[j, k] + um1[j, k]) + c6
                    dy = u0[j + 2, k] + u0[j - 2, k] - 4.0 * (u0[j + 1, k] + u0[j - 1, k]) + c6
                    dz = u0[j, k + 2] + u0[j, k - 2] - 4.0 * (u0[j, k + 1] + u0[j, k - 1]) + c6
                else:
                    c20 = -20.0 * u0[j, k]
                    dx = (U[c, i + 3, j, k] + U[c, i - 3, j, k] - 6.0 * (up2[j, k] + um2[j, k])
                          + 15.0 * (up1[j, k] + um1[j, k]) + c20)
                    dy = (u0[j + 3, k] + u0[j - 3, k] - 6.0 * (u0[j + 2, k] + u0[j - 2, k])
                          + 15.0 * (u0[j + 1, k] + u0[j - 1, k]) + c20)
                    dz = (u0[j, k + 3] + u0[j, k - 3] - 6.0 * (u0[j, k + 2] + u0[j, k - 2])
                          + 15.0 * (u0[j, k + 1] + u0[j, k - 1]) + c20)
                t[j, k] = acc + e0 * dx + e1 * dy + e2 * dz


@njit(cache=True)
def component_flux(U, c, inv, P, out):
    """out[d] = flux of conserved component c in direction d."""
    nx, ny, nz = U.shape[1], U.shape[2], U.shape[3]
    for d in range(3):
        for i in range(nx):
            md = U[1 + d, i]
            r = inv[i]
            o = out[d, i]
            if c == 0:
                for j in range(ny):
                    for k in range(nz):
                        o[j, k] = md[j, k]
            elif c < 4:
                a = c - 1
                ma = U[1 + a, i]
                q0a, q1a, q2a = U[4 + a, i], U[7 + a, i], U[10 + a, i]
                q0d, q1d, q2d = U[4 + d, i], U[7 + d, i], U[10 + d, i]
                pr = P[i]
                diag = 1.0 if a == d else 0.0
                for j in range(ny):
                    for k in range(nz):
                        s = q0a[j, k] * q0d[j, k] + q1a[j, k] * q1d[j, k] + q2a[j, k] * q2d[j, k]
                        o[j, k] = (ma[j, k] * md[j, k] - s) * r[j, k] + diag * pr[j, k]
            else:
                a = (c - 4) // 3
                b = (c - 4) % 3
                qab, qad, mb = U[c, i], U[4 + 3 * a + d, i], U[1 + b, i]
                for j in range(ny):
                    for k in range(nz):
                        o[j, k] = (md[j, k] * qab[j, k] - mb[j, k] * qad[j, k]) * r[j, k]


@njit(cache=True)
def tendency(U, A, gamma, h, dcoef, order, collar, T, work):
    """Inviscid tendency plus dissipation, one conserved component at a time.

    ``work`` has shape (5, nx, ny, nz): three flux directions, 1/rho and P.
    Keeping a single component's fluxes live keeps the working set in cache;
    the full 39-field flux array does not fit.
    """
    inv = work[3]
    P = work[4]
    rho = U[0]
    nx, ny, nz = rho.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                inv[i, j, k] = 1.0 / rho[i, j, k]
                P[i, j, k] = A * rho[i, j, k] ** gamma
    for c in range(U.shape[0]):
        component_flux(U, c, inv, P, work)
        assemble_component(work, U, h, dcoef, order, collar, c, T)


@njit(cache=True)
def axpy(out, x, a, y):
    """out = x + a * y elementwise on flattened arrays."""
    n = out.size
    o = out.reshape(n)
    xf = x.reshape(n)
    yf = y.reshape(n)
    for i in range(n):
        o[i] = xf[i] + a * yf[i]


