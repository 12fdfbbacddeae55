"""Compiled stencil kernels for the implicit gradient-flow operator.

Each kernel writes ``out = d*x - 0.5*lap(x) + 1j*omega*(x*dy - y*dx)(x)`` on
interior nodes and zero on the boundary, i.e. the action of
``diag(d) - 1/2 lap - omega*L_z``.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def system_apply_1d(x, d, hx, out):
    n = x.shape[0]
    cx = 0.5 / (hx * hx)
    out[0] = 0.0
    out[n - 1] = 0.0
    for i in range(1, n - 1):
        out[i] = d[i] * x[i] - cx * (x[i + 1] + x[i - 1] - 2.0 * x[i])
    return out


@numba.njit(cache=True)
def _zero_edges_2d(out):
    nx, ny = out.shape
    for i in range(nx):
        out[i, 0] = 0.0
        out[i, ny - 1] = 0.0
    for j in range(ny):
        out[0, j] = 0.0
        out[nx - 1, j] = 0.0


@numba.njit(cache=True)
def system_apply_2d(x, d, hx, hy, out):
    nx, ny = x.shape
    cx = 0.5 / (hx * hx)
    cy = 0.5 / (hy * hy)
    _zero_edges_2d(out)
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            c = x[i, j]
            out[i, j] = (d[i, j] * c - cx * (x[i + 1, j] + x[i - 1, j] - 2.0 * c)
                         - cy * (x[i, j + 1] + x[i, j - 1] - 2.0 * c))
    return out


@numba.njit(cache=True)
def system_apply_2d_rot(x, d, hx, hy, xs, ys, omega, out):
    nx, ny = x.shape
    cx = 0.5 / (hx * hx)
    cy = 0.5 / (hy * hy)
    wx = 0.5j * omega / hx
    wy = 0.5j * omega / hy
    _zero_edges_2d(out)
    for i in range(1, nx - 1):
        xi = xs[i]
        for j in range(1, ny - 1):
            c = x[i, j]
            xp = x[i + 1, j]
            xm = x[i - 1, j]
            yp = x[i, j + 1]
            ym = x[i, j - 1]
            out[i, j] = (d[i, j] * c - cx * (xp + xm - 2.0 * c) - cy * (yp + ym - 2.0 * c)
                         + wy * xi * (yp - ym) - wx * ys[j] * (xp - xm))
    return out


@numba.njit(cache=True)
def system_apply_3d(x, d, hx, hy, hz, out):
    nx, ny, nz = x.shape
    cx = 0.5 / (hx * hx)
    cy = 0.5 / (hy * hy)
    cz = 0.5 / (hz * hz)
    out[:] = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            for k in range(1, nz - 1):
                c = x[i, j, k]
                out[i, j, k] = (d[i, j, k] * c - cx * (x[i + 1, j, k] + x[i - 1, j, k] - 2.0 * c)
                                - cy * (x[i, j + 1, k] + x[i, j - 1, k] - 2.0 * c)
                                - cz * (x[i, j, k + 1] + x[i, j, k - 1] - 2.0 * c))
    return out


@numba.njit(cache=True)
def system_apply_3d_rot(x, d, hx, hy, hz, xs, ys, omega, out):
    nx, ny, nz = x.shape
    cx = 0.5 / (hx * hx)
    cy = 0.5 / (hy * hy)
    cz = 0.5 / (hz * hz)
    wx = 0.5j * omega / hx
    wy = 0.5j * omega / hy
    out[:] = 0.0
    for i in range(1, nx - 1):
        xi = xs[i]
        for j in range(1, ny - 1):
            yj = ys[j]
            for k in range(1, nz - 1):
                c = x[i, j, k]
                xp = x[i + 1, j, k]
                xm = x[i - 1, j, k]
                yp = x[i, j + 1, k]
                ym = x[i, j - 1, k]
                out[i, j, k] = (d[i, j, k] * c - cx * (xp + xm - 2.0 * c)
                                - cy * (yp + ym - 2.0 * c)
                                - cz * (x[i, j, k + 1] + x[i, j, k - 1] - 2.0 * c)
                                + wy * xi * (yp - ym) - wx * yj * (xp - xm))
    return out


def system_apply(x, d, grid, omega, out=None):
    if out is None:
        out = np.empty(x.shape, dtype=np.result_type(x.dtype, d.dtype, complex if omega else float))
    h = grid.spacing
    if grid.dim == 1:
        return system_apply_1d(x, d, h[0], out)
    xs, ys = grid.axes[0], grid.axes[1]
    if grid.dim == 2:
        if omega:
            return system_apply_2d_rot(x, d, h[0], h[1], xs, ys, float(omega), out)
        return system_apply_2d(x, d, h[0], h[1], out)
    if omega:
        return system_apply_3d_rot(x, d, h[0], h[1], h[2], xs, ys, float(omega), out)
    return system_apply_3d(x, d, h[0], h[1], h[2], out)


# --------------------------------------------------------------------------
# uniform-signature wrappers so the compiled solver can take any of them


@numba.njit(cache=True)
def _op2(x, d, hs, xs, ys, omega, out):
    system_apply_2d(x, d, hs[0], hs[1], out)


@numba.njit(cache=True)
def _op2r(x, d, hs, xs, ys, omega, out):
    system_apply_2d_rot(x, d, hs[0], hs[1], xs, ys, omega, out)


@numba.njit(cache=True)
def _op3(x, d, hs, xs, ys, omega, out):
    system_apply_3d(x, d, hs[0], hs[1], hs[2], out)


@numba.njit(cache=True)
def _op3r(x, d, hs, xs, ys, omega, out):
    system_apply_3d_rot(x, d, hs[0], hs[1], hs[2], xs, ys, omega, out)


def stencil_kernel(dim, omega):
    if dim == 2:
        return _op2r if omega else _op2
    if dim == 3:
        return _op3r if omega else _op3
    raise ValueError("compiled stencil solver handles dim 2 and 3")


@numba.njit(cache=True)
def _vdot(a, b):
    s = a[0] * 0.0
    for i in range(a.shape[0]):
        s += np.conj(a[i]) * b[i]
    return s


@numba.njit(cache=True)
def _nrm(a):
    s = 0.0
    for i in range(a.shape[0]):
        v = a[i]
        s += (v * np.conj(v)).real
    return np.sqrt(s)


# not cached: the operator argument is a dispatcher, which numba cannot
# pickle into a cache index
@numba.njit
def bicgstab_stencil(op, d, hs, xs, ys, omega, minv, b, x, tol, max_iter):
    """Right-preconditioned BiCGSTAB on the stencil system; updates ``x`` in place.

    Returns (iterations, true relative residual, status) with status 0 =
    converged, 1 = breakdown, 2 = max_iter, 3 = non-finite.
    """
    shape = b.shape
    bf = b.reshape(-1)
    xf = x.reshape(-1)
    mf = minv.reshape(-1)
    n = bf.shape[0]
    ax = np.empty(shape, dtype=x.dtype)
    op(x, d, hs, xs, ys, omega, ax)
    axf = ax.reshape(-1)
    r = np.empty(n, dtype=x.dtype)
    for i in range(n):
        r[i] = bf[i] - axf[i]
    bnorm = _nrm(bf)
    if bnorm == 0.0:
        for i in range(n):
            xf[i] = 0.0
        return 0, 0.0, 0
    target = tol * bnorm
    if _nrm(r) <= target:
        return 0, _nrm(r) / bnorm, 0
    r_hat = r.copy()
    p = np.zeros(n, dtype=x.dtype)
    v = np.zeros(n, dtype=x.dtype)
    p_hat = np.empty(shape, dtype=x.dtype)
    s_hat = np.empty(shape, dtype=x.dtype)
    ph = p_hat.reshape(-1)
    sh = s_hat.reshape(-1)
    t = np.empty(shape, dtype=x.dtype)
    tf = t.reshape(-1)
    vv = np.empty(shape, dtype=x.dtype)
    vf = vv.reshape(-1)
    one = bf[0] * 0.0 + 1.0
    rho = one
    alpha = one
    om = one
    status = 2
    it = 0
    for it in range(1, max_iter + 1):
        rho_new = _vdot(r_hat, r)
        if rho_new == 0.0 or om == 0.0:
            status = 1
            break
        beta = (rho_new / rho) * (alpha / om)
        rho = rho_new
        for i in range(n):
            p[i] = r[i] + beta * (p[i] - om * v[i])
            ph[i] = mf[i] * p[i]
        op(p_hat, d, hs, xs, ys, omega, vv)
        for i in range(n):
            v[i] = vf[i]
        denom = _vdot(r_hat, v)
        if denom == 0.0:
            status = 1
            break
        alpha = rho / denom
        snorm2 = 0.0
        for i in range(n):
            r[i] = r[i] - alpha * v[i]
            sh[i] = mf[i] * r[i]
            snorm2 += (r[i] * np.conj(r[i])).real
        if np.sqrt(snorm2) <= target:
            for i in range(n):
                xf[i] += alpha * ph[i]
            status = 0
            break
        op(s_hat, d, hs, xs, ys, omega, t)
        tt = _vdot(tf, tf).real
        if tt == 0.0:
            status = 1
            break
        om = _vdot(tf, r) / tt
        rn2 = 0.0
        for i in range(n):
            xf[i] += alpha * ph[i] + om * sh[i]
            r[i] = r[i] - om * tf[i]
            rn2 += (r[i] * np.conj(r[i])).real
        if not np.isfinite(rn2):
            status = 3
            break
        if np.sqrt(rn2) <= target:
            status = 0
            break
    op(x, d, hs, xs, ys, omega, ax)
    res = 0.0
    for i in range(n):
        e = bf[i] - axf[i]
        res += (e * np.conj(e)).real
    res = np.sqrt(res) / bnorm
    if not np.isfinite(res):
        status = 3
    elif res <= tol * 1.01:
        status = 0
    elif status == 0:
        status = 2
    return it, res, status


@numba.njit(cache=True)
def flow_coefficients_2d(phi, v, alpha, beta, eps, omega, hx, hy, xs, ys, c):
    """Fill ``c`` with V + beta|phi|^{4/3} + alpha lap|phi|/sqrt(|phi|^2+eps) and
    return the discrete multiplier sum (before the cell-volume factor)."""
    nx, ny = phi.shape
    ix2 = 1.0 / (hx * hx)
    iy2 = 1.0 / (hy * hy)
    amp = np.empty((nx, ny))
    for i in range(nx):
        for j in range(ny):
            amp[i, j] = np.abs(phi[i, j])
    mu = 0.0
    for i in range(nx):
        for j in range(ny):
            c[i, j] = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            f = phi[i, j]
            a = amp[i, j]
            dens = a * a
            d13 = np.cbrt(dens)
            lap = (phi[i + 1, j] + phi[i - 1, j] - 2.0 * f) * ix2 + (phi[i, j + 1] + phi[i, j - 1] - 2.0 * f) * iy2
            term = -0.5 * (np.conj(f) * lap).real + v[i, j] * dens + beta * dens * d13 * d13
            cij = v[i, j] + beta * d13 * d13
            if alpha != 0.0:
                lapa = (amp[i + 1, j] + amp[i - 1, j] - 2.0 * a) * ix2 + (amp[i, j + 1] + amp[i, j - 1] - 2.0 * a) * iy2
                den = np.sqrt(dens + eps)
                cij += alpha * lapa / den
                term += alpha * dens / den * lapa
            if omega != 0.0:
                dx = (phi[i + 1, j] - phi[i - 1, j]) * (0.5 / hx)
                dy = (phi[i, j + 1] - phi[i, j - 1]) * (0.5 / hy)
                lz = -1j * (xs[i] * dy - ys[j] * dx)
                term -= omega * (np.conj(f) * lz).real
            c[i, j] = cij
            mu += term
    return mu


@numba.njit(cache=True)
def flow_coefficients_3d(phi, v, alpha, beta, eps, omega, hx, hy, hz, xs, ys, c):
    nx, ny, nz = phi.shape
    ix2 = 1.0 / (hx * hx)
    iy2 = 1.0 / (hy * hy)
    iz2 = 1.0 / (hz * hz)
    amp = np.empty((nx, ny, nz))
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                amp[i, j, k] = np.abs(phi[i, j, k])
    c[:] = 0.0
    mu = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            for k in range(1, nz - 1):
                f = phi[i, j, k]
                a = amp[i, j, k]
                dens = a * a
                d13 = np.cbrt(dens)
                lap = ((phi[i + 1, j, k] + phi[i - 1, j, k] - 2.0 * f) * ix2
                       + (phi[i, j + 1, k] + phi[i, j - 1, k] - 2.0 * f) * iy2
                       + (phi[i, j, k + 1] + phi[i, j, k - 1] - 2.0 * f) * iz2)
                term = -0.5 * (np.conj(f) * lap).real + v[i, j, k] * dens + beta * dens * d13 * d13
                cijk = v[i, j, k] + beta * d13 * d13
                if alpha != 0.0:
                    lapa = ((amp[i + 1, j, k] + amp[i - 1, j, k] - 2.0 * a) * ix2
                            + (amp[i, j + 1, k] + amp[i, j - 1, k] - 2.0 * a) * iy2
                            + (amp[i, j, k + 1] + amp[i, j, k - 1] - 2.0 * a) * iz2)
                    den = np.sqrt(dens + eps)
                    cijk += alpha * lapa / den
                    term += alpha * dens / den * lapa
                if omega != 0.0:
                    dx = (phi[i + 1, j, k] - phi[i - 1, j, k]) * (0.5 / hx)
                    dy = (phi[i, j + 1, k] - phi[i, j - 1, k]) * (0.5 / hy)
                    lz = -1j * (xs[i] * dy - ys[j] * dx)
                    term -= omega * (np.conj(f) * lz).real
                c[i, j, k] = cijk
                mu += term
    return mu
