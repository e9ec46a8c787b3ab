"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names dispatch on :func:`npesim._accel.use_numba`. Both flavours
are importable directly (``*_nb`` / ``*_np``) so tests and the benchmark can
compare them.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit, prange

SERIES_CUTOFF = 1e-4


# ---------------------------------------------------------------------------
# Bernoulli function B(s) = s / (exp(s) - 1)


def bernoulli_np(s):
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < SERIES_CUTOFF
    safe = np.where(small, 1.0, s)
    with np.errstate(over="ignore"):
        out = safe / np.expm1(safe)
    return np.where(small, 1.0 - s / 2.0 + s * s / 12.0, out)


@njit(cache=True)
def _bernoulli_scalar(s):
    if abs(s) < SERIES_CUTOFF:
        return 1.0 - s / 2.0 + s * s / 12.0
    if s > 700.0:
        return s * math.exp(-s)
    return s / math.expm1(s)


@njit(cache=True)
def bernoulli_nb(s):
    out = np.empty(s.size)
    flat = s.ravel()
    for k in range(flat.size):
        out[k] = _bernoulli_scalar(flat[k])
    return out.reshape(s.shape)


def bernoulli(s):
    s = np.asarray(s, dtype=float)
    if _accel.use_numba():
        return bernoulli_nb(np.ascontiguousarray(s))
    return bernoulli_np(s)


# ---------------------------------------------------------------------------
# interpolation


@njit(cache=True, inline="always")
def _lerp(a, b, t):
    v = a + t * (b - a)
    lo = min(a, b)
    hi = max(a, b)
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


@njit(cache=True, inline="always")
def _locate(p, h, n):
    s = p / h
    r = np.floor(s + 0.5)
    if abs(s - r) <= 4.0 * 2.220446049250313e-16 * max(1.0, abs(r)):
        s = r
    i = int(math.floor(s))
    if i > n - 2:
        i = n - 2
    if i < 0:
        i = 0
    t = s - i
    if t < 0.0:
        t = 0.0
    if t > 1.0:
        t = 1.0
    return i, t


@njit(cache=True, inline="always")
def _bilinear_one(f, hx, hy, x, y):
    ny, nx = f.shape
    i, tx = _locate(x, hx, nx)
    j, ty = _locate(y, hy, ny)
    lo = _lerp(f[j, i], f[j, i + 1], tx)
    hi = _lerp(f[j + 1, i], f[j + 1, i + 1], tx)
    return _lerp(lo, hi, ty)


@njit(cache=True, parallel=True)
def bilinear_nb(f, hx, hy, px, py):
    out = np.empty(px.size)
    for k in prange(px.size):
        out[k] = _bilinear_one(f, hx, hy, px[k], py[k])
    return out


def _locate_np(p, h, n):
    s = p / h
    r = np.floor(s + 0.5)
    s = np.where(np.abs(s - r) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(r)), r, s)
    i = np.clip(np.floor(s).astype(np.int64), 0, n - 2)
    t = np.clip(s - i, 0.0, 1.0)
    return i, t


def _lerp_np(a, b, t):
    return np.clip(a + t * (b - a), np.minimum(a, b), np.maximum(a, b))


def bilinear_np(f, hx, hy, px, py):
    ny, nx = f.shape
    i, tx = _locate_np(px, hx, nx)
    j, ty = _locate_np(py, hy, ny)
    lo = _lerp_np(f[j, i], f[j, i + 1], tx)
    hi = _lerp_np(f[j + 1, i], f[j + 1, i + 1], tx)
    return _lerp_np(lo, hi, ty)


def bilinear(f, hx, hy, px, py):
    if _accel.use_numba():
        return bilinear_nb(f, float(hx), float(hy), np.ascontiguousarray(px), np.ascontiguousarray(py))
    return bilinear_np(f, hx, hy, px, py)


@njit(cache=True, inline="always")
def _cubic_weights(tau, w):
    # Lagrange basis on nodes 0,1,2,3 at local coordinate tau
    a = tau
    b = tau - 1.0
    c = tau - 2.0
    d = tau - 3.0
    w[0] = -b * c * d / 6.0
    w[1] = a * c * d / 2.0
    w[2] = -a * b * d / 2.0
    w[3] = a * b * c / 6.0


@njit(cache=True, inline="always")
def _stencil(p, h, n):
    i, t = _locate(p, h, n)
    s = i - 1
    if s < 0:
        s = 0
    if s > n - 4:
        s = n - 4
    return s, (i - s) + t


@njit(cache=True, parallel=True)
def cubic_nb(f, hx, hy, px, py):
    ny, nx = f.shape
    out = np.empty(px.size)
    for k in prange(px.size):
        wx = np.empty(4)
        wy = np.empty(4)
        sx, tx = _stencil(px[k], hx, nx)
        sy, ty = _stencil(py[k], hy, ny)
        _cubic_weights(tx, wx)
        _cubic_weights(ty, wy)
        acc = 0.0
        for b in range(4):
            row = 0.0
            for a in range(4):
                row += wx[a] * f[sy + b, sx + a]
            acc += wy[b] * row
        out[k] = acc
    return out


def _cubic_weights_np(tau):
    a, b, c, d = tau, tau - 1.0, tau - 2.0, tau - 3.0
    return np.stack([-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0])


def cubic_np(f, hx, hy, px, py):
    ny, nx = f.shape
    i, tx = _locate_np(px, hx, nx)
    j, ty = _locate_np(py, hy, ny)
    sx = np.clip(i - 1, 0, nx - 4)
    sy = np.clip(j - 1, 0, ny - 4)
    wx = _cubic_weights_np((i - sx) + tx)
    wy = _cubic_weights_np((j - sy) + ty)
    out = np.zeros(px.shape)
    for b in range(4):
        row = np.zeros(px.shape)
        for a in range(4):
            row += wx[a] * f[sy + b, sx + a]
        out += wy[b] * row
    return out


def cubic(f, hx, hy, px, py):
    if _accel.use_numba():
        return cubic_nb(f, float(hx), float(hy), np.ascontiguousarray(px), np.ascontiguousarray(py))
    return cubic_np(f, hx, hy, px, py)


# ---------------------------------------------------------------------------
# backward characteristics, two-stage midpoint rule, feet clamped to the box


@njit(cache=True, parallel=True)
def trace_feet_nb(ux, uy, xs, ys, Lx, Ly, dt):
    ny, nx = ux.shape
    hx = Lx / (nx - 1)
    hy = Ly / (ny - 1)
    fx = np.empty((ny, nx))
    fy = np.empty((ny, nx))
    for j in prange(ny):
        for i in range(nx):
            x = xs[i]
            y = ys[j]
            xm = min(max(x - 0.5 * dt * ux[j, i], 0.0), Lx)
            ym = min(max(y - 0.5 * dt * uy[j, i], 0.0), Ly)
            vx = _bilinear_one(ux, hx, hy, xm, ym)
            vy = _bilinear_one(uy, hx, hy, xm, ym)
            fx[j, i] = min(max(x - dt * vx, 0.0), Lx)
            fy[j, i] = min(max(y - dt * vy, 0.0), Ly)
    return fx, fy


def trace_feet_np(ux, uy, xs, ys, Lx, Ly, dt):
    ny, nx = ux.shape
    hx = Lx / (nx - 1)
    hy = Ly / (ny - 1)
    X, Y = np.meshgrid(xs, ys)
    xm = np.clip(X - 0.5 * dt * ux, 0.0, Lx).ravel()
    ym = np.clip(Y - 0.5 * dt * uy, 0.0, Ly).ravel()
    vx = bilinear_np(ux, hx, hy, xm, ym).reshape(ux.shape)
    vy = bilinear_np(uy, hx, hy, xm, ym).reshape(ux.shape)
    return np.clip(X - dt * vx, 0.0, Lx), np.clip(Y - dt * vy, 0.0, Ly)


def trace_feet(ux, uy, xs, ys, Lx, Ly, dt):
    if _accel.use_numba():
        return trace_feet_nb(np.ascontiguousarray(ux), np.ascontiguousarray(uy),
                             np.ascontiguousarray(xs), np.ascontiguousarray(ys),
                             float(Lx), float(Ly), float(dt))
    return trace_feet_np(ux, uy, xs, ys, Lx, Ly, dt)


# ---------------------------------------------------------------------------
# explicit first-order upwind transport written as a convex combination


@njit(cache=True)
def upwind_nb(c, ux, uy, dt, hx, hy):
    ny, nx = c.shape
    out = c.copy()
    for j in range(1, ny - 1):
        for i in range(1, nx - 1):
            lx = dt * abs(ux[j, i]) / hx
            ly = dt * abs(uy[j, i]) / hy
            w0 = 1.0 - lx - ly
            if w0 < 0.0:
                w0 = 0.0
            cx = c[j, i - 1] if ux[j, i] > 0.0 else c[j, i + 1]
            cy = c[j - 1, i] if uy[j, i] > 0.0 else c[j + 1, i]
            out[j, i] = w0 * c[j, i] + lx * cx + ly * cy
    return out


def upwind_np(c, ux, uy, dt, hx, hy):
    out = c.copy()
    ui, vi = ux[1:-1, 1:-1], uy[1:-1, 1:-1]
    lx = dt * np.abs(ui) / hx
    ly = dt * np.abs(vi) / hy
    w0 = np.maximum(1.0 - lx - ly, 0.0)
    cx = np.where(ui > 0.0, c[1:-1, :-2], c[1:-1, 2:])
    cy = np.where(vi > 0.0, c[:-2, 1:-1], c[2:, 1:-1])
    out[1:-1, 1:-1] = w0 * c[1:-1, 1:-1] + lx * cx + ly * cy
    return out


def upwind(c, ux, uy, dt, hx, hy):
    if _accel.use_numba():
        return upwind_nb(np.ascontiguousarray(c), np.ascontiguousarray(ux), np.ascontiguousarray(uy),
                         float(dt), float(hx), float(hy))
    return upwind_np(c, ux, uy, dt, hx, hy)


# ---------------------------------------------------------------------------
# Scharfetter-Gummel stencil for the implicit drift-diffusion step.
# Edge flux P->E: (D/h) [B(s) c_P - B(-s) c_E], s = z (phi_E - phi_P) - u_edge h / D.
# Returns the five stencil coefficients at interior nodes, shape (ny-2, nx-2).


@njit(cache=True)
def sg_stencil_nb(phi, ux, uy, z, D, hx, hy, dt, adv):
    ny, nx = phi.shape
    ax = dt * D / hx**2
    ay = dt * D / hy**2
    sx = np.empty((ny, nx - 1))
    for j in range(ny):
        for i in range(nx - 1):
            sx[j, i] = z * (phi[j, i + 1] - phi[j, i]) - adv * 0.5 * (ux[j, i] + ux[j, i + 1]) * hx / D
    sy = np.empty((ny - 1, nx))
    for j in range(ny - 1):
        for i in range(nx):
            sy[j, i] = z * (phi[j + 1, i] - phi[j, i]) - adv * 0.5 * (uy[j, i] + uy[j + 1, i]) * hy / D
    m, n = ny - 2, nx - 2
    diag = np.empty((m, n))
    east = np.empty((m, n))
    west = np.empty((m, n))
    north = np.empty((m, n))
    south = np.empty((m, n))
    for jj in range(m):
        j = jj + 1
        for ii in range(n):
            i = ii + 1
            se = sx[j, i]
            sw = sx[j, i - 1]
            sn = sy[j, i]
            ss = sy[j - 1, i]
            diag[jj, ii] = 1.0 + ax * (_bernoulli_scalar(se) + _bernoulli_scalar(-sw)) \
                + ay * (_bernoulli_scalar(sn) + _bernoulli_scalar(-ss))
            east[jj, ii] = -ax * _bernoulli_scalar(-se)
            west[jj, ii] = -ax * _bernoulli_scalar(sw)
            north[jj, ii] = -ay * _bernoulli_scalar(-sn)
            south[jj, ii] = -ay * _bernoulli_scalar(ss)
    return diag, east, west, north, south


def sg_stencil_np(phi, ux, uy, z, D, hx, hy, dt, adv):
    ax = dt * D / hx**2
    ay = dt * D / hy**2
    sx = z * (phi[:, 1:] - phi[:, :-1]) - adv * 0.5 * (ux[:, 1:] + ux[:, :-1]) * hx / D
    sy = z * (phi[1:, :] - phi[:-1, :]) - adv * 0.5 * (uy[1:, :] + uy[:-1, :]) * hy / D
    se = sx[1:-1, 1:]
    sw = sx[1:-1, :-1]
    sn = sy[1:, 1:-1]
    ss = sy[:-1, 1:-1]
    Bse, Bmse = bernoulli_np(se), bernoulli_np(-se)
    Bsw, Bmsw = bernoulli_np(sw), bernoulli_np(-sw)
    Bsn, Bmsn = bernoulli_np(sn), bernoulli_np(-sn)
    Bss, Bmss = bernoulli_np(ss), bernoulli_np(-ss)
    diag = 1.0 + ax * (Bse + Bmsw) + ay * (Bsn + Bmss)
    return diag, -ax * Bmse, -ax * Bsw, -ay * Bmsn, -ay * Bss


def sg_stencil(phi, ux, uy, z, D, hx, hy, dt, adv):
    if _accel.use_numba():
        return sg_stencil_nb(np.ascontiguousarray(phi, dtype=float), np.ascontiguousarray(ux, dtype=float),
                             np.ascontiguousarray(uy, dtype=float), float(z), float(D),
                             float(hx), float(hy), float(dt), float(adv))
    return sg_stencil_np(phi, ux, uy, z, D, hx, hy, dt, adv)
