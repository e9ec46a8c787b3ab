"""Uniform node-centred grids on a rectangle, finite differences, quadrature.

Scalar fields are plain ``float64`` arrays of shape ``(ny, nx)``; ``f[j, i]``
is the value at ``(x_i, y_j)``, so ``f.ravel()`` is row-major with x fastest.
Vector fields are :class:`VectorField` pairs of such arrays.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DomainViolationError, InvalidExponentError, ValidationError


@dataclass(frozen=True)
class Grid:
    """Node lattice on ``[0, Lx] x [0, Ly]``."""

    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0
    hx: float = field(init=False, repr=False, compare=False)
    hy: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValidationError("nx and ny must be integers")
        if self.nx < 3 or self.ny < 3:
            raise ValidationError("grid needs nx >= 3 and ny >= 3")
        if not (self.Lx > 0 and self.Ly > 0 and np.isfinite(self.Lx) and np.isfinite(self.Ly)):
            raise ValidationError("Lx and Ly must be positive and finite")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "Lx", float(self.Lx))
        object.__setattr__(self, "Ly", float(self.Ly))
        object.__setattr__(self, "hx", self.Lx / (self.nx - 1))
        object.__setattr__(self, "hy", self.Ly / (self.ny - 1))

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def h(self):
        return min(self.hx, self.hy)

    @property
    def area(self):
        return self.Lx * self.Ly

    @cached_property
    def x(self):
        return np.linspace(0.0, self.Lx, self.nx)

    @cached_property
    def y(self):
        return np.linspace(0.0, self.Ly, self.ny)

    @cached_property
    def XY(self):
        X, Y = np.meshgrid(self.x, self.y)
        X.setflags(write=False)
        Y.setflags(write=False)
        return X, Y

    @cached_property
    def weights(self):
        """Composite trapezoidal quadrature weights, shape ``(ny, nx)``."""
        wx = np.full(self.nx, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.hy)
        wy[[0, -1]] *= 0.5
        w = np.outer(wy, wx)
        w.setflags(write=False)
        return w

    @cached_property
    def boundary_mask(self):
        m = np.zeros(self.shape, dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        m.setflags(write=False)
        return m

    @cached_property
    def corner_adjacent_mask(self):
        """Interior nodes diagonally adjacent to a corner.

        Elliptic regularity degrades at the corners of a rectangle, so
        diagnostics evaluated here are reported separately.
        """
        m = np.zeros(self.shape, dtype=bool)
        m[1, 1] = m[1, -2] = m[-2, 1] = m[-2, -2] = True
        m.setflags(write=False)
        return m

    def zeros(self):
        return np.zeros(self.shape)

    def full(self, value):
        return np.full(self.shape, float(value))

    def sample(self, func, *args):
        """Evaluate ``func(X, Y, *args)`` on the nodes."""
        X, Y = self.XY
        return np.broadcast_to(np.asarray(func(X, Y, *args), dtype=float), self.shape).copy()

    def check_field(self, f, name="field"):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValidationError(f"{name} has shape {f.shape}, expected {self.shape}")
        if not np.all(np.isfinite(f)):
            raise ValidationError(f"{name} contains non-finite values")
        return f


class VectorField(NamedTuple):
    ux: np.ndarray
    uy: np.ndarray


@dataclass(frozen=True)
class BoundaryTrace:
    """Dirichlet data on the four edges.

    ``bottom``/``top`` are sampled along x (length nx) at y=0 / y=Ly;
    ``left``/``right`` along y (length ny) at x=0 / x=Lx.
    """

    bottom: np.ndarray
    top: np.ndarray
    left: np.ndarray
    right: np.ndarray

    CORNER_TOL = 1e-12

    def validate(self, grid):
        for name, arr, n in (("bottom", self.bottom, grid.nx), ("top", self.top, grid.nx),
                             ("left", self.left, grid.ny), ("right", self.right, grid.ny)):
            if np.shape(arr) != (n,):
                raise ValidationError(f"boundary edge {name!r} has length {np.size(arr)}, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"boundary edge {name!r} contains non-finite values")
        corners = (
            (self.bottom[0], self.left[0], "bottom-left"),
            (self.bottom[-1], self.right[0], "bottom-right"),
            (self.top[0], self.left[-1], "top-left"),
            (self.top[-1], self.right[-1], "top-right"),
        )
        for a, b, label in corners:
            if abs(a - b) > self.CORNER_TOL:
                raise ValidationError(f"boundary corner {label} inconsistent: {a!r} vs {b!r}")
        return self

    @classmethod
    def constant(cls, grid, value):
        v = float(value)
        return cls(np.full(grid.nx, v), np.full(grid.nx, v), np.full(grid.ny, v), np.full(grid.ny, v))

    @classmethod
    def from_field(cls, f):
        f = np.asarray(f, dtype=float)
        return cls(f[0, :].copy(), f[-1, :].copy(), f[:, 0].copy(), f[:, -1].copy())

    @classmethod
    def from_function(cls, grid, func):
        """Trace of ``func(x, y)`` on the grid boundary."""
        x, y = grid.x, grid.y
        return cls(
            np.asarray(func(x, np.zeros_like(x)), dtype=float) * np.ones_like(x),
            np.asarray(func(x, np.full_like(x, grid.Ly)), dtype=float) * np.ones_like(x),
            np.asarray(func(np.zeros_like(y), y), dtype=float) * np.ones_like(y),
            np.asarray(func(np.full_like(y, grid.Lx), y), dtype=float) * np.ones_like(y),
        )

    def apply(self, f):
        """Overwrite the boundary nodes of ``f`` in place; returns ``f``."""
        f[0, :] = self.bottom
        f[-1, :] = self.top
        f[:, 0] = self.left
        f[:, -1] = self.right
        return f

    def min(self):
        return min(np.min(self.bottom), np.min(self.top), np.min(self.left), np.min(self.right))

    def max(self):
        return max(np.max(self.bottom), np.max(self.top), np.max(self.left), np.max(self.right))

    def is_zero(self):
        return self.min() == 0.0 and self.max() == 0.0


def coons_lift(grid, trace):
    """Transfinite bilinear blend of the four edge traces.

    Matches the trace exactly on the boundary (given consistent corners) and
    reproduces bilinear functions everywhere.
    """
    xi = (grid.x / grid.Lx)[None, :]
    eta = (grid.y / grid.Ly)[:, None]
    # blend deviations from one corner so a constant trace lifts to that constant exactly
    base = float(trace.bottom[0])
    b = np.asarray(trace.bottom, dtype=float)[None, :] - base
    t = np.asarray(trace.top, dtype=float)[None, :] - base
    l = np.asarray(trace.left, dtype=float)[:, None] - base
    r = np.asarray(trace.right, dtype=float)[:, None] - base
    c10 = b[0, -1]
    c01, c11 = t[0, 0], t[0, -1]
    lift = base + ((1 - xi) * l + xi * r + (1 - eta) * b + eta * t
                   - (xi * (1 - eta) * c10 + (1 - xi) * eta * c01 + xi * eta * c11))
    # pin the edges to the trace itself so the lift is exact there
    return trace.apply(np.array(lift, dtype=float))


# ---------------------------------------------------------------------------
# differential operators


def gradient(grid, f):
    """Centred differences inside, second-order one-sided on the boundary."""
    dfdy, dfdx = np.gradient(np.asarray(f, dtype=float), grid.hy, grid.hx, edge_order=2)
    return VectorField(dfdx, dfdy)


def perp_gradient(grid, f):
    """``(-d/dy f, d/dx f)`` with the stencils of :func:`gradient`."""
    gx, gy = gradient(grid, f)
    return VectorField(-gy, gx)


def divergence(grid, v):
    """Centred divergence (one-sided on the boundary)."""
    dvx = np.gradient(np.asarray(v[0], dtype=float), grid.hx, axis=1, edge_order=2)
    dvy = np.gradient(np.asarray(v[1], dtype=float), grid.hy, axis=0, edge_order=2)
    return dvx + dvy


def curl(grid, v):
    """Scalar curl ``d/dx v_y - d/dy v_x``."""
    dvy = np.gradient(np.asarray(v[1], dtype=float), grid.hx, axis=1, edge_order=2)
    dvx = np.gradient(np.asarray(v[0], dtype=float), grid.hy, axis=0, edge_order=2)
    return dvy - dvx


def _second_derivative(f, h, axis):
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    if f.shape[0] >= 4:
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def laplacian(grid, f):
    """Five-point Laplacian.

    Boundary nodes are filled with one-sided second differences; treat them
    as untrusted (see ``Grid.boundary_mask``).
    """
    f = np.asarray(f, dtype=float)
    return _second_derivative(f, grid.hx, 1) + _second_derivative(f, grid.hy, 0)


def laplacian_interior(grid, f):
    """Five-point Laplacian at interior nodes only, shape ``(ny-2, nx-2)``."""
    f = np.asarray(f, dtype=float)
    return ((f[1:-1, 2:] - 2.0 * f[1:-1, 1:-1] + f[1:-1, :-2]) / grid.hx**2
            + (f[2:, 1:-1] - 2.0 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / grid.hy**2)


# ---------------------------------------------------------------------------
# interpolation


def _check_points(grid, px, py):
    tol = 1e-12 * max(grid.hx, grid.hy)
    bad = (px < -tol) | (px > grid.Lx + tol) | (py < -tol) | (py > grid.Ly + tol) | ~np.isfinite(px) | ~np.isfinite(py)
    if np.any(bad):
        k = int(np.flatnonzero(np.ravel(bad))[0])
        raise DomainViolationError(
            f"point ({np.ravel(px)[k]!r}, {np.ravel(py)[k]!r}) outside [0,{grid.Lx}]x[0,{grid.Ly}]")
    return np.clip(px, 0.0, grid.Lx), np.clip(py, 0.0, grid.Ly)


def interpolate_points(grid, f, px, py, order=1):
    """Interpolate ``f`` at arrays of points.

    ``order=1`` is bilinear (monotone); ``order=3`` is tensor cubic Lagrange
    on a four-node stencil shifted inward at the edges.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    shape = np.broadcast(px, py).shape
    px, py = _check_points(grid, np.broadcast_to(px, shape).ravel(), np.broadcast_to(py, shape).ravel())
    f = np.ascontiguousarray(f, dtype=float)
    if order == 1:
        out = kernels.bilinear(f, grid.hx, grid.hy, px, py)
    elif order == 3:
        if grid.nx < 4 or grid.ny < 4:
            raise ValidationError("cubic interpolation needs at least 4 nodes per axis")
        out = kernels.cubic(f, grid.hx, grid.hy, px, py)
    else:
        raise ValueError("order must be 1 or 3")
    return out.reshape(shape)


def interpolate(grid, f, p, order=1):
    """Interpolated value of ``f`` at the single point ``p = (x, y)``."""
    return float(interpolate_points(grid, f, np.array([p[0]]), np.array([p[1]]), order=order)[0])


# ---------------------------------------------------------------------------
# quadrature


def integrate(grid, f):
    return float(np.sum(grid.weights * np.asarray(f, dtype=float)))


def lp_norm(grid, f, p=2):
    """Trapezoidal ``L^p`` norm; ``p = inf`` gives the max norm."""
    if isinstance(p, str):
        p = np.inf if p.strip().lower() in ("inf", "infinity") else float(p)
    p = float(p)
    if not p >= 1.0:
        raise InvalidExponentError(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(np.asarray(f, dtype=float))
    if np.isinf(p):
        return float(np.max(a))
    scale = float(np.max(a))
    if scale == 0.0:
        return 0.0
    # scaled to keep |f|^p representable for large p
    return scale * float(np.sum(grid.weights * (a / scale) ** p)) ** (1.0 / p)
