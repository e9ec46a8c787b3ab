"""Vorticity transport along characteristics and velocity recovery.

Convention: ``-Lap theta = omega`` with ``theta = 0`` on the boundary and
``u = (d theta/dy, -d theta/dx)``, so that ``omega = curl u``. The recovered
velocity has zero normal component on the boundary exactly; the tangential
component is whatever the inviscid solve gives and is reported separately.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import BoundaryTrace, VectorField, gradient, interpolate_points, perp_gradient
from .poisson import EllipticProblem, solve_dirichlet


@dataclass
class VorticityState:
    omega: np.ndarray
    theta: np.ndarray
    u: VectorField

    def copy(self):
        return VorticityState(self.omega.copy(), self.theta.copy(), VectorField(self.u.ux.copy(), self.u.uy.copy()))


def velocity_from_stream(grid, theta):
    """``u = (d theta/dy, -d theta/dx)``; the normal part vanishes where ``theta`` is 0 on an edge."""
    gx, gy = gradient(grid, theta)
    return VectorField(gy, -gx)


def recover_velocity(grid, omega, method="dst"):
    """Stream function and velocity from the vorticity.

    Returns
    -------
    theta : ndarray
    u : VectorField
    """
    theta = solve_dirichlet(grid, EllipticProblem(omega, BoundaryTrace.constant(grid, 0.0)), method=method)
    return theta, velocity_from_stream(grid, theta)


def vorticity_state(grid, omega):
    theta, u = recover_velocity(grid, omega)
    return VorticityState(np.asarray(omega, dtype=float).copy(), theta, u)


def trace_characteristic(grid, u, x, dt):
    """Backward foot of the path line through ``x`` over ``dt`` (midpoint rule, clamped)."""
    x = np.asarray(x, dtype=float)
    p = x - 0.5 * dt * np.array([interpolate_points(grid, u[0], x[0], x[1]), interpolate_points(grid, u[1], x[0], x[1])])
    p = np.clip(p, 0.0, [grid.Lx, grid.Ly])
    v = np.array([interpolate_points(grid, u[0], p[0], p[1]), interpolate_points(grid, u[1], p[0], p[1])])
    return np.clip(x - dt * v, 0.0, [grid.Lx, grid.Ly])


def trace_feet(grid, u, dt):
    """Feet of all nodes at once, shape ``(ny, nx)`` per component."""
    return kernels.trace_feet(u[0], u[1], grid.x, grid.y, grid.Lx, grid.Ly, dt)


def electric_source(grid, rho, phi):
    """``perp_grad(rho) . grad(phi)``, evaluated nodewise."""
    pr = perp_gradient(grid, rho)
    gp = gradient(grid, phi)
    return pr.ux * gp.ux + pr.uy * gp.uy


def advance_vorticity(grid, state, rho, phi, dt, K, forcing=None, order=1, sign=1.0):
    """Semi-Lagrangian vorticity step.

    ``omega_new(x) = omega(foot(x)) - dt*K*sign*(perp_grad(rho).grad(phi))(x) + dt*forcing(x)``
    at every node, boundary included. ``order=1`` interpolates bilinearly
    (monotone); ``order=3`` uses cubic Lagrange. ``sign`` exists only to
    build negative controls and is 1 in physical runs.
    """
    fx, fy = trace_feet(grid, state.u, dt)
    transported = interpolate_points(grid, state.omega, fx, fy, order=order)
    new = transported - dt * K * sign * electric_source(grid, rho, phi)
    if forcing is not None:
        new = new + dt * np.asarray(forcing, dtype=float)
    return new


def tangential_boundary_speed(u):
    """Max tangential velocity on the four edges (the normal part is zero by construction)."""
    return float(max(np.max(np.abs(u.ux[0, :])), np.max(np.abs(u.ux[-1, :])),
                     np.max(np.abs(u.uy[:, 0])), np.max(np.abs(u.uy[:, -1]))))


def normal_boundary_speed(u):
    return float(max(np.max(np.abs(u.uy[0, :])), np.max(np.abs(u.uy[-1, :])),
                     np.max(np.abs(u.ux[:, 0])), np.max(np.abs(u.ux[:, -1]))))
