"""Dirichlet Poisson solves on the node grid.

``scale * (-Lap_h u) = rhs`` at interior nodes, ``u = g`` on the boundary.
Inhomogeneous boundary data is lifted with :func:`npesim.mesh.coons_lift`,
the zero-boundary remainder is solved by a type-I discrete sine transform
(exact for the five-point operator) or, on request, by conjugate gradients.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError, ValidationError
from .mesh import BoundaryTrace, coons_lift, laplacian_interior

RESIDUAL_TOL = 1e-10


@dataclass
class EllipticProblem:
    rhs: np.ndarray
    boundary: BoundaryTrace
    scale: float = 1.0

    def validate(self, grid):
        grid.check_field(self.rhs, "rhs")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValidationError(f"elliptic scale must be positive, got {self.scale!r}")
        self.boundary.validate(grid)
        return self


@lru_cache(maxsize=32)
def _dst_eigenvalues(grid):
    """Eigenvalues of ``-Lap_h`` with zero Dirichlet data, shape ``(ny-2, nx-2)``.

    Immutable once built, so one plan is shared by all solves on a grid.
    """
    kx = np.arange(1, grid.nx - 1)
    ky = np.arange(1, grid.ny - 1)
    lx = (2.0 * np.sin(kx * np.pi / (2.0 * (grid.nx - 1))) / grid.hx) ** 2
    ly = (2.0 * np.sin(ky * np.pi / (2.0 * (grid.ny - 1))) / grid.hy) ** 2
    lam = ly[:, None] + lx[None, :]
    lam.setflags(write=False)
    return lam


@lru_cache(maxsize=8)
def _neg_laplacian_matrix(grid):
    def lap1d(n, h):
        return sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h**2

    mx, my = grid.nx - 2, grid.ny - 2
    A = sp.kron(sp.identity(my), lap1d(mx, grid.hx)) + sp.kron(lap1d(my, grid.hy), sp.identity(mx))
    return A.tocsr()


def _solve_zero_boundary_dst(grid, b):
    lam = _dst_eigenvalues(grid)
    bhat = scipy.fft.dstn(b, type=1)
    return scipy.fft.idstn(bhat / lam, type=1)


def _solve_zero_boundary_cg(grid, b):
    A = _neg_laplacian_matrix(grid)
    maxiter = int(10 * np.sqrt(grid.nx * grid.ny))
    rhs = b.ravel()
    if not np.any(rhs):
        return np.zeros_like(b)
    w, info = spla.cg(A, rhs, rtol=RESIDUAL_TOL, atol=0.0, maxiter=maxiter)
    if info != 0:
        res = np.linalg.norm(A @ w - rhs) / np.linalg.norm(rhs)
        raise SolverError(f"conjugate gradients did not converge in {maxiter} iterations", residual=res)
    return w.reshape(b.shape)


def relative_residual(grid, u, rhs, scale=1.0):
    """Normwise backward error ``|r| / (|rhs| + |A| |u|)`` of the interior equations, 2-norms.

    ``|A|`` is bounded by ``scale * (4/hx^2 + 4/hy^2)``. Scale-aware, so an
    exactly harmonic ``u`` with zero ``rhs`` gives a round-off sized value.
    """
    rhs_i = np.asarray(rhs, dtype=float)[1:-1, 1:-1]
    r = -scale * laplacian_interior(grid, u) - rhs_i
    norm_a = scale * (4.0 / grid.hx**2 + 4.0 / grid.hy**2)
    denom = np.linalg.norm(rhs_i) + norm_a * np.linalg.norm(u)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(r) / denom)


def solve_dirichlet(grid, problem, method="dst"):
    """Solve the elliptic problem; returns the full nodal solution."""
    problem.validate(grid)
    lift = coons_lift(grid, problem.boundary)
    # -Lap_h w = rhs/scale + Lap_h lift on the interior, w = 0 on the boundary
    b = np.asarray(problem.rhs, dtype=float)[1:-1, 1:-1] / problem.scale + laplacian_interior(grid, lift)
    if method == "dst":
        w = _solve_zero_boundary_dst(grid, b)
    elif method == "cg":
        w = _solve_zero_boundary_cg(grid, b)
    else:
        raise ValueError(f"unknown elliptic method {method!r}")
    u = lift.copy()
    u[1:-1, 1:-1] += w
    res = relative_residual(grid, u, problem.rhs, problem.scale)
    if not res <= RESIDUAL_TOL:
        raise SolverError(f"elliptic solve residual {res:.3e} above {RESIDUAL_TOL:g}", residual=res)
    return u


def decompose_potential(grid, rho, h_trace, epsilon, method="dst"):
    """Split the potential into the charge part and the harmonic part.

    Returns ``(phi, phi0, phi_h)`` with ``-Lap phi0 = rho/epsilon``, ``phi0 = 0``
    on the boundary, ``-Lap phi_h = 0``, ``phi_h = h`` on the boundary, and
    ``phi = phi0 + phi_h`` nodewise.
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon!r}")
    zero = BoundaryTrace.constant(grid, 0.0)
    phi0 = solve_dirichlet(grid, EllipticProblem(rho, zero, scale=epsilon), method=method)
    if h_trace.is_zero():
        phih = grid.zeros()
    else:
        phih = solve_dirichlet(grid, EllipticProblem(grid.zeros(), h_trace, scale=1.0), method=method)
    return phi0 + phih, phi0, phih
