"""Ion concentrations: species data and the positivity-preserving step.

The step is implicit in ``c`` with Scharfetter-Gummel edge fluxes. By default
the transport velocity is folded into the exponential fitting next to the
drift (``advection="sg"``), which keeps second-order accuracy in ``h``; the
explicit first-order upwind alternative (``advection="upwind"``) is a
convex-combination pre-step and is positive only under the CFL bound.

The implicit matrix is an M-matrix. It is factorised without row pivoting
under a symmetric fill-reducing permutation, so both triangular factors keep
nonpositive off-diagonals and positive pivots: forward and back substitution
only ever add nonnegative numbers, and the result is nonnegative in floating
point, not just in exact arithmetic.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import ArityError, PositivityViolationError, SolverError, ValidationError
from .mesh import BoundaryTrace

MODES = ("TwoSpecies", "EqualDZ", "Unrestricted")
POSITIVITY_FLOOR = -1e-12
RESIDUAL_TOL = 1e-10


@dataclass
class Species:
    """One ionic species: valence ``z``, diffusivity ``D``, boundary trace, initial data."""

    z: float
    D: float
    gamma: BoundaryTrace
    c0: np.ndarray | None = None
    name: str = ""

    def validate(self, grid=None):
        if not (np.isfinite(self.D) and self.D > 0):
            raise ValidationError(f"species {self.name or '?'}: D > 0 required, got {self.D!r}")
        if not (np.isfinite(self.z) and self.z != 0):
            raise ValidationError(f"species {self.name or '?'}: z != 0 required, got {self.z!r}")
        if grid is not None:
            self.gamma.validate(grid)
        if self.gamma.min() < 0:
            raise ValidationError(f"species {self.name or '?'}: gamma >= 0 required, min is {self.gamma.min()!r}")
        if self.c0 is not None:
            if grid is not None:
                grid.check_field(self.c0, f"c0 of species {self.name or '?'}")
            if np.min(self.c0) < 0:
                raise ValidationError(f"species {self.name or '?'}: c0 >= 0 required, min is {np.min(self.c0)!r}")
        return self


@dataclass
class SpeciesSet:
    species: list = field(default_factory=list)
    mode: str = "Unrestricted"

    def __post_init__(self):
        self.species = list(self.species)
        self.validate()

    def validate(self, grid=None):
        if self.mode not in MODES:
            raise ValidationError(f"species mode must be one of {MODES}, got {self.mode!r}")
        if len(self.species) < 1:
            raise ValidationError("at least one species required (N >= 1)")
        for s in self.species:
            s.validate(grid)
        if self.mode == "TwoSpecies" and len(self.species) != 2:
            raise ValidationError(f"mode TwoSpecies requires N = 2, got N = {len(self.species)}")
        if self.mode == "EqualDZ":
            D0, z0 = self.species[0].D, abs(self.species[0].z)
            for s in self.species[1:]:
                if not np.isclose(s.D, D0, rtol=1e-12, atol=0.0):
                    raise ValidationError("mode EqualDZ requires all D equal")
                if not np.isclose(abs(s.z), z0, rtol=1e-12, atol=0.0):
                    raise ValidationError("mode EqualDZ requires all |z| equal")
        return self

    def __len__(self):
        return len(self.species)

    def __iter__(self):
        return iter(self.species)

    def __getitem__(self, i):
        return self.species[i]

    @property
    def z(self):
        return np.array([s.z for s in self.species])

    @property
    def D(self):
        return np.array([s.D for s in self.species])

    @property
    def opposite_pair(self):
        """True for two species of opposite valence sign."""
        return len(self.species) == 2 and self.species[0].z * self.species[1].z < 0


def charge_density(species, c):
    """``rho = sum_i z_i c_i`` nodewise."""
    if len(c) != len(species):
        raise ArityError(f"expected {len(species)} concentration fields, got {len(c)}")
    rho = np.zeros_like(np.asarray(c[0], dtype=float))
    for s, ci in zip(species, c):
        rho += s.z * np.asarray(ci, dtype=float)
    return rho


def _assemble(diag, east, west, north, south):
    m, n = diag.shape
    N = m * n
    idx = np.arange(N).reshape(m, n)
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [diag.ravel()]
    for coef, sl_p, sl_q in (
        (east, np.s_[:, :-1], np.s_[:, 1:]),
        (west, np.s_[:, 1:], np.s_[:, :-1]),
        (north, np.s_[:-1, :], np.s_[1:, :]),
        (south, np.s_[1:, :], np.s_[:-1, :]),
    ):
        rows.append(idx[sl_p].ravel())
        cols.append(idx[sl_q].ravel())
        vals.append(coef[sl_p].ravel())
    return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))


def _solve_mmatrix(A, b):
    lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options=dict(SymmetricMode=True, Equil=False))
    x = lu.solve(b)
    nb = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / nb if nb > 0 else float(np.linalg.norm(x))
    if not res <= RESIDUAL_TOL:
        raise SolverError(f"concentration solve residual {res:.3e} above {RESIDUAL_TOL:g}", residual=res)
    return x


def advance_species(grid, sp_, c, u, phi, dt, forcing=None, advection="sg", sign_check=True):
    """One implicit step for a single species; boundary nodes end at ``gamma``."""
    c = np.asarray(c, dtype=float)
    if advection == "sg":
        diag, east, west, north, south = kernels.sg_stencil(phi, u[0], u[1], sp_.z, sp_.D, grid.hx, grid.hy, dt, 1.0)
        start = c
    elif advection == "upwind":
        diag, east, west, north, south = kernels.sg_stencil(phi, u[0], u[1], sp_.z, sp_.D, grid.hx, grid.hy, dt, 0.0)
        start = kernels.upwind(c, u[0], u[1], dt, grid.hx, grid.hy)
    else:
        raise ValueError(f"unknown advection scheme {advection!r}")
    new = sp_.gamma.apply(np.empty_like(c))
    b = start[1:-1, 1:-1].copy()
    if forcing is not None:
        b += dt * np.asarray(forcing, dtype=float)[1:-1, 1:-1]
    # Dirichlet neighbours move to the right-hand side
    b[:, 0] -= west[:, 0] * new[1:-1, 0]
    b[:, -1] -= east[:, -1] * new[1:-1, -1]
    b[0, :] -= south[0, :] * new[0, 1:-1]
    b[-1, :] -= north[-1, :] * new[-1, 1:-1]
    A = _assemble(diag, east, west, north, south)
    new[1:-1, 1:-1] = _solve_mmatrix(A, b.ravel()).reshape(b.shape)
    if sign_check:
        lo = float(np.min(new))
        if lo < POSITIVITY_FLOOR:
            raise PositivityViolationError(
                f"species {sp_.name or '?'}: concentration {lo:.3e} below {POSITIVITY_FLOOR:g}")
    return new


def advance_concentrations(grid, species, c, u, phi, dt, forcing=None, advection="sg"):
    """Advance every species one step with ``(u, phi)`` frozen.

    Parameters
    ----------
    grid : Grid
    species : SpeciesSet
    c : sequence of ndarray
        Concentrations; boundary nodes are expected to equal ``gamma``.
    u : VectorField
    phi : ndarray
        Electric potential including its boundary values.
    dt : float
    forcing : sequence of ndarray or None
        Extra source per species, added at the new time level.
    advection : {"sg", "upwind"}

    Returns
    -------
    list of ndarray
    """
    if len(c) != len(species):
        raise ArityError(f"expected {len(species)} concentration fields, got {len(c)}")
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    out = []
    for i, s in enumerate(species):
        f = None if forcing is None else forcing[i]
        out.append(advance_species(grid, s, c[i], u, phi, dt, forcing=f, advection=advection))
    return out
