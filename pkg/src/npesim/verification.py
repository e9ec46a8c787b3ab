"""Manufactured solutions: forcing, forced runs and observed convergence orders.

A case prescribes ``c_i(x, y, t)`` and a stream function ``psi(x, y, t)``
symbolically; the velocity is ``u = (psi_y, -psi_x)`` and ``omega = -Lap psi``.
The potential is not prescribed: it solves ``-eps Lap Phi = rho`` with zero
boundary values, computed spectrally from a fine sampling of ``rho``.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import sympy as sp

from .coupling import SimConfig, SpeciesConfig, initial_state, run
from .errors import InvalidCaseError, ValidationError
from .mesh import BoundaryTrace, Grid
from .nernst_planck import Species, SpeciesSet

X, Y, T = sp.symbols("x y t", real=True)


def _lam(expr):
    f = sp.lambdify((X, Y, T), expr, modules="numpy")

    def call(x, y, t):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(f(x, y, t), dtype=float), np.broadcast(x, y).shape).copy()

    return call


@dataclass
class ManufacturedCase:
    """Symbolic manufactured fields and the physical constants they are exact for."""

    c: list
    psi: object
    z: list
    D: list
    epsilon: float = 1.0
    K: float = 1.0
    Lx: float = 1.0
    Ly: float = 1.0
    name: str = "case"
    spectral_n: int = 256
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.c = [sp.sympify(ci) for ci in self.c]
        self.psi = sp.sympify(self.psi)
        if not (len(self.c) == len(self.z) == len(self.D)):
            raise ValidationError("case needs one z and one D per concentration")
        self.rho = sum(zi * ci for zi, ci in zip(self.z, self.c))
        lap = lambda e: sp.diff(e, X, 2) + sp.diff(e, Y, 2)  # noqa: E731
        self.omega = -lap(self.psi)
        f = self._f = {}
        f["c"] = [_lam(ci) for ci in self.c]
        f["c_t"] = [_lam(sp.diff(ci, T)) for ci in self.c]
        f["c_x"] = [_lam(sp.diff(ci, X)) for ci in self.c]
        f["c_y"] = [_lam(sp.diff(ci, Y)) for ci in self.c]
        f["c_lap"] = [_lam(lap(ci)) for ci in self.c]
        f["rho"] = _lam(self.rho)
        f["rho_x"] = _lam(sp.diff(self.rho, X))
        f["rho_y"] = _lam(sp.diff(self.rho, Y))
        f["ux"] = _lam(sp.diff(self.psi, Y))
        f["uy"] = _lam(-sp.diff(self.psi, X))
        f["omega"] = _lam(self.omega)
        f["omega_t"] = _lam(sp.diff(self.omega, T))
        f["omega_x"] = _lam(sp.diff(self.omega, X))
        f["omega_y"] = _lam(sp.diff(self.omega, Y))

    # -- exact fields --------------------------------------------------------

    def conc(self, i, x, y, t):
        return self._f["c"][i](x, y, t)

    def velocity(self, x, y, t):
        return self._f["ux"](x, y, t), self._f["uy"](x, y, t)

    def vorticity(self, x, y, t):
        return self._f["omega"](x, y, t)

    def validate(self, T_final=1.0, n=33, nt=9):
        """Nonnegative concentrations, time-independent traces, ``psi = 0`` on the boundary."""
        g = Grid(n, n, self.Lx, self.Ly)
        Xg, Yg = g.XY
        bmask = g.boundary_mask
        psi = _lam(self.psi)
        ref = [self.conc(i, Xg, Yg, 0.0) for i in range(len(self.c))]
        for t in np.linspace(0.0, T_final, nt):
            for i in range(len(self.c)):
                ci = self.conc(i, Xg, Yg, t)
                if np.min(ci) < 0:
                    raise InvalidCaseError(f"manufactured c_{i + 1} negative ({np.min(ci):.3e}) at t={t:g}")
                if np.max(np.abs(ci[bmask] - ref[i][bmask])) > 1e-12:
                    raise InvalidCaseError(f"manufactured c_{i + 1} boundary values depend on t")
            if np.max(np.abs(psi(Xg, Yg, t)[bmask])) > 1e-12:
                raise InvalidCaseError("manufactured psi must vanish on the boundary")
        return self

    # -- potential -----------------------------------------------------------

    def _phi_coefficients(self, t):
        key = float(t)
        if key in self._cache:
            return self._cache[key]
        N = self.spectral_n
        xs = np.linspace(0.0, self.Lx, N + 1)[1:-1]
        ys = np.linspace(0.0, self.Ly, N + 1)[1:-1]
        Xf, Yf = np.meshgrid(xs, ys)
        rho = self._f["rho"](Xf, Yf, t)
        b = scipy.fft.dstn(rho, type=1) / (N * N)
        m = np.arange(1, N) * np.pi / self.Lx
        n = np.arange(1, N) * np.pi / self.Ly
        A = b / (self.epsilon * (n[:, None] ** 2 + m[None, :] ** 2))
        if len(self._cache) > 8:
            self._cache.clear()
        self._cache[key] = (A, m, n)
        return A, m, n

    def potential(self, x, y, t, deriv=False):
        """``Phi`` (or ``(Phi_x, Phi_y)``) at points ``x, y`` by the sine series."""
        A, m, n = self._phi_coefficients(t)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        xf = np.broadcast_to(x, shape).ravel()
        yf = np.broadcast_to(y, shape).ravel()
        Sx, Sy = np.sin(np.outer(xf, m)), np.sin(np.outer(yf, n))
        if not deriv:
            return np.einsum("pn,nm,pm->p", Sy, A, Sx).reshape(shape)
        Cx, Cy = np.cos(np.outer(xf, m)) * m, np.cos(np.outer(yf, n)) * n
        px = np.einsum("pn,nm,pm->p", Sy, A, Cx).reshape(shape)
        py = np.einsum("pn,nm,pm->p", Cy, A, Sx).reshape(shape)
        return px, py

    def potential_grid(self, grid, t, deriv=False):
        """Tensor-product evaluation on grid nodes (cheaper than scattered points)."""
        A, m, n = self._phi_coefficients(t)
        Sx, Sy = np.sin(np.outer(grid.x, m)), np.sin(np.outer(grid.y, n))
        if not deriv:
            return Sy @ A @ Sx.T
        Cx, Cy = np.cos(np.outer(grid.x, m)) * m, np.cos(np.outer(grid.y, n)) * n
        return Sy @ A @ Cx.T, Cy @ A @ Sx.T

    # -- forcing -------------------------------------------------------------

    def forcing_at(self, x, y, t, grad_phi=None):
        """Forcings at points; ``grad_phi`` may be supplied to skip the series evaluation."""
        f = self._f
        px, py = grad_phi if grad_phi is not None else self.potential(x, y, t, deriv=True)
        ux, uy = f["ux"](x, y, t), f["uy"](x, y, t)
        rho = f["rho"](x, y, t)
        lap_phi = -rho / self.epsilon
        Fc = []
        for i, (zi, Di) in enumerate(zip(self.z, self.D)):
            c, cx, cy = f["c"][i](x, y, t), f["c_x"][i](x, y, t), f["c_y"][i](x, y, t)
            drift = zi * (cx * px + cy * py + c * lap_phi)
            Fc.append(f["c_t"][i](x, y, t) + ux * cx + uy * cy - Di * (f["c_lap"][i](x, y, t) + drift))
        # perp_grad(rho) . grad(phi) = -rho_y phi_x + rho_x phi_y
        source = -f["rho_y"](x, y, t) * px + f["rho_x"](x, y, t) * py
        Fw = (f["omega_t"](x, y, t) + ux * f["omega_x"](x, y, t) + uy * f["omega_y"](x, y, t)
              + self.K * source)
        return Fc, Fw


def manufactured_forcing(case, t, grid):
    """Forcings ``(F_c list, F_omega)`` at the nodes of ``grid`` at time ``t``."""
    Xg, Yg = grid.XY
    return case.forcing_at(Xg, Yg, t, grad_phi=case.potential_grid(grid, t, deriv=True))


# ---------------------------------------------------------------------------
# stock cases


def static_case():
    return ManufacturedCase([sp.Integer(2), sp.Integer(2)], sp.Integer(0), [1.0, -1.0], [1.0, 1.0], name="static")


def diffusion_case():
    """Two equal species decaying like the first sine mode: neutral, so ``Phi = 0``."""
    c = sp.exp(-2 * sp.pi**2 * T) * sp.sin(sp.pi * X) * sp.sin(sp.pi * Y)
    return ManufacturedCase([c, c], sp.Integer(0), [1.0, -1.0], [1.0, 1.0], name="diffusion")


def coupled_case(epsilon=1.0, K=1.0, D=(1.0, 1.0)):
    s = sp.sin(sp.pi * X) * sp.sin(sp.pi * Y)
    c1 = 2 + s * sp.cos(T)
    c2 = 2 - s * sp.cos(T)
    psi = sp.Rational(1, 10) * sp.sin(sp.pi * X) ** 2 * sp.sin(sp.pi * Y) ** 2 * sp.sin(T)
    return ManufacturedCase([c1, c2], psi, [1.0, -1.0], list(D), epsilon=epsilon, K=K, name="coupled")


CASES = {"static": static_case, "diffusion": diffusion_case, "coupled": coupled_case}


# ---------------------------------------------------------------------------
# forced runs


@dataclass
class RunError:
    n: int
    dt: float
    error_c: float
    error_omega: float
    error_u: float


def forced_run(case, n, dt, T_final, interp_order=3, picard_k=1):
    """Run the coupled solver with the case forcing from the exact initial data; returns final errors."""
    steps = T_final / dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ValidationError(f"T_final={T_final} is not a whole number of steps of dt={dt}")
    grid = Grid(n, n, case.Lx, case.Ly)
    Xg, Yg = grid.XY
    species = SpeciesSet([
        Species(z, D, BoundaryTrace.from_field(case.conc(i, Xg, Yg, 0.0)), name=str(i + 1))
        for i, (z, D) in enumerate(zip(case.z, case.D))
    ])
    config = SimConfig(n, n, [SpeciesConfig(z, D) for z, D in zip(case.z, case.D)], Lx=case.Lx, Ly=case.Ly,
                       epsilon=case.epsilon, K=case.K, T_final=T_final, dt=dt, output_every=T_final,
                       interp_order=interp_order, picard_k=picard_k, snapshots=False)
    h_trace = BoundaryTrace.constant(grid, 0.0)
    init = initial_state(config, c0=[case.conc(i, Xg, Yg, 0.0) for i in range(len(case.c))],
                         omega0=case.vorticity(Xg, Yg, 0.0), species=species, h_trace=h_trace)
    traj = run(config, init, forcing=lambda t: manufactured_forcing(case, t, grid), species=species,
               h_trace=h_trace)
    final = traj.final
    tf = final.t
    err_c = max(float(np.max(np.abs(final.c[i] - case.conc(i, Xg, Yg, tf)))) for i in range(len(case.c)))
    err_w = float(np.max(np.abs(final.omega - case.vorticity(Xg, Yg, tf))))
    ux, uy = case.velocity(Xg, Yg, tf)
    err_u = float(max(np.max(np.abs(final.u.ux - ux)), np.max(np.abs(final.u.uy - uy))))
    return RunError(n, dt, err_c, err_w, err_u)


def observed_orders(steps, errors, floor=1e-13):
    """Pairwise and least-squares orders of ``errors`` against ``steps``.

    Errors at the floor are reported as saturated (order ``inf``).
    """
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= floor):
        return np.full(max(errors.size - 1, 0), np.inf), np.inf
    e = np.maximum(errors, floor)
    pair = np.log(e[:-1] / e[1:]) / np.log(steps[:-1] / steps[1:])
    fit = float(np.polyfit(np.log(steps), np.log(e), 1)[0])
    return pair, fit


@dataclass
class OrderReport:
    kind: str
    runs: list
    order_c: float
    order_omega: float
    pair_c: np.ndarray
    pair_omega: np.ndarray

    @property
    def order(self):
        return min(self.order_c, self.order_omega)

    def rows(self):
        return [(r.n, r.dt, r.error_c, r.error_omega, r.error_u) for r in self.runs]


def convergence_study(case, grids, dts, T_final, interp_order=3, picard_k=1):
    """Forced runs over a refinement sequence.

    * one grid, several ``dts``: temporal study, orders against ``dt``
    * as many grids as ``dts`` (paired, e.g. ``dt ~ h^2``): spatial study,
      orders against ``h``
    * several grids, one ``dt``: spatial study at a fixed step
    """
    grids = [int(n) for n in grids]
    dts = [float(d) for d in dts]
    if len(grids) == 1:
        if len(dts) < 3:
            raise ValidationError("a temporal study needs at least 3 step sizes")
        pairs, kind = [(grids[0], d) for d in dts], "temporal"
    else:
        if len(grids) < 3:
            raise ValidationError("a spatial study needs at least 3 grids")
        if len(dts) == 1:
            dts = dts * len(grids)
        if len(dts) != len(grids):
            raise ValidationError("give one dt, or one dt per grid")
        pairs, kind = list(zip(grids, dts)), "spatial"
    case.validate(T_final)
    runs = [forced_run(case, n, dt, T_final, interp_order=interp_order, picard_k=picard_k) for n, dt in pairs]
    steps = [r.dt for r in runs] if kind == "temporal" else [case.Lx / (r.n - 1) for r in runs]
    pc, oc = observed_orders(steps, [r.error_c for r in runs])
    pw, ow = observed_orders(steps, [r.error_omega for r in runs])
    return OrderReport(kind, runs, oc, ow, pc, pw)
