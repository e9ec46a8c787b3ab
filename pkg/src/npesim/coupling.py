"""Time integration of the coupled system.

One step: charge density, potential, concentrations with ``(u, phi)`` frozen,
vorticity with ``(rho, phi)`` frozen, velocity. With ``picard_k > 1`` the step
is repeated, each pass re-freezing the couplings at the latest iterate but
always starting from the beginning-of-step state, until the relative change
drops below ``picard_tol``.
"""
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import record as record_diagnostics
from .errors import NPEError, SimulationError, ValidationError
from .euler import VorticityState, advance_vorticity, recover_velocity, velocity_from_stream
from .mesh import BoundaryTrace, Grid, VectorField, curl
from .nernst_planck import Species, SpeciesSet, advance_concentrations, charge_density
from .poisson import decompose_potential
from .profiles import EDGES, canonical, eval_field, trace_from_profiles

DELTA = 1e-30
TIME_EPS = 1e-12


class PicardWarning(UserWarning):
    """The fixed-point change grew on two consecutive iterations."""


def _edge_map(spec):
    if isinstance(spec, str):
        spec = {e: spec for e in EDGES}
    missing = [e for e in EDGES if e not in spec]
    if missing:
        raise ValidationError(f"boundary profile missing edges {missing}")
    return {e: canonical(spec[e]) for e in EDGES}


@dataclass
class SpeciesConfig:
    z: float
    D: float
    gamma: dict = field(default_factory=lambda: "const:0")
    c0: str = "lift"

    def __post_init__(self):
        self.z = float(self.z)
        self.D = float(self.D)
        self.gamma = _edge_map(self.gamma)
        self.c0 = canonical(self.c0)


@dataclass
class SimConfig:
    """Resolved run configuration. Profiles are kept as canonical text so the config serialises exactly."""

    nx: int
    ny: int
    species: list
    Lx: float = 1.0
    Ly: float = 1.0
    mode: str = "Unrestricted"
    epsilon: float = 1.0
    K: float = 1.0
    h: dict = field(default_factory=lambda: "const:0")
    stream: str = "const:0"
    T_final: float = 1.0
    cfl: float = 0.5
    picard_k: int = 1
    picard_tol: float = 1e-10
    dt: float | None = None
    output_every: float | None = None
    snapshots: bool = True
    p_monitor: float = 4.0
    interp_order: int = 1
    advection: str = "sg"
    force_sign: float = 1.0

    def __post_init__(self):
        self.species = [s if isinstance(s, SpeciesConfig) else SpeciesConfig(**s) for s in self.species]
        self.h = _edge_map(self.h)
        self.stream = canonical(self.stream)
        self.validate()

    def validate(self):
        checks = (
            (self.epsilon > 0, "epsilon > 0"),
            (self.K > 0, "K > 0"),
            (0 < self.cfl <= 1, "0 < cfl <= 1"),
            (int(self.picard_k) == self.picard_k and self.picard_k >= 1, "picard_k >= 1 (integer)"),
            (self.picard_tol >= 0, "picard_tol >= 0"),
            (self.T_final >= 0 and math.isfinite(self.T_final), "T_final >= 0"),
            (self.dt is None or self.dt > 0, "dt > 0"),
            (self.output_every is None or self.output_every > 0, "output_every > 0"),
            (self.p_monitor >= 1, "p_monitor >= 1"),
            (self.interp_order in (1, 3), "interp_order in {1, 3}"),
            (self.advection in ("sg", "upwind"), "advection in {sg, upwind}"),
            (self.force_sign in (1.0, -1.0), "force_sign in {1, -1}"),
            (self.Lx > 0 and self.Ly > 0, "Lx > 0 and Ly > 0"),
        )
        for ok, label in checks:
            if not ok:
                raise ValidationError(f"config constraint violated: {label}")
        self.picard_k = int(self.picard_k)
        grid = self.grid
        self.species_set(grid)
        self.h_trace(grid)
        return self

    @property
    def grid(self):
        return Grid(int(self.nx), int(self.ny), float(self.Lx), float(self.Ly))

    def species_set(self, grid=None):
        grid = grid or self.grid
        out = []
        for i, s in enumerate(self.species, start=1):
            trace = trace_from_profiles(grid, s.gamma)
            out.append(Species(s.z, s.D, trace, None, name=str(i)))
        return SpeciesSet(out, self.mode)

    def h_trace(self, grid=None):
        return trace_from_profiles(grid or self.grid, self.h)

    @property
    def homogeneous(self):
        """Zero boundary data for every species and the potential."""
        zero = canonical("const:0")
        return all(v == zero for v in self.h.values()) and all(
            v == zero for s in self.species for v in s.gamma.values())

    @property
    def equal_diffusivity(self):
        return len({s.D for s in self.species}) == 1

    @property
    def cadence(self):
        return self.output_every if self.output_every is not None else self.T_final


@dataclass
class SimState:
    t: float
    c: list
    phi: np.ndarray
    phi0: np.ndarray
    phih: np.ndarray
    rho: np.ndarray
    vort: VorticityState
    dt: float = 0.0
    picard_iterations: int = 0
    picard_contracting: bool = True
    boundary_overwrite: float = 0.0

    @property
    def omega(self):
        return self.vort.omega

    @property
    def u(self):
        return self.vort.u

    @property
    def theta(self):
        return self.vort.theta

    def copy(self):
        return replace(self, c=[ci.copy() for ci in self.c], phi=self.phi.copy(), phi0=self.phi0.copy(),
                       phih=self.phih.copy(), rho=self.rho.copy(), vort=self.vort.copy())


def _potential(grid, species, c, h_trace, epsilon):
    rho = charge_density(species, c)
    phi, phi0, phih = decompose_potential(grid, rho, h_trace, epsilon)
    return rho, phi, phi0, phih


def initial_state(config, c0=None, omega0=None, t=0.0, species=None, h_trace=None):
    """Initial state from the config profiles, optionally overriding ``c0`` or ``omega0`` arrays.

    Concentration boundary nodes are overwritten by ``gamma``; the largest
    change is kept in ``boundary_overwrite``. Without ``omega0`` the vorticity
    is the discrete curl of the velocity of the stream profile.
    """
    grid = config.grid
    species = species or config.species_set(grid)
    h_trace = h_trace or config.h_trace(grid)
    c = []
    overwrite = 0.0
    for i, s in enumerate(species):
        if c0 is not None:
            ci = np.array(c0[i], dtype=float)
            grid.check_field(ci, f"c0[{i}]")
        else:
            ci = eval_field(config.species[i].c0, grid, lift_trace=s.gamma)
        before = ci.copy()
        s.gamma.apply(ci)
        overwrite = max(overwrite, float(np.max(np.abs(ci - before))))
        if np.min(ci) < 0:
            raise ValidationError(f"c0 >= 0 required for species {i + 1}, min is {np.min(ci)!r}")
        c.append(ci)
    if omega0 is None:
        psi = eval_field(config.stream, grid)
        omega = curl(grid, velocity_from_stream(grid, psi))
    else:
        omega = np.array(omega0, dtype=float)
        grid.check_field(omega, "omega0")
    theta, u = recover_velocity(grid, omega)
    rho, phi, phi0, phih = _potential(grid, species, c, h_trace, config.epsilon)
    return SimState(float(t), c, phi, phi0, phih, rho, VorticityState(omega, theta, u),
                    boundary_overwrite=overwrite)


def stability_bound(state, config):
    """The uncapped step ``cfl * min(...)`` of the advective and drift limits."""
    grid = config.grid
    u1 = float(np.max(np.abs(state.u.ux)))
    u2 = float(np.max(np.abs(state.u.uy)))
    gpx, gpy = np.gradient(state.phi, grid.hy, grid.hx, edge_order=2)[::-1]
    gphi = float(np.max(np.hypot(gpx, gpy)))
    h = min(grid.hx, grid.hy)
    Dmax = max(s.D for s in config.species)
    zstar = max(abs(s.z) for s in config.species)
    bounds = (
        grid.hx / (u1 + DELTA),
        grid.hy / (u2 + DELTA),
        1.0 / (u1 / grid.hx + u2 / grid.hy + DELTA),
        h**2 / (4.0 * Dmax * zstar * gphi * h + DELTA),
    )
    return config.cfl * min(bounds)


def _next_output(t, config):
    cad = config.cadence
    if cad <= 0:
        return config.T_final
    k = math.floor(t / cad + TIME_EPS) + 1
    return min(config.T_final, k * cad)


def _is_output_time(t, config):
    if t >= config.T_final:
        return True
    k = t / config.cadence
    return abs(k - round(k)) <= 1e-9


def compute_dt(state, config):
    """Step size: stability bound (or the fixed ``config.dt``) capped by the next output time."""
    dt = config.dt if config.dt is not None else min(stability_bound(state, config), config.cadence)
    return min(dt, _next_output(state.t, config) - state.t)


def _rel_change(new, old):
    scale = max(float(np.max(np.abs(new))), 1e-300)
    return float(np.max(np.abs(new - old))) / scale


def step(state, config, dt=None, forcing=None, grid=None, species=None, h_trace=None):
    """Advance one step; returns a new state (the input is not modified).

    ``forcing(t)`` may return ``(F_c list, F_omega)`` added at the new time level.
    """
    grid = grid or config.grid
    species = species or config.species_set(grid)
    h_trace = h_trace or config.h_trace(grid)
    dt = compute_dt(state, config) if dt is None else dt
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    t_new = state.t + dt
    target = _next_output(state.t, config)
    if abs(t_new - target) <= TIME_EPS * max(1.0, abs(target)):
        t_new = target
    Fc, Fw = forcing(t_new) if forcing is not None else (None, None)

    current = state
    changes = []
    contracting = True
    k = 0
    for k in range(1, config.picard_k + 1):
        c_new = advance_concentrations(grid, species, state.c, current.u, current.phi, dt,
                                       forcing=Fc, advection=config.advection)
        frozen = VorticityState(state.omega, current.theta, current.u)
        omega_new = advance_vorticity(grid, frozen, current.rho, current.phi, dt, config.K,
                                      forcing=Fw, order=config.interp_order, sign=config.force_sign)
        theta, u = recover_velocity(grid, omega_new)
        rho, phi, phi0, phih = _potential(grid, species, c_new, h_trace, config.epsilon)
        candidate = SimState(t_new, c_new, phi, phi0, phih, rho, VorticityState(omega_new, theta, u),
                             dt=dt, boundary_overwrite=state.boundary_overwrite)
        change = max([_rel_change(a, b) for a, b in zip(c_new, current.c)] + [_rel_change(omega_new, current.omega)])
        changes.append(change)
        current = candidate
        if len(changes) >= 3 and changes[-1] > changes[-2] > changes[-3]:
            contracting = False
            warnings.warn(f"Picard iteration not contracting at t={t_new:g}: changes {changes}", PicardWarning)
        if change <= config.picard_tol:
            break
    current.picard_iterations = k
    current.picard_contracting = contracting
    return current


@dataclass
class Trajectory:
    """States at the output cadence plus one diagnostics record per step (index 0 = initial)."""

    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    failed: bool = False
    error: str = ""

    @property
    def final(self):
        return self.states[-1]

    @property
    def times(self):
        return np.array([r.t for r in self.records])


def run(config, initial=None, forcing=None, on_step=None, max_steps=None, species=None, h_trace=None):
    """Step from ``initial`` until ``T_final``.

    ``on_step(state, record)`` is called after every accepted step. On a
    sub-module failure a :class:`SimulationError` carrying the partial
    trajectory (ending with the last valid state) is raised. ``species`` and
    ``h_trace`` replace the profile-built ones (arbitrary boundary arrays).
    """
    grid = config.grid
    species = species or config.species_set(grid)
    h_trace = h_trace or config.h_trace(grid)
    state = initial if initial is not None else initial_state(config)
    traj = Trajectory()
    rec = record_diagnostics(state, config, species=species)
    traj.states.append(state)
    traj.records.append(rec)
    if on_step is not None:
        on_step(state, rec)
    n = 0
    last_saved = True
    while config.T_final - state.t > TIME_EPS * max(1.0, config.T_final):
        if max_steps is not None and n >= max_steps:
            break
        try:
            new = step(state, config, forcing=forcing, grid=grid, species=species, h_trace=h_trace)
            rec = record_diagnostics(new, config, previous=traj.records[-1], species=species)
            for i, m in enumerate(rec.min_c):
                if m < 0:
                    raise SimulationError(f"species {i + 1} went negative ({m!r}) at t={new.t:g}")
        except NPEError as exc:
            if not last_saved:
                traj.states.append(state)
            traj.failed = True
            traj.error = f"{type(exc).__name__}: {exc}"
            raise SimulationError(traj.error, trajectory=traj, cause=exc) from exc
        state = new
        n += 1
        traj.records.append(rec)
        if on_step is not None:
            on_step(state, rec)
        last_saved = _is_output_time(state.t, config)
        if last_saved:
            traj.states.append(state)
    if traj.states[-1] is not state:
        traj.states.append(state)
    return traj
