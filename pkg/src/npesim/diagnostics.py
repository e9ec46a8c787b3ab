"""Monitored norms, identities and their checks.

All integrals use the trapezoidal weights of the grid. ``c_tilde`` is the
concentration minus the bilinear boundary lift of its trace, so it vanishes
on the boundary.
"""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InapplicableCheckError
from .euler import tangential_boundary_speed
from .mesh import coons_lift, gradient, integrate, laplacian_interior, lp_norm

ENERGY_FLOOR = 1e-10


@dataclass
class DiagnosticsRecord:
    t: float
    dt: float
    energy_u: float
    energy_phi0: float
    l2_c: list
    lp_c: list
    grad_c_l2: list
    min_c: list
    rho_l3: float
    omega_l2: float
    omega_l3: float
    dissipation: float
    charge_dissipation: float
    energy_identity_residual: float
    tangential_boundary_u_max: float
    grad_phi_linf: float
    neutrality_margin: float
    poisson_residual: float
    poisson_residual_corner: float
    picard_iterations: int
    p: float = 4.0

    @property
    def energy(self):
        return self.energy_u + self.energy_phi0

    @property
    def u_l2(self):
        return math.sqrt(2.0 * self.energy_u)

    def row(self):
        """Flat ``(column, value)`` pairs in the fixed CSV order."""
        out = [("t", self.t), ("dt", self.dt), ("energy_u", self.energy_u), ("energy_phi0", self.energy_phi0),
               ("energy", self.energy)]
        for name in ("l2_c", "lp_c", "grad_c_l2", "min_c"):
            for i, v in enumerate(getattr(self, name), start=1):
                out.append((f"{name}_{i}", v))
        for name in ("rho_l3", "omega_l2", "omega_l3", "dissipation", "charge_dissipation",
                     "energy_identity_residual", "tangential_boundary_u_max", "grad_phi_linf",
                     "neutrality_margin", "poisson_residual", "poisson_residual_corner", "picard_iterations"):
            out.append((name, getattr(self, name)))
        return out


def _poisson_residuals(grid, phi, rho, epsilon):
    # normwise in max-norm: |r| / (|rho| + eps |Lap_h| |phi|)
    lap = epsilon * laplacian_interior(grid, phi)
    r = np.abs(-lap - rho[1:-1, 1:-1])
    norm_a = epsilon * (4.0 / grid.hx**2 + 4.0 / grid.hy**2)
    scale = max(float(np.max(np.abs(rho))) + norm_a * float(np.max(np.abs(phi))), 1e-300)
    corner = grid.corner_adjacent_mask[1:-1, 1:-1]
    inner = float(np.max(r[~corner])) / scale if np.any(~corner) else 0.0
    return inner, float(np.max(r[corner])) / scale


def neutrality_margin(species, c):
    """``min(z1 c1 - z2 c2 - |rho|)`` for two species of opposite sign, else NaN.

    Computed with the same operations as ``charge_density`` so that the
    inequality holds exactly in floating point.
    """
    if not species.opposite_pair:
        return float("nan")
    a = species[0].z * c[0]
    b = species[1].z * c[1]
    rho = np.zeros_like(a)
    rho += a
    rho += b
    return float(np.min((np.abs(a) + np.abs(b)) - np.abs(rho)))


def record(state, config, previous=None, species=None):
    """Diagnostics of one state. Pure: identical inputs give identical records.

    ``previous`` (the record of the preceding step) enables the energy
    identity residual; ``species`` overrides the profile-built species.
    """
    grid = config.grid
    species = species or config.species_set(grid)
    p = float(config.p_monitor)
    K, eps = config.K, config.epsilon
    w = grid.weights

    ux, uy = state.u
    energy_u = 0.5 * integrate(grid, ux * ux + uy * uy)
    g0x, g0y = gradient(grid, state.phi0)
    grad_phi0_sq = g0x * g0x + g0y * g0y
    energy_phi0 = 0.5 * K * eps * integrate(grid, grad_phi0_sq)

    l2_c, lp_c, grad_c, min_c = [], [], [], []
    dissipation = 0.0
    charge_flux = np.zeros(grid.shape)
    for s, ci in zip(species, state.c):
        ct = ci - coons_lift(grid, s.gamma)
        gx, gy = gradient(grid, ct)
        l2_c.append(lp_norm(grid, ci, 2))
        lp_c.append(lp_norm(grid, ci, p))
        grad_c.append(math.sqrt(integrate(grid, gx * gx + gy * gy)))
        min_c.append(float(np.min(ci)))
        dissipation += K * s.D * s.z**2 * integrate(grid, ci * grad_phi0_sq)
        charge_flux += s.D * s.z * ct
    charge_dissipation = K / eps * float(np.sum(w * state.rho * charge_flux))

    gpx, gpy = gradient(grid, state.phi)
    inner, corner = _poisson_residuals(grid, state.phi, state.rho, eps)

    resid = float("nan")
    if previous is not None and config.homogeneous and config.equal_diffusivity:
        e_new = energy_u + energy_phi0
        resid = e_new - previous.energy + state.dt * (dissipation + charge_dissipation)

    return DiagnosticsRecord(
        t=float(state.t),
        dt=float(state.dt),
        energy_u=energy_u,
        energy_phi0=energy_phi0,
        l2_c=l2_c,
        lp_c=lp_c,
        grad_c_l2=grad_c,
        min_c=min_c,
        rho_l3=integrate(grid, np.abs(state.rho) ** 3),
        omega_l2=lp_norm(grid, state.omega, 2),
        omega_l3=lp_norm(grid, state.omega, 3),
        dissipation=dissipation,
        charge_dissipation=charge_dissipation,
        energy_identity_residual=resid,
        tangential_boundary_u_max=tangential_boundary_speed(state.u),
        grad_phi_linf=float(np.max(np.hypot(gpx, gpy))),
        neutrality_margin=neutrality_margin(species, state.c),
        poisson_residual=inner,
        poisson_residual_corner=corner,
        picard_iterations=int(state.picard_iterations),
        p=p,
    )


# ---------------------------------------------------------------------------
# checks


@dataclass
class EnergyReport:
    ok: bool
    first_violation: int | None
    max_excess: float
    increments: np.ndarray = field(repr=False)
    tolerances: np.ndarray = field(repr=False)


def energy_tolerances(series):
    """Per-step tolerance ``10*dt*max(dissipation) + 1e-10``."""
    dmax = max((r.dissipation for r in series), default=0.0)
    return np.array([10.0 * r.dt * dmax + ENERGY_FLOOR for r in series[1:]])


def check_energy_decay(series, config):
    """Energy ``E = energy_u + energy_phi0`` must not increase beyond the per-step tolerance.

    Only meaningful with zero boundary data and equal diffusivities, where
    every exchange term is either a transfer or sign-definite.
    """
    if not config.homogeneous:
        raise InapplicableCheckError("energy decay check needs zero boundary data (gamma = 0, h = 0)")
    if not config.equal_diffusivity:
        raise InapplicableCheckError("energy decay check needs equal diffusivities")
    E = np.array([r.energy for r in series])
    inc = np.diff(E)
    tol = energy_tolerances(series)
    excess = inc - tol
    bad = np.flatnonzero(excess > 0)
    return EnergyReport(
        ok=bad.size == 0,
        first_violation=int(bad[0]) + 1 if bad.size else None,
        max_excess=float(np.max(excess)) if excess.size else 0.0,
        increments=inc,
        tolerances=tol,
    )


MONITORED = ("u_l2", "grad_phi0_l2", "l2_c", "lp_c", "rho_l3", "omega_l2", "omega_l3")


def monitored_series(series, eps=None, K=None):
    """Mapping name -> 1-D array for every monitored norm (per species for ``c``)."""
    out = {"u_l2": np.array([r.u_l2 for r in series])}
    if series and K is not None and eps is not None:
        out["grad_phi0_l2"] = np.array([math.sqrt(2.0 * r.energy_phi0 / (K * eps)) for r in series])
    n = len(series[0].l2_c) if series else 0
    for i in range(n):
        out[f"l2_c_{i + 1}"] = np.array([r.l2_c[i] for r in series])
        out[f"lp_c_{i + 1}"] = np.array([r.lp_c[i] for r in series])
    for name in ("rho_l3", "omega_l2", "omega_l3"):
        out[name] = np.array([getattr(r, name) for r in series])
    return out


def doubling_flags(t, q, floor=1e-12, window=None):
    """Indices where the doubling time of the running max has halved.

    With ``m`` the running max of ``|q|``, the doubling time at index ``n``
    is ``tau_n = t_n - t_k`` for the last ``k`` with ``m_k <= m_n / 2``.
    Index ``n`` is flagged when ``tau_n <= tau_k / 2``: the series doubled
    twice, the second time in at most half the time. Steady, linear and
    exponential growth never trigger; finite-time blow-up always does.
    Doublings starting below ``floor`` or taking longer than ``window``
    are ignored.
    """
    t = np.asarray(t, dtype=float)
    m = np.maximum.accumulate(np.abs(np.asarray(q, dtype=float)))
    tau = np.full(m.size, np.nan)
    prev = np.full(m.size, -1)
    flags = []
    for n in range(m.size):
        if m[n] <= 0:
            continue
        k = int(np.searchsorted(m, 0.5 * m[n], side="right")) - 1
        if k < 0 or m[k] < floor:
            continue
        tau[n] = t[n] - t[k]
        prev[n] = k
        if window is not None and tau[n] > window:
            continue
        if not np.isnan(tau[k]) and tau[n] <= 0.5 * tau[k]:
            flags.append(n)
    return flags


@dataclass
class BoundednessReport:
    ok: bool
    flags: dict

    @property
    def first_flag(self):
        hits = [v[0] for v in self.flags.values() if v]
        return min(hits) if hits else None


def check_boundedness(series, window=None, floor=1e-12, config=None):
    """Flag blow-up-like growth in every monitored norm; a property check, not a constant estimate."""
    if not series:
        raise ValueError("boundedness check needs a nonempty series")
    t = np.array([r.t for r in series])
    eps = config.epsilon if config is not None else None
    K = config.K if config is not None else None
    flags = {name: doubling_flags(t, q, floor=floor, window=window)
             for name, q in monitored_series(series, eps=eps, K=K).items()}
    return BoundednessReport(ok=not any(flags.values()), flags=flags)


# ---------------------------------------------------------------------------
# CSV


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def csv_header(n_species):
    probe = DiagnosticsRecord(0, 0, 0, 0, [0] * n_species, [0] * n_species, [0] * n_species, [0] * n_species,
                              0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    return [k for k, _ in probe.row()]


def write_csv(series, path_or_file, n_species=None):
    n = n_species if n_species is not None else len(series[0].l2_c)
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(n))
        for r in series:
            w.writerow([_fmt(v) for _, v in r.row()])
    finally:
        if own:
            fh.close()


def csv_text(series):
    buf = io.StringIO()
    write_csv(series, buf)
    return buf.getvalue()


def read_csv(path):
    """Rows of a diagnostics CSV as a dict of float arrays keyed by column."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}
