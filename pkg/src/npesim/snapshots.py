"""Field snapshots as legacy ASCII VTK structured points or ``x,y,value`` CSV.

Values are written with 17 significant digits so a read returns the exact
doubles. The VTK title line carries ``t``, ``Lx`` and ``Ly`` because the
spacing alone does not round-trip the side lengths.
"""
import re

import numpy as np

from .errors import ValidationError
from .mesh import Grid

_TITLE = re.compile(r"t=(\S+) Lx=(\S+) Ly=(\S+)")


def state_fields(state):
    """Named nodal fields of a state, in a fixed order."""
    out = {f"c_{i}": c for i, c in enumerate(state.c, start=1)}
    out.update(omega=state.omega, theta=state.theta, ux=state.u.ux, uy=state.u.uy,
               phi=state.phi, phi0=state.phi0, phih=state.phih, rho=state.rho)
    return out


def write_vtk(path, grid, fields, t=0.0):
    n = grid.nx * grid.ny
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("npesim snapshot t=%.17g Lx=%.17g Ly=%.17g\n" % (t, grid.Lx, grid.Ly))
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {grid.nx} {grid.ny} 1\n")
        fh.write("ORIGIN 0 0 0\n")
        fh.write("SPACING %.17g %.17g 1\n" % (grid.hx, grid.hy))
        fh.write(f"POINT_DATA {n}\n")
        for name, f in fields.items():
            f = np.asarray(f, dtype=float)
            grid.check_field(f, name)
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, f.reshape(-1, 1), fmt="%.17g")


def read_vtk(path):
    """Returns ``(grid, t, fields)``."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# vtk DataFile"):
        raise ValidationError(f"{path}: not a legacy VTK file")
    m = _TITLE.search(lines[1])
    if m is None:
        raise ValidationError(f"{path}: missing t/Lx/Ly in the title line")
    t, Lx, Ly = (float(v) for v in m.groups())
    dims = next(l for l in lines if l.startswith("DIMENSIONS")).split()
    grid = Grid(int(dims[1]), int(dims[2]), Lx, Ly)
    n = grid.nx * grid.ny
    fields = {}
    i = 0
    while i < len(lines):
        if lines[i].startswith("SCALARS"):
            name = lines[i].split()[1]
            vals = np.array([float(v) for v in lines[i + 2:i + 2 + n]])
            if vals.size != n:
                raise ValidationError(f"{path}: field {name} truncated")
            fields[name] = vals.reshape(grid.shape)
            i += 2 + n
        else:
            i += 1
    return grid, t, fields


def write_csv(path, grid, f):
    X, Y = grid.XY
    data = np.column_stack([X.ravel(), Y.ravel(), np.asarray(f, dtype=float).ravel()])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="x,y,value", comments="")


def read_csv(path, grid):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 2].reshape(grid.shape)
