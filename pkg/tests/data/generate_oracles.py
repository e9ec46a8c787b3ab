"""Regenerate the frozen oracle values in ``oracles.json``.

Independent of the package: the coupled manufactured forcing is derived here
with sympy from the closed-form potential ``Phi = cos(t) sin(pi x) sin(pi y)
/ (pi^2 eps)`` (exact for ``rho = 2 cos(t) sin(pi x) sin(pi y)``), and the
stream-function centre value is summed from its double sine series with
mpmath.

    python3 tests/data/generate_oracles.py
"""
import json
from pathlib import Path

import mpmath as mp
import numpy as np
import sympy as sp

x, y, t = sp.symbols("x y t", real=True)


def coupled_forcing(eps=1.0, K=1.0, D=(1.0, 1.0)):
    s = sp.sin(sp.pi * x) * sp.sin(sp.pi * y)
    c = [2 + s * sp.cos(t), 2 - s * sp.cos(t)]
    z = [1, -1]
    psi = sp.Rational(1, 10) * sp.sin(sp.pi * x) ** 2 * sp.sin(sp.pi * y) ** 2 * sp.sin(t)
    phi = sp.cos(t) * s / (sp.pi**2 * eps)
    ux, uy = sp.diff(psi, y), -sp.diff(psi, x)
    omega = -(sp.diff(psi, x, 2) + sp.diff(psi, y, 2))
    rho = z[0] * c[0] + z[1] * c[1]
    assert sp.simplify(-eps * (sp.diff(phi, x, 2) + sp.diff(phi, y, 2)) - rho) == 0
    out = []
    for ci, zi, Di in zip(c, z, D):
        flux_x = Di * (sp.diff(ci, x) + zi * ci * sp.diff(phi, x))
        flux_y = Di * (sp.diff(ci, y) + zi * ci * sp.diff(phi, y))
        out.append(sp.diff(ci, t) + ux * sp.diff(ci, x) + uy * sp.diff(ci, y) - sp.diff(flux_x, x) - sp.diff(flux_y, y))
    source = -sp.diff(rho, y) * sp.diff(phi, x) + sp.diff(rho, x) * sp.diff(phi, y)
    out.append(sp.diff(omega, t) + ux * sp.diff(omega, x) + uy * sp.diff(omega, y) + K * source)
    return [sp.lambdify((x, y, t), e, modules="mpmath") for e in out]


def stream_center(terms=4000):
    # -Lap theta = 1 on the unit square, theta = 0 on the boundary
    mp.mp.dps = 30
    total = mp.mpf(0)
    for m in range(1, terms, 2):
        for n in range(1, terms, 2):
            sgn = (-1) ** ((m - 1) // 2 + (n - 1) // 2)
            total += sgn * 16 / (mp.pi**4 * m * n * (m * m + n * n))
    return float(total)


def main():
    rng = np.random.default_rng(20240611)
    pts = rng.random((50, 3))
    pts[:, 2] *= 0.5
    fns = coupled_forcing()
    rows = []
    for px, py, pt in pts:
        vals = [float(f(mp.mpf(float(px)), mp.mpf(float(py)), mp.mpf(float(pt)))) for f in fns]
        rows.append([float(px), float(py), float(pt), *vals])
    data = {
        "coupled_forcing": {"columns": ["x", "y", "t", "F_c1", "F_c2", "F_omega"], "rows": rows},
        "stream_center_omega1": stream_center(),
    }
    path = Path(__file__).with_name("oracles.json")
    path.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
