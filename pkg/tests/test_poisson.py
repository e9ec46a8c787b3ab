import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from npesim.errors import ValidationError
from npesim.mesh import BoundaryTrace, Grid
from npesim.poisson import EllipticProblem, decompose_potential, relative_residual, solve_dirichlet


def sine(X, Y):
    return np.sin(np.pi * X) * np.sin(np.pi * Y)


def zero(g):
    return BoundaryTrace.constant(g, 0.0)


class TestSolveDirichlet:
    def test_zero(self, unit33):
        assert np.all(solve_dirichlet(unit33, EllipticProblem(unit33.zeros(), zero(unit33))) == 0)

    @pytest.mark.parametrize("method", ["dst", "cg"])
    def test_linear_exact(self, method):
        g = Grid(21, 17, 1.5, 1.0)
        f = g.sample(lambda X, Y: 0.3 + 2 * X - Y)
        u = solve_dirichlet(g, EllipticProblem(g.zeros(), BoundaryTrace.from_field(f)), method=method)
        assert np.abs(u - f).max() < 1e-12

    def test_sine_order(self):
        errs = []
        for n in (17, 33, 65):
            g = Grid(n, n)
            u = solve_dirichlet(g, EllipticProblem(2 * np.pi**2 * g.sample(sine), zero(g)))
            errs.append(np.abs(u - g.sample(sine)).max())
        orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
        assert min(orders) >= 1.9

    def test_boundary_exact(self, rng):
        g = Grid(17, 23, 1.0, 2.0)
        tr = BoundaryTrace.from_field(rng.normal(size=g.shape))
        u = solve_dirichlet(g, EllipticProblem(rng.normal(size=g.shape), tr, 0.5))
        assert np.array_equal(u[g.boundary_mask], tr.apply(g.zeros())[g.boundary_mask])

    def test_cg_matches_dst(self, rng):
        g = Grid(25, 19)
        p = EllipticProblem(rng.normal(size=g.shape), BoundaryTrace.from_field(rng.random(g.shape)), 2.0)
        a = solve_dirichlet(g, p, method="dst")
        b = solve_dirichlet(g, p, method="cg")
        assert np.abs(a - b).max() < 1e-8 * max(1.0, np.abs(a).max())

    def test_residual_small(self, rng):
        g = Grid(33, 33)
        rhs = rng.normal(size=g.shape)
        u = solve_dirichlet(g, EllipticProblem(rhs, zero(g), 0.1))
        assert relative_residual(g, u, rhs, 0.1) <= 1e-10

    def test_invalid(self, unit33):
        with pytest.raises(ValidationError):
            solve_dirichlet(unit33, EllipticProblem(unit33.zeros(), zero(unit33), scale=0.0))
        with pytest.raises(ValidationError):
            solve_dirichlet(unit33, EllipticProblem(np.zeros((3, 3)), zero(unit33)))
        with pytest.raises(ValueError):
            solve_dirichlet(unit33, EllipticProblem(unit33.zeros(), zero(unit33)), method="multigrid")


class TestDecompose:
    def test_all_zero(self, unit33):
        for f in decompose_potential(unit33, unit33.zeros(), zero(unit33), 0.5):
            assert np.all(f == 0)

    def test_linear_boundary(self, unit33):
        X, _ = unit33.XY
        phi, phi0, phih = decompose_potential(unit33, unit33.zeros(), BoundaryTrace.from_field(X), 1.0)
        assert np.all(phi0 == 0)
        assert np.abs(phih - X).max() < 1e-13 and np.abs(phi - X).max() < 1e-13

    def test_manufactured(self):
        eps = 0.05
        errs = []
        for n in (33, 65):
            g = Grid(n, n)
            phi, phi0, phih = decompose_potential(g, 2 * eps * np.pi**2 * g.sample(sine), zero(g), eps)
            assert np.all(phih == 0)
            errs.append(np.abs(phi - g.sample(sine)).max())
        assert errs[1] <= 2.0 * (1 / 64) ** 2 and errs[0] / errs[1] > 3.5

    def test_bad_epsilon(self, unit33):
        with pytest.raises(ValidationError):
            decompose_potential(unit33, unit33.zeros(), zero(unit33), 0.0)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 10.0))
def test_superposition_and_max_principle(seed, eps):
    g = Grid(13, 17, 1.0, 1.4)
    r = np.random.default_rng(seed)
    tr = BoundaryTrace.from_field(r.normal(size=g.shape))
    phi, phi0, phih = decompose_potential(g, r.normal(size=g.shape), tr, eps)
    assert np.abs(phi - phi0 - phih).max() <= 1e-10 * max(np.abs(phi).max(), 1e-300)
    assert np.all(phih >= tr.min() - 1e-12) and np.all(phih <= tr.max() + 1e-12)


@given(st.integers(0, 2**32 - 1))
def test_linearity_in_rho(seed):
    g = Grid(15, 15)
    r = np.random.default_rng(seed)
    r1, r2 = r.normal(size=(2, *g.shape))
    z = zero(g)
    s = lambda rho: solve_dirichlet(g, EllipticProblem(rho, z, 0.3))  # noqa: E731
    a, b = s(r1 + r2), s(r1) + s(r2)
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max()


@given(st.integers(0, 2**32 - 1))
def test_mirror_symmetry(seed):
    g = Grid(17, 13)
    r = np.random.default_rng(seed)
    rhs = r.normal(size=g.shape)
    rhs = rhs + rhs[:, ::-1]
    bnd = r.normal(size=g.shape)
    bnd = bnd + bnd[:, ::-1]
    u = solve_dirichlet(g, EllipticProblem(rhs, BoundaryTrace.from_field(bnd)))
    assert np.abs(u - u[:, ::-1]).max() <= 1e-12 * max(1.0, np.abs(u).max())
