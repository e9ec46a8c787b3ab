import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from npesim.coupling import SimConfig, SpeciesConfig, initial_state
from npesim.diagnostics import (check_boundedness, check_energy_decay, csv_header, doubling_flags,
                                energy_tolerances, neutrality_margin, read_csv, record, write_csv)
from npesim.errors import InapplicableCheckError
from npesim.mesh import BoundaryTrace, Grid
from npesim.nernst_planck import Species, SpeciesSet


def homogeneous(n=17, D=(1.0, 1.0)):
    return SimConfig(n, n, [SpeciesConfig(1, D[0]), SpeciesConfig(-1, D[1])], mode="TwoSpecies")


class TestRecord:
    def test_zero_state(self):
        cfg = homogeneous()
        r = record(initial_state(cfg), cfg)
        for name, v in r.row():
            if name not in ("picard_iterations",):
                assert v == 0.0 or (name == "energy_identity_residual" and math.isnan(v)), name

    def test_rest_state(self):
        kappa = 0.6
        cfg = SimConfig(17, 17, [SpeciesConfig(1, 1.0, f"const:{kappa}", "lift"),
                                 SpeciesConfig(-1, 1.0, f"const:{kappa}", "lift")], Lx=2.0, mode="TwoSpecies")
        r = record(initial_state(cfg), cfg)
        assert r.energy_u == 0.0 and r.rho_l3 == 0.0
        assert r.min_c == [kappa, kappa]
        assert all(abs(v - kappa * math.sqrt(2.0)) <= 1e-12 for v in r.l2_c)
        assert r.neutrality_margin == pytest.approx(2 * kappa, abs=1e-15)

    def test_manufactured_integrals(self):
        def entries(n):
            cfg = SimConfig(n, n, [SpeciesConfig(1, 1.0, "const:2", "const:2+sine:1"),
                                   SpeciesConfig(-1, 1.0, "const:2", "const:2+sine:-1")], mode="TwoSpecies")
            g = cfg.grid
            s = g.sample(lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y))
            state = initial_state(cfg, omega0=0.2 * np.pi**2 * s)
            return record(state, cfg)

        pi2 = math.pi**2
        exact = {
            "energy_u": 0.0025 * pi2,
            "energy_phi0": 1.0 / (4 * pi2),
            "l2_c_1": math.sqrt(4 + 16 / pi2 + 0.25),
            "l2_c_2": math.sqrt(4 - 16 / pi2 + 0.25),
            "grad_c_l2_1": math.sqrt(pi2 / 2),
            "rho_l3": 8 * (4 / (3 * math.pi)) ** 2,
            "omega_l2": 0.1 * pi2,
            "dissipation": 2 / pi2,
        }
        errs = []
        for n in (33, 65):
            row = dict(entries(n).row())
            errs.append({k: abs(row[k] - v) for k, v in exact.items()})
        for k in exact:
            assert errs[1][k] <= 5.0 * (1 / 64) ** 2 * max(1.0, exact[k]), k
            assert errs[1][k] < 1e-13 or errs[0][k] / errs[1][k] > 3.0, k

    def test_pure(self):
        cfg = SimConfig(17, 17, [SpeciesConfig(1, 1.0, "const:1", "lift+bump:1,0.5,0.5,0.2"),
                                 SpeciesConfig(-1, 0.5, "const:1", "lift")], stream="sine2:0.3", h="linear:0,1,0")
        s = initial_state(cfg)
        a = np.array([v for _, v in record(s, cfg).row()], dtype=float)
        b = np.array([v for _, v in record(s, cfg).row()], dtype=float)
        assert np.array_equal(a, b, equal_nan=True)

    def test_corner_residual_split(self):
        cfg = homogeneous()
        r = record(initial_state(cfg, c0=[np.ones((17, 17)) * 0, np.zeros((17, 17))]), cfg)
        assert r.poisson_residual == 0.0 and r.poisson_residual_corner == 0.0


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 5), st.floats(-5, -0.1))
def test_neutrality_margin_exact(seed, z1, z2):
    g = Grid(9, 9)
    tr = BoundaryTrace.constant(g, 0.0)
    r = np.random.default_rng(seed)
    sp_ = SpeciesSet([Species(z1, 1, tr), Species(z2, 1, tr)], "TwoSpecies")
    c = [r.random(g.shape) * 10 ** r.uniform(-3, 3), r.random(g.shape) * 10 ** r.uniform(-3, 3)]
    assert neutrality_margin(sp_, c) >= 0.0


def test_neutrality_margin_same_sign():
    g = Grid(5, 5)
    tr = BoundaryTrace.constant(g, 0.0)
    sp_ = SpeciesSet([Species(1, 1, tr), Species(1, 1, tr)], "TwoSpecies")
    assert math.isnan(neutrality_margin(sp_, [g.zeros(), g.zeros()]))


def fake_series(energies, dt=0.01, dissipation=1.0):
    cfg = homogeneous(9)
    base = record(initial_state(cfg), cfg)
    return [replace(base, t=i * dt, dt=dt if i else 0.0, energy_u=e, energy_phi0=0.0, dissipation=dissipation)
            for i, e in enumerate(energies)]


class TestEnergyCheck:
    def test_zero_run(self):
        cfg = homogeneous()
        rep = check_energy_decay(fake_series([0.0] * 5, dissipation=0.0), cfg)
        assert rep.ok and rep.first_violation is None

    def test_violation_index(self):
        cfg = homogeneous()
        # tolerance is 10 * 0.01 * 1 + 1e-10 = 0.1 per step
        rep = check_energy_decay(fake_series([1.0, 0.9, 0.95, 1.2, 1.0]), cfg)
        assert not rep.ok and rep.first_violation == 3
        assert rep.max_excess == pytest.approx(0.15)
        assert np.allclose(energy_tolerances(fake_series([1, 1, 1])), 0.1 + 1e-10)

    def test_inapplicable(self):
        with pytest.raises(InapplicableCheckError):
            check_energy_decay([], homogeneous(D=(1.0, 2.0)))
        cfg = SimConfig(9, 9, [SpeciesConfig(1, 1.0, "const:1"), SpeciesConfig(-1, 1.0)])
        with pytest.raises(InapplicableCheckError):
            check_energy_decay([], cfg)
        with pytest.raises(InapplicableCheckError):
            check_energy_decay([], SimConfig(9, 9, [SpeciesConfig(1, 1.0)], h="const:0.5"))


def brute_force_flags(t, q, floor=1e-12):
    """Independent rendering of the doubling-time-halving rule with plain loops."""
    m = []
    run = 0.0
    for v in q:
        run = max(run, abs(v))
        m.append(run)

    def doubling_time(n):
        if m[n] <= 0:
            return None, None
        ks = [k for k in range(n + 1) if m[k] <= m[n] / 2]
        if not ks or m[ks[-1]] < floor:
            return None, None
        return t[n] - t[ks[-1]], ks[-1]

    flags = []
    for n in range(len(q)):
        tau, k = doubling_time(n)
        if tau is None:
            continue
        tau_k, _ = doubling_time(k)
        if tau_k is not None and tau <= tau_k / 2:
            flags.append(n)
    return flags


class TestBoundedness:
    t = np.linspace(0.0, 1.0, 201)

    def test_steady_linear_exponential_pass(self):
        for q in (np.ones_like(self.t), 1 + 5 * self.t, np.exp(4 * self.t)):
            assert doubling_flags(self.t, q) == []

    def test_injected_blowup_flagged(self):
        q = np.where(self.t < 0.5, 1.0, 0.5 / (1.0 + 1e-3 - self.t))
        flags = doubling_flags(self.t, q)
        oracle = brute_force_flags(self.t, q)
        assert flags == oracle and flags
        assert self.t[flags[0]] > 0.5

    def test_doubly_exponential_after_slow_phase(self):
        # slow doubling (every 8 steps), then the factor per step squares
        n0 = 80
        q = [2.0 ** (n / 8) for n in range(n0 + 1)]
        for k in range(1, 7):
            q.append(q[n0] * 2.0 ** (2**k - 1))
        t = np.arange(len(q), dtype=float)
        flags = doubling_flags(t, q)
        assert flags == brute_force_flags(t, q)
        assert flags[0] == n0 + 1

    @given(st.lists(st.floats(0, 1e6), min_size=2, max_size=40))
    def test_matches_brute_force(self, q):
        t = np.arange(len(q), dtype=float)
        assert doubling_flags(t, q) == brute_force_flags(t, q)

    def test_window_and_floor(self):
        q = np.where(self.t < 0.5, 1e-14, 0.5 / (1.0 + 1e-3 - self.t))
        assert doubling_flags(self.t, q, floor=1e-20) == brute_force_flags(self.t, q, floor=1e-20)
        assert doubling_flags(self.t, q, window=1e-9) == []

    def test_report(self):
        cfg = homogeneous(9)
        series = fake_series([0.1 * (1 + i) for i in range(50)])
        rep = check_boundedness(series, config=cfg)
        assert rep.ok and rep.first_flag is None
        blow = fake_series([0.5 / (1.0 + 1e-3 - i / 49) for i in range(50)])
        rep = check_boundedness(blow, config=cfg)
        assert not rep.ok and rep.flags["u_l2"] and rep.first_flag == rep.flags["u_l2"][0]
        with pytest.raises(ValueError):
            check_boundedness([])


def test_csv_roundtrip(tmp_path):
    cfg = SimConfig(17, 17, [SpeciesConfig(1, 1.0, "const:1", "lift+bump:1,0.5,0.5,0.2"),
                             SpeciesConfig(-1, 0.5, "const:1", "lift")], stream="sine2:0.3")
    rec = record(initial_state(cfg), cfg)
    write_csv([rec, rec], tmp_path / "d.csv")
    back = read_csv(tmp_path / "d.csv")
    assert list(back) == csv_header(2)
    for name, v in rec.row():
        assert back[name][0] == float(v) or (math.isnan(v) and math.isnan(back[name][0]))
