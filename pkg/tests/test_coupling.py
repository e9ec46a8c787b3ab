import itertools
import warnings

import numpy as np
import pytest

from npesim import coupling
from npesim.coupling import (PicardWarning, SimConfig, SpeciesConfig, compute_dt, initial_state, run,
                             stability_bound, step)
from npesim.diagnostics import csv_text
from npesim.errors import ValidationError
from npesim.euler import VorticityState
from npesim.mesh import BoundaryTrace, Grid, VectorField
from npesim.nernst_planck import Species, SpeciesSet
from npesim.poisson import relative_residual
from npesim.verification import coupled_case, manufactured_forcing


def rest_config(**kw):
    base = dict(nx=17, ny=17, species=[SpeciesConfig(1, 1.0, "const:0.8", "const:0.8"),
                                       SpeciesConfig(-1, 0.5, "const:0.8", "const:0.8")],
                mode="TwoSpecies", T_final=1.0, output_every=0.25)
    base.update(kw)
    return SimConfig(**base)


def busy_config(**kw):
    base = dict(nx=33, ny=33, species=[SpeciesConfig(1, 0.1, "const:1", "lift+bump:1,0.4,0.5,0.1"),
                                       SpeciesConfig(-1, 0.05, "const:1", "lift+bump:0.5,0.6,0.4,0.1")],
                mode="TwoSpecies", epsilon=0.1, K=1.0, h="linear:0,1,0.5", stream="sine2:0.5",
                T_final=0.05, output_every=0.05)
    base.update(kw)
    return SimConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("field,value,label", [
        ("epsilon", 0.0, "epsilon > 0"), ("K", -1.0, "K > 0"), ("cfl", 1.5, "cfl"),
        ("picard_k", 0, "picard_k"), ("interp_order", 2, "interp_order"), ("advection", "lax", "advection"),
    ])
    def test_invariants(self, field, value, label):
        with pytest.raises(ValidationError, match=label):
            rest_config(**{field: value})

    def test_flags(self):
        assert not rest_config().homogeneous
        assert not rest_config().equal_diffusivity
        cfg = SimConfig(9, 9, [SpeciesConfig(1, 1.0), SpeciesConfig(-1, 1.0)])
        assert cfg.homogeneous and cfg.equal_diffusivity and cfg.cadence == cfg.T_final


class TestComputeDt:
    def test_quiescent_hits_cadence(self):
        cfg = SimConfig(17, 17, [SpeciesConfig(1, 1.0), SpeciesConfig(-1, 1.0)], T_final=2.0, output_every=0.1)
        assert compute_dt(initial_state(cfg), cfg) == pytest.approx(0.1, abs=1e-15)

    def test_cfl_arithmetic(self):
        cfg = SimConfig(101, 101, [SpeciesConfig(1, 1e-9), SpeciesConfig(-1, 1e-9)], cfl=0.5, T_final=1.0)
        state = initial_state(cfg)
        g = cfg.grid
        state.vort = VorticityState(g.zeros(), g.zeros(), VectorField(g.full(1.0), g.zeros()))
        dt = compute_dt(state, cfg)
        assert dt <= 0.005 + 1e-15 and dt == pytest.approx(0.005)

    def test_hand_evaluated(self):
        cfg = SimConfig(41, 21, [SpeciesConfig(2, 0.3), SpeciesConfig(-1, 0.2)], Lx=2.0, Ly=1.0, cfl=0.8,
                        h="linear:0,3,4", T_final=10.0)
        g = cfg.grid
        state = initial_state(cfg, c0=[g.zeros(), g.zeros()])
        state.vort = VorticityState(g.zeros(), g.zeros(), VectorField(g.full(0.5), g.full(-2.0)))
        hx = hy = 0.05
        grad_phi = 5.0  # |(3, 4)|
        expected = 0.8 * min(hx / 0.5, hy / 2.0, 1 / (0.5 / hx + 2.0 / hy), hx**2 / (4 * 0.3 * 2 * grad_phi * hx))
        assert compute_dt(state, cfg) == pytest.approx(expected, rel=1e-10)
        assert stability_bound(state, cfg) == pytest.approx(expected, rel=1e-10)

    def test_fixed_dt_and_final_cap(self):
        cfg = rest_config(dt=0.3, output_every=None, T_final=1.0)
        s = initial_state(cfg)
        assert compute_dt(s, cfg) == 0.3
        s.t = 0.9
        assert compute_dt(s, cfg) == pytest.approx(0.1)


class TestStep:
    def test_rest_state_fixed_point(self):
        cfg = rest_config()
        s0 = initial_state(cfg)
        s1 = step(s0, cfg)
        for a, b in zip(s1.c, s0.c):
            assert np.abs(a - b).max() <= 1e-12
        assert np.abs(s1.omega).max() <= 1e-12 and s1.picard_iterations == 1
        assert s1.t == pytest.approx(0.25)

    def test_input_not_modified(self):
        cfg = busy_config()
        s0 = initial_state(cfg)
        snap = s0.copy()
        step(s0, cfg)
        assert all(np.array_equal(a, b) for a, b in zip(s0.c, snap.c))
        assert np.array_equal(s0.omega, snap.omega) and s0.t == snap.t

    def test_picard_difference_second_order(self):
        diffs = []
        for dt in (0.004, 0.002, 0.001):
            out = []
            for k in (1, 3):
                cfg = busy_config(picard_k=k, picard_tol=0.0)
                out.append(step(initial_state(cfg), cfg, dt=dt))
            diffs.append(max(np.abs(out[0].c[0] - out[1].c[0]).max(), np.abs(out[0].omega - out[1].omega).max()))
        orders = [np.log2(a / b) for a, b in zip(diffs, diffs[1:])]
        assert min(orders) >= 1.8

    def test_picard_warning(self, monkeypatch):
        cfg = busy_config(picard_k=3, picard_tol=0.0)
        s0 = initial_state(cfg)
        growing = itertools.count(1)
        monkeypatch.setattr(coupling, "_rel_change", lambda a, b: float(next(growing)))
        with pytest.warns(PicardWarning):
            s1 = step(s0, cfg, dt=1e-3)
        assert not s1.picard_contracting and s1.picard_iterations == 3

    def test_picard_contracting_flag(self):
        cfg = busy_config(picard_k=4, picard_tol=0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error", PicardWarning)
            s1 = step(initial_state(cfg), cfg, dt=1e-3)
        assert s1.picard_contracting and s1.picard_iterations == 4

    def test_mms_one_step_residual(self):
        case = coupled_case()
        res = []
        for n, dt in ((33, 4e-3), (65, 1e-3)):
            g = Grid(n, n)
            X, Y = g.XY
            species = SpeciesSet([Species(z, D, BoundaryTrace.from_field(case.conc(i, X, Y, 0.0)))
                                  for i, (z, D) in enumerate(zip(case.z, case.D))])
            cfg = SimConfig(n, n, [SpeciesConfig(1, 1.0), SpeciesConfig(-1, 1.0)], T_final=1.0, interp_order=3)
            h0 = BoundaryTrace.constant(g, 0.0)
            s0 = initial_state(cfg, c0=[case.conc(i, X, Y, 0.0) for i in range(2)], omega0=case.vorticity(X, Y, 0.0),
                               species=species, h_trace=h0)
            s1 = step(s0, cfg, dt=dt, forcing=lambda t: manufactured_forcing(case, t, g), species=species, h_trace=h0)
            err = max(np.abs(s1.c[0] - case.conc(0, X, Y, dt)).max(), np.abs(s1.omega - case.vorticity(X, Y, dt)).max())
            res.append(err / dt)  # per unit time: O(dt) + O(h^2)
        assert res[1] < res[0] / 3.0


class TestRun:
    def test_zero_horizon(self):
        cfg = rest_config(T_final=0.0)
        traj = run(cfg)
        assert len(traj.states) == 1 and len(traj.records) == 1 and traj.final.t == 0.0

    def test_rest_state_flat(self):
        cfg = rest_config(T_final=1.0, output_every=0.05)
        traj = run(cfg)
        s0, s1 = traj.states[0], traj.final
        assert s1.t == 1.0
        for a, b in zip(s0.c, s1.c):
            assert np.abs(a - b).max() <= 1e-10
        e = np.array([r.energy for r in traj.records])
        assert np.all(np.abs(e - e[0]) <= 1e-12)

    def test_deterministic(self):
        cfg = busy_config(T_final=0.02, output_every=0.01)
        assert csv_text(run(cfg).records) == csv_text(run(cfg).records)

    def test_invariants_every_step(self):
        cfg = busy_config(T_final=0.05, output_every=0.01)
        grid = cfg.grid

        def check(state, rec):
            assert min(rec.min_c) >= 0.0
            assert relative_residual(grid, state.phi, state.rho, cfg.epsilon) <= 1e-8
            assert np.array_equal(state.rho, sum(s.z * c for s, c in zip(cfg.species, state.c)))

        traj = run(cfg, on_step=check)
        assert [round(s.t, 12) for s in traj.states] == [0.0, 0.01, 0.02, 0.03, 0.04, 0.05]

    def test_max_steps(self):
        traj = run(busy_config(), max_steps=2)
        assert len(traj.records) == 3
