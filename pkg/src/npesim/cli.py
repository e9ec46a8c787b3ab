"""Command line entry point.

Exit status: 0 success, 1 configuration or validation error, 2 solver
failure, 3 a verification check ran but did not pass.
"""
import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, heat_kernel, snapshots, verification
from .config import RunManifest, load_config
from .coupling import SimState, _potential, initial_state, run
from .errors import ConfigError, NPEError, SimulationError, ValidationError
from .euler import VorticityState, recover_velocity

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _error(msg):
    print(f"error: {msg}", file=sys.stderr)


def cmd_run(args):
    out = Path(args.out)
    try:
        config = load_config(args.config)
        if args.picard is not None:
            config.picard_k = args.picard
            config.validate()
    except (OSError, ConfigError, ValidationError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.log").write_text(f"{type(exc).__name__}: {exc}\n")
        _error(exc)
        return EXIT_INVALID

    out.mkdir(parents=True, exist_ok=True)
    RunManifest.build(config, args.config, out).write(out / "manifest.json")
    snapdir = out / "snapshots"
    if config.snapshots:
        snapdir.mkdir(exist_ok=True)
    grid = config.grid
    partial = out / "diagnostics.csv.partial"
    fh = open(partial, "w", newline="")
    writer = diagnostics.csv.writer(fh, lineterminator="\n")
    writer.writerow(diagnostics.csv_header(len(config.species)))
    counter = {"snap": 0}

    def on_step(state, rec):
        writer.writerow([diagnostics._fmt(v) for _, v in rec.row()])
        if config.snapshots and (state.t == 0.0 or _on_cadence(state.t, config)):
            snapshots.write_vtk(snapdir / f"snap_{counter['snap']:05d}.vtk", grid, snapshots.state_fields(state), state.t)
            counter["snap"] += 1

    try:
        traj = run(config, initial_state(config), on_step=on_step)
    except SimulationError as exc:
        fh.close()
        last = exc.trajectory.states[-1] if exc.trajectory and exc.trajectory.states else None
        if last is not None:
            snapshots.write_vtk(out / "last_valid.vtk", grid, snapshots.state_fields(last), last.t)
        (out / "FAILURE").write_text(f"{exc}\n")
        _error(exc)
        return EXIT_SOLVER
    except NPEError as exc:
        fh.close()
        (out / "FAILURE").write_text(f"{type(exc).__name__}: {exc}\n")
        _error(exc)
        return EXIT_SOLVER
    fh.close()
    os.replace(partial, out / "diagnostics.csv")
    last = traj.records[-1]
    print(f"steps={len(traj.records) - 1} t={last.t:.17g} energy={last.energy:.17g} "
          f"min_c={min(last.min_c):.17g}")
    return EXIT_OK


def _on_cadence(t, config):
    if t >= config.T_final:
        return True
    k = t / config.cadence
    return abs(k - round(k)) <= 1e-9


def cmd_mms(args):
    case = verification.CASES[args.case]()
    grids = _int_list(args.grids)
    if args.dts:
        dts = _float_list(args.dts)
        T_final = args.T if args.T is not None else (0.4 if len(grids) == 1 else 0.1)
    elif len(grids) == 1:
        T_final = args.T if args.T is not None else 0.4
        dts = [T_final / 4 / 2**k for k in range(4)]
    else:
        T_final = args.T if args.T is not None else 0.1
        dts = [6.4 / (n - 1) ** 2 for n in grids]
    try:
        report = verification.convergence_study(case, grids, dts, T_final, picard_k=args.picard or 1)
    except ValidationError as exc:
        _error(exc)
        return EXIT_INVALID
    except NPEError as exc:
        _error(exc)
        return EXIT_SOLVER
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "mms.csv", "w") as fh:
        fh.write("grid,dt,error_c,error_omega,error_u\n")
        for n, dt, ec, ew, eu in report.rows():
            fh.write("%d,%.17g,%.17g,%.17g,%.17g\n" % (n, dt, ec, ew, eu))
    print(f"kind={report.kind} order_c={report.order_c:.4f} order_omega={report.order_omega:.4f}")
    return EXIT_OK


def cmd_kernel_check(args):
    try:
        spec = heat_kernel.KernelSpec(k=args.k)
        rep = heat_kernel.verify_gaussian_bound(spec, args.samples, seed=args.seed)
    except ValidationError as exc:
        _error(exc)
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "kernel_samples.csv", rep.samples, fmt="%.17g", delimiter=",", header="t,dist,ratio",
               comments="")
    print(f"max_ratio={rep.max_ratio:.17g} max_ratio_half={rep.max_ratio_half:.17g} stable={rep.stable}")
    return EXIT_OK if rep.ok else EXIT_CHECK


def state_from_fields(config, t, fields):
    """Rebuild a state from stored ``c_i`` and ``omega``; derived fields are recomputed."""
    grid = config.grid
    species = config.species_set(grid)
    c = [fields[f"c_{i}"] for i in range(1, len(species) + 1)]
    theta, u = recover_velocity(grid, fields["omega"])
    rho, phi, phi0, phih = _potential(grid, species, c, config.h_trace(grid), config.epsilon)
    return SimState(t, c, phi, phi0, phih, rho, VorticityState(fields["omega"], theta, u))


def cmd_diag(args):
    rundir = Path(args.out)
    try:
        config = load_config(args.config) if args.config else RunManifest.read(rundir / "manifest.json").config
    except (OSError, ConfigError, ValidationError) as exc:
        _error(exc)
        return EXIT_INVALID
    files = sorted((rundir / "snapshots").glob("snap_*.vtk"))
    if not files:
        _error(f"no snapshots under {rundir / 'snapshots'}")
        return EXIT_INVALID
    records = []
    for f in files:
        _, t, fields = snapshots.read_vtk(f)
        try:
            records.append(diagnostics.record(state_from_fields(config, t, fields), config))
        except NPEError as exc:
            _error(exc)
            return EXIT_SOLVER
    diagnostics.write_csv(records, rundir / "diagnostics_snapshots.csv")
    rep = diagnostics.check_boundedness(records, config=config)
    print(f"snapshots={len(records)} bounded={rep.ok}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="npesim", description="Nernst-Planck-Euler simulator")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a simulation from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--picard", type=int, default=None)
    m = sub.add_parser("mms", help="manufactured-solution convergence study")
    m.add_argument("--case", choices=sorted(verification.CASES), default="coupled")
    m.add_argument("--grids", default="33,65,129")
    m.add_argument("--dts", default="")
    m.add_argument("--T", type=float, default=None)
    m.add_argument("--picard", type=int, default=None)
    m.add_argument("--out", default=".")
    k = sub.add_parser("kernel-check", help="heat-kernel Gaussian bound check")
    k.add_argument("--samples", type=int, default=1000)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--k", type=int, choices=(0, 1), default=0)
    k.add_argument("--out", default=".")
    d = sub.add_parser("diag", help="recompute diagnostics from stored snapshots")
    d.add_argument("--out", required=True, help="run directory")
    d.add_argument("--config", default=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "mms": cmd_mms, "kernel-check": cmd_kernel_check, "diag": cmd_diag}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
