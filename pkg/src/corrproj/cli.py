"""Command-line front end.

Exit codes: 0 pass, 1 quantitative failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
from dataclasses import replace
import sys

import numpy as np

from . import io
from .evolution import (
    ComponentState,
    DivergenceError,
    check_state,
    evolve_expm_trajectory,
    evolve_rk,
)
from .operators import ContractError, DimensionError, SizeCapError
from .projection import validate
from .twoband import (
    EXCITED,
    Rates,
    ensemble_average,
    excitation_conserved_set,
    tcl2_generator,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
# absolute floor on the 3-standard-error test, so rounding noise on a zero-variance ensemble passes
SE_FLOOR = 1e-12


def _fail_usage(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def cmd_validate(args) -> int:
    try:
        p = io.projection_from_json(io.load_json(args.config))
    except (io.ConfigError, DimensionError) as exc:
        return _fail_usage(str(exc))
    report = validate(p)
    print(f"components             {p.n}")
    print(f"biorthogonality_defect {report.biorthogonality_defect:.3e}")
    print(f"trace_defect          {report.trace_defect:.3e}")
    print(f"cp_min_eigenvalue     {report.cp_min_eigenvalue:.6g}")
    print(f"hermiticity_defect    {report.hermiticity_defect:.3e}")
    print(f"idempotence_defect    {report.idempotence_defect:.3e}")
    print(f"passed                {str(report.passed).lower()}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _initial_components(cfg_list, n: int, d: int) -> ComponentState:
    state = ComponentState.from_list([io.matrix_from_json(m) for m in cfg_list])
    if state.n != n or state.dim_sys != d:
        raise io.ConfigError(f"initial state must have {n} components of dimension {d}")
    diag = check_state(state)
    if not diag.ok:
        raise io.ConfigError(
            f"initial components are not physical (min eigenvalue {diag.min_eigenvalue:.3e})"
        )
    if abs(diag.total_trace - 1) > 1e-9:
        raise io.ConfigError(f"initial components have total trace {diag.total_trace:.12g}")
    return state


def _load_run(args):
    cfg = io.load_json(args.config)
    if "generator" in cfg:
        gen = io.generator_from_json(cfg["generator"])
    elif "model" in cfg:
        gen, _ = tcl2_generator(io.model_from_json(cfg["model"])[0])
    else:
        raise io.ConfigError("run config needs a 'generator' or 'model' section")
    init = _initial_components(io._require(cfg, "initial", list), gen.n, gen.dim_sys)
    t_max = args.t_max if args.t_max is not None else float(io._require(cfg, "t_max"))
    steps = args.steps if args.steps is not None else int(io._require(cfg, "steps"))
    if steps < 0 or t_max < 0:
        raise io.ConfigError("t_max and steps must be nonnegative")
    conserved = [[io.matrix_from_json(m) for m in cs] for cs in cfg.get("conserved", [])]
    for cs in conserved:
        if len(cs) != gen.n:
            raise io.ConfigError(f"conserved set needs {gen.n} operators")
    return gen, init, t_max, steps, cfg.get("method", "rk"), cfg.get("substeps"), conserved


def _summary(traj) -> None:
    print(f"points                {len(traj.times)}")
    print(f"final_total_trace     {io.fmt(traj.total_trace[-1])}")
    print(f"min_eigenvalue        {io.fmt(traj.min_eigenvalue.min())}")
    print(f"flagged_points        {len(traj.flagged)}")
    for k in range(traj.conserved.shape[1]):
        drift = np.max(np.abs(traj.conserved[:, k] - traj.conserved[0, k]))
        print(f"conserved_{k + 1}_drift     {drift:.3e}")


def _write_trajectory(traj, out) -> None:
    header, rows = io.trajectory_rows(traj, traj.conserved.shape[1])
    io.write_csv(out, header, rows)


def cmd_evolve(args) -> int:
    try:
        gen, init, t_max, steps, method, substeps, conserved = _load_run(args)
    except (io.ConfigError, DimensionError, ContractError, ValueError) as exc:
        return _fail_usage(str(exc))
    try:
        if method == "expm":
            traj = evolve_expm_trajectory(gen, init, t_max, steps, conserved=conserved)
        elif method == "rk":
            traj = evolve_rk(gen, init, t_max, steps, substeps=substeps, conserved=conserved)
        else:
            return _fail_usage(f"unknown method {method!r}")
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except SizeCapError as exc:
        return _fail_usage(str(exc))
    _write_trajectory(traj, args.out)
    _summary(traj)
    return EXIT_FAIL if traj.flagged else EXIT_OK


def _twoband_setup(args):
    cfg = io.load_json(args.config)
    model, realizations = io.model_from_json(cfg)
    if args.seed is not None:
        model = replace(model, seed=args.seed)
    if args.realizations is not None:
        if args.realizations < 1:
            raise io.ConfigError("--realizations must be positive")
        realizations = args.realizations
    if "initial" in cfg:
        rho1, rho2 = (io.matrix_from_json(m) for m in cfg["initial"])
    else:
        rho1, rho2 = EXCITED, np.zeros((2, 2))
    _initial_components([io.matrix_to_json(rho1), io.matrix_to_json(rho2)], 2, 2)
    rates = Rates.from_model(model)
    if args.t_max is not None:
        t_max = args.t_max
    elif "t_max" in cfg:
        t_max = float(cfg["t_max"])
    else:
        t_max = 5.0 / rates.total if rates.total > 0 else 1.0
    steps = args.steps if args.steps is not None else int(cfg.get("steps", 200))
    return model, realizations, rho1, rho2, t_max, steps


def cmd_twoband(args) -> int:
    try:
        model, realizations, rho1, rho2, t_max, steps = _twoband_setup(args)
    except (io.ConfigError, ValueError) as exc:
        return _fail_usage(str(exc))
    times = np.linspace(0.0, t_max, steps + 1)
    gen, rates = tcl2_generator(model)
    print(f"gamma1                {io.fmt(rates.gamma1)}")
    print(f"gamma2                {io.fmt(rates.gamma2)}")

    if args.mode == "tcl2":
        init = ComponentState(np.array([rho1, rho2]))
        traj = evolve_rk(gen, init, t_max, steps, conserved=[excitation_conserved_set()])
        _write_trajectory(traj, args.out)
        _summary(traj)
        return EXIT_OK

    try:
        ens = ensemble_average(model, realizations, times, rho1, rho2, workers=args.workers)
    except SizeCapError as exc:
        return _fail_usage(str(exc))
    if args.mode == "exact":
        io.write_csv(args.out, ["t", "p_e_mean", "p_e_stderr"], zip(times, ens.mean, ens.stderr))
        print(f"realizations          {realizations}")
        print(f"max_stderr            {io.fmt(ens.stderr.max())}")
        return EXIT_OK

    init = ComponentState(np.array([rho1, rho2]))
    tcl2 = evolve_rk(gen, init, t_max, steps).excited_population()
    dev = np.abs(tcl2 - ens.mean)
    within = dev <= 3 * ens.stderr + SE_FLOOR
    max_dev = float(dev.max())
    tol = 0.02 if args.tol is None else args.tol
    passed = max_dev <= tol and bool(within.all())
    io.write_csv(
        args.out,
        ["t", "p_e_tcl2", "p_e_exact_mean", "p_e_exact_stderr", "abs_dev"],
        zip(times, tcl2, ens.mean, ens.stderr, dev),
    )
    print(f"realizations          {realizations}")
    print(f"max_abs_deviation     {io.fmt(max_dev)}")
    print(f"tolerance             {io.fmt(tol)}")
    print(f"points_outside_3se    {int((~within).sum())} of {len(times)}")
    print(f"verdict               {'pass' if passed else 'fail'}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_compare(args) -> int:
    try:
        ha, a = io.read_csv(args.file_a)
        hb, b = io.read_csv(args.file_b)
    except io.ConfigError as exc:
        return _fail_usage(str(exc))
    col = args.column
    for h, name in ((ha, args.file_a), (hb, args.file_b)):
        if "t" not in h or col not in h:
            return _fail_usage(f"{name}: missing column 't' or {col!r}")
    ta, tb = a[:, ha.index("t")], b[:, hb.index("t")]
    if ta.shape != tb.shape or np.max(np.abs(ta - tb), initial=0.0) > 1e-12:
        return _fail_usage("time grids differ")
    dev = float(np.max(np.abs(a[:, ha.index(col)] - b[:, hb.index(col)]), initial=0.0))
    tol = 0.0 if args.tol is None else args.tol
    print(f"column                {col}")
    print(f"max_abs_deviation     {io.fmt(dev)}")
    print(f"tolerance             {io.fmt(tol)}")
    return EXIT_OK if dev <= tol else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrproj",
        description="Correlated projections and generalized Lindblad dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a projection config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evolve", help="integrate a generalized Lindblad equation to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--t-max", type=float)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("twoband", help="two-band model: exact ensemble, TCL2, or comparison")
    p.add_argument("mode", choices=["exact", "tcl2", "compare"])
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--t-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--realizations", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_twoband)

    p = sub.add_parser("compare", help="max deviation of one column between two CSV files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--column", default="p_e")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
