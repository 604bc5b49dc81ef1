"""Command-line harness.

Subcommands: ``ground-state`` (solve and cache R/W profiles and constants),
``evolve`` (config-driven run with diagnostics and snapshots), ``classify``
(regime report or parameter-plane sweep), ``verify`` (built-in check suites).

Exit codes: 0 success; 1 invalid arguments/config; 2 no convergence;
3 non-finite evolution; 4 missing ground-state constants; 5 verification
failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .classifier import DatumStats, classify_all, sweep, SWEEP_COLUMNS
from .diagnostics import ObservableSeries, SERIES_COLUMNS, Trajectory
from .dynamics import EquationParams, EvolutionConfig, evolve
from .errors import (
    InvalidConfig,
    MissingConstants,
    NlsLabError,
    NoConvergence,
    NonFinite,
)
from .grid import ComplexField, boundary_shell_max, make_grid
from .ground_state import flow_ground_state, radial_to_field, sharp_constants, shoot_R
from .persistence import (
    atomic_write_text,
    cache_key,
    cache_load,
    cache_store,
    format_float,
    load_config,
    write_csv,
    write_snapshot,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2
EXIT_NONFINITE = 3
EXIT_MISSING_CONSTANTS = 4
EXIT_VERIFY_FAILED = 5


# ---------------------------------------------------------------------------
# Initial-datum families


def gaussian_datum(grid, amplitude: float, width: float, center=None, momentum=None) -> ComplexField:
    """amplitude * exp(-|x - c|^2 / (2 width^2)) * exp(i k.x)."""
    if width <= 0:
        raise InvalidConfig("gaussian width must be positive")
    x = grid.axis_coordinates
    r2 = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    center = center or [0.0] * grid.dim
    momentum = momentum or [0.0] * grid.dim
    if len(center) != grid.dim or len(momentum) != grid.dim:
        raise InvalidConfig("center and momentum must have one entry per dimension")
    for axis in range(grid.dim):
        sh = [1] * grid.dim
        sh[axis] = grid.points
        r2 = r2 + (x.reshape(sh) - center[axis]) ** 2
        phase = phase + momentum[axis] * x.reshape(sh)
    vals = amplitude * np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * phase)
    return ComplexField(grid, vals)


def ring_datum(grid, amplitude: float, width: float) -> ComplexField:
    """Radial shell amplitude * exp(-(r - width)^2 / 2)."""
    if width <= 0:
        raise InvalidConfig("ring radius must be positive")
    r = np.sqrt(grid.radius_squared)
    return ComplexField(grid, amplitude * np.exp(-0.5 * (r - width) ** 2))


def build_datum(cfg: dict, grid, params: EquationParams) -> ComplexField:
    family = cfg.get("family")
    if family == "gaussian":
        return gaussian_datum(
            grid,
            float(cfg.get("amplitude", 1.0)),
            float(cfg.get("width", 1.0)),
            cfg.get("center"),
            cfg.get("momentum"),
        )
    if family == "ring":
        return ring_datum(grid, float(cfg.get("amplitude", 1.0)), float(cfg.get("width", 4.0)))
    if family == "ground-state":
        kind = cfg.get("kind", "R")
        gs = _solve_ground_state(kind, params.n, params.p if kind == "R" else params.gamma, 1e-6, True)
        field = radial_to_field(gs, grid)
        return ComplexField(grid, float(cfg.get("amplitude", 1.0)) * field.values)
    if family == "file":
        from .persistence import read_snapshot

        path = cfg.get("path")
        if not path:
            raise InvalidConfig("datum family 'file' requires a path")
        field, _ = read_snapshot(path)
        if field.grid != grid:
            raise InvalidConfig("snapshot grid does not match the configured grid")
        return field
    raise InvalidConfig(f"unknown datum family {family!r}")


# ---------------------------------------------------------------------------
# ground-state command


def _solve_ground_state(kind, n, exponent, tol, use_cache, method=None):
    if method is None:
        method = "shoot" if kind == "R" and n <= 3 else "flow"
    key = cache_key(kind, n, exponent, None, tol) + f"-{method}"
    if use_cache:
        hit = cache_load(key)
        if hit is not None:
            return hit
    if method == "shoot":
        gs = shoot_R(n, exponent, tol=max(tol, 1e-6))
    else:
        gs = flow_ground_state(kind, n, exponent)
    if use_cache:
        cache_store(key, gs)
    return gs


def cmd_ground_state(args) -> int:
    kind = args.kind
    exponent = args.p if kind == "R" else args.gamma
    if exponent is None:
        print(f"ground-state {kind} requires --{'p' if kind == 'R' else 'gamma'}", file=sys.stderr)
        return EXIT_USAGE
    gs = _solve_ground_state(kind, args.n, exponent, args.tol, not args.no_cache, args.method)
    consts = sharp_constants(gs)
    expected_nl = (2.0 * (exponent + 2) / (args.n * exponent) if kind == "R" else 4.0 / exponent) * gs.grad_l2**2
    record = {
        "kind": gs.kind,
        "n": gs.n,
        "exponent": gs.exponent,
        "mu": gs.mu,
        "method": gs.method,
        "l2": gs.l2,
        "grad_l2": gs.grad_l2,
        "mass": gs.mass,
        "nonlinear_integral": gs.nonlinear_integral,
        "residual": gs.residual,
        "identity_grad_vs_l2": abs(gs.grad_l2**2 - gs.l2**2) / gs.l2**2,
        "identity_nonlinear": abs(gs.nonlinear_integral - expected_nl) / expected_nl,
        "sharp_constant": consts.constant,
        "e_tilde": consts.e_tilde,
    }
    text = json.dumps(record, indent=2)
    if args.out:
        atomic_write_text(args.out, text + "\n")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# evolve command


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    eq = cfg["equation"]
    params = EquationParams(int(eq["n"]), float(eq["p"]), float(eq["gamma"]), float(eq["lam1"]), float(eq["lam2"]))
    gr = cfg["grid"]
    grid = make_grid(int(gr["dim"]), int(gr["points"]), float(gr["length"]))
    if grid.dim != params.n:
        raise InvalidConfig("grid dimension must equal the equation dimension n")
    ev = cfg["evolution"]
    config = EvolutionConfig(
        dt=float(ev["dt"]),
        t_end=float(ev["t_end"]),
        cadence=int(ev.get("cadence", 10)),
        guard_max_abs=float(ev.get("guard_max_abs", 1e6)),
        guard_grad_factor=float(ev.get("guard_grad_factor", 1e3)),
    )
    u0 = build_datum(cfg["datum"], grid, params)
    if boundary_shell_max(u0) > 1e-8 * max(float(np.abs(u0.values).max()), 1e-300):
        print("warning: datum has non-negligible boundary values; x-weighted diagnostics suspect", file=sys.stderr)

    out_dir = cfg.get("output", {}).get("directory", args.out or "nlslab-run")
    os.makedirs(out_dir, exist_ok=True)
    traj = Trajectory(params, snapshot_stride=int(ev.get("snapshot_stride", 1)))
    result = evolve(u0, params, config, observers=[traj])

    series_path = os.path.join(out_dir, "series.csv")
    write_csv(series_path, SERIES_COLUMNS, traj.series.rows())
    manifest = [series_path]
    if cfg.get("output", {}).get("snapshots", True):
        for i, (t, snap) in enumerate(zip(traj.times, traj.snapshots)):
            path = os.path.join(out_dir, f"snapshot-{i:05d}.nlsf")
            write_snapshot(path, ComplexField(grid, snap), t)
            manifest.append(path)
    record = {
        "termination": result.termination,
        "final_time": result.final_time,
        "steps": result.steps_taken,
        "guard_message": result.guard_message,
        "samples": len(traj.series),
        "final_mass": traj.series.mass[-1] if len(traj.series) else None,
        "final_energy": traj.series.energy[-1] if len(traj.series) else None,
        "manifest": manifest,
    }
    report_path = os.path.join(out_dir, "run.json")
    atomic_write_text(report_path, json.dumps(record, indent=2) + "\n")
    print(f"{result.termination}: t = {result.final_time:g} after {result.steps_taken} steps -> {out_dir}")
    if result.termination == "nonfinite":
        return EXIT_NONFINITE
    return EXIT_OK


# ---------------------------------------------------------------------------
# classify command


def _constants_provider(args):
    def constants_for(params):
        out = {}
        if args.with_constants:
            try:
                out["R"] = sharp_constants(_solve_ground_state("R", params.n, params.p, 1e-6, True))
            except NlsLabError:
                pass
            try:
                out["W"] = sharp_constants(_solve_ground_state("W", params.n, params.gamma, 1e-10, True))
            except NlsLabError:
                pass
        return out

    return constants_for


def cmd_classify(args) -> int:
    stats = None
    if args.mass is not None:
        if args.energy is None or args.kinetic is None:
            print("classify with datum statistics requires --mass --energy --kinetic", file=sys.stderr)
            return EXIT_USAGE
        radial = {"yes": True, "no": False, "unknown": None}[args.radial]
        stats = DatumStats(args.mass, args.energy, args.kinetic, radial)

    if args.sweep_p or args.sweep_gamma:
        if not (args.sweep_p and args.sweep_gamma):
            print("sweep mode requires both --sweep-p and --sweep-gamma", file=sys.stderr)
            return EXIT_USAGE
        p_vals = _parse_range(args.sweep_p)
        g_vals = _parse_range(args.sweep_gamma)
        rows = sweep(
            args.n, args.lam1, args.lam2, p_vals, g_vals,
            stats=stats, constants_for=_constants_provider(args),
        )
        lines = [",".join(SWEEP_COLUMNS)]
        for row in rows:
            lines.append(",".join(_sweep_cell(row, c) for c in SWEEP_COLUMNS))
        text = "\n".join(lines) + "\n"
        if args.out:
            atomic_write_text(args.out, text)
        print(text, end="")
        return EXIT_OK

    params = EquationParams(args.n, args.p, args.gamma, args.lam1, args.lam2)
    constants = _constants_provider(args)(params)
    report = classify_all(params, stats, constants)
    text = json.dumps(report.as_dict(), indent=2)
    if args.out:
        atomic_write_text(args.out, text + "\n")
    print(text)
    return EXIT_OK


def _sweep_cell(row, column):
    v = row[column]
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def _parse_range(text):
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise InvalidConfig(f"range must be lo:hi:count, got {text!r}") from exc
    if count < 1:
        raise InvalidConfig("range count must be >= 1")
    return list(np.linspace(lo, hi, count))


# ---------------------------------------------------------------------------
# verify command


def _verify_checks(suite: str):
    """Built-in sanity scenarios; yields (name, ok, detail)."""
    from scipy import fft as sfft
    from .dynamics import strang_step
    from .diagnostics import theta_report
    from .persistence import read_snapshot
    import tempfile

    grid = make_grid(3, 32, 16.0)
    u = gaussian_datum(grid, 1.0, 1.5)

    # discrete Parseval
    uh = sfft.fftn(u.values)
    lhs = float(np.sum(np.abs(u.values) ** 2)) * grid.cell_volume
    rhs = float(np.sum(np.abs(uh) ** 2)) * grid.cell_volume / grid.size
    yield "parseval", abs(lhs - rhs) <= 1e-12 * lhs, f"relative gap {abs(lhs - rhs) / lhs:.2e}"

    # exact modulus preservation of the nonlinear substep
    params = EquationParams(3, 2.0, 2.5, 1.0, 1.0)
    from .dynamics import nonlinear_phase_step

    v = nonlinear_phase_step(u, 0.01, params)
    gap = float(np.abs(np.abs(v.values) - np.abs(u.values)).max())
    yield "phase-step-modulus", gap <= 1e-13, f"max |.|-drift {gap:.2e}"

    # snapshot round trip
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "snap.nlsf")
        write_snapshot(path, u, 1.25)
        back, t = read_snapshot(path)
        ok = t == 1.25 and np.array_equal(back.values, u.values)
        yield "snapshot-roundtrip", ok, "bit-exact" if ok else "mismatch"

    # quadratic variance majorant root, real datum
    rep = theta_report(4.0, 0.0, -2.0)
    ok = rep.attains_negative and abs(rep.root - 2.0) < 1e-12
    yield "theta-root", ok, f"root {rep.root}"

    if suite == "full":
        gs = shoot_R(3, 2.0)
        dev = abs(gs.grad_l2**2 - gs.l2**2) / gs.l2**2
        yield "ground-state-identity", dev <= 1e-4, f"grad-vs-l2 deviation {dev:.2e}"

        # short conservation run
        from .diagnostics import mass as mass_of

        series = ObservableSeries(params)
        cfg = EvolutionConfig(dt=1e-3, t_end=0.2, cadence=20)
        res = evolve(u, params, cfg, observers=[series])
        m = np.asarray(series.mass)
        drift = float(np.abs(m - m[0]).max() / m[0])
        ok = res.termination == "completed" and drift <= 1e-10
        yield "mass-conservation", ok, f"drift {drift:.2e}"

        errs = series.virial_closure_errors()
        yield "virial-closure", float(errs.max()) <= 1e-3, f"max closure error {errs.max():.2e}"


def cmd_verify(args) -> int:
    if args.suite not in ("fast", "full"):
        print(f"unknown suite {args.suite!r} (choose fast or full)", file=sys.stderr)
        return EXIT_USAGE
    results = []
    failed = False
    for name, ok, detail in _verify_checks(args.suite):
        results.append({"check": name, "pass": bool(ok), "detail": detail})
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed = failed or not ok
    summary = {"suite": args.suite, "passed": not failed, "checks": results}
    if args.out:
        atomic_write_text(args.out, json.dumps(summary, indent=2) + "\n")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="Spectral laboratory for the power+Hartree nonlinear Schrodinger equation",
    )
    parser.add_argument("--version", action="version", version=f"nlslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gs = sub.add_parser("ground-state", help="solve a ground-state profile and its constants")
    gs.add_argument("kind", choices=["R", "W"])
    gs.add_argument("--n", type=int, default=3)
    gs.add_argument("--p", type=float, default=None, help="power exponent (kind R)")
    gs.add_argument("--gamma", type=float, default=None, help="Hartree exponent (kind W)")
    gs.add_argument("--tol", type=float, default=1e-6)
    gs.add_argument("--method", choices=["shoot", "flow"], default=None)
    gs.add_argument("--no-cache", action="store_true")
    gs.add_argument("--out", default=None)
    gs.set_defaults(func=cmd_ground_state)

    ev = sub.add_parser("evolve", help="run a config-driven evolution")
    ev.add_argument("config")
    ev.add_argument("--out", default=None, help="output directory override")
    ev.set_defaults(func=cmd_evolve)

    cl = sub.add_parser("classify", help="regime report or (p, gamma) sweep")
    cl.add_argument("--n", type=int, default=3)
    cl.add_argument("--p", type=float, default=1.0)
    cl.add_argument("--gamma", type=float, default=1.0)
    cl.add_argument("--lam1", type=float, required=True)
    cl.add_argument("--lam2", type=float, required=True)
    cl.add_argument("--mass", type=float, default=None)
    cl.add_argument("--energy", type=float, default=None)
    cl.add_argument("--kinetic", type=float, default=None)
    cl.add_argument("--radial", choices=["yes", "no", "unknown"], default="unknown")
    cl.add_argument("--with-constants", action="store_true", help="solve/cache ground states for threshold cases")
    cl.add_argument("--sweep-p", default=None, help="lo:hi:count")
    cl.add_argument("--sweep-gamma", default=None, help="lo:hi:count")
    cl.add_argument("--out", default=None)
    cl.set_defaults(func=cmd_classify)

    vf = sub.add_parser("verify", help="run a built-in check suite")
    vf.add_argument("suite")
    vf.add_argument("--out", default=None)
    vf.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except MissingConstants as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_CONSTANTS
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except NonFinite as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except (InvalidConfig, NlsLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
