"""Command line interface.

Subcommands:

  run <config>         run a scenario config file
  validate <config>    check a config against every constraint, run nothing
  resonance            print the resonant barrier width and inside momentum
  check                run the fast invariant suite on small grids

Exit codes: 0 success, 2 usage, 3 validation failure, 4 invariant failure.
The environment variable KLEINQFT_THREADS (default 1) sets the FFT worker
count; it does not change results beyond 1e-12 relative.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .grid import Grid1D, Units, integrate
from .iofmt import parse_scaled_float
from .modes import ParticleKind, TwoComponentField, build_basis, hamiltonian_matrix, project
from .potential import inside_momentum, resonant_width, rectangular_transmission
from .propagator import StepperConfig, evolve_mode
from .bogoliubov import check_algebra, evolve_basis
from .scenarios import InvariantError, ValidationError, config_from_file, run, validate

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INVARIANT = 0, 2, 3, 4


def _cmd_run(args) -> int:
    try:
        cfg = config_from_file(args.config)
        if args.output_dir:
            cfg.output_dir = args.output_dir
        manifest = run(cfg)
    except (ValueError, ValidationError) as exc:
        _print_violations(exc)
        return EXIT_VALIDATION
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"ok: outputs in {manifest.parent}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = config_from_file(args.config)
        violations = validate(cfg)
    except (ValueError, ValidationError) as exc:
        _print_violations(exc)
        return EXIT_VALIDATION
    if violations:
        for v in violations:
            print(f"violated: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    print("ok: config is valid")
    return EXIT_OK


def _print_violations(exc) -> None:
    if isinstance(exc, ValidationError):
        for v in exc.violations:
            print(f"violated: {v}", file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)


def _cmd_resonance(args) -> int:
    units = Units()
    try:
        v0 = parse_scaled_float(args.v0, units)
        p_in = inside_momentum(args.p0, v0, units)
        width = resonant_width(args.p0, v0, args.k, units)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    tmag = abs(rectangular_transmission(args.p0, v0, width, units))
    print(f"p_in = {p_in:.6g} a.u.")
    print(f"L(k={args.k}) = {width:.6g} a.u.")
    print(f"|T| at this width (rectangular) = {tmag:.9f}")
    if args.k % 2:
        print("note: odd k sits at a transmission minimum; unit |T| needs even k")
    return EXIT_OK


def _check_line(name: str, value: float, tol: float, failures: list) -> None:
    ok = value <= tol
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {value:.3e} (tol {tol:.1e})")
    if not ok:
        failures.append(name)


def _cmd_check(args) -> int:
    failures: list = []
    rng = np.random.default_rng(7)
    units = Units()
    grid = Grid1D(256, 4.0, units)
    f = rng.standard_normal((2, grid.n)) + 1j * rng.standard_normal((2, grid.n))
    _check_line("transform roundtrip", float(np.max(np.abs(grid.to_position(grid.to_momentum(f)) - f))), 1e-13, failures)
    par = abs(np.sum(np.abs(f) ** 2) * grid.dx - np.sum(np.abs(grid.to_momentum(f)) ** 2))
    _check_line("Parseval", par / (np.sum(np.abs(f) ** 2) * grid.dx), 1e-12, failures)
    _check_line("integrate constant", abs(integrate(grid, np.ones(grid.n)) - grid.box_length), 1e-12, failures)
    for kind in ParticleKind:
        basis = build_basis(grid, kind)
        h = hamiltonian_matrix(123.4, kind, units)
        e2 = float(np.max(np.abs(h @ h - (123.4**2 * units.c**2 + units.mc2**2) * np.eye(2))))
        _check_line(f"{kind.value} h(p)^2 = E^2", e2 / units.mc2**2, 1e-12, failures)
        fld = TwoComponentField(f, kind, grid)
        tot = project(fld, basis, "+").values + project(fld, basis, "-").values
        _check_line(f"{kind.value} projector completeness", float(np.max(np.abs(tot - f))), 1e-12, failures)
        mode = basis.mode_field("+", 11)
        snaps = evolve_mode(mode, np.zeros(grid.n), StepperConfig(dt=1e-6, t_max=5e-5, snapshot_times=[5e-5]))
        t, out = snaps[0]
        err = float(np.max(np.abs(out.values - mode.values * np.exp(-1j * basis.energies[11] * t))))
        _check_line(f"{kind.value} free eigenmode phase", err, 1e-10, failures)
        pot = 0.5 * 3 * units.mc2 * (np.tanh((grid.x + 0.1) / 0.02) - np.tanh((grid.x - 0.1) / 0.02))
        amps = evolve_basis(basis, pot, StepperConfig(dt=1e-6, t_max=2e-5, snapshot_times=[2e-5]), p_cut=120.0)
        rep = check_algebra(amps[0])
        _check_line(f"{kind.value} metric preservation", rep.metric_deviation / max(1.0, rep.matrix_scale**2), 1e-6, failures)
    width = resonant_width(100.0, 3 * units.mc2, 12, units)
    _check_line("resonance anchor width", abs(width - 0.0948) / 0.0948, 5e-3, failures)
    _check_line("resonant |T| - 1", abs(abs(rectangular_transmission(100.0, 3 * units.mc2, width, units)) - 1.0), 1e-8, failures)
    if failures:
        print(f"{len(failures)} invariant check(s) failed", file=sys.stderr)
        return EXIT_INVARIANT
    print("all invariant checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kleinqft", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario config file")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default="", help="override the config's output_dir")
    p_run.set_defaults(func=_cmd_run)
    p_val = sub.add_parser("validate", help="validate a config file without running")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)
    p_res = sub.add_parser("resonance", help="resonant barrier width for given momentum and height")
    p_res.add_argument("--p0", type=float, required=True, help="incident momentum (a.u.)")
    p_res.add_argument("--v0", required=True, help="barrier height (a.u. or '<a>mc2')")
    p_res.add_argument("--k", type=int, required=True, help="resonance order")
    p_res.set_defaults(func=_cmd_resonance)
    p_chk = sub.add_parser("check", help="run the fast invariant suite on small grids")
    p_chk.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
