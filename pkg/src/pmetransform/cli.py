"""Command-line runner: ``pmetransform {barenblatt,transform,solve,verify,psi}``.

Each run writes its CSV artifacts, the resolved configuration (``config.json``,
which ``--config`` accepts back) and ``manifest.json`` (configuration, seed,
library versions and SHA-256 of every output) into ``--out``.

Exit codes: 0 ok, 1 numerical failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .barenblatt import BarenblattParams, sample_barenblatt, support_radius
from .coefficients import power_law
from .config import (
    CONFIG_TYPES,
    ConfigError,
    apply_preset,
    from_dict,
    load_config_file,
    render_config,
)
from .grid import make_grid, write_field_csv
from .holder import psi_profile
from .residuals import (
    Scenario,
    convergence_study,
    identity_residual_analytic,
    random_interior_points,
    write_study_csv,
)
from .solver import SolverError, barenblatt_problem, compatibility_check, solve, standard_form_mass, sup_error
from .transform import transform_from_config

logger = logging.getLogger("pmetransform")

DEFAULT_SEED = 0x5EED


def _seed(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return val


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", metavar="PATH", default=d(None), help="JSON configuration file")
    p.add_argument("--out", metavar="DIR", default=d("out"), help="output directory (default: out)")
    p.add_argument("--jobs", metavar="N", type=int, default=d(1), help="worker processes for refinement levels")
    p.add_argument("--seed", metavar="HEX", type=_seed, default=d(DEFAULT_SEED), help="pair-sampling seed (default 0x5EED)")
    p.add_argument("--preset", default=d(None), help="named parameter preset")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _scenario_flags(p: argparse.ArgumentParser, S=argparse.SUPPRESS) -> None:
    p.add_argument("--m", type=float, default=S, help="power-law exponent m > 1")
    p.add_argument("--d", type=int, default=S, help="space dimension (radial when > 1)")
    p.add_argument("--C", type=float, default=S, help="Barenblatt constant")
    p.add_argument("--tau", type=float, default=S, help="time shift, u(t,x) = B(t + tau, x)")
    p.add_argument("--t0", type=float, default=S)
    p.add_argument("--t1", type=float, default=S)
    p.add_argument("--R", type=float, default=S, help="half-width of the domain (radius when d > 1)")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="pmetransform", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("barenblatt", help="sample the Barenblatt solution onto a grid")
    _add_globals(p, suppress=True)
    _scenario_flags(p)
    p.add_argument("--nt", type=int, default=S)
    p.add_argument("--nx", type=int, default=S)

    p = sub.add_parser("transform", help="tabulate Phi, V and U")
    _add_globals(p, suppress=True)
    p.add_argument("--m", type=float, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--M", type=float, default=S, help="bound on |k| (default: table extent)")
    p.add_argument("--mode", choices=["closed_form", "quadrature"], default=S)
    p.add_argument("--phi", choices=["a2", "linear"], default=S)
    p.add_argument("--nodes-per-unit", type=int, default=S)
    p.add_argument("--table", metavar="LO:HI:STEP", default=S)

    p = sub.add_parser("solve", help="explicit solve from Barenblatt initial and boundary data")
    _add_globals(p, suppress=True)
    _scenario_flags(p)
    p.add_argument("--nt", type=int, default=S, help="output time layers")
    p.add_argument("--nx", type=int, default=S)
    p.add_argument("--scheme", choices=["auto", "enthalpy", "nondivergence"], default=S)

    p = sub.add_parser("verify", help="residual and seminorm refinement study")
    _add_globals(p, suppress=True)
    _scenario_flags(p)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--M", type=float, default=S)
    p.add_argument("--nx0", type=int, default=S, help="nodes on the coarsest level")
    p.add_argument("--levels", type=int, default=S)
    p.add_argument("--source", choices=["analytic", "solver"], default=S)

    p = sub.add_parser("psi", help="level-set regularity profile")
    _add_globals(p, suppress=True)
    _scenario_flags(p)
    p.add_argument("--nt", type=int, default=S)
    p.add_argument("--nx", type=int, default=S)
    p.add_argument("--ks", type=_float_list, default=S, help="comma-separated thresholds")
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--alpha-u", type=float, default=S)
    return parser


GLOBAL_KEYS = {"config", "out", "jobs", "seed", "preset", "verbose", "command"}


def resolve_config(args: argparse.Namespace):
    """Defaults, then preset, then ``--config``, then explicit flags."""
    command = args.command
    cfg = apply_preset(command, args.preset) if args.preset else CONFIG_TYPES[command]()
    if args.config:
        cfg = load_config_file(args.config, command, cfg)
    flags = {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS}
    cfg = from_dict(command, flags, cfg)
    cfg.validate()
    if args.jobs < 1:
        raise ConfigError("--jobs", "must be at least 1")
    return cfg


# --- commands ---------------------------------------------------------------------


def _params(cfg) -> BarenblattParams:
    return BarenblattParams(float(cfg.m), int(cfg.d), float(cfg.C), float(cfg.tau))


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else f"{v:.17g}" for v in row) + "\n")


def cmd_barenblatt(cfg, out: Path, args) -> list[Path]:
    p = _params(cfg)
    grid = make_grid(cfg.t0, cfg.t1, cfg.nt, cfg.R, cfg.nx, cfg.d)
    u = sample_barenblatt(p, grid)
    write_field_csv(u, out / "field.csv")
    _write_rows(out / "support.csv", ["t", "radius"], zip(grid.t, support_radius(p, grid.t)))
    j = int(np.argmin(np.abs(grid.x)))
    print(f"B(t0={cfg.t0:g}, x={grid.x[j]:g}) = {u.values[0, j]:.17g}")
    return [out / "field.csv", out / "support.csv"]


def cmd_transform(cfg, out: Path, args) -> list[Path]:
    spec = transform_from_config(cfg.transform_dict())
    k = np.array(cfg.table_points())
    v = np.asarray(spec.V(k))
    cols = [k, spec.Phi(k), spec.Phi_prime(k), spec.Phi_second(k), v, spec.V_prime(k), spec.U(v), spec.diffusion(v)]
    header = ["k", "Phi", "Phi_prime", "Phi_second", "V", "V_prime", "U_of_V", "diffusion_of_V"]
    _write_rows(out / "transform.csv", header, zip(*[np.asarray(c, dtype=np.float64) for c in cols]))
    print(f"V({k[-1]:g}) = {v[-1]:.17g}")
    return [out / "transform.csv"]


def cmd_solve(cfg, out: Path, args) -> list[Path]:
    p = _params(cfg)
    coeff = power_law(float(cfg.m))
    prob = barenblatt_problem(p, coeff, cfg.t0, cfg.t1, cfg.R, cfg.nx, cfg.scheme)
    compat = compatibility_check(prob)
    sol = solve(prob, cfg.nt)
    write_field_csv(sol, out / "solution.csv")
    rows = [
        ("scheme", prob.resolved_scheme),
        ("sup_error", sup_error(sol, p)),
        ("compatibility_defect", compat.max_defect),
        ("compatibility_tolerance", compat.tolerance),
    ]
    if cfg.d == 1:
        m0 = standard_form_mass(sol.values[0], sol.grid.h, cfg.m)
        m1 = standard_form_mass(sol.values[-1], sol.grid.h, cfg.m)
        rows += [("mass_t0", m0), ("mass_t1", m1), ("mass_drift", abs(m1 - m0) / m0), ("mass_exact", p.mass)]
    _write_rows(out / "summary.csv", ["key", "value"], rows)
    for key, val in rows:
        print(f"{key} = {val if isinstance(val, str) else format(val, '.6g')}")
    return [out / "solution.csv", out / "summary.csv"]


def cmd_verify(cfg, out: Path, args) -> list[Path]:
    p = _params(cfg)
    tdict = {"kind": "power_law", "m": float(cfg.m), "alpha": float(cfg.alpha), "M": float(cfg.M), "mode": "closed_form"}
    scenario = Scenario("barenblatt", p, tdict, cfg.t0, cfg.t1, cfg.R, cfg.source)
    spec = scenario.spec()
    t, x = random_interior_points(p, 1000, cfg.t0, cfg.t1, seed=args.seed)
    ident = [(form, identity_residual_analytic(p, spec, t, x, form).sup_norm) for form in ("laplacian", "divergence")]
    _write_rows(out / "identity.csv", ["form", "sup_residual"], ident)
    levels = scenario.cfl_levels(cfg.nx_levels())
    rows = convergence_study(scenario, levels, jobs=args.jobs, seed=args.seed)
    write_study_csv(rows, out / "convergence.csv")
    for form, val in ident:
        print(f"identity residual ({form}): {val:.3e}")
    print(f"{'nx':>6} {'nt':>7} {'max|lap u| fb':>14} {'max|lap Phi| fb':>16} {'semi dt v':>10} {'semi lap u':>11}")
    for r in rows:
        print(f"{r.nx:6d} {r.nt:7d} {r.max_lap_u_fb:14.6g} {r.max_lap_Phi_fb:16.6g} {r.semi_dtv:10.6g} {r.semi_lap_u:11.6g}")
    return [out / "identity.csv", out / "convergence.csv"]


def cmd_psi(cfg, out: Path, args) -> list[Path]:
    p = _params(cfg)
    grid = make_grid(cfg.t0, cfg.t1, cfg.nt, cfg.R, cfg.nx, cfg.d)
    u = sample_barenblatt(p, grid)
    umax = float(np.abs(u.values).max())
    if max(cfg.ks) > umax:
        raise ConfigError("--ks", f"threshold {max(cfg.ks)} exceeds max|u| = {umax:.6g}")
    bidx = [grid.nx - 1] if grid.radial else [0, grid.nx - 1]
    prof = psi_profile(
        u,
        power_law(float(cfg.m)),
        cfg.ks,
        alpha_u=cfg.alpha_u,
        alpha=cfg.alpha,
        u0=u.values[0],
        u_gamma=u.values[:, bidx],
        seed=args.seed,
    )
    prof.to_csv(out / "psi.csv")
    prof.components_to_csv(out / "psi_components.csv")
    mono = bool(np.all(np.diff(prof.psi_plus) >= 0) and np.all(np.diff(prof.psi_minus) >= 0))
    for k, a, b in zip(prof.thresholds, prof.psi_plus, prof.psi_minus):
        print(f"k = {k:<10.6g} psi(+k) = {a:.6g}  psi(-k) = {b:.6g}")
    print(f"nondecreasing as k decreases: {mono}")
    if not mono:
        raise ArithmeticError("psi profile is not monotone")
    return [out / "psi.csv", out / "psi_components.csv"]


COMMANDS = {
    "barenblatt": cmd_barenblatt,
    "transform": cmd_transform,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "psi": cmd_psi,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg, args, outputs: list[Path]) -> Path:
    manifest = {
        "command": command,
        "config": asdict(cfg),
        "seed": hex(args.seed),
        "jobs": args.jobs,
        "preset": args.preset,
        "versions": {
            "pmetransform": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "outputs": {p.name: _sha256(p) for p in outputs},
        "rerun": f"pmetransform {command} --config {out / 'config.json'} --seed {hex(args.seed)}",
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"pmetransform {args.command}: error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(render_config(args.command, cfg) + "\n")
        outputs = COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"pmetransform {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pmetransform {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, ArithmeticError, ValueError) as exc:
        print(f"pmetransform {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    write_manifest(out, args.command, cfg, args, outputs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
