"""Command-line front end.

    lambdamem coeffs    [--widths ...] [--means ...] [--no-broadening]
    lambdamem analytic  [--config PATH] [--deltas ...]
    lambdamem simulate  --config PATH [--compare-analytic]
    lambdamem scan      --config PATH [--jobs N]
    lambdamem compare   [--config PATH]

Every subcommand writes into ``--out`` (default ``$LAMBDAMEM_OUT`` or
``./lambdamem_out``) and finishes with ``manifest.json``. Exit codes: 0 ok,
1 usage, 2 numerical failure, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, config as cfgmod, ist
from .cmb import SimulationResult, check_run_hygiene, simulate
from .doppler import coefficient_table
from .errors import ConfigError, ConfigIssue, LambdaMemError
from .io import write_density_slice, write_field_slice, write_grid

log = logging.getLogger("lambdamem")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INVALID = 0, 1, 2, 3
OUT_ENV = "LAMBDAMEM_OUT"
COMPARE_RTOL = 1e-3

# Second-order example: a 2 pi storage pair (theta_c = 0.05 pi, peak at T = 0)
# followed by a lone 2 pi control pulse of half the duration peaking at T = 10.
DEFAULT_CONFIG = {
    "solitons": [
        {"xi": 0.0, "tau": 1.0, "c1": [math.sqrt(1 - 0.025 ** 2), 0.0], "c2": [0.025, 0.0]},
        {"xi": 0.0, "tau": 0.5, "c1": [0.0, 0.0], "c2": [2 * math.exp(-20.0), 0.0]},
    ],
    "medium": {"z_length": 10.0},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default ${OUT_ENV} or ./lambdamem_out)")
    common.add_argument("--grid-dt", type=float, help="override grid.dt")
    common.add_argument("--grid-dz", type=float, help="override grid.dz")
    common.add_argument("--clamp", type=float, help="override grid.clamp")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="lambdamem", description="Storage and retrieval of pulses in a Lambda medium.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("coeffs", parents=[common], help="tabulate kappa1 and delta1")
    c.add_argument("--widths", type=_floats, help="tau/T2* values, comma separated")
    c.add_argument("--means", type=_floats, help="tau*Delta_bar values, comma separated")
    c.add_argument("--no-broadening", action="store_true", help="single row for T2* = inf at resonance")

    a = sub.add_parser("analytic", parents=[common], help="evaluate the soliton solution on a grid")
    a.add_argument("--deltas", type=_floats, help="evaluate densities at these detunings instead of Doppler nodes")

    s = sub.add_parser("simulate", parents=[common], help="run the Maxwell-Bloch solver")
    s.add_argument("--compare-analytic", action="store_true",
                   help=f"fail unless the run matches the soliton solution to {COMPARE_RTOL:g}")

    sc = sub.add_parser("scan", parents=[common], help="storage-location or displacement scan")
    sc.add_argument("--jobs", type=int, default=1, help="worker processes")

    sub.add_parser("compare", parents=[common], help="numeric vs analytic deltas")
    return p


class Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, root: Path):
        self.root = root
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        p = self.root / name
        self.files.append(p)
        return p

    def discard(self):
        for p in self.files:
            p.unlink(missing_ok=True)
        self.files.clear()


def _load_config(args, required: bool = False, default=None) -> cfgmod.RunConfig:
    if args.config is None:
        if required:
            raise UsageError(f"{args.command} needs --config")
        raw = json.loads(json.dumps(default or {}))
    else:
        try:
            raw = json.loads(args.config.read_text())
        except FileNotFoundError:
            raise UsageError(f"config file {args.config} not found")
        except json.JSONDecodeError as exc:
            raise ConfigError([ConfigIssue("BadType", str(args.config), f"invalid JSON: {exc}")])
    if not isinstance(raw, dict):
        raise ConfigError([ConfigIssue("BadType", "<root>", "configuration must be a JSON object")])
    grid = raw.setdefault("grid", {}) if isinstance(raw.get("grid", {}), dict) else raw["grid"]
    for flag, key in (("grid_dt", "dt"), ("grid_dz", "dz"), ("clamp", "clamp")):
        val = getattr(args, flag, None)
        if val is not None and isinstance(grid, dict):
            grid[key] = val
    return cfgmod.validate_config(raw)


def _solution(cfg: cfgmod.RunConfig) -> ist.SolitonSolution:
    if not cfg.solitons:
        raise ConfigError([ConfigIssue("MissingField", "solitons", "at least one soliton is required")])
    return ist.SolitonSolution.build(cfg.params, cfg.inits, cfg.doppler, cfg.medium.kappa0,
                                     cfg.medium.initial_state)


def _write_slices(out: Outputs, cfg, fields, density, prefix: str) -> None:
    for z in cfg.slices_z:
        write_field_slice(out.path(f"{prefix}_fields_z{z:g}.csv"), fields, z)
    write_density_slice(out.path(f"{prefix}_density.csv"), density)


def cmd_coeffs(args, out: Outputs) -> dict:
    cfg = _load_config(args)
    if args.no_broadening:
        widths, means = [0.0], [0.0]
    else:
        widths = args.widths or list(cfg.coeff_widths)
        means = args.means or list(cfg.coeff_means)
    if any(w < 0 for w in widths):
        raise UsageError("widths must be >= 0")
    rows = coefficient_table(widths, means, cfg.medium.kappa0)
    path = out.path("coeffs.csv")
    with open(path, "w") as fh:
        fh.write("width,mean,kappa1_over_kappa0,delta1_over_kappa0\n")
        for row in rows:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return {"config": cfg, "summary": {"widths": widths, "means": means, "rows": len(rows)}}


def cmd_analytic(args, out: Outputs) -> dict:
    cfg = _load_config(args, default=DEFAULT_CONFIG)
    sol = _solution(cfg)
    t = cfg.settings.t_axis()
    z = cfg.settings.z_axis(cfg.medium.z_length)
    fields = ist.field_grid(sol, z, t)
    if args.deltas:
        density = ist.density_field(sol, z, deltas=args.deltas)
    else:
        density = ist.density_field(sol, z, cfg.doppler)
    problems = check_run_hygiene(SimulationResult(fields, density))
    if problems:
        raise LambdaMemError("analytic density failed checks: " + "; ".join(problems[:3]))
    write_grid(out.path("analytic.lmg"), fields, density)
    _write_slices(out, cfg, fields, density, "analytic")
    if args.deltas:
        for d in args.deltas:
            write_density_slice(out.path(f"analytic_density_delta{d:g}.csv"), density, d)
    summary = {"n": sol.n, "kappa1": [c.kappa1 for c in sol.coefficients],
               "delta1": [c.delta1 for c in sol.coefficients]}
    try:
        summary["imprint_location"] = analysis.locate_imprint(density).location
    except LambdaMemError:
        summary["imprint_location"] = None
    return {"config": cfg, "summary": summary}


def boundary_fields(cfg: cfgmod.RunConfig, t: np.ndarray):
    b = cfg.boundary
    if b.kind == "solitons":
        om_s, om_c = ist.reconstruct_fields(_solution(cfg), np.zeros_like(t), t)
    else:
        om_s, om_c = analysis.storage_pulses(b.theta_c_pi * math.pi, t, center=b.center)
    for c in b.controls:
        om_c = om_c + analysis.control_pulse(t, c.tau, c.center)
    return om_s, om_c


def _field_deltas(numeric, exact) -> dict:
    out = {}
    for name in ("omega_s", "omega_c"):
        diff = getattr(numeric, name) - getattr(exact, name)
        scale = max(np.abs(exact.omega_s).max(), np.abs(exact.omega_c).max())
        out[name] = {"linf": float(np.abs(diff).max()),
                     "linf_rel": float(np.abs(diff).max() / scale),
                     "l2": float(np.sqrt(np.mean(np.abs(diff) ** 2)))}
    return out


def _run_numeric(cfg, out: Outputs, prefix: str):
    if cfg.boundary is None:
        raise UsageError("simulate needs a 'boundary' section in the config")
    res = simulate(cfg.medium, cfg.doppler, lambda t: boundary_fields(cfg, t), cfg.settings)
    problems = check_run_hygiene(res)
    if problems:
        raise LambdaMemError("density checks failed: " + "; ".join(problems[:3]))
    write_grid(out.path(f"{prefix}.lmg"), res.fields, res.density)
    _write_slices(out, cfg, res.fields, res.density, prefix)
    return res


def _check_comparable(cfg):
    issues = []
    if cfg.medium.gamma != 0:
        issues.append(ConfigIssue("BadGrid", "medium.gamma", "analytic comparison needs gamma = 0"))
    if cfg.boundary.kind != "solitons" or cfg.boundary.controls:
        issues.append(ConfigIssue("BadGrid", "boundary.kind", "analytic comparison needs a pure soliton boundary"))
    if issues:
        raise ConfigError(issues)


def _analytic_reference(cfg, res):
    sol = _solution(cfg)
    exact = ist.field_grid(sol, res.fields.z_axis, res.fields.t_axis)
    dens = ist.density_field(sol, res.density.z_axis, deltas=res.density.delta_nodes,
                             weights=res.density.weights)
    return exact, dens


def cmd_simulate(args, out: Outputs) -> dict:
    cfg = _load_config(args, required=True)
    if cfg.boundary is None:
        raise UsageError("simulate needs a 'boundary' section in the config")
    if args.compare_analytic:
        _check_comparable(cfg)
    res = _run_numeric(cfg, out, "numeric")
    summary = {"diagnostics": res.diagnostics}
    try:
        summary["imprint_location"] = analysis.locate_imprint(res.density).location
    except LambdaMemError:
        summary["imprint_location"] = None
    if args.compare_analytic:
        exact, _ = _analytic_reference(cfg, res)
        deltas = _field_deltas(res.fields, exact)
        worst = max(d["linf_rel"] for d in deltas.values())
        summary["compare"] = {"fields": deltas, "rtol": COMPARE_RTOL, "passed": worst < COMPARE_RTOL}
        if worst >= COMPARE_RTOL:
            raise LambdaMemError(f"numeric fields differ from the soliton solution by {worst:.3g} (relative)")
    return {"config": cfg, "summary": summary}


def cmd_compare(args, out: Outputs) -> dict:
    cfg = _load_config(args, default={**DEFAULT_CONFIG, "boundary": {"kind": "solitons"}})
    if cfg.boundary is None:
        raise UsageError("compare needs a 'boundary' section in the config")
    _check_comparable(cfg)
    res = _run_numeric(cfg, out, "numeric")
    exact, dens = _analytic_reference(cfg, res)
    write_grid(out.path("analytic.lmg"), exact, dens)
    rho_diff = np.abs(res.density.averaged() - dens.averaged())
    report = {"fields": _field_deltas(res.fields, exact),
              "density": {"linf": float(rho_diff.max()), "l2": float(np.sqrt(np.mean(rho_diff ** 2)))}}
    with open(out.path("compare.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return {"config": cfg, "summary": report}


def cmd_scan(args, out: Outputs) -> dict:
    cfg = _load_config(args, required=True)
    sc = cfg.scan
    if sc is None:
        raise UsageError("scan needs a 'scan' section in the config")
    if not sc.values:
        raise UsageError("empty scan range")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    plan = cfg.plan()
    if sc.kind == "storage":
        results = analysis.scan_storage_location([v * math.pi for v in sc.values], sc.variants, plan, args.jobs)
    else:
        results = analysis.scan_displacement(sc.values, sc.variants, plan, sc.x1, sc.refine, args.jobs)
    summary = []
    for i, r in enumerate(results):
        analysis.write_scan_csv(out.path(f"scan_{sc.kind}_{i}.csv"), r)
        summary.append({"metadata": r.metadata, "failures": len(r.failures)})
    return {"config": cfg, "summary": summary}


COMMANDS = {"coeffs": cmd_coeffs, "analytic": cmd_analytic, "simulate": cmd_simulate,
            "scan": cmd_scan, "compare": cmd_compare}


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_manifest(out: Outputs, command: str, cfg, summary, started: float) -> Path:
    s = cfg.settings
    manifest = {
        "config_hash": cfg.digest(),
        "subcommand": command,
        "parameters": summary,
        "outputs": sorted(p.name for p in out.files),
        "wall_time": time.perf_counter() - started,
        "solver_settings": {"dt": s.dt, "dz": s.dz, "clamp": s.clamp_threshold,
                            "t_window": list(s.t_window), "order": s.order,
                            "doppler_nodes": s.doppler_nodes},
    }
    path = out.path("manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
    return path


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"lambdamem: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    root = args.out or Path(os.environ.get(OUT_ENV, "lambdamem_out"))
    out = Outputs(root)
    started = time.perf_counter()
    try:
        result = COMMANDS[args.command](args, out)
        write_manifest(out, args.command, result["config"], result["summary"], started)
    except UsageError as exc:
        out.discard()
        print(f"lambdamem: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        out.discard()
        print("lambdamem: invalid configuration:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return EXIT_INVALID
    except (LambdaMemError, ArithmeticError, np.linalg.LinAlgError) as exc:
        out.discard()
        print(f"lambdamem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BaseException:
        out.discard()
        raise
    print(root / "manifest.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
