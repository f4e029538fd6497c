"""Command line: scenario runner, single-check verification, calibration.

Subcommands
    run <cfg>            run a scenario config, write report.json + data CSVs
    verify <check>       run one named check, print its JSON record
    calibrate <csv>      infer the phase scale from fringe measurements
    classical verify     run the stationary-path suite
    list-checks          print the check catalogue

Exit codes: 0 all requested checks pass, 1 any check failed, 2 config or
usage error.

Scenario configs are INI-style text with three sections:

    [scenario]
    name = free-desk          # free | harmonic | custom
    system = free
    mass = 1.0
    hbar = 1.0                # eta may be given instead; hbar * eta = 1
    grid_min = -20.0
    grid_max = 20.0
    grid_count = 512
    dt = 0.1
    steps = 20

    [checks]
    run = semigroup unitarity commutator

    [tolerances]              # optional per-check overrides
    semigroup = 1e-3
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .calibration import infer_eta
from .checks import CHECKS, CheckResult, environment_fingerprint, run_checks
from .classical import (
    classical_action_along,
    discrete_stationary_path,
    euler_lagrange_residual,
    stationary_midpoint,
)
from .density import classical_action, free_particle, harmonic
from .evolution import evolve, gaussian_packet, trace_to_csv
from .grids import build_spatial_grid
from .propagator import analytic_short_time

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(Exception):
    pass


def _parse_scenario(path: Path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "scenario" not in parser:
        raise ConfigError("missing [scenario] section")
    sc = parser["scenario"]
    scenario = {
        "name": sc.get("name", path.stem),
        "system": sc.get("system", "free"),
        "mass": sc.getfloat("mass", 1.0),
        "grid_min": sc.getfloat("grid_min", -20.0),
        "grid_max": sc.getfloat("grid_max", 20.0),
        "grid_count": sc.getint("grid_count", 512),
        "dt": sc.getfloat("dt", 0.1),
        "steps": sc.getint("steps", 10),
    }
    if scenario["system"] not in ("free", "harmonic", "custom"):
        raise ConfigError(f"unknown system {scenario['system']!r}; "
                          "expected free, harmonic, or custom")
    hbar = sc.getfloat("hbar", fallback=None)
    eta = sc.getfloat("eta", fallback=None)
    if hbar is None and eta is None:
        hbar = 1.0
    if hbar is None:
        hbar = 1.0 / eta
    if eta is not None and abs(hbar * eta - 1.0) > 1e-12:
        raise ConfigError(f"hbar * eta = {hbar * eta} must equal 1")
    scenario["hbar"] = hbar
    if scenario["system"] == "harmonic":
        scenario["omega"] = sc.getfloat("omega", 1.0)
    names = None
    if "checks" in parser:
        raw = parser["checks"].get("run", "").replace(",", " ").split()
        names = raw
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise ConfigError(
                f"unknown check(s) {unknown}; valid names: {sorted(CHECKS)}")
    tolerances = {}
    if "tolerances" in parser:
        for key, value in parser["tolerances"].items():
            if key not in CHECKS:
                raise ConfigError(
                    f"tolerance for unknown check {key!r}; valid names: {sorted(CHECKS)}")
            tolerances[key] = float(value)
    return {"scenario": scenario, "check_names": names, "tolerances": tolerances}


def _report(results: list[CheckResult], scenario: dict | None,
            tolerances: dict) -> dict:
    return {
        "checks": [r.to_dict() for r in results],
        "environment": environment_fingerprint(),
        "config": {"scenario": scenario, "tolerances": tolerances},
        "all_pass": all(r.passed for r in results),
    }


def _write_report(report: dict, path: Path) -> None:
    report = dict(report)
    report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def _scenario_artifacts(scenario: dict, outdir: Path) -> list[str]:
    """Small evolution trace of the configured system, as plot-ready CSV."""
    grid = build_spatial_grid(scenario["grid_min"], scenario["grid_max"],
                              scenario["grid_count"])
    system = scenario["system"]
    if system == "harmonic":
        omega = scenario.get("omega", 1.0)
        lag = harmonic(scenario["mass"], omega)
        sigma0 = 1.0 / math.sqrt(2 * omega * scenario["mass"] / scenario["hbar"])
    else:
        lag = free_particle(scenario["mass"])
        sigma0 = (scenario["grid_max"] - scenario["grid_min"]) / 12.0
    psi = gaussian_packet(grid, 0.0, sigma0, 0.0, hbar=scenario["hbar"])
    kernel = analytic_short_time(scenario["mass"], lag.potential, scenario["dt"],
                                 scenario["hbar"], grid)
    trace = evolve(kernel, psi, scenario["steps"])
    trace_path = outdir / "trace.csv"
    trace_to_csv(trace, trace_path, lag.potential, scenario["mass"])
    return [trace_path.name]


def cmd_run(args) -> int:
    try:
        parsed = _parse_scenario(Path(args.config))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = parsed["check_names"]
    if names is not None and not names:
        print("warning: empty check list; nothing to verify", file=sys.stderr)
        results = []
    else:
        results = run_checks(names, parsed["tolerances"])
    report = _report(results, parsed["scenario"], parsed["tolerances"])
    try:
        report["artifacts"] = _scenario_artifacts(parsed["scenario"], outdir)
    except (RuntimeError, ValueError) as exc:
        report["artifacts"] = []
        report["artifact_error"] = str(exc)
    _write_report(report, outdir / "report.json")
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        print(f"[{flag}] {r.name}: residual {r.residual:.3e} "
              f"(tolerance {r.tolerance:.1e})")
    print(f"report written to {outdir / 'report.json'}")
    return EXIT_PASS if all(r.passed for r in results) else EXIT_CHECK_FAILED


def cmd_verify(args) -> int:
    if args.check not in CHECKS:
        print(f"unknown check {args.check!r}; valid names: {sorted(CHECKS)}",
              file=sys.stderr)
        return EXIT_CONFIG_ERROR
    tolerances = {args.check: args.tolerance} if args.tolerance else {}
    result = run_checks([args.check], tolerances)[0]
    payload = result.to_dict()
    if args.check == "cramer-rao":
        # contract: emit the information, resolutions, and the product
        d = payload["details"]
        payload["summary"] = {
            "I": d["information"],
            "delta_A": math.sqrt(d["information"]),
            "delta_A_min": 1.0 / math.sqrt(d["information"]),
            "product": d["product"],
        }
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_PASS if result.passed else EXIT_CHECK_FAILED


def cmd_calibrate(args) -> int:
    path = Path(args.csv)
    if not path.exists():
        print(f"measurement file not found: {path}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    rows = []
    try:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append((float(row["p"]), float(row["d"]),
                             float(row["D"]), float(row["dy"])))
        eta, spread = infer_eta(rows)
    except (KeyError, ValueError) as exc:
        print(f"bad measurement file: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    universal = spread < args.tolerance
    print(json.dumps({
        "eta": eta,
        "spread": spread,
        "hbar": 1.0 / eta,
        "universal": universal,
        "measurements": len(rows),
    }, sort_keys=True, indent=2))
    return EXIT_PASS if universal else EXIT_CHECK_FAILED


def cmd_classical_verify(_args) -> int:
    free = free_particle()
    lines = []
    ok = True

    path = discrete_stationary_path(0.0, 1.0, 64, 1.0 / 64, free)
    straight = float(np.max(np.abs(path.positions - np.linspace(0, 1, 65))))
    ok &= straight < 1e-12
    lines.append(("free-straight-line", straight, 1e-12))

    action = abs(classical_action_along(path) - 0.5)
    ok &= action < 1e-12
    lines.append(("classical-action", action, 1e-12))

    harm = harmonic()
    residuals = [euler_lagrange_residual(
        discrete_stationary_path(0.0, 1.0, n, (math.pi / 3) / n, harm))
        for n in (32, 64, 128)]
    order = sum(math.log2(residuals[i] / residuals[i + 1]) for i in range(2)) / 2
    ok &= abs(order - 2.0) < 0.3
    lines.append(("euler-lagrange-order", abs(order - 2.0), 0.3))

    b = stationary_midpoint(0.0, 4.0, 1.0, 3.0,
                            lambda a, c, t: classical_action(a, c, t, free))
    p_match = abs((b - 0.0) / 1.0 - (4.0 - b) / 3.0)
    ok &= p_match < 1e-8
    lines.append(("momentum-continuity", p_match, 1e-8))

    for name, residual, tol in lines:
        flag = "PASS" if residual <= tol else "FAIL"
        print(f"[{flag}] {name}: residual {residual:.3e} (tolerance {tol:.1e})")
    return EXIT_PASS if ok else EXIT_CHECK_FAILED


def cmd_list_checks(_args) -> int:
    width = max(len(n) for n in CHECKS)
    for name, spec in sorted(CHECKS.items()):
        print(f"{name.ljust(width)}  {spec.description}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actionlab",
        description="action-space inference laboratory: verification campaigns "
                    "over densities of action states and the propagators they "
                    "synthesize")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config", help="scenario config file (INI format)")
    p_run.add_argument("--output-dir", default="out",
                       help="directory for report.json and CSV artifacts")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run one named check")
    p_verify.add_argument("check", help="check name (see list-checks)")
    p_verify.add_argument("--tolerance", type=float, default=None,
                          help="override the pinned tolerance")
    p_verify.set_defaults(func=cmd_verify)

    p_cal = sub.add_parser("calibrate",
                           help="infer eta from fringe measurements (CSV: p,d,D,dy)")
    p_cal.add_argument("csv", help="measurement file")
    p_cal.add_argument("--tolerance", type=float, default=1e-6,
                       help="relative spread below which eta counts as universal")
    p_cal.set_defaults(func=cmd_calibrate)

    p_classical = sub.add_parser("classical", help="stationary-path subcommands")
    classical_sub = p_classical.add_subparsers(dest="classical_command",
                                               required=True)
    p_cv = classical_sub.add_parser("verify", help="run the stationary-path suite")
    p_cv.set_defaults(func=cmd_classical_verify)

    p_list = sub.add_parser("list-checks", help="print the check catalogue")
    p_list.set_defaults(func=cmd_list_checks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
