#!/usr/bin/env python3
"""
Study Command Line
simulate, estimate, scenario, kakutani and diagnostics subcommands

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from errors import ConfigError, InvalidArgumentError, WhittleMaternError
from estimator import (estimate_smoothness, matern_family, spectral_family, wendland_family)
from geometry import Domain, DomainPoint, PointSet, design_diagnostics
from harness import (fit_candidate_kernels, load_scenario_config, resolve_workers,
                     run_scenario, scenario_design)
from kernels import SpectralParams
from measures import kakutani_classify, kakutani_matrix
from sampler import CoefficientLaw, KarhunenLoeveSampler

LOGGER = logging.getLogger("wm_study")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _drop_none(mapping):
    return {k: v for k, v in mapping.items() if v is not None}


def _truth_overrides(args):
    overrides = {}
    truth = _drop_none({"s0": getattr(args, "s0", None), "tau0": getattr(args, "tau0", None),
                        "law": getattr(args, "law", None),
                        "truncation": getattr(args, "truncation", None)})
    if truth:
        overrides["true_parameters"] = truth
    top = _drop_none({"domain": getattr(args, "domain", None),
                      "design": getattr(args, "design", None)})
    overrides.update(top)
    return overrides


def write_points_csv(ps, values, target):
    """Design coordinates plus field values, 17 significant digits"""
    columns = ["x", "y", "z"] if ps.domain is Domain.SPHERE else ["x"]
    frame = pd.DataFrame(ps.ambient, columns=columns)
    if values is not None:
        frame["u"] = values
    frame.to_csv(target, index=False, float_format="%.17g", lineterminator="\n")


def read_points_csv(path):
    """
    Design (and values when a 'u' column exists) from a points CSV

    Returns:
        tuple: (PointSet, np.ndarray or None)
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    if {"x", "y", "z"} <= set(frame.columns):
        points = [DomainPoint.on_sphere(row) for row in frame[["x", "y", "z"]].to_numpy()]
    elif "x" in frame.columns:
        points = [DomainPoint.on_interval(x) for x in frame["x"].to_numpy()]
    else:
        raise InvalidArgumentError(f"{path}: need columns x,y,z (sphere) or x (interval)")
    values = frame["u"].to_numpy(dtype=float) if "u" in frame.columns else None
    return PointSet.from_points(points, label=Path(path).stem), values


def _emit_json(payload, output):
    text = json.dumps(payload, indent=2, default=_json_default)
    if output:
        with open(output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        LOGGER.info("Wrote %s", output)
    else:
        print(text)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (np.ndarray, tuple)):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def cmd_simulate(args):
    cfg = load_scenario_config(args.config, _truth_overrides(args))
    design = scenario_design(cfg, args.n)
    sample = KarhunenLoeveSampler(cfg.truth, cfg.truncation, design).draw(cfg.law, args.seed)
    LOGGER.info("Simulated %s field at %d points (seed %d)", cfg.law.label, len(design), args.seed)
    write_points_csv(design, sample.values, args.output or sys.stdout)
    return EXIT_OK


def _estimate_family(cfg, args, dimension):
    if args.family == "spectral":
        tau = cfg.tau0 if args.tau is None else args.tau
        profile = bool(args.profile) if args.profile is not None else False
        return spectral_family(tau, cfg.truncation, cfg.domain, cfg.normalization,
                               cfg.sigma2_0, profile)
    fit = fit_candidate_kernels(replace(cfg, kernels=(args.family,)))[args.family]
    profile = True if args.profile is None else bool(args.profile)
    if args.family == "matern":
        return matern_family(fit.scale, fit.sigma2, dimension, profile)
    return wendland_family(fit.scale, fit.sigma2, dimension, profile)


def cmd_estimate(args):
    ps, values = read_points_csv(args.input)
    if values is None:
        raise InvalidArgumentError(f"{args.input}: no 'u' column with observations")
    overrides = _truth_overrides(args)
    overrides["domain"] = ps.domain.value
    cfg = load_scenario_config(args.config, overrides)
    family = _estimate_family(cfg, args, ps.dimension)
    interval = (args.s_min if args.s_min is not None else cfg.s_min,
                args.s_max if args.s_max is not None else cfg.s_max)
    result = estimate_smoothness(family, ps, values, interval, cfg.grid_step, cfg.tolerance,
                                 workers=resolve_workers(cfg, getattr(args, "workers", None)))
    payload = {"family": family.label, "n": len(ps), "domain": ps.domain.value}
    payload.update(result.as_dict())
    LOGGER.info("s_hat=%.6f sigma2_hat=%.6g boundary=%s", result.s_hat, result.sigma2_hat,
                result.boundary)
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_scenario(args):
    overrides = _drop_none({"profile": args.profile, "output_dir": args.output_dir,
                            "master_seed": args.seed,
                            "record_timing": True if args.record_timing else None})
    cfg = load_scenario_config(args.config, overrides)
    cfg = replace(cfg, workers=resolve_workers(cfg, getattr(args, "workers", None)))
    result = run_scenario(cfg)
    _emit_json({"scenario": cfg.scenario.value, "records": len(result.records),
                "files": result.files, "extras": result.extras}, None)
    return EXIT_OK


def _read_table(path):
    with open(path, "r", encoding="utf-8") as f:
        table = json.load(f)
    if isinstance(table, dict):
        table = table.get("cases", [])
    if not isinstance(table, list) or not table:
        raise ConfigError(f"Kakutani table {path} needs a nonempty list of cases", keys=["cases"])
    return table


def cmd_kakutani(args):
    cfg = load_scenario_config(args.config,
                               {"true_parameters": {"law": args.law}} if args.law else None)
    terms = args.terms or int(cfg.kakutani.get("terms", 100_000))
    if args.table:
        reports = []
        for index, case in enumerate(_read_table(args.table)):
            try:
                p1 = SpectralParams(float(case["s1"]), float(case["tau1"]),
                                    float(case.get("sigma2_1", 1.0)))
                p2 = SpectralParams(float(case["s2"]), float(case["tau2"]),
                                    float(case.get("sigma2_2", 1.0)))
                law = CoefficientLaw.parse(case.get("law", cfg.law.kind.value), case.get("df"))
                dimension = int(case["d"])
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigError(f"Kakutani case {index} is malformed ({e})",
                                  keys=[f"cases[{index}]"]) from e
            reports.append(kakutani_classify(p1, p2, law, count=terms, dimension=dimension))
    else:
        table = cfg.kakutani
        reports = kakutani_matrix(float(table.get("s", 2.0)), float(table.get("tau1", 1.0)),
                                  float(table.get("tau2", 2.0)), cfg.law,
                                  tuple(table.get("dimensions", (1, 2, 3, 4))), terms,
                                  float(table.get("sigma_factor", 2.0)),
                                  float(table.get("s_shift", 1.0)))
    rows = []
    for report in reports:
        row = report.as_dict()
        row["notes"] = "; ".join(row["notes"])
        rows.append(row)
    pd.DataFrame(rows).to_csv(args.output or sys.stdout, index=False, float_format="%.17g",
                              lineterminator="\n")
    disagreements = sum(1 for r in reports if not r.agrees)
    LOGGER.info("%d cases, %d empirical verdicts differ from the analytic rule",
                len(reports), disagreements)
    return EXIT_OK


def cmd_diagnostics(args):
    if args.input:
        ps, _ = read_points_csv(args.input)
    else:
        cfg = load_scenario_config(args.config, _truth_overrides(args))
        ps = scenario_design(cfg, args.n)
    diagnostics = design_diagnostics(ps, args.resolution)
    _emit_json({"n": len(ps), "domain": ps.domain.value, "label": ps.label,
                "fill_distance": diagnostics.fill_distance,
                "separation_radius": diagnostics.separation_radius,
                "mesh_ratio": diagnostics.mesh_ratio,
                "candidate_resolution": diagnostics.candidate_resolution}, args.output)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="wm_study", description="Whittle-Matern smoothness study")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, truth=True):
        p.add_argument("--config", help="Scenario JSON merged over the study defaults")
        if truth:
            p.add_argument("--domain", choices=[d.value for d in Domain])
            p.add_argument("--design", choices=["regular", "random"])
            p.add_argument("--s0", type=float)
            p.add_argument("--tau0", type=float)
            p.add_argument("--truncation", type=int)
            p.add_argument("--law")

    p = sub.add_parser("simulate", help="Sample a field at a design and write a points CSV")
    common(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("estimate", help="Estimate the smoothness from a points CSV")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--family", choices=["spectral", "matern", "wendland"], default="spectral")
    p.add_argument("--tau", type=float, help="Candidate range (spectral family)")
    p.add_argument("--profile", action=argparse.BooleanOptionalAction, default=None,
                   help="Profile the magnitude sigma^2 out of the likelihood")
    p.add_argument("--s-min", type=float)
    p.add_argument("--s-max", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", help="JSON path (default: stdout)")
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("scenario", help="Run a scenario: records, summary and plots")
    p.add_argument("--config", required=True)
    p.add_argument("--profile", help="Size profile (desk or paper)")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int, help="Master seed")
    p.add_argument("--output-dir")
    p.add_argument("--record-timing", action="store_true")
    p.set_defaults(handler=cmd_scenario)

    p = sub.add_parser("kakutani", help="Equivalence/orthogonality report for parameter pairs")
    common(p, truth=False)
    p.add_argument("--table", help="JSON list of cases (s1, tau1, sigma2_1, s2, tau2, sigma2_2, d)")
    p.add_argument("--law")
    p.add_argument("--terms", type=int)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(handler=cmd_kakutani)

    p = sub.add_parser("diagnostics", help="Fill distance, separation radius and mesh ratio")
    common(p)
    p.add_argument("--input", help="Points CSV; omitted means the configured design")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--resolution", type=int, help="Candidate set size (>= 10 n)")
    p.add_argument("--output", help="JSON path (default: stdout)")
    p.set_defaults(handler=cmd_diagnostics)
    return parser


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_CONFIG

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if not getattr(args, "handler", None):
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.handler(args)
    except ConfigError as e:
        LOGGER.error("%s", e)
        return EXIT_CONFIG
    except (WhittleMaternError, OSError, ValueError) as e:
        LOGGER.error("%s: %s", type(e).__name__, e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(cli_main())
