#!/usr/bin/env python3
"""
Smoothness Estimator
Maximum likelihood smoothness (and magnitude) for a field sample; accepts
the output of 01_simulate_field.py directly
"""

import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add lib directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "lib"))
from n8n_json_handler import create_n8n_processor, first_item, run_processor_from_file
from estimator import estimate_smoothness, matern_family, spectral_family, wendland_family
from geometry import Domain, PointSet
from harness import fit_candidate_kernels, load_scenario_config


def _family(cfg, request, dimension):
    name = request.get("family", "spectral")
    profile = request.get("profile_magnitude")
    if name == "spectral":
        tau = float(request.get("tau", cfg.tau0))
        return spectral_family(tau, cfg.truncation, cfg.domain, cfg.normalization,
                               cfg.sigma2_0, bool(profile))
    if name not in ("matern", "wendland"):
        raise ValueError(f"Unknown family {name!r}")
    fit = fit_candidate_kernels(replace(cfg, kernels=(name,)))[name]
    profile = True if profile is None else bool(profile)
    build = matern_family if name == "matern" else wendland_family
    return build(fit.scale, fit.sigma2, dimension, profile)


def process_estimation(json_data):
    """
    Request: {"points", "values", "domain", "family"?, "tau"?, "profile_magnitude"?,
              "interval"?, "config"?, "true_parameters"?}
    Result: the EstimationResult fields
    """
    domain = Domain(json_data.get("domain", "sphere"))
    ps = PointSet(domain, np.asarray(json_data["points"], dtype=float), label="request")
    values = np.asarray(json_data["values"], dtype=float)
    overrides = {"domain": domain.value}
    if "true_parameters" in json_data:
        overrides["true_parameters"] = {k: v for k, v in json_data["true_parameters"].items()
                                        if k in ("s0", "tau0", "sigma2_0", "truncation",
                                                 "normalization")}
    cfg = load_scenario_config(json_data.get("config"), overrides)
    family = _family(cfg, json_data, ps.dimension)
    interval = json_data.get("interval", [cfg.s_min, cfg.s_max])
    result = estimate_smoothness(family, ps, values, tuple(interval), cfg.grid_step,
                                 cfg.tolerance)
    output = {"success": True, "family": family.label, "n": len(ps)}
    output.update(result.as_dict())
    return output


def process_n8n_input(json_data):
    return process_estimation(first_item(json_data))


def main_standalone(input_file):
    """Standalone mode for local testing"""
    input_path = Path(input_file)
    if not input_path.exists():
        print(f"Error: Input file not found: {input_file}")
        sys.exit(1)

    result = run_processor_from_file(input_path, process_n8n_input)
    if result is None:
        sys.exit(2)

    output_file = Path.cwd() / f"{input_path.stem}_estimate.json"
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(result, f, ensure_ascii=False, indent=2)

    print("✓ Smoothness estimated!")
    print(f"  Output: {output_file}")
    print(f"  s_hat: {result['s_hat']:.4f}  sigma2_hat: {result['sigma2_hat']:.4g}")
    if result["boundary"]:
        print("  Warning: maximizer on the search boundary")


if __name__ == "__main__":
    if len(sys.argv) == 2:
        main_standalone(sys.argv[1])
    elif len(sys.argv) == 1:
        n8n_processor = create_n8n_processor(process_n8n_input)
        n8n_processor()
    else:
        print("Usage:")
        print("  Standalone: python3 02_estimate_smoothness.py <field_json_file>")
        print("  n8n mode: cat field.json | python3 02_estimate_smoothness.py")
        sys.exit(1)
