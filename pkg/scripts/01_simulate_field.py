#!/usr/bin/env python3
"""
Field Simulator
Karhunen-Loeve sample of a Whittle-Matern field at a quasi-uniform design
"""

import json
import sys
from pathlib import Path

# Add lib directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "lib"))
from n8n_json_handler import create_n8n_processor, first_item, run_processor_from_file
from harness import load_scenario_config, scenario_design
from sampler import KarhunenLoeveSampler

DEFAULT_N = 100
DEFAULT_SEED = 1
REQUEST_KEYS = ("true_parameters", "domain", "design")


def process_simulation(json_data):
    """
    Request: {"n", "seed", "config"?, "true_parameters"?, "domain"?, "design"?}
    Result: design coordinates, field values and the generating parameters
    """
    overrides = {k: json_data[k] for k in REQUEST_KEYS if k in json_data}
    cfg = load_scenario_config(json_data.get("config"), overrides)
    n = int(json_data.get("n", DEFAULT_N))
    seed = int(json_data.get("seed", DEFAULT_SEED))

    design = scenario_design(cfg, n)
    sample = KarhunenLoeveSampler(cfg.truth, cfg.truncation, design).draw(cfg.law, seed)
    truth = cfg.truth
    return {
        "success": True,
        "domain": design.domain.value,
        "n": len(design),
        "seed": seed,
        "law": cfg.law.label,
        "true_parameters": {"s0": truth.s, "tau0": truth.tau, "sigma2_0": truth.sigma2,
                            "normalization": truth.normalization.value,
                            "truncation": cfg.truncation},
        "points": design.ambient.tolist(),
        "values": sample.values.tolist(),
    }


def process_n8n_input(json_data):
    """n8n mode: first item of the batch is the request"""
    return process_simulation(first_item(json_data))


def main_standalone(input_file):
    """Standalone mode for local testing"""
    input_path = Path(input_file)
    if not input_path.exists():
        print(f"Error: Input file not found: {input_file}")
        sys.exit(1)

    result = run_processor_from_file(input_path, process_n8n_input)
    if result is None:
        sys.exit(2)

    output_file = Path.cwd() / f"{input_path.stem}_field.json"
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(result, f, ensure_ascii=False, indent=2)

    print("✓ Field simulated!")
    print(f"  Output: {output_file}")
    print(f"  Points: {result['n']} on the {result['domain']}")
    print(f"  Law: {result['law']}, seed {result['seed']}")


if __name__ == "__main__":
    if len(sys.argv) == 2:
        main_standalone(sys.argv[1])
    elif len(sys.argv) == 1:
        n8n_processor = create_n8n_processor(process_n8n_input)
        n8n_processor()
    else:
        print("Usage:")
        print("  Standalone: python3 01_simulate_field.py <request_json_file>")
        print("  n8n mode: cat request.json | python3 01_simulate_field.py")
        sys.exit(1)
