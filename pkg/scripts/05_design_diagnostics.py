#!/usr/bin/env python3
"""
Design Diagnostics
Fill distance, separation radius and mesh ratio of a point design
"""

import sys
from pathlib import Path

import numpy as np

# Add lib directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "lib"))
from n8n_json_handler import create_n8n_processor, first_item, run_processor_from_file
from geometry import (Domain, PointSet, design_diagnostics, quasi_uniform_design,
                      random_design)


def process_diagnostics(json_data):
    """
    Request: {"points", "domain"} or {"domain", "n", "design"?: regular|random, "seed"?},
             plus "resolution"? for the candidate set
    """
    domain = Domain(json_data.get("domain", "sphere"))
    if "points" in json_data:
        ps = PointSet(domain, np.asarray(json_data["points"], dtype=float), label="request")
    elif json_data.get("design", "regular") == "random":
        ps = random_design(domain, int(json_data["n"]), int(json_data.get("seed", 1)))
    else:
        ps = quasi_uniform_design(domain, int(json_data["n"]))
    diagnostics = design_diagnostics(ps, json_data.get("resolution"))
    return {
        "success": True,
        "domain": domain.value,
        "label": ps.label,
        "n": len(ps),
        "fill_distance": diagnostics.fill_distance,
        "separation_radius": diagnostics.separation_radius,
        "mesh_ratio": diagnostics.mesh_ratio,
        "candidate_resolution": diagnostics.candidate_resolution,
    }


def process_n8n_input(json_data):
    return process_diagnostics(first_item(json_data))


def main_standalone(input_file):
    """Standalone mode for local testing"""
    input_path = Path(input_file)
    if not input_path.exists():
        print(f"Error: Input file not found: {input_file}")
        sys.exit(1)

    result = run_processor_from_file(input_path, process_n8n_input)
    if result is None:
        sys.exit(2)

    print(f"✓ Design {result['label']} ({result['n']} points on the {result['domain']})")
    print(f"  Fill distance: {result['fill_distance']:.6f}")
    print(f"  Separation radius: {result['separation_radius']:.6f}")
    print(f"  Mesh ratio: {result['mesh_ratio']:.3f}")


if __name__ == "__main__":
    if len(sys.argv) == 2:
        main_standalone(sys.argv[1])
    elif len(sys.argv) == 1:
        n8n_processor = create_n8n_processor(process_n8n_input)
        n8n_processor()
    else:
        print("Usage:")
        print("  Standalone: python3 05_design_diagnostics.py <request_json_file>")
        print("  n8n mode: cat request.json | python3 05_design_diagnostics.py")
        sys.exit(1)
