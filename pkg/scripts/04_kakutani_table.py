#!/usr/bin/env python3
"""
Kakutani Table
Equivalence/orthogonality verdicts for pairs of field parameters, with
the analytic rule reported alongside
"""

import json
import sys
from pathlib import Path

# Add lib directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "lib"))
from n8n_json_handler import create_n8n_processor, first_item, run_processor_from_file
from kernels import SpectralParams
from measures import DEFAULT_TERMS, kakutani_classify, kakutani_matrix
from sampler import CoefficientLaw


def _case_report(case, law, terms):
    p1 = SpectralParams(float(case["s1"]), float(case["tau1"]), float(case.get("sigma2_1", 1.0)))
    p2 = SpectralParams(float(case["s2"]), float(case["tau2"]), float(case.get("sigma2_2", 1.0)))
    if "law" in case:
        law = CoefficientLaw.parse(case["law"], case.get("df"))
    return kakutani_classify(p1, p2, law, count=terms, dimension=int(case["d"]))


def process_kakutani(json_data):
    """
    Request: {"cases": [{s1, tau1, sigma2_1, s2, tau2, sigma2_2, d, law?}], "law"?, "terms"?}
             or matrix keys {"s", "tau1", "tau2", "dimensions", "sigma_factor", "s_shift"}
    Result: one report per case without the term arrays
    """
    law = CoefficientLaw.parse(json_data.get("law", "gaussian"), json_data.get("df"))
    terms = int(json_data.get("terms", DEFAULT_TERMS))
    if "cases" in json_data:
        reports = [_case_report(case, law, terms) for case in json_data["cases"]]
    else:
        reports = kakutani_matrix(float(json_data.get("s", 2.0)),
                                  float(json_data.get("tau1", 1.0)),
                                  float(json_data.get("tau2", 2.0)), law,
                                  tuple(json_data.get("dimensions", (1, 2, 3, 4))), terms,
                                  float(json_data.get("sigma_factor", 2.0)),
                                  float(json_data.get("s_shift", 1.0)))
    return {
        "success": True,
        "agreement": sum(1 for r in reports if r.agrees),
        "reports": [r.as_dict() for r in reports],
    }


def process_n8n_input(json_data):
    return process_kakutani(first_item(json_data))


def main_standalone(input_file):
    """Standalone mode for local testing"""
    input_path = Path(input_file)
    if not input_path.exists():
        print(f"Error: Input file not found: {input_file}")
        sys.exit(1)

    result = run_processor_from_file(input_path, process_n8n_input)
    if result is None:
        sys.exit(2)

    output_file = Path.cwd() / f"{input_path.stem}_kakutani.json"
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(result, f, ensure_ascii=False, indent=2)

    print("✓ Kakutani table completed!")
    print(f"  Output: {output_file}")
    for report in result["reports"]:
        print(f"  d={report['dimension']} {report['regime'] or ''}: {report['verdict']}"
              f" (analytic {report['analytic']})")


if __name__ == "__main__":
    if len(sys.argv) == 2:
        main_standalone(sys.argv[1])
    elif len(sys.argv) == 1:
        n8n_processor = create_n8n_processor(process_n8n_input)
        n8n_processor()
    else:
        print("Usage:")
        print("  Standalone: python3 04_kakutani_table.py <request_json_file>")
        print("  n8n mode: cat request.json | python3 04_kakutani_table.py")
        sys.exit(1)
