#!/usr/bin/env python3
"""
Scenario Runner
Replications of one study scenario: records CSV, summary CSV, violin
plots and scenario extras
"""

import json
import sys
from dataclasses import replace
from pathlib import Path

# Add lib directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "lib"))
from n8n_json_handler import create_n8n_processor, first_item
from harness import load_scenario_config, resolve_workers, run_scenario

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def _resolve(config):
    path = Path(config)
    if not path.exists() and (SCENARIO_DIR / path).exists():
        return SCENARIO_DIR / path
    return path


def process_scenario(json_data):
    """
    Request: {"config": scenario JSON path (or a name under scripts/scenarios),
              "overrides"?: keys merged last, "workers"?: thread count}
    Result: written files, per-cell summary rows and scenario extras
    """
    if "config" not in json_data:
        raise ValueError("Request needs a 'config' scenario file")
    cfg = load_scenario_config(_resolve(json_data["config"]), json_data.get("overrides"))
    cfg = replace(cfg, workers=resolve_workers(cfg, json_data.get("workers")))
    result = run_scenario(cfg)
    return {
        "success": True,
        "scenario": cfg.scenario.value,
        "records": len(result.records),
        "failures": sum(1 for r in result.records if r.status != "ok"),
        "files": result.files,
        "summary": result.summary.to_dict(orient="records"),
        "extras": result.extras,
    }


def process_n8n_input(json_data):
    return process_scenario(first_item(json_data))


def main_standalone(config_file):
    """Standalone mode: the argument is the scenario file itself"""
    result = process_scenario({"config": config_file})
    print(f"✓ Scenario {result['scenario']} completed!")
    print(f"  Records: {result['records']} ({result['failures']} failed)")
    for name, path in result["files"].items():
        print(f"  {name}: {path}")
    if result["extras"]:
        print(f"  Extras: {json.dumps(result['extras'])}")


if __name__ == "__main__":
    if len(sys.argv) == 2:
        main_standalone(sys.argv[1])
    elif len(sys.argv) == 1:
        n8n_processor = create_n8n_processor(process_n8n_input)
        n8n_processor()
    else:
        print("Usage:")
        print("  Standalone: python3 03_run_scenario.py <scenario_json_file>")
        print('  n8n mode: echo \'{"config": "correct.json"}\' | python3 03_run_scenario.py')
        sys.exit(1)
