#!/usr/bin/env python3
"""
n8n JSON Handler for the Study Scripts
JSON in on stdin (or from a file), study results out on stdout
Auto-unwraps {"batch": [...]}, converts numpy values and keeps UTF-8 safe output
"""

import gc
import json
import logging
import math
import sys

import numpy as np

LOGGER = logging.getLogger(__name__)


def to_json_safe(obj):
    """
    Recursively convert study results into plain JSON values

    numpy scalars and arrays become Python numbers and lists, non-finite
    floats become null, strings are re-encoded with replacement characters.
    """
    if isinstance(obj, str):
        return obj.encode("utf-8", errors="replace").decode("utf-8")
    if isinstance(obj, dict):
        return {to_json_safe(str(k)): to_json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json_safe(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return [to_json_safe(item) for item in obj.tolist()]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _unwrap_batch(data):
    if isinstance(data, dict) and len(data) == 1 and isinstance(data.get("batch"), list):
        return data["batch"]
    return data


def first_item(data):
    """Single request dict out of an n8n item list"""
    if isinstance(data, list):
        if not data:
            raise ValueError("Empty input list")
        data = data[0]
    if not isinstance(data, dict):
        raise ValueError("Input must be a JSON object")
    return data


class N8nJsonHandler:
    """Reads the request, holds the result and writes the n8n response"""

    def __init__(self):
        self.input_data = None
        self.output_data = None

    def load_from_n8n(self):
        """Load JSON from stdin; on failure the error payload is already written"""
        try:
            input_text = sys.stdin.buffer.read().decode("utf-8", errors="replace")
            self.input_data = _unwrap_batch(json.loads(input_text))
            return True
        except Exception as e:
            self.output_error(f"Failed to load JSON from n8n: {e}")
            return False

    def load_from_file(self, filename):
        try:
            with open(filename, "r", encoding="utf-8") as f:
                self.input_data = _unwrap_batch(json.load(f))
            return True
        except Exception as e:
            self.output_error(f"Failed to load JSON from file {filename}: {e}")
            return False

    def get_data(self):
        return self.input_data

    def set_output(self, data):
        self.output_data = data

    def output_to_n8n(self):
        if self.output_data is None:
            self.output_error("No output data set")
            return
        try:
            print(json.dumps(to_json_safe(self.output_data), ensure_ascii=False,
                             separators=(",", ":")))
        except (TypeError, ValueError) as e:
            self.output_error(f"Failed to serialize output: {e}")

    def output_error(self, error_message):
        """Error in the n8n-compatible shape {"error", "success": false, "data": null}"""
        LOGGER.error("%s", error_message)
        error_response = {"error": error_message, "success": False, "data": None}
        try:
            print(json.dumps(to_json_safe(error_response), ensure_ascii=False))
        except (TypeError, ValueError):
            print('{"error": "Critical JSON serialization error", "success": false}')


def create_n8n_processor(user_processor_function):
    """
    Wrap a processing function json_data -> result for n8n stdin/stdout use

    Returns:
        Callable running one request/response cycle
    """

    def n8n_wrapper():
        handler = N8nJsonHandler()
        if not handler.load_from_n8n():
            return
        input_data = handler.get_data()
        try:
            processed_data = user_processor_function(input_data)
            handler.set_output(processed_data)
            handler.output_to_n8n()
            del input_data, processed_data
            gc.collect()
        except Exception as e:
            handler.output_error(f"Processing error: {e}")

    return n8n_wrapper


def run_processor_from_file(filename, user_processor_function):
    """Run a processor on a JSON file; None when loading or processing fails"""
    handler = N8nJsonHandler()
    if not handler.load_from_file(filename):
        return None
    try:
        return user_processor_function(handler.get_data())
    except Exception as e:
        print(f"Processing error: {e}", file=sys.stderr)
        return None
