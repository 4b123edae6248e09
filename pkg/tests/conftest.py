"""Shared fixtures; puts scripts/lib on the import path like the numbered scripts do"""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
LIB = ROOT / "scripts" / "lib"
if str(LIB) not in sys.path:
    sys.path.insert(0, str(LIB))


@pytest.fixture
def scenario_dir():
    return ROOT / "scripts" / "scenarios"


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
