#!/usr/bin/env python3
"""
Whittle-Matern study command line: simulate, estimate, scenario, kakutani, diagnostics
"""

import sys
from pathlib import Path

# Add lib directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "lib"))
from cli import cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
