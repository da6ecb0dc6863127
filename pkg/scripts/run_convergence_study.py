#!/usr/bin/env python3
"""Truncation-convergence study for the energy correction, the modified
energy derivative, and the log-density."""

import sys
from pathlib import Path

from nls_transport.cli import main

CONFIG = Path(__file__).parent / "configs" / "convergence.json"

if __name__ == "__main__":
    sys.exit(main(["convergence", "--config", str(CONFIG)]
                  + sys.argv[1:]))
