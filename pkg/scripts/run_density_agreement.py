#!/usr/bin/env python3
"""Two-formula density agreement sweep (direct vs normal form)."""

import sys
from pathlib import Path

from nls_transport.cli import main

CONFIG = Path(__file__).parent / "configs" / "density_check.json"

if __name__ == "__main__":
    sys.exit(main(["density-check", "--config", str(CONFIG)]
                  + sys.argv[1:]))
