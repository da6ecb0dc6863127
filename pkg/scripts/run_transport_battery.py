#!/usr/bin/env python3
"""Full Monte Carlo change-of-measure battery at the release parameters.

Writes CSV + manifest under runs/transport-mc and prints one PASS/FAIL
line.  Expect a few minutes of runtime at n = 1e5.
"""

import sys
from pathlib import Path

from nls_transport.cli import main

CONFIG = Path(__file__).parent / "configs" / "transport_mc.json"

if __name__ == "__main__":
    sys.exit(main(["transport-mc", "--config", str(CONFIG)]
                  + sys.argv[1:]))
