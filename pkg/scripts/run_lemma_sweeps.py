#!/usr/bin/env python3
"""Counting bound, psi-estimate, and sum-as-integral identity sweeps."""

import sys

from nls_transport.cli import main

if __name__ == "__main__":
    sys.exit(main(["lemmas"] + sys.argv[1:]))
