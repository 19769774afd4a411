"""
Entry point for running the experiment CLI directly.
This allows running the commands with `python -m radial_deep_nets`.
"""

import sys

from radial_deep_nets.cli import main

if __name__ == "__main__":
    sys.exit(main())
