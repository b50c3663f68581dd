#!/usr/bin/env python3
"""
RealityLab Experiment Runner

Command-line interface for running the certificate checks, the Bohm-EPR and
ideal-experiment analyses, and the consistent-histories demo.
"""

import sys

from src.cli import main


if __name__ == '__main__':
    sys.exit(main())
