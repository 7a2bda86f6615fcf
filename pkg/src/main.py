"""
OccuMotion command-line entry point.

Usage: python main.py [--config FILE] [--threads N] [--seed N] [--verbose] <command> ...
"""

import sys

from cli.commands import run_cli


def main() -> int:
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
