"""
Run one experiment of the batch front end, e.g.

    python scripts/run_experiment.py crossing2 --a 2 --b 5 --samples 1000000 --seed 7
"""

import sys

from uipt_percolation import cli


def main():
    sys.exit(cli.main())


if __name__ == "__main__":
    main()
