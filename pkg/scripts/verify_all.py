"""
Run the acceptance checks of a tolerance profile and print a pass/fail matrix.
"""

import argparse
import sys

from uipt_percolation import dist_util, logger
from uipt_percolation.cli import EXIT_ACCEPTANCE, EXIT_OK, render, verify_all, write_output
from uipt_percolation.script_util import add_dict_to_argparser, parse_list, verify_all_defaults


def main():
    args = create_argparser().parse_args()

    logger.configure()
    profile = "quick" if args.quick else args.profile
    only = set(parse_list(args.only, int)) if args.only else None
    logger.log(f"running acceptance checks with profile {profile}...")
    payload = verify_all(
        profile,
        seed=args.seed,
        workers=dist_util.resolve_workers(args.workers or None),
        progress=args.progress,
        only=only,
    )
    write_output(render(payload), args.output)
    sys.exit(EXIT_OK if payload["results"]["pass"] else EXIT_ACCEPTANCE)


def create_argparser():
    defaults = dict(
        seed=0,
        workers=0,
        output="",
        progress=False,
        only="",  # comma list of check numbers
    )
    defaults.update(verify_all_defaults())
    parser = argparse.ArgumentParser()
    add_dict_to_argparser(parser, defaults)
    return parser


if __name__ == "__main__":
    main()
