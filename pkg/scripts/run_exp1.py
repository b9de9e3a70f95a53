"""Convergence on exact targets: ORON versus sweep for full GNJD and the JNJD subset.

    python scripts/run_exp1.py --runs 10 --out-dir results/exp1 [--plot]

Any ``gnjd exp1`` flag is accepted.
"""
import sys

from gnjd.cli import build_parser, cmd_experiment
from gnjd.experiments import default_config


def main(argv=None):
    args = build_parser().parse_args(["exp1", *(sys.argv[1:] if argv is None else argv)])
    if args.out_dir is None:
        args.out_dir = "results/exp1"
    code = cmd_experiment(args)
    cfg = default_config("exp1")
    print(f"settings R = {args.settings or list(cfg.R_values)}; see exp1_summary.csv for median and quartiles")
    return code


if __name__ == "__main__":
    sys.exit(main())
