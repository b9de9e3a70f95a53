"""Joint BSS of amplitude-modulated BPSK mixtures: median J-ISI versus SNR.

    python scripts/run_exp3.py --runs 100 --out-dir results/exp3 [--settings 10 20] [--plot]

Runs are spread over ``GNJD_THREADS`` worker processes.
"""
import sys

from gnjd.cli import build_parser, cmd_experiment
from run_exp2 import print_summary


def main(argv=None):
    args = build_parser().parse_args(["exp3", *(sys.argv[1:] if argv is None else argv)])
    if args.out_dir is None:
        args.out_dir = "results/exp3"
    code = cmd_experiment(args)
    print_summary(args.out_dir, "exp3")
    return code


if __name__ == "__main__":
    sys.exit(main())
