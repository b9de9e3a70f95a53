"""Noisy targets: median J-ISI versus SNR.

    python scripts/run_exp2.py --runs 100 --out-dir results/exp2 [--settings 5 20] [--plot]
"""
import csv
import sys
from pathlib import Path

from gnjd.cli import build_parser, cmd_experiment


def print_summary(out_dir, name):
    for path in sorted(Path(out_dir).glob(f"{name}_R*.csv")):
        rows = [r for r in csv.reader(path.read_text().splitlines()) if r and not r[0].startswith("#")]
        print(path.stem)
        for snr, med, q1, q3 in rows[1:]:
            print(f"  {float(snr):6.1f} dB  median {float(med):.4f}  [{float(q1):.4f}, {float(q3):.4f}]")


def main(argv=None):
    args = build_parser().parse_args(["exp2", *(sys.argv[1:] if argv is None else argv)])
    if args.out_dir is None:
        args.out_dir = "results/exp2"
    code = cmd_experiment(args)
    print_summary(args.out_dir, "exp2")
    return code


if __name__ == "__main__":
    sys.exit(main())
