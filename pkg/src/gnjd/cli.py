"""Command-line interface: ``gnjd {gen,solve,score,exp1,exp2,exp3}``.

Exit status of ``solve``: 0 converged, 2 sweep limit reached (results are
still written), 1 error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import fileio
from .exceptions import GNJDError
from .experiments import default_config, run_exp1, run_exp2, run_exp3
from .jbss import estimate_targets, plan_blocks
from .metrics import j_isi, oron
from .solver import SolverConfig, solve
from .synth import GroundTruth, gen_am_bpsk_sources, gen_exact, gen_mixtures, gen_noisy, make_rng, random_mixing

EXIT_OK, EXIT_ERROR, EXIT_SWEEP_LIMIT = 0, 1, 2


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise GNJDError(f"{path}: config must be a JSON object")
    return data


def _solver_overlay(args, base: Optional[dict] = None) -> dict:
    overlay = dict(base or {})
    if args.mode is not None:
        overlay["mode"] = "jnjd_subset" if args.mode == "jnjd" else args.mode
    if args.tau is not None:
        overlay["tau"] = args.tau
    if args.max_sweeps is not None:
        overlay["max_sweeps"] = args.max_sweeps
    if args.rotation is not None:
        overlay["rotation_application"] = args.rotation
    if getattr(args, "r_prime", None) is not None:
        overlay["R_prime"] = args.r_prime
    return overlay


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON config file; flags override its values")
    p.add_argument("--mode", choices=["full", "jnjd"], default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--max-sweeps", type=int, default=None)
    p.add_argument("--rotation", choices=["sequential", "grouped"], default=None)
    p.add_argument("--r-prime", type=int, default=None, help="intra-set exclusion threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnjd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic targets or multiset signals")
    _common(g)
    g.add_argument("--kind", choices=["exact", "noisy", "signals"], default="exact")
    g.add_argument("-N", type=int, default=5)
    g.add_argument("-K", type=int, default=20)
    g.add_argument("-R", type=int, default=3)
    g.add_argument("-T", type=int, default=2000)
    g.add_argument("-L", type=int, default=200)
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--snr", type=float, default=10.0)
    g.add_argument("--sigma-n", type=float, default=None)
    g.add_argument("--symbols", choices=["antipodal", "offset"], default="antipodal")

    s = sub.add_parser("solve", help="jointly diagonalize a GNJDT (or GNJDX) file")
    _common(s)
    s.add_argument("input")
    s.add_argument("--block-length", type=int, default=100, help="block length for GNJDX input")
    s.add_argument("--block-overlap", type=float, default=0.5, help="block overlap for GNJDX input")

    sc = sub.add_parser("score", help="score an unmixing file against ground truth")
    sc.add_argument("--unmixing", required=True)
    sc.add_argument("--truth", required=True)
    sc.add_argument("--targets", default=None, help="GNJDT file; adds ORON to the output")

    for name in ("exp1", "exp2", "exp3"):
        e = sub.add_parser(name, help=f"run {name}")
        _common(e)
        e.add_argument("--settings", type=int, nargs="+", default=None, help="values of R to run")
        e.add_argument("--snr", type=float, nargs="+", default=None, help="SNR grid in dB")
        e.add_argument("--plot", action="store_true", help="also write an SVG figure")
    return parser


def cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    out = Path(args.out_dir or cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "exact":
        targets, truth = gen_exact(args.N, args.K, args.R, seed)
        fileio.write_targets(out / "targets.gnjdt", targets)
    elif args.kind == "noisy":
        sigma_n = args.sigma_n if args.sigma_n is not None else 0.01
        targets, truth = gen_noisy(args.N, args.K, args.R, args.snr, sigma_n, seed)
        fileio.write_targets(out / "targets.gnjdt", targets)
    else:
        sigma_n = args.sigma_n if args.sigma_n is not None else 1.0
        rng = make_rng(seed)
        _, s, Pi = gen_am_bpsk_sources(args.N, args.R, args.T, args.L, args.alpha, rng, symbols=args.symbols)
        A = np.stack([random_mixing(rng, args.N) for _ in range(args.R)])
        X = gen_mixtures(s, A, args.snr, sigma_n, rng)
        sigma_s = sigma_n * 10.0 ** (args.snr / 10.0)
        truth = GroundTruth(A=A, Pi=Pi, sigma_s=sigma_s, sigma_n=sigma_n)
        fileio.write_signal(out / "signals.gnjdx", X)
    fileio.write_truth(out / "truth.gnjdg", truth)
    print(f"wrote {args.kind} data to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    config = SolverConfig(**_solver_overlay(args, cfg.get("solver")))
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    if fileio.sniff_magic(args.input) == fileio.MAGIC_SIGNAL:
        X = fileio.read_signal(args.input)
        targets = estimate_targets(X, plan_blocks(X.T, args.block_length, args.block_overlap))
    else:
        targets = fileio.read_targets(args.input)
    B, report = solve(targets, config)
    fileio.write_unmixing(out / "unmixing.gnjdb", B)
    report.write_csv(out / "report.csv")
    print(f"{report.status} after {report.sweeps_run} sweeps; eta={report.eta[-1]:.6g}")
    return EXIT_OK if report.converged else EXIT_SWEEP_LIMIT


def cmd_score(args) -> int:
    B = fileio.read_unmixing(args.unmixing)
    truth = fileio.read_truth(args.truth)
    print("jisi" + (",oron" if args.targets else ""))
    value = f"{j_isi(B, truth.A):.17g}"
    if args.targets:
        value += f",{oron(fileio.read_targets(args.targets), B):.17g}"
    print(value)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg_file = _load_config(args.config)
    overrides = {k: v for k, v in cfg_file.items() if k != "experiment"}
    overrides["solver"] = _solver_overlay(args, cfg_file.get("solver"))
    for flag, key in (("seed", "seed"), ("out_dir", "out_dir"), ("runs", "runs"), ("settings", "R_values"), ("snr", "snr_grid")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    if args.plot:
        overrides["plot"] = True
    cfg = default_config(args.command, **overrides)
    runner = {"exp1": run_exp1, "exp2": run_exp2, "exp3": run_exp3}[args.command]
    runner(cfg)
    print(f"{args.command} results written to {cfg.out_dir}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"gen": cmd_gen, "solve": cmd_solve, "score": cmd_score}
    try:
        return handlers.get(args.command, cmd_experiment)(args)
    except (GNJDError, OSError, ValueError, TypeError) as exc:
        print(f"gnjd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
