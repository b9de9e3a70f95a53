"""Seeded experiment harness: convergence on exact targets, noisy targets, and J-BSS.

Run ``r`` of any experiment draws its randomness from
``SeedSequence([seed, r])`` (see :func:`gnjd.synth.run_seed`), so the same
run index sees the same base draws at every grid point and results do not
depend on how many worker processes execute the runs.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .exceptions import ConfigurationError
from .jbss import estimate_targets, plan_blocks
from .metrics import j_isi, write_jisi_summary
from .solver import SolverConfig, solve
from .synth import gen_am_bpsk_sources, gen_exact, gen_mixtures, gen_noisy, make_rng, random_mixing, run_seed

__all__ = [
    "ExperimentConfig",
    "default_config",
    "exp1_run",
    "exp2_run",
    "exp3_run",
    "run_exp1",
    "run_exp2",
    "run_exp3",
    "max_workers",
]

EXPERIMENTS = ("exp1", "exp2", "exp3")


@dataclass
class ExperimentConfig:
    experiment: str = "exp1"
    N: int = 5
    K: int = 20
    R_values: tuple = (3, 10, 15, 20)
    T: int = 2000
    L: int = 200
    L_prime: int = 100
    alpha: float = 0.5
    alpha_prime: float = 0.5
    snr_grid: tuple = ()
    sigma_n: float = 0.01
    symbols: str = "antipodal"
    runs: int = 10
    seed: int = 0
    solver: dict = field(default_factory=dict)
    out_dir: str = "results"
    plot: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"experiment must be one of {EXPERIMENTS}")
        self.R_values = tuple(int(r) for r in self.R_values)
        self.snr_grid = tuple(float(s) for s in self.snr_grid)
        if self.runs < 1 or self.N < 2 or self.K < 1 or not self.R_values or min(self.R_values) < 1:
            raise ConfigurationError("need runs >= 1, N >= 2, K >= 1 and at least one R >= 1")
        if self.experiment != "exp1" and not self.snr_grid:
            raise ConfigurationError(f"{self.experiment} needs a non-empty SNR grid")
        if not self.sigma_n > 0:
            raise ConfigurationError("sigma_n must be positive")
        self.solver_config()

    def solver_config(self, **overrides) -> SolverConfig:
        return SolverConfig(**{**self.solver, **overrides})

    def header(self) -> str:
        return f"gnjd {self.experiment} seed={self.seed} config={json.dumps(asdict(self), sort_keys=True)}"


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """Default problem sizes and grids of each experiment."""
    base = {
        "exp1": dict(K=20, N=5, R_values=(3, 10, 15, 20), runs=10),
        "exp2": dict(K=20, N=5, R_values=(5, 20), snr_grid=tuple(range(0, 21, 2)), sigma_n=0.01, runs=100),
        "exp3": dict(
            N=5, R_values=(10, 20), T=2000, L=200, L_prime=100, alpha=0.5, alpha_prime=0.5,
            snr_grid=tuple(range(-2, 11, 2)), sigma_n=1.0, runs=100,
        ),
    }
    if experiment not in base:
        raise ConfigurationError(f"unknown experiment {experiment!r}")
    return ExperimentConfig(experiment=experiment, **{**base[experiment], **overrides})


def max_workers() -> int:
    """Worker cap from ``GNJD_THREADS`` (defaults to the CPU count)."""
    env = os.environ.get("GNJD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"GNJD_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _map(fn: Callable, items: Sequence) -> list:
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _quartiles(values: Iterable[float]) -> tuple[float, float, float]:
    q1, med, q3 = np.percentile(np.asarray(list(values), dtype=float), [25, 50, 75])
    return float(med), float(q1), float(q3)


# --- single runs -----------------------------------------------------------

def _bookkeeping(report):
    return max(report.bookkeeping) if report.bookkeeping else None


def exp1_run(cfg: ExperimentConfig, R: int, run: int, mode: str = "full") -> dict:
    targets, truth = gen_exact(cfg.N, cfg.K, R, seed=run_seed(cfg.seed, run))
    B, report = solve(targets, cfg.solver_config(mode=mode))
    return dict(
        R=R, run=run, mode=mode, oron=report.oron, sweeps=report.sweeps_run,
        status=report.status, jisi=j_isi(B.B, truth.A), bookkeeping=_bookkeeping(report),
    )


def exp2_run(cfg: ExperimentConfig, R: int, snr: float, run: int) -> dict:
    targets, truth = gen_noisy(cfg.N, cfg.K, R, snr, cfg.sigma_n, seed=run_seed(cfg.seed, run))
    B, report = solve(targets, cfg.solver_config())
    return dict(
        R=R, snr=snr, run=run, jisi=j_isi(B.B, truth.A), sweeps=report.sweeps_run,
        status=report.status, bookkeeping=_bookkeeping(report),
    )


def exp3_instance(cfg: ExperimentConfig, R: int, snr: float, run: int):
    """Sources, mixing matrices and mixtures of one J-BSS run."""
    rng = make_rng(run_seed(cfg.seed, run))
    _, s, Pi = gen_am_bpsk_sources(cfg.N, R, cfg.T, cfg.L, cfg.alpha, rng, symbols=cfg.symbols)
    A = np.stack([random_mixing(rng, cfg.N) for _ in range(R)])
    X = gen_mixtures(s, A, snr, cfg.sigma_n, rng)
    return s, A, Pi, X


def exp3_run(cfg: ExperimentConfig, R: int, snr: float, run: int) -> dict:
    _, A, _, X = exp3_instance(cfg, R, snr, run)
    targets = estimate_targets(X, plan_blocks(cfg.T, cfg.L_prime, cfg.alpha_prime))
    B, report = solve(targets, cfg.solver_config())
    return dict(
        R=R, snr=snr, run=run, jisi=j_isi(B.B, A), sweeps=report.sweeps_run,
        status=report.status, bookkeeping=_bookkeeping(report),
    )


# --- harnesses -------------------------------------------------------------

def _call(fn, args):
    return fn(*args)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _open_csv(path: Path, header: str):
    fh = open(path, "w", newline="")
    fh.write(f"# {header}\n")
    return fh, csv.writer(fh, lineterminator="\n")


def run_exp1(cfg: ExperimentConfig) -> dict:
    """ORON-versus-sweep traces for full GNJD and the JNJD subset.

    Writes ``exp1_traces.csv`` (R, mode, run, sweep, oron) and
    ``exp1_summary.csv`` (R, mode, sweep, median, q1, q3); traces that stop
    early are carried forward at their final value for the summary.
    """
    out = _out_dir(cfg)
    tasks = [(cfg, R, run, mode) for R in cfg.R_values for mode in ("full", "jnjd_subset") for run in range(cfg.runs)]
    results = _map(partial(_call, exp1_run), tasks)

    fh, w = _open_csv(out / "exp1_traces.csv", cfg.header())
    with fh:
        w.writerow(["R", "mode", "run", "sweep", "oron"])
        for res in results:
            for s, v in enumerate(res["oron"], start=1):
                w.writerow([res["R"], res["mode"], res["run"], s, f"{v:.17g}"])

    summary = {}
    fh, w = _open_csv(out / "exp1_summary.csv", cfg.header())
    with fh:
        w.writerow(["R", "mode", "sweep", "median", "q1", "q3"])
        for R in cfg.R_values:
            for mode in ("full", "jnjd_subset"):
                traces = [r["oron"] for r in results if r["R"] == R and r["mode"] == mode]
                length = max(len(t) for t in traces)
                padded = np.array([t + [t[-1]] * (length - len(t)) for t in traces])
                rows = [_quartiles(padded[:, s]) for s in range(length)]
                summary[(R, mode)] = rows
                for s, (med, q1, q3) in enumerate(rows, start=1):
                    w.writerow([R, mode, s, f"{med:.17g}", f"{q1:.17g}", f"{q3:.17g}"])
    if cfg.plot:
        _plot_exp1(out, summary)
    return dict(results=results, summary=summary)


def _run_snr_sweep(cfg: ExperimentConfig, fn: Callable, name: str) -> dict:
    out = _out_dir(cfg)
    tasks = [(cfg, R, snr, run) for R in cfg.R_values for snr in cfg.snr_grid for run in range(cfg.runs)]
    results = _map(partial(_call, fn), tasks)

    fh, w = _open_csv(out / f"{name}_runs.csv", cfg.header())
    with fh:
        w.writerow(["R", "snr", "run", "jisi", "sweeps", "status"])
        for res in results:
            w.writerow([res["R"], f"{res['snr']:.17g}", res["run"], f"{res['jisi']:.17g}", res["sweeps"], res["status"]])

    summary = {}
    for R in cfg.R_values:
        rows = []
        for snr in cfg.snr_grid:
            med, q1, q3 = _quartiles(r["jisi"] for r in results if r["R"] == R and r["snr"] == snr)
            rows.append((snr, med, q1, q3))
        summary[R] = rows
        write_jisi_summary(out / f"{name}_R{R}.csv", rows, header=cfg.header())
    if cfg.plot:
        _plot_snr(out, name, summary)
    return dict(results=results, summary=summary)


def run_exp2(cfg: ExperimentConfig) -> dict:
    """J-ISI versus SNR on noisy targets; writes ``exp2_runs.csv`` and ``exp2_R{R}.csv``."""
    return _run_snr_sweep(cfg, exp2_run, "exp2")


def run_exp3(cfg: ExperimentConfig) -> dict:
    """J-ISI versus SNR for the full J-BSS pipeline; writes ``exp3_runs.csv`` and ``exp3_R{R}.csv``."""
    return _run_snr_sweep(cfg, exp3_run, "exp3")


def _plot_exp1(out: Path, summary: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for (R, mode), rows in summary.items():
        med = [max(r[0], 1e-32) for r in rows]
        ax.semilogy(range(1, len(med) + 1), med, label=f"R={R} {mode}")
    ax.set_xlabel("sweep")
    ax.set_ylabel("median ORON")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "exp1.svg")
    plt.close(fig)


def _plot_snr(out: Path, name: str, summary: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for R, rows in summary.items():
        snr = [r[0] for r in rows]
        ax.plot(snr, [r[1] for r in rows], marker="o", label=f"R={R}")
        ax.fill_between(snr, [r[2] for r in rows], [r[3] for r in rows], alpha=0.2)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("J-ISI")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / f"{name}.svg")
    plt.close(fig)
