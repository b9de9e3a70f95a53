"""Acceptance gate.

Each test carries a ``criterion`` marker; ``conftest.py`` prints one
PASS/FAIL line per criterion in the terminal summary. Every solve made here
records the bookkeeping deviation, and criterion 7 checks all of them.
"""
import time

import numpy as np
import pytest

from gnjd import fileio
from gnjd.cli import main as cli_main
from gnjd.experiments import default_config, exp2_run, exp3_run
from gnjd.matrix import n_pairs, pair_list
from gnjd.metrics import j_isi
from gnjd.solver import (
    SolverConfig,
    WorkingSet,
    apply_rotation_group,
    optimal_rotation_parameter,
    solve,
    stage_sweep,
)
from gnjd.synth import gen_exact, gen_noisy, make_rng, run_seed

from oracles import f_on_grid, grid_minimize, rotation_vectors

pytestmark = pytest.mark.slow

CHECKED = SolverConfig(check_invariants=True)


def first_below(trace, threshold):
    for s, v in enumerate(trace, start=1):
        if v < threshold:
            return s
    return None


# --- shared run groups -------------------------------------------------------------

@pytest.fixture(scope="session")
def exp1_runs():
    runs = []
    for run in range(10):
        targets, truth = gen_exact(5, 20, 3, seed=run_seed(0, run))
        t0 = time.perf_counter()
        B, report = solve(targets, CHECKED)
        runs.append(dict(B=B, report=report, truth=truth, seconds=time.perf_counter() - t0))
    return runs


@pytest.fixture(scope="session")
def monotonicity_runs():
    runs = []
    for run in range(20):
        R = (3, 5)[run % 2]
        snr = (0.0, 10.0, 20.0)[run % 3]
        targets, _ = gen_noisy(5, 10, R, snr, 0.01, seed=run_seed(4, run))
        checks = dict(rotations=0, violations=0, worst=0.0)

        def hook(work, r, i, j, a, before, checks=checks):
            after = work.cost()
            checks["rotations"] += 1
            excess = (after - before) / before if before > 0 else after
            checks["worst"] = max(checks["worst"], excess)
            if after > before + 1e-12 * before:
                checks["violations"] += 1

        _, report = solve(targets, CHECKED, hook=hook)
        runs.append(dict(report=report, **checks))
    return runs


@pytest.fixture(scope="session")
def exp2_runs():
    cfg = default_config("exp2", R_values=(5,), snr_grid=(0, 8, 16), runs=30, solver={"check_invariants": True})
    return {snr: [exp2_run(cfg, 5, snr, run) for run in range(30)] for snr in cfg.snr_grid}


@pytest.fixture(scope="session")
def exp3_runs():
    cfg = default_config("exp3", R_values=(10,), snr_grid=(10,), runs=30, solver={"check_invariants": True})
    out = []
    for run in range(30):
        t0 = time.perf_counter()
        res = exp3_run(cfg, 10, 10.0, run)
        res["seconds"] = time.perf_counter() - t0
        out.append(res)
    return out


@pytest.fixture(scope="session")
def mode_runs():
    out = []
    for run in range(10):
        for N, K in ((5, 20), (4, 5)):
            targets, _ = gen_exact(N, K, 3, seed=run_seed(8, run))
            for mode in ("sequential", "grouped"):
                _, report = solve(targets, SolverConfig(rotation_application=mode, check_invariants=True))
                out.append(dict(mode=mode, N=N, report=report))
    return out


# --- criteria ------------------------------------------------------------------------

@pytest.mark.criterion(1, "exact-data convergence: ORON < 1e-6 within 15 sweeps in >= 8/10 runs, < 5 s per run")
def test_criterion_1_exact_convergence(exp1_runs, record_property):
    hits = [first_below(r["report"].oron, 1e-6) for r in exp1_runs]
    ok = sum(1 for h in hits if h is not None and h <= 15)
    slowest = max(r["seconds"] for r in exp1_runs)
    record_property("detail", f"{ok}/10 runs, sweeps to threshold {hits}, slowest run {slowest:.2f} s")
    assert ok >= 8
    assert slowest < 5.0


@pytest.mark.criterion(2, "exact recovery: final J-ISI < 1e-3")
def test_criterion_2_exact_recovery(exp1_runs, record_property):
    scores = [j_isi(r["B"].B, r["truth"].A) for r in exp1_runs]
    record_property("detail", f"max J-ISI {max(scores):.3g}")
    assert max(scores) < 1e-3


@pytest.mark.criterion(3, "closed-form parameter within 1e-9 of the grid-and-refine minimizer on 200 probes")
def test_criterion_3_parameter_oracle(record_property):
    rng = make_rng(2024)
    worst = -np.inf
    inside = 0
    for probe in range(200):
        N = int(rng.choice([3, 4, 5]))
        R = int(rng.choice([2, 3]))
        K = int(rng.choice([1, 5]))
        P = n_pairs(R)
        W = rng.standard_normal((P, K, N, N)) + 1j * rng.standard_normal((P, K, N, N))
        pairs = pair_list(R)
        # alternate between every pair active and intra-set pairs dropped
        keep = list(range(P)) if probe % 2 == 0 else [p for p, (a, b) in enumerate(pairs) if a != b]
        r1 = [pairs[p][0] for p in keep]
        r2 = [pairs[p][1] for p in keep]
        work = WorkingSet(W[keep], r1, r2, R)
        r = int(rng.integers(R))
        i, j = (int(v) for v in rng.choice(N, 2, replace=False))
        a = optimal_rotation_parameter(work, r, i, j)
        vec = rotation_vectors(work.W, work.r1, work.r2, r, i, j)
        _, f_grid = grid_minimize(vec, half=2.0, points=401, refinements=2)
        f_closed = f_on_grid(vec, np.array([a]))[0]
        worst = max(worst, f_closed - f_grid)
        inside += abs(a.real) <= 2 and abs(a.imag) <= 2
    record_property("detail", f"max f(a_closed) - f(a_grid) = {worst:.3g}; {inside}/200 optima inside the grid box")
    assert worst <= 1e-9


@pytest.mark.criterion(4, "sequential cost monotone over full solves of 20 noisy instances (1e-12 relative)")
def test_criterion_4_monotone_cost(monotonicity_runs, record_property):
    rotations = sum(r["rotations"] for r in monotonicity_runs)
    violations = sum(r["violations"] for r in monotonicity_runs)
    worst = max(r["worst"] for r in monotonicity_runs)
    record_property("detail", f"{violations} violations in {rotations} rotations, worst relative rise {worst:.3g}")
    assert rotations > 0
    assert violations == 0


@pytest.mark.criterion(5, "noisy targets: median J-ISI strictly decreasing over SNR 0/8/16 dB, < 0.1 at 16 dB")
def test_criterion_5_noisy_targets(exp2_runs, record_property):
    medians = [float(np.median([r["jisi"] for r in exp2_runs[snr]])) for snr in (0, 8, 16)]
    record_property("detail", "medians " + ", ".join(f"{m:.4f}" for m in medians))
    assert medians[0] > medians[1] > medians[2]
    assert medians[2] < 0.1


@pytest.mark.criterion(6, "J-BSS pipeline: median J-ISI < 0.05 at 10 dB, R = 10, < 60 s per run")
def test_criterion_6_pipeline(exp3_runs, record_property):
    median = float(np.median([r["jisi"] for r in exp3_runs]))
    slowest = max(r["seconds"] for r in exp3_runs)
    record_property("detail", f"median J-ISI {median:.4f}, slowest run {slowest:.2f} s")
    assert median < 0.05
    assert slowest < 60.0


@pytest.mark.criterion(7, "bookkeeping deviation <= 1e-8 after every sweep of every acceptance run")
def test_criterion_7_bookkeeping(exp1_runs, monotonicity_runs, exp2_runs, exp3_runs, mode_runs, record_property):
    values = [max(r["report"].bookkeeping) for r in exp1_runs]
    values += [max(r["report"].bookkeeping) for r in monotonicity_runs]
    values += [r["bookkeeping"] for runs in exp2_runs.values() for r in runs]
    values += [r["bookkeeping"] for r in exp3_runs]
    values += [max(r["report"].bookkeeping) for r in mode_runs]
    assert all(v is not None for v in values)
    record_property("detail", f"max deviation {max(values):.3g} over {len(values)} runs")
    assert max(values) <= 1e-8


@pytest.mark.criterion(8, "grouped and sequential both reach ORON < 1e-6; fixed-j groups order independent (1e-13)")
def test_criterion_8_grouped_agreement(mode_runs, record_property):
    finals = {mode: [r["report"].oron[-1] for r in mode_runs if r["mode"] == mode] for mode in ("sequential", "grouped")}

    worst = 0.0
    rng = make_rng(88)
    for seed in range(5):
        targets, _ = gen_noisy(5, 5, 3, 10.0, seed=run_seed(9, seed))
        work = WorkingSet.from_targets(targets)
        stage_sweep(work, "U", SolverConfig())
        for stage, groups in (("U", [(j, list(range(j))) for j in range(1, 5)]),
                              ("L", [(j, list(range(j + 1, 5))) for j in range(4)])):
            for j, rows in groups:
                params = np.array([[optimal_rotation_parameter(work, r, i, j) for i in rows] for r in range(3)])
                order = [(r, n) for r in range(3) for n in range(len(rows))]
                states = []
                for _ in range(2):
                    w = work.copy()
                    apply_rotation_group(w, j, rows, params, order=[order[k] for k in rng.permutation(len(order))])
                    states.append(w.W)
                scale = np.max(np.abs(states[0]))
                worst = max(worst, float(np.max(np.abs(states[0] - states[1])) / scale))
            stage_sweep(work, stage, SolverConfig(rotation_application="grouped"))

    record_property(
        "detail",
        f"max final ORON sequential {max(finals['sequential']):.3g}, grouped {max(finals['grouped']):.3g}; "
        f"order deviation {worst:.3g}",
    )
    assert max(finals["sequential"]) < 1e-6
    assert max(finals["grouped"]) < 1e-6
    assert worst <= 1e-13


@pytest.mark.criterion(9, "file round trip: gen, write, read, solve equals the in-memory solve bitwise")
def test_criterion_9_file_round_trip(tmp_path, record_property):
    checked = 0
    for seed in range(3):
        targets, truth = gen_exact(5, 20, 3, seed=seed)
        B_mem, rep_mem = solve(targets)
        path = tmp_path / f"t{seed}.gnjdt"
        fileio.write_targets(path, targets)
        B_file, rep_file = solve(fileio.read_targets(path))
        assert np.array_equal(B_mem.B, B_file.B)
        assert rep_mem.eta == rep_file.eta and rep_mem.oron == rep_file.oron

        fileio.write_unmixing(tmp_path / "b.gnjdb", B_file)
        assert np.array_equal(fileio.read_unmixing(tmp_path / "b.gnjdb"), B_mem.B)
        fileio.write_truth(tmp_path / "g.gnjdg", truth)
        assert np.array_equal(fileio.read_truth(tmp_path / "g.gnjdg").A, truth.A)
        checked += 1

    # the same through the command line, in separate output files
    out = tmp_path / "cli"
    assert cli_main(["gen", "-N", "5", "-K", "20", "-R", "3", "--seed", "11", "--out-dir", str(out)]) == 0
    assert cli_main(["solve", str(out / "targets.gnjdt"), "--out-dir", str(out)]) == 0
    B_mem, _ = solve(gen_exact(5, 20, 3, seed=11)[0])
    assert np.array_equal(fileio.read_unmixing(out / "unmixing.gnjdb"), B_mem.B)
    record_property("detail", f"{checked} in-process instances and one CLI instance bitwise equal")
