"""Generalized non-orthogonal joint diagonalization by LU sweeps.

Every unmixing matrix is refined as ``B_r <- L_r U_r B_r`` where ``U_r`` and
``L_r`` are products of elementary unit-triangular shears
``T = I + a e_i e_j^T``. The parameter ``a`` of each shear is the exact
minimizer of the off-diagonal energy it can influence, so in sequential mode
the cost never increases.

Within one sweep the U-stage visits columns ``j = 1..N-1`` with ``i < j`` and
the L-stage visits ``j = 0..N-2`` with ``i > j``; inside a stage the order is
``j`` ascending, ``i`` ascending, ``r`` ascending.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, DimensionError, NumericalError, SingularityError
from .matrix import TargetSet
from .metrics import oron

__all__ = [
    "SolverConfig",
    "SolverReport",
    "UnmixingSet",
    "WorkingSet",
    "select_targets",
    "optimal_rotation_parameter",
    "rotation_cost",
    "apply_rotation",
    "apply_rotation_group",
    "stage_sweep",
    "normalize",
    "check_termination",
    "solve",
]

DENOMINATOR_FLOOR = 1e-300

MODES = ("full", "jnjd_subset")
APPLICATIONS = ("sequential", "grouped")

# hook(work, r, i, j, a, cost_before)
RotationHook = Callable[["WorkingSet", int, int, int, complex, float], None]


@dataclass
class SolverConfig:
    tau: float = 1e-6
    R_prime: int = 5
    max_sweeps: int = 100
    mode: str = "full"
    rotation_application: str = "sequential"
    normalize_each_sweep: bool = True
    record_trace: bool = True
    # records the max relative deviation of W from B C B^H after every sweep
    check_invariants: bool = False

    def __post_init__(self):
        if self.mode == "jnjd":
            self.mode = "jnjd_subset"
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.rotation_application not in APPLICATIONS:
            raise ConfigurationError(
                f"rotation_application must be one of {APPLICATIONS}, got {self.rotation_application!r}"
            )
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        if self.max_sweeps < 1:
            raise ConfigurationError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.R_prime < 1:
            raise ConfigurationError(f"R_prime must be >= 1, got {self.R_prime}")


@dataclass
class UnmixingSet:
    """Unmixing matrices ``B`` (R, N, N) and the LU factors of the last sweep."""

    B: np.ndarray
    L: np.ndarray
    U: np.ndarray

    @classmethod
    def identity(cls, R: int, N: int) -> "UnmixingSet":
        eye = np.broadcast_to(np.eye(N, dtype=np.complex128), (R, N, N))
        return cls(eye.copy(), eye.copy(), eye.copy())

    @property
    def R(self) -> int:
        return self.B.shape[0]

    @property
    def N(self) -> int:
        return self.B.shape[-1]


@dataclass
class SolverReport:
    sweeps_run: int = 0
    eta: list = field(default_factory=list)
    oron: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    zeta: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    bookkeeping: list = field(default_factory=list)
    converged: bool = False
    status: str = "continue"
    active: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        """Write the per-sweep trace as ``sweep,eta,oron,gamma,zeta,wall_ms``."""
        with open(path, "w", newline="") as fh:
            self.write_csv_to(fh)

    def write_csv_to(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sweep", "eta", "oron", "gamma", "zeta", "wall_ms"])
        orons = self.oron if self.oron else [float("nan")] * self.sweeps_run
        for s in range(self.sweeps_run):
            writer.writerow(
                [s + 1] + [f"{v:.17g}" for v in (self.eta[s], orons[s], self.gamma[s], self.zeta[s], self.wall_ms[s])]
            )


def _active_pair_mask(R: int, config: SolverConfig) -> np.ndarray:
    pairs = [(r1, r2) for r1 in range(R) for r2 in range(r1, R)]
    if config.mode == "jnjd_subset":
        keep = [r2 == r1 + 1 for r1, r2 in pairs]
    elif R < config.R_prime:
        keep = [r1 != r2 for r1, r2 in pairs]
    else:
        keep = [True] * len(pairs)
    return np.array(keep, dtype=bool)


def select_targets(targets: TargetSet, config: SolverConfig) -> list[tuple[int, int, int]]:
    """Active ``(r1, r2, k)`` triples after intra-set exclusion or the JNJD filter.

    Intra-set targets are dropped when ``R < R_prime``; setting ``R_prime=1``
    keeps them for every ``R``.
    """
    mask = _active_pair_mask(targets.R, config)
    active = [(r1, r2, k) for keep, (r1, r2) in zip(mask, targets.pairs) if keep for k in range(targets.K)]
    if not active:
        raise ConfigurationError(
            f"no active targets left for R = {targets.R}, mode = {config.mode!r}, R_prime = {config.R_prime}"
        )
    return active


class WorkingSet:
    """Mutable working copies ``W[p, k] = B_{r1} C_{r1,r2,k} B_{r2}^H`` of the active pairs."""

    def __init__(self, W: np.ndarray, r1: Sequence[int], r2: Sequence[int], R: int):
        self.W = np.ascontiguousarray(W, dtype=np.complex128)
        self.r1 = np.asarray(r1, dtype=np.intp)
        self.r2 = np.asarray(r2, dtype=np.intp)
        self.R = R
        if self.W.ndim != 4 or self.W.shape[0] != len(self.r1) or len(self.r1) != len(self.r2):
            raise DimensionError("working array and pair labels disagree")
        # pairs in which dataset r acts from the left (row ops) / right (column ops)
        self.left = [np.flatnonzero(self.r1 == r) for r in range(R)]
        self.right = [np.flatnonzero(self.r2 == r) for r in range(R)]

    @classmethod
    def from_targets(cls, targets: TargetSet, pair_mask: Optional[np.ndarray] = None) -> "WorkingSet":
        if pair_mask is None:
            pair_mask = np.ones(len(targets.pairs), dtype=bool)
        idx = np.flatnonzero(pair_mask)
        r1 = [targets.pairs[p][0] for p in idx]
        r2 = [targets.pairs[p][1] for p in idx]
        return cls(targets.data[idx].copy(), r1, r2, targets.R)

    @property
    def N(self) -> int:
        return self.W.shape[-1]

    def copy(self) -> "WorkingSet":
        return WorkingSet(self.W.copy(), self.r1, self.r2, self.R)

    def cost(self) -> float:
        """Off-diagonal energy summed over all working matrices."""
        mask = ~np.eye(self.N, dtype=bool)
        off = self.W[..., mask]
        return float(np.sum(off.real**2 + off.imag**2))


def _parameter_terms(work: WorkingSet, r: int, i: int, j: int) -> tuple[complex, float]:
    W = work.W
    keep = np.arange(work.N) != i
    left, right = work.left[r], work.right[r]
    num = 0j
    den = 0.0
    if left.size:
        x = W[left, :, i, :][..., keep]
        y = W[left, :, j, :][..., keep]
        num += np.vdot(y, x)
        den += np.vdot(y, y).real
    if right.size:
        u = W[right, :, :, i][..., keep]
        v = W[right, :, :, j][..., keep]
        num += np.vdot(u, v)
        den += np.vdot(v, v).real
    return num, den


def optimal_rotation_parameter(work: WorkingSet, r: int, i: int, j: int) -> complex:
    """Closed-form minimizer ``a`` of the off-energy touched by ``T_r = I + a e_i e_j^T``.

    Only entry ``(i, i)`` of ``T_{r1} W T_{r2}^H`` depends on two parameters at
    once and it is diagonal, so the problem separates per dataset into a
    scalar complex least-squares fit::

        f(a) = sum_left  sum_{m != i} |W[i, m] + a W[j, m]|^2
             + sum_right sum_{m != i} |W[m, i] + conj(a) W[m, j]|^2

    Returns 0 when the denominator underflows (the rotation cannot help).
    """
    if i == j:
        raise ValueError("rotation indices must differ")
    num, den = _parameter_terms(work, r, i, j)
    if not (np.isfinite(num) and np.isfinite(den)):
        raise NumericalError(f"non-finite rotation parameter for dataset {r}, pair ({i}, {j})")
    if den < DENOMINATOR_FLOOR:
        return 0j
    return complex(-num / den)


def rotation_cost(work: WorkingSet, r: int, i: int, j: int, a: complex) -> float:
    """Value of ``f(a)`` from :func:`optimal_rotation_parameter` (brute-force form)."""
    W = work.W
    keep = np.arange(work.N) != i
    total = 0.0
    for p in work.left[r]:
        rows = W[p, :, i, :] + a * W[p, :, j, :]
        total += float(np.sum(np.abs(rows[:, keep]) ** 2))
    for p in work.right[r]:
        cols = W[p, :, :, i] + np.conj(a) * W[p, :, :, j]
        total += float(np.sum(np.abs(cols[:, keep]) ** 2))
    return total


def apply_rotation(work: WorkingSet, r: int, i: int, j: int, a: complex) -> None:
    """Apply ``T_r`` in place: row ops on left-slice pairs, then column ops on right-slice pairs."""
    W = work.W
    left, right = work.left[r], work.right[r]
    if left.size:
        W[left, :, i, :] += a * W[left, :, j, :]
    if right.size:
        W[right, :, :, i] += np.conj(a) * W[right, :, :, j]


def apply_rotation_group(
    work: WorkingSet,
    j: int,
    rows: Sequence[int],
    params: np.ndarray,
    order: Optional[Sequence[tuple[int, int]]] = None,
) -> None:
    """Apply all rotations sharing column ``j``; ``params[r, n]`` belongs to row ``rows[n]``.

    Shears with a common ``j`` commute, so any ``order`` of ``(r, n)`` gives
    the same result up to rounding. ``order=None`` uses a vectorized path
    (all row updates first, then all column updates).
    """
    W = work.W
    rows = np.asarray(rows, dtype=np.intp)
    if order is not None:
        for r, n in order:
            apply_rotation(work, r, int(rows[n]), j, params[r, n])
        return
    a_left = params[work.r1]  # (P, len(rows))
    a_right = np.conj(params[work.r2])
    W[:, :, rows, :] += a_left[:, None, :, None] * W[:, :, j, None, :]
    W[:, :, :, rows] += a_right[:, None, None, :] * W[:, :, :, j, None]


def _stage_pairs(N: int, stage: str):
    if stage == "U":
        return [(j, list(range(0, j))) for j in range(1, N)]
    if stage == "L":
        return [(j, list(range(j + 1, N))) for j in range(0, N - 1)]
    raise ValueError(f"stage must be 'U' or 'L', got {stage!r}")


def stage_sweep(
    work: WorkingSet,
    stage: str,
    config: SolverConfig,
    hook: Optional[RotationHook] = None,
) -> np.ndarray:
    """Run one U- or L-stage in place on ``work`` and return the stage products (R, N, N).

    ``hook(work, r, i, j, a, cost_before)`` is called after every applied
    rotation in sequential mode and after every group in grouped mode (with
    ``r = i = -1``); ``cost_before`` is the working cost just before the update.
    """
    R, N = work.R, work.N
    prod = np.broadcast_to(np.eye(N, dtype=np.complex128), (R, N, N)).copy()
    for j, rows in _stage_pairs(N, stage):
        if config.rotation_application == "sequential":
            for i in rows:
                for r in range(R):
                    a = optimal_rotation_parameter(work, r, i, j)
                    if a == 0:
                        continue
                    before = work.cost() if hook is not None else 0.0
                    apply_rotation(work, r, i, j, a)
                    prod[r, i, :] += a * prod[r, j, :]
                    if hook is not None:
                        hook(work, r, i, j, a, before)
        else:
            params = np.array(
                [[optimal_rotation_parameter(work, r, i, j) for i in rows] for r in range(R)],
                dtype=np.complex128,
            )
            before = work.cost() if hook is not None else 0.0
            apply_rotation_group(work, j, rows, params)
            prod[:, rows, :] += params[:, :, None] * prod[:, j, None, :]
            if hook is not None:
                hook(work, -1, -1, j, 0j, before)
    if not np.all(np.isfinite(work.W)):
        raise NumericalError(f"non-finite working matrices after {stage}-stage")
    return prod


def normalize(work: WorkingSet, B: np.ndarray) -> None:
    """Scale every ``B_r`` to unit-norm rows in place and rescale ``work`` to match."""
    norms = np.linalg.norm(B, axis=-1)
    bad = ~((norms > 0) & np.isfinite(norms))
    if np.any(bad):
        r, row = np.argwhere(bad)[0]
        raise SingularityError(f"unmixing matrix {r} has a zero or non-finite row {row}")
    d = 1.0 / norms
    B *= d[:, :, None]
    work.W *= d[work.r1][:, None, :, None] * d[work.r2][:, None, None, :]


def check_termination(gamma_new: float, gamma_old: float, sweep: int, config: SolverConfig) -> str:
    """Return ``'converged'``, ``'sweep_limit'`` or ``'continue'`` after ``sweep`` (1-based)."""
    if gamma_new <= config.tau or abs(gamma_new - gamma_old) < config.tau:
        return "converged"
    if sweep >= config.max_sweeps:
        return "sweep_limit"
    return "continue"


def _bookkeeping_error(targets: TargetSet, pair_mask: np.ndarray, work: WorkingSet, B: np.ndarray) -> float:
    idx = np.flatnonzero(pair_mask)
    C = targets.data[idx]
    expect = B[work.r1][:, None] @ C @ np.conj(B[work.r2][:, None]).swapaxes(-1, -2)
    num = np.linalg.norm(work.W - expect, axis=(-2, -1))
    den = np.linalg.norm(C, axis=(-2, -1))
    den = np.where(den > 0, den, 1.0)
    return float(np.max(num / den))


def solve(
    targets: TargetSet,
    config: Optional[SolverConfig] = None,
    hook: Optional[RotationHook] = None,
) -> tuple[UnmixingSet, SolverReport]:
    """Jointly diagonalize ``targets``; returns the unmixing set and a per-sweep report.

    Hitting ``max_sweeps`` is reported through ``report.status == 'sweep_limit'``
    rather than raised.
    """
    config = config or SolverConfig()
    if targets.N < 2:
        raise DimensionError("need N >= 2")
    active = select_targets(targets, config)
    pair_mask = _active_pair_mask(targets.R, config)
    work = WorkingSet.from_targets(targets, pair_mask)
    unmix = UnmixingSet.identity(targets.R, targets.N)
    report = SolverReport(active=active)
    eye = np.eye(targets.N)
    gamma_old = 0.0

    for sweep in range(1, config.max_sweeps + 1):
        t0 = time.perf_counter()
        U = stage_sweep(work, "U", config, hook)
        L = stage_sweep(work, "L", config, hook)
        unmix.U, unmix.L = U, L
        LU = L @ U
        unmix.B = LU @ unmix.B
        gamma_new = float(np.max(np.linalg.norm(LU - eye, axis=(-2, -1))))
        zeta = abs(gamma_new - gamma_old)
        status = check_termination(gamma_new, gamma_old, sweep, config)
        gamma_old = gamma_new
        if config.normalize_each_sweep:
            normalize(work, unmix.B)
        wall = (time.perf_counter() - t0) * 1e3

        report.sweeps_run = sweep
        report.eta.append(work.cost())
        report.gamma.append(gamma_new)
        report.zeta.append(zeta)
        report.wall_ms.append(wall)
        if config.record_trace:
            report.oron.append(oron(targets, unmix.B))
        if config.check_invariants:
            report.bookkeeping.append(_bookkeeping_error(targets, pair_mask, work, unmix.B))
        if status != "continue":
            break

    report.status = status
    report.converged = status == "converged"
    return unmix, report
