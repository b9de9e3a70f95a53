"""Quality measures: off-norm cost, ORON convergence ratio and J-ISI."""
from __future__ import annotations

import csv
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import DegenerateInputError, DimensionError
from .matrix import TargetSet

__all__ = [
    "transform_targets",
    "triple_mask",
    "gnjd_cost",
    "cost_split",
    "oron",
    "gain_matrix",
    "j_isi",
    "write_oron_trace",
    "write_jisi_summary",
]


def _unmixing_array(B, targets: TargetSet) -> np.ndarray:
    B = np.asarray(getattr(B, "B", B), dtype=np.complex128)
    if B.shape != (targets.R, targets.N, targets.N):
        raise DimensionError(f"expected unmixing stack {(targets.R, targets.N, targets.N)}, got {B.shape}")
    return B


def transform_targets(targets: TargetSet, B) -> np.ndarray:
    """All ``B_{r1} C_{r1,r2,k} B_{r2}^H`` as an array shaped like ``targets.data``."""
    B = _unmixing_array(B, targets)
    r1 = np.array([p[0] for p in targets.pairs])
    r2 = np.array([p[1] for p in targets.pairs])
    return B[r1][:, None] @ targets.data @ np.conj(B[r2][:, None]).swapaxes(-1, -2)


def triple_mask(targets: TargetSet, active: Optional[Iterable[tuple[int, int, int]]] = None) -> np.ndarray:
    """Boolean ``(P, K)`` mask selecting the given ``(r1, r2, k)`` triples (all when None)."""
    if active is None:
        return np.ones((len(targets.pairs), targets.K), dtype=bool)
    mask = np.zeros((len(targets.pairs), targets.K), dtype=bool)
    for r1, r2, k in active:
        mask[targets.pair_index(r1, r2), k] = True
    return mask


def _off_diag_energy(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    N = Y.shape[-1]
    off = Y[..., ~np.eye(N, dtype=bool)]
    diag = np.diagonal(Y, axis1=-2, axis2=-1)
    return (off.real**2 + off.imag**2).sum(-1), (diag.real**2 + diag.imag**2).sum(-1)


def cost_split(targets: TargetSet, B, active=None) -> tuple[float, float]:
    """Intra-set (``r1 == r2``) and inter-set (``r1 < r2``) parts of the off-norm cost."""
    off, _ = _off_diag_energy(transform_targets(targets, B))
    off = np.where(triple_mask(targets, active), off, 0.0)
    intra = np.array([r1 == r2 for r1, r2 in targets.pairs])
    return float(off[intra].sum()), float(off[~intra].sum())


def gnjd_cost(targets: TargetSet, B, active=None) -> float:
    """Sum of off-diagonal energies of ``B_{r1} C B_{r2}^H`` over the active triples."""
    off, _ = _off_diag_energy(transform_targets(targets, B))
    return float(np.sum(off[triple_mask(targets, active)]))


def oron(targets: TargetSet, B, active=None) -> float:
    """Overall off-norm ratio: total off-diagonal over total diagonal energy.

    ``0/0`` is reported as 0 and ``x/0`` as ``inf``.
    """
    off, diag = _off_diag_energy(transform_targets(targets, B))
    mask = triple_mask(targets, active)
    num = float(np.sum(off[mask]))
    den = float(np.sum(diag[mask]))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def gain_matrix(W: Sequence[np.ndarray], A: Sequence[np.ndarray]) -> np.ndarray:
    """``G = sum_r |W_r A_r|`` after unit-row normalization of W_r and unit-column normalization of A_r."""
    W = np.asarray(W, dtype=np.complex128)
    A = np.asarray(A, dtype=np.complex128)
    if W.ndim == 2:
        W, A = W[None], A[None]
    if W.shape != A.shape or W.ndim != 3 or W.shape[-1] != W.shape[-2]:
        raise DimensionError(f"W and A must be matching (R, N, N) stacks, got {W.shape} and {A.shape}")
    wn = np.linalg.norm(W, axis=-1, keepdims=True)
    an = np.linalg.norm(A, axis=-2, keepdims=True)
    if np.any(wn == 0) or np.any(an == 0):
        raise DegenerateInputError("zero row in W or zero column in A")
    return np.abs((W / wn) @ (A / an)).sum(axis=0)


def j_isi(W: Sequence[np.ndarray], A: Sequence[np.ndarray]) -> float:
    """Joint inter-symbol interference of the unmixing estimates ``W`` against truth ``A``.

    Returns a value in ``[0, 1]``; zero means every ``W_r A_r`` is the same
    scaled permutation, i.e. perfect separation with aligned permutations.
    """
    G = gain_matrix(W, A)
    N = G.shape[0]
    if N < 2:
        raise DimensionError("J-ISI needs N >= 2")
    row_max = G.max(axis=1, keepdims=True)
    col_max = G.max(axis=0, keepdims=True)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise DegenerateInputError("gain matrix has an all-zero row or column")
    rows = np.sum(G / row_max, axis=1) - 1.0
    cols = np.sum(G / col_max, axis=0) - 1.0
    return float((rows.sum() + cols.sum()) / (2 * N * (N - 1)))


def write_oron_trace(path, orons: Sequence[float], header: Optional[str] = None) -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep", "oron"])
        for s, v in enumerate(orons, start=1):
            w.writerow([s, f"{v:.17g}"])


def write_jisi_summary(path, rows: Iterable[tuple[float, float, float, float]], header: Optional[str] = None) -> None:
    """Write ``snr,median_jisi,q1,q3`` rows."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr", "median_jisi", "q1", "q3"])
        for row in rows:
            w.writerow([f"{v:.17g}" for v in row])
