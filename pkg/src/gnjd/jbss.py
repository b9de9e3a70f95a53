"""Second-order joint BSS: block covariance targets, GNJD solve, unmixing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError, DimensionError
from .matrix import TargetSet, pair_list
from .solver import SolverConfig, SolverReport, UnmixingSet, solve
from .synth import MultisetSignal

__all__ = ["BlockPlan", "plan_blocks", "estimate_targets", "unmix", "separate"]


@dataclass(frozen=True)
class BlockPlan:
    T: int
    length: int
    overlap: float
    stride: int
    starts: tuple[int, ...]

    @property
    def K(self) -> int:
        return len(self.starts)


def plan_blocks(T: int, length: int, overlap: float) -> BlockPlan:
    """Rectangular blocks of ``length`` samples advancing by ``round((1 - overlap) * length)``.

    Starts are 0-based; the block count is the largest that keeps the last
    block inside ``[0, T)``.
    """
    if not 1 <= length <= T:
        raise ConfigurationError(f"block length {length} must lie in [1, T={T}]")
    if not 0.0 <= overlap < 1.0:
        raise ConfigurationError(f"block overlap must lie in [0, 1), got {overlap}")
    stride = int(round((1.0 - overlap) * length))
    if stride < 1:
        raise ConfigurationError(f"block stride rounds to {stride}")
    K = (T - length) // stride + 1
    return BlockPlan(T=T, length=length, overlap=overlap, stride=stride, starts=tuple(k * stride for k in range(K)))


def estimate_targets(X, plan: BlockPlan) -> TargetSet:
    """Block second moments ``C[r1, r2, k] = (1/L') sum_t x_r1(t) x_r2(t)^H`` for ``r1 <= r2``.

    No mean is removed; center the data beforehand if needed.
    """
    X = X.X if isinstance(X, MultisetSignal) else np.asarray(X, dtype=np.complex128)
    if X.ndim != 3:
        raise DimensionError(f"expected (R, N, T) data, got {X.shape}")
    R, N, T = X.shape
    if T != plan.T:
        raise DimensionError(f"plan is for T = {plan.T}, data has T = {T}")
    idx = np.asarray(plan.starts)[:, None] + np.arange(plan.length)
    blocks = X[:, :, idx].transpose(0, 2, 1, 3)  # (R, K, N, L')
    pairs = pair_list(R)
    r1 = np.array([p[0] for p in pairs])
    r2 = np.array([p[1] for p in pairs])
    data = blocks[r1] @ np.conj(blocks[r2]).swapaxes(-1, -2) / plan.length
    return TargetSet(data, R)


def unmix(B, X) -> MultisetSignal:
    """Estimated sources ``y_r(t) = B_r x_r(t)``."""
    B = np.asarray(getattr(B, "B", B), dtype=np.complex128)
    X = X.X if isinstance(X, MultisetSignal) else np.asarray(X, dtype=np.complex128)
    if B.ndim != 3 or X.ndim != 3 or B.shape[0] != X.shape[0] or B.shape[2] != X.shape[1]:
        raise DimensionError(f"unmixing {B.shape} does not match data {X.shape}")
    return MultisetSignal(B @ X)


def separate(
    X, length: int = 100, overlap: float = 0.5, config: Optional[SolverConfig] = None
) -> tuple[UnmixingSet, SolverReport, MultisetSignal]:
    """Block-covariance targets, GNJD, and unmixed sources in one call."""
    X = X if isinstance(X, MultisetSignal) else MultisetSignal(X)
    targets = estimate_targets(X, plan_blocks(X.T, length, overlap))
    B, report = solve(targets, config)
    return B, report, unmix(B, X)
