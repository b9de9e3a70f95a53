"""Dense complex matrix primitives and the indexed target-set container.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. All indices in
this package are 0-based: dataset ``r`` runs over ``0..R-1``, target index
``k`` over ``0..K-1`` and matrix rows/columns over ``0..N-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .exceptions import DimensionError, RotationIndexError

__all__ = [
    "TargetSet",
    "as_complex_matrix",
    "pair_list",
    "n_pairs",
    "off_norm_sq",
    "diag_norm_sq",
    "apply_left_elementary",
    "apply_right_elementary",
]


def as_complex_matrix(M) -> np.ndarray:
    """Validate ``M`` as a finite 2-D complex matrix and return a complex128 copy."""
    A = np.array(M, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains NaN or Inf entries")
    return A


def _check_square(M: np.ndarray) -> None:
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {M.shape}")


def off_norm_sq(M) -> float:
    """Squared Frobenius norm of the off-diagonal part of a square matrix (or stack)."""
    M = np.asarray(M)
    _check_square(M)
    mask = ~np.eye(M.shape[-1], dtype=bool)
    off = M[..., mask]
    return float(np.sum(off.real**2 + off.imag**2))


def diag_norm_sq(M) -> float:
    """Squared Euclidean norm of the diagonal of a square matrix (or stack)."""
    M = np.asarray(M)
    _check_square(M)
    d = np.diagonal(M, axis1=-2, axis2=-1)
    return float(np.sum(d.real**2 + d.imag**2))


def _check_rotation(M: np.ndarray, i: int, j: int) -> None:
    _check_square(M)
    n = M.shape[-1]
    if i == j:
        raise RotationIndexError(f"rotation indices must differ, got i = j = {i}")
    if not (0 <= i < n and 0 <= j < n):
        raise RotationIndexError(f"rotation indices ({i}, {j}) out of range for N = {n}")


def apply_left_elementary(M, i: int, j: int, a: complex, inplace: bool = False) -> np.ndarray:
    """Compute ``(I + a e_i e_j^T) @ M``: row ``i`` gains ``a`` times row ``j``.

    Works on a single matrix or a stack of matrices (last two axes).
    With ``inplace=True`` the input array is overwritten and returned.
    """
    M = np.asarray(M) if inplace else np.array(M, dtype=np.complex128)
    _check_rotation(M, i, j)
    M[..., i, :] += a * M[..., j, :]
    return M


def apply_right_elementary(M, i: int, j: int, a: complex, inplace: bool = False) -> np.ndarray:
    """Compute ``M @ (I + a e_i e_j^T)^H``: column ``i`` gains ``conj(a)`` times column ``j``."""
    M = np.asarray(M) if inplace else np.array(M, dtype=np.complex128)
    _check_rotation(M, i, j)
    M[..., :, i] += np.conj(a) * M[..., :, j]
    return M


def n_pairs(R: int) -> int:
    return R * (R + 1) // 2


def pair_list(R: int) -> list[tuple[int, int]]:
    """All dataset pairs ``(r1, r2)`` with ``r1 <= r2`` in storage order."""
    return [(r1, r2) for r1 in range(R) for r2 in range(r1, R)]


@dataclass(frozen=True, eq=False)
class TargetSet:
    """Family of complex N x N target matrices ``C[r1, r2, k]`` with ``r1 <= r2``.

    ``data`` has shape ``(R(R+1)/2, K, N, N)``; the first axis follows
    :func:`pair_list` ordering (r1 ascending, then r2 ascending from r1).
    The array is made read-only on construction.
    """

    data: np.ndarray
    R: int
    pairs: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.complex128)
        if data.ndim != 4 or data.shape[-1] != data.shape[-2]:
            raise DimensionError(f"target data must be (P, K, N, N), got {data.shape}")
        if self.R < 1 or data.shape[0] != n_pairs(self.R):
            raise DimensionError(
                f"expected {n_pairs(self.R)} dataset pairs for R = {self.R}, got {data.shape[0]}"
            )
        if data.shape[1] < 1 or data.shape[2] < 1:
            raise DimensionError("K and N must be positive")
        if not np.all(np.isfinite(data)):
            raise ValueError("target matrices contain NaN or Inf entries")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "pairs", tuple(pair_list(self.R)))

    @property
    def N(self) -> int:
        return self.data.shape[-1]

    @property
    def K(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.data.shape[0] * self.K

    def pair_index(self, r1: int, r2: int) -> int:
        if not 0 <= r1 <= r2 < self.R:
            raise KeyError((r1, r2))
        # offset of row r1 in the packed upper triangle
        return r1 * self.R - r1 * (r1 - 1) // 2 + (r2 - r1)

    def __getitem__(self, key: tuple[int, int, int]) -> np.ndarray:
        r1, r2, k = key
        return self.data[self.pair_index(r1, r2), k]

    def triples(self) -> Iterator[tuple[int, int, int]]:
        for r1, r2 in self.pairs:
            for k in range(self.K):
                yield r1, r2, k

    @classmethod
    def from_mapping(cls, matrices: Mapping[tuple[int, int, int], np.ndarray], R: int, K: int) -> "TargetSet":
        """Build a complete target set from a ``{(r1, r2, k): matrix}`` mapping."""
        expected = {(r1, r2, k) for r1, r2 in pair_list(R) for k in range(K)}
        missing = expected - set(matrices)
        if missing:
            raise DimensionError(f"target set incomplete, missing {sorted(missing)[:3]}...")
        first = as_complex_matrix(next(iter(matrices.values())))
        N = first.shape[0]
        data = np.empty((n_pairs(R), K, N, N), dtype=np.complex128)
        for p, (r1, r2) in enumerate(pair_list(R)):
            for k in range(K):
                M = as_complex_matrix(matrices[(r1, r2, k)])
                if M.shape != (N, N):
                    raise DimensionError(f"matrix {(r1, r2, k)} has shape {M.shape}, expected {(N, N)}")
                data[p, k] = M
        return cls(data, R)
