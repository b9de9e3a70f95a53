"""Seeded generators for synthetic GNJD targets and multiset source/mixture data.

All randomness comes from ``numpy.random.Generator(Philox(seed))``, a
counter-based generator, so a given integer seed reproduces outputs
bit-for-bit on any platform running the same numpy. Per-run seeds for
repeated experiments are derived with :func:`run_seed`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import ConfigurationError, DimensionError, GNJDError
from .matrix import TargetSet, n_pairs, pair_list

__all__ = [
    "GroundTruth",
    "MultisetSignal",
    "make_rng",
    "run_seed",
    "complex_gaussian",
    "random_mixing",
    "gen_exact",
    "gen_noisy",
    "slot_stride",
    "slot_count",
    "gen_am_bpsk_sources",
    "gen_mixtures",
]

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

MAX_COND = 1e8
MAX_ATTEMPTS = 100
# the offset pair has mean 1, which leaves a rank-one term in raw block
# moments; only the zero-mean antipodal pair keeps them diagonal
BPSK_SYMBOLS = {
    "antipodal": np.array([1 + 1j, -1 - 1j]),
    "offset": np.array([1 + 1j, 1 - 1j]),
}


@dataclass(eq=False)
class GroundTruth:
    """True model parameters of a synthetic instance.

    ``A``: (R, N, N) mixing matrices. ``D``: (P, K, N) diagonals aligned with
    the target-set pair order (exact/noisy targets only). ``Pi``: (N, R, R)
    inter-set dependence matrices, one per source index (signal data only).
    """

    A: np.ndarray
    D: Optional[np.ndarray] = None
    Pi: Optional[np.ndarray] = None
    sigma_s: float = 1.0
    sigma_n: float = 0.0


@dataclass(eq=False)
class MultisetSignal:
    """R datasets of N-channel complex series, ``X`` shaped (R, N, T)."""

    X: np.ndarray
    sources: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.complex128)
        if self.X.ndim != 3:
            raise DimensionError(f"multiset signal must be (R, N, T), got {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("signal contains NaN or Inf")

    @property
    def R(self) -> int:
        return self.X.shape[0]

    @property
    def N(self) -> int:
        return self.X.shape[1]

    @property
    def T(self) -> int:
        return self.X.shape[2]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def run_seed(seed: int, run: int) -> np.random.SeedSequence:
    """Seed for run ``run`` of an experiment: ``SeedSequence([seed, run])``."""
    return np.random.SeedSequence([seed, run])


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Real and imaginary parts i.i.d. standard normal (real block drawn first)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return re + 1j * im


def random_mixing(rng: np.random.Generator, N: int) -> np.ndarray:
    for _ in range(MAX_ATTEMPTS):
        A = complex_gaussian(rng, (N, N))
        if np.linalg.cond(A) < MAX_COND:
            return A
    raise GNJDError(f"could not draw a mixing matrix with condition number < {MAX_COND:g}")


def _check_sizes(N: int, K: int, R: int) -> None:
    if N < 2 or K < 1 or R < 1:
        raise ConfigurationError(f"need N >= 2, K >= 1, R >= 1; got N={N}, K={K}, R={R}")


def _exact_model(rng: np.random.Generator, N: int, K: int, R: int):
    A = np.stack([random_mixing(rng, N) for _ in range(R)])
    D = complex_gaussian(rng, (n_pairs(R), K, N))
    data = np.empty((n_pairs(R), K, N, N), dtype=np.complex128)
    for p, (r1, r2) in enumerate(pair_list(R)):
        data[p] = (A[r1] * D[p][:, None, :]) @ A[r2].conj().T
    return A, D, data


def gen_exact(N: int, K: int, R: int, seed: SeedLike = 0) -> tuple[TargetSet, GroundTruth]:
    """Targets ``C = A_{r1} diag(d) A_{r2}^H`` with complex Gaussian ``A`` and ``d``."""
    _check_sizes(N, K, R)
    rng = make_rng(seed)
    A, D, data = _exact_model(rng, N, K, R)
    return TargetSet(data, R), GroundTruth(A=A, D=D)


def gen_noisy(
    N: int, K: int, R: int, snr_db: float, sigma_n: float = 0.01, seed: SeedLike = 0
) -> tuple[TargetSet, GroundTruth]:
    """Exact-model targets perturbed as ``sigma_s C/|C| + sigma_n E/|E|``.

    ``sigma_s = sigma_n * 10**(snr_db / 10)``; every noise matrix ``E`` is a
    fresh complex Gaussian draw.
    """
    _check_sizes(N, K, R)
    if not sigma_n > 0:
        raise ConfigurationError(f"sigma_n must be positive, got {sigma_n}")
    rng = make_rng(seed)
    A, D, data = _exact_model(rng, N, K, R)
    sigma_s = sigma_n * 10.0 ** (snr_db / 10.0)
    E = complex_gaussian(rng, data.shape)
    cn = np.linalg.norm(data, axis=(-2, -1), keepdims=True)
    en = np.linalg.norm(E, axis=(-2, -1), keepdims=True)
    noisy = sigma_s * data / cn + sigma_n * E / en
    return TargetSet(noisy, R), GroundTruth(A=A, D=D, sigma_s=sigma_s, sigma_n=sigma_n)


def slot_stride(L: int, alpha: float) -> int:
    stride = int(round((1.0 - alpha) * L))
    if stride < 1:
        raise ConfigurationError(f"slot stride (1 - alpha) * L rounds to {stride}")
    return stride


def slot_count(T: int, L: int, alpha: float) -> int:
    """Number of slots ``M`` such that slot ``m`` covers samples ``[m*s, m*s + L)``, all inside ``T``."""
    return (T - L) // slot_stride(L, alpha) + 1


def gen_am_bpsk_sources(
    N: int,
    R: int,
    T: int,
    L: int = 200,
    alpha: float = 0.5,
    seed: SeedLike = 0,
    symbols: str = "antipodal",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Amplitude-modulated complex BPSK sources with inter-set dependence.

    Every independent source ``s'[r, n]`` is a sum of slots; slot ``m`` is a
    length-``L`` run of equiprobable symbols (``{1+1j, -1-1j}`` for
    ``symbols="antipodal"``, ``{1+1j, 1-1j}`` for ``"offset"``) scaled by
    ``eta ~ U[0, 1]`` and starting at sample ``m * round((1 - alpha) L)``.
    The dependent sources are ``s[:, n, t] = Pi[n] @ s'[:, n, t]`` with one
    complex Gaussian R x R matrix per source index.

    Returns ``(s_prime, s, Pi)`` shaped (R, N, T), (R, N, T), (N, R, R).
    """
    if N < 1 or R < 1:
        raise ConfigurationError("need N >= 1 and R >= 1")
    if not 0.0 <= alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1), got {alpha}")
    if not 1 <= L <= T:
        raise ConfigurationError(f"need 1 <= L <= T, got L={L}, T={T}")
    if symbols not in BPSK_SYMBOLS:
        raise ConfigurationError(f"symbols must be one of {sorted(BPSK_SYMBOLS)}, got {symbols!r}")
    rng = make_rng(seed)
    stride = slot_stride(L, alpha)
    M = slot_count(T, L, alpha)

    eta = rng.uniform(0.0, 1.0, size=(R, N, M))
    bits = rng.integers(0, 2, size=(R, N, M, L))
    Pi = complex_gaussian(rng, (N, R, R))

    s_prime = np.zeros((R, N, T), dtype=np.complex128)
    slots = eta[..., None] * BPSK_SYMBOLS[symbols][bits]
    for m in range(M):
        s_prime[:, :, m * stride : m * stride + L] += slots[:, :, m]
    s = np.einsum("nrq,qnt->rnt", Pi, s_prime)
    return s_prime, s, Pi


def gen_mixtures(
    sources: np.ndarray,
    A: np.ndarray,
    snr_db: float,
    sigma_n: float = 1.0,
    seed: SeedLike = 0,
) -> MultisetSignal:
    """Noisy multiset mixtures ``x_r = sigma_s A_r S_r/|A_r S_r| + sigma_n N_r/|N_r|``.

    Noise is spatially correlated across datasets: a raw complex Gaussian
    noise block is mixed over the dataset axis by one R x R complex Gaussian
    matrix. Norms are Frobenius norms over the whole (N, T) block.
    """
    S = np.asarray(sources, dtype=np.complex128)
    A = np.asarray(A, dtype=np.complex128)
    if S.ndim != 3 or A.ndim != 3 or A.shape[0] != S.shape[0] or A.shape[1:] != (S.shape[1], S.shape[1]):
        raise DimensionError(f"sources {S.shape} and mixing {A.shape} do not agree")
    if not sigma_n > 0:
        raise ConfigurationError(f"sigma_n must be positive, got {sigma_n}")
    rng = make_rng(seed)
    R = S.shape[0]
    sigma_s = sigma_n * 10.0 ** (snr_db / 10.0)

    clean = A @ S
    raw = complex_gaussian(rng, S.shape)
    Q = complex_gaussian(rng, (R, R))
    noise = np.einsum("rq,qnt->rnt", Q, raw)
    cn = np.linalg.norm(clean, axis=(-2, -1), keepdims=True)
    nn = np.linalg.norm(noise, axis=(-2, -1), keepdims=True)
    X = sigma_s * clean / cn + sigma_n * noise / nn
    return MultisetSignal(X=X, sources=S)
