"""Little-endian binary formats for targets, unmixing matrices, ground truth and signals.

Every complex entry is stored as two IEEE-754 doubles (real, imaginary),
i.e. numpy dtype ``<c16``; matrices are row-major. Headers::

    GNJDT1  u32 N, K, R                 then K*R(R+1)/2 N x N targets,
                                         ordered r1 asc, r2 asc from r1, k asc
    GNJDB1  u32 N, R                    then R N x N unmixing matrices
    GNJDG1  u32 N, K, R, flags          f64 sigma_s, sigma_n, then R N x N
                                         mixing matrices; if flags & 1 the
                                         K*R(R+1)/2 diagonals (N entries each,
                                         target order); if flags & 2 the N
                                         R x R dependence matrices
    GNJDX1  u32 R, N, T                 then R blocks of N x T samples
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import FormatError
from .matrix import TargetSet, n_pairs
from .synth import GroundTruth, MultisetSignal

__all__ = [
    "write_targets",
    "read_targets",
    "write_unmixing",
    "read_unmixing",
    "write_truth",
    "read_truth",
    "write_signal",
    "read_signal",
    "sniff_magic",
]

PathLike = Union[str, Path]

MAGIC_TARGETS = b"GNJDT1"
MAGIC_UNMIXING = b"GNJDB1"
MAGIC_TRUTH = b"GNJDG1"
MAGIC_SIGNAL = b"GNJDX1"
MAGIC_LEN = 6
CDTYPE = np.dtype("<c16")

HAS_D = 1
HAS_PI = 2


class _Reader:
    def __init__(self, buf: bytes, path: PathLike):
        self.buf = buf
        self.pos = 0
        self.path = path

    def expect_magic(self, magic: bytes) -> None:
        got = self.buf[:MAGIC_LEN]
        if got != magic:
            raise FormatError(f"{self.path}: bad magic at byte offset 0: expected {magic!r}, got {got!r}")
        self.pos = MAGIC_LEN

    def _take(self, nbytes: int, what: str) -> bytes:
        if self.pos + nbytes > len(self.buf):
            raise FormatError(
                f"{self.path}: truncated payload at byte offset {self.pos} reading {what}: "
                f"need {nbytes} bytes, {len(self.buf) - self.pos} available"
            )
        chunk = self.buf[self.pos : self.pos + nbytes]
        self.pos += nbytes
        return chunk

    def u32(self, count: int, what: str) -> tuple[int, ...]:
        return struct.unpack(f"<{count}I", self._take(4 * count, what))

    def f64(self, count: int, what: str) -> tuple[float, ...]:
        return struct.unpack(f"<{count}d", self._take(8 * count, what))

    def complex_array(self, shape: tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self._take(count * CDTYPE.itemsize, what)
        return np.frombuffer(raw, dtype=CDTYPE).astype(np.complex128).reshape(shape)

    def finish(self) -> None:
        if self.pos != len(self.buf):
            raise FormatError(f"{self.path}: {len(self.buf) - self.pos} trailing bytes at byte offset {self.pos}")


def _read(path: PathLike) -> _Reader:
    return _Reader(Path(path).read_bytes(), path)


def _c16(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype=CDTYPE).tobytes()


def sniff_magic(path: PathLike) -> bytes:
    with open(path, "rb") as fh:
        return fh.read(MAGIC_LEN)


def write_targets(path: PathLike, targets: TargetSet) -> None:
    header = MAGIC_TARGETS + struct.pack("<3I", targets.N, targets.K, targets.R)
    Path(path).write_bytes(header + _c16(targets.data))


def read_targets(path: PathLike) -> TargetSet:
    rd = _read(path)
    rd.expect_magic(MAGIC_TARGETS)
    N, K, R = rd.u32(3, "header N, K, R")
    if N < 1 or K < 1 or R < 1:
        raise FormatError(f"{path}: invalid header N={N}, K={K}, R={R} at byte offset {MAGIC_LEN}")
    data = rd.complex_array((n_pairs(R), K, N, N), "target matrices")
    rd.finish()
    return TargetSet(data, R)


def write_unmixing(path: PathLike, B) -> None:
    B = np.asarray(getattr(B, "B", B))
    R, N, _ = B.shape
    Path(path).write_bytes(MAGIC_UNMIXING + struct.pack("<2I", N, R) + _c16(B))


def read_unmixing(path: PathLike) -> np.ndarray:
    rd = _read(path)
    rd.expect_magic(MAGIC_UNMIXING)
    N, R = rd.u32(2, "header N, R")
    B = rd.complex_array((R, N, N), "unmixing matrices")
    rd.finish()
    return B


def write_truth(path: PathLike, truth: GroundTruth) -> None:
    A = np.asarray(truth.A)
    R, N, _ = A.shape
    flags = (HAS_D if truth.D is not None else 0) | (HAS_PI if truth.Pi is not None else 0)
    K = truth.D.shape[1] if truth.D is not None else 0
    parts = [
        MAGIC_TRUTH,
        struct.pack("<4I", N, K, R, flags),
        struct.pack("<2d", truth.sigma_s, truth.sigma_n),
        _c16(A),
    ]
    if truth.D is not None:
        parts.append(_c16(truth.D))
    if truth.Pi is not None:
        parts.append(_c16(truth.Pi))
    Path(path).write_bytes(b"".join(parts))


def read_truth(path: PathLike) -> GroundTruth:
    rd = _read(path)
    rd.expect_magic(MAGIC_TRUTH)
    N, K, R, flags = rd.u32(4, "header N, K, R, flags")
    sigma_s, sigma_n = rd.f64(2, "noise levels")
    A = rd.complex_array((R, N, N), "mixing matrices")
    D = rd.complex_array((n_pairs(R), K, N), "diagonals") if flags & HAS_D else None
    Pi = rd.complex_array((N, R, R), "dependence matrices") if flags & HAS_PI else None
    rd.finish()
    return GroundTruth(A=A, D=D, Pi=Pi, sigma_s=sigma_s, sigma_n=sigma_n)


def write_signal(path: PathLike, signal) -> None:
    X = signal.X if isinstance(signal, MultisetSignal) else np.asarray(signal)
    R, N, T = X.shape
    Path(path).write_bytes(MAGIC_SIGNAL + struct.pack("<3I", R, N, T) + _c16(X))


def read_signal(path: PathLike) -> MultisetSignal:
    rd = _read(path)
    rd.expect_magic(MAGIC_SIGNAL)
    R, N, T = rd.u32(3, "header R, N, T")
    X = rd.complex_array((R, N, T), "samples")
    rd.finish()
    return MultisetSignal(X)
