"""Reproducible Gaussian streams.

A stream is identified by ``(seed, stream_id)``.  Both words feed the key of a
Philox4x64 counter-based generator, so streams are independent and a given
pair reproduces the same doubles on every platform.  Normals are produced by
the Box-Muller transform from those doubles rather than numpy's ziggurat, to
keep the mapping from uniforms to normals explicit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64) or not (0 <= self.stream <= _MASK64):
            raise ValueError("seed and stream must be 64-bit unsigned integers")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Derive a distinct stream, e.g. one per restart or trial."""
        mixed = (self.stream * 0x9E3779B97F4A7C15 + index + 1) & _MASK64
        return RngStream(self.seed, mixed)

    def uniform(self, size) -> np.ndarray:
        return self.generator().random(size)

    def normal(self, size) -> np.ndarray:
        return box_muller(self.generator(), size)


def box_muller(gen: np.random.Generator, size) -> np.ndarray:
    shape = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(shape)) if shape else 1
    half = (count + 1) // 2
    u = gen.random((2, half))
    # 1 - u lies in (0, 1], keeping the log finite
    r = np.sqrt(-2.0 * np.log1p(-u[0]))
    theta = 2.0 * np.pi * u[1]
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:count]
    return z.reshape(shape)


def gaussian_matrix(rows: int, cols: int, stream: RngStream) -> np.ndarray:
    """``rows x cols`` matrix of i.i.d. standard normals, fixed by ``stream``."""
    if rows < 1 or cols < 1:
        raise ValueError("gaussian_matrix needs rows, cols >= 1")
    return stream.normal((rows, cols))
