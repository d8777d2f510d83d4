"""Deterministic reductions and the counter-based seed generator."""

from __future__ import annotations

import hashlib
import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(seed: int, counter: int) -> int:
    """Counter-based splitmix64: the `counter`-th output of the stream started at `seed`."""
    z = (seed + (counter + 1) * _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def uniform01(seed: int, counter: int) -> float:
    """Uniform double in [0, 1) from the top 53 bits of one splitmix output."""
    return (splitmix64(seed, counter) >> 11) * (1.0 / (1 << 53))


def exact_sum(values) -> float:
    """Correctly rounded sum; independent of order and thread count."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


class CompensatedAccumulator:
    """Neumaier summation of equally shaped real or complex arrays, in call order."""

    def __init__(self, shape, dtype=complex):
        self._complex = np.issubdtype(np.dtype(dtype), np.complexfloating)
        self._parts = [np.zeros(shape), np.zeros(shape)] if self._complex else [np.zeros(shape)]
        self._carry = [np.zeros(shape) for _ in self._parts]

    def add(self, block):
        block = np.asarray(block)
        pieces = (block.real, block.imag) if self._complex else (block.real,)
        for index, piece in enumerate(pieces):
            total = self._parts[index]
            updated = total + piece
            big = np.abs(total) >= np.abs(piece)
            self._carry[index] += np.where(big, (total - updated) + piece, (piece - updated) + total)
            self._parts[index] = updated

    def result(self):
        values = [part + carry for part, carry in zip(self._parts, self._carry)]
        if self._complex:
            return values[0] + 1j * values[1]
        return values[0]


def stable_digest(text: str, length: int = 16) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]
