"""Counter-based random streams.

Every draw is a pure function ``hash(seed, stream, index)``, so a run's
randomness does not depend on the order in which events are processed.
The scalar kernel is compiled with numba for the slot engine; the numpy
version below produces the same values for bulk draws.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM_MUL = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# stream ids; node streams are 2*i (arrivals) and 2*i + 1 (MAC decisions)
CHANNEL_STREAM = 1 << 40


def arrival_stream(node: int) -> int:
    return 2 * node


def mac_stream(node: int) -> int:
    return 2 * node + 1


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def uniform(seed, stream, index):
    """Uniform double in [0, 1) for draw ``index`` of ``stream``."""
    h = _mix64(np.uint64(seed) ^ _GOLDEN)
    h = _mix64(h ^ (np.uint64(stream) * _STREAM_MUL))
    h = _mix64(h + np.uint64(index) * _GOLDEN)
    return float(h >> _S11) * _INV53


def uniforms(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Vectorised draws ``start .. start + count - 1`` of one stream."""
    with np.errstate(over="ignore"):
        idx = np.arange(start, start + count, dtype=np.uint64)
        h = _mix64_np(np.full(count, np.uint64(seed) ^ _GOLDEN, dtype=np.uint64))
        h = _mix64_np(h ^ (np.uint64(stream) * _STREAM_MUL))
        h = _mix64_np(h + idx * _GOLDEN)
    return (h >> _S11).astype(np.float64) * _INV53


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


class CounterStream:
    """Sequential view over one counter-based stream."""

    def __init__(self, seed: int, stream: int, start: int = 0):
        self.seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self.stream = int(stream)
        self.index = int(start)

    def random(self, size: int | None = None):
        if size is None:
            u = uniform(self.seed, self.stream, self.index)
            self.index += 1
            return u
        out = uniforms(self.seed, self.stream, self.index, size)
        self.index += size
        return out

    def integers(self, low: int, high: int) -> int:
        """Integer uniform in ``[low, high)``."""
        return low + int(self.random() * (high - low))
