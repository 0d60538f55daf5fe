"""Deterministic, counter-based random number generation.

The generator is SplitMix64 used in counter mode: draw ``i`` of a stream with
seed ``s`` is ``mix64(s + i * GOLDEN_GAMMA)`` where ``mix64`` is the standard
SplitMix64 finalizer.  Because each output depends only on (seed, counter),
batches of any size can be produced with vectorized uint64 arithmetic and the
stream is bit-reproducible across platforms and processes.

Standard normals are produced by the Box-Muller transform on pairs of
uniforms, so normal draws are likewise a pure function of (seed, counter).
"""

import hashlib

import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wraps modulo 2**64)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX_A
        z = (z ^ (z >> np.uint64(27))) * _MIX_B
        return z ^ (z >> np.uint64(31))


def _key_to_u64(key) -> int:
    """Map an int or str stream key to a stable 64-bit value."""
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf8")).digest()
        return int.from_bytes(digest[:8], "little")
    return int(key) & _U64_MASK


class SeededRng:
    """Single-owner stream of reproducible draws.

    Not safe for concurrent use; spawn independent substreams with
    :meth:`derive` instead of sharing one instance.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64_MASK
        self._counter = 0

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, counter={self._counter})"

    @property
    def counter(self) -> int:
        """Number of raw 64-bit words consumed so far."""
        return self._counter

    def derive(self, *keys) -> "SeededRng":
        """Return an independent substream keyed by ``keys`` (ints or strs).

        Derivation does not consume state of the parent; the same parent
        seed and keys always name the same substream.
        """
        state = np.uint64(self.seed)
        for key in keys:
            with np.errstate(over="ignore"):
                state = state + GOLDEN_GAMMA + np.uint64(_key_to_u64(key))
            state = _mix64(state)
        return SeededRng(int(state))

    def raw_u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words."""
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            state = np.uint64(self.seed) + idx * GOLDEN_GAMMA
        return _mix64(state)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` uniforms in [0, 1) with 53-bit resolution."""
        return (self.raw_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def integers(self, n: int, low: int, high: int) -> np.ndarray:
        """``n`` integers uniform on {low, ..., high} inclusive.

        Uses the floating-point mapping, fine for ranges << 2**53.
        """
        if high < low:
            raise ValueError(f"empty integer range [{low}, {high}]")
        span = high - low + 1
        return low + np.floor(self.uniform(n) * span).astype(np.int64)

    def standard_normal(self, rows: int, cols: int | None = None) -> np.ndarray:
        """I.i.d. standard normal draws via Box-Muller.

        Returns a [rows x cols] matrix, or a length-``rows`` vector when
        ``cols`` is None.  Consumes an even number of raw words.
        """
        n = rows if cols is None else rows * cols
        if n < 1:
            raise ValueError(f"requested empty normal draw ({rows}, {cols})")
        half = (n + 1) // 2
        u = self.uniform(2 * half)
        # 1 - u in (0, 1] keeps the log argument away from zero
        radius = np.sqrt(-2.0 * np.log(1.0 - u[:half]))
        angle = 2.0 * np.pi * u[half:]
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
        return z if cols is None else z.reshape(rows, cols)
