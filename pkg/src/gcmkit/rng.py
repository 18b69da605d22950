"""Deterministic, splittable random numbers built on splitmix64.

Every stochastic step in the package (parameter init, synthetic fields,
batch shuffling) draws from a `SplitMix64` stream so that a single root
seed reproduces a whole run bit for bit, independent of numpy's global
state.

The generator is the standard splitmix64: a 64-bit counter advanced by
the golden-ratio increment 0x9E3779B97F4A7C15, with each output produced
by the finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Because the state advances by a fixed increment, a block of n outputs can
be produced in one vectorized pass. Streams split by seeding a child with
the parent's next raw output, so a tree of generators is reproducible
from the root seed alone.

Draw counts are part of the contract: `uniform` consumes one raw output
per value, `normal` consumes two per pair (Box-Muller), `permutation(n)`
consumes n - 1 uniforms (Fisher-Yates).
"""

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _finalize(z):
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Splittable counter-based PRNG; see module docstring for the algorithm."""

    def __init__(self, seed: int):
        self._state = np.uint64(int(seed) & _MASK)

    def raw(self, n: int) -> np.ndarray:
        """Return the next n raw 64-bit outputs as a uint64 array."""
        if n < 0:
            raise ValueError("raw() needs n >= 0")
        steps = np.arange(1, n + 1, dtype=np.uint64) * _GAMMA + self._state
        self._state = np.uint64((int(self._state) + n * int(_GAMMA)) & _MASK)
        return _finalize(steps)

    def next_u64(self) -> int:
        return int(self.raw(1)[0])

    def split(self) -> "SplitMix64":
        """Child stream seeded by this stream's next output."""
        return SplitMix64(self.next_u64())

    def uniform(self, shape=(), low: float = 0.0, high: float = 1.0):
        """Uniform doubles in [low, high); scalar when shape is ()."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        out = low + (high - low) * u
        return out.reshape(shape) if shape else float(out[0])

    def normal(self, shape=(), mean: float = 0.0, sd: float = 1.0):
        """Standard Box-Muller normals; scalar when shape is ()."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        pairs = (n + 1) // 2
        # u1 in (0, 1] keeps the log finite
        u1 = 1.0 - (self.raw(pairs) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        u2 = (self.raw(pairs) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])[:n]
        out = mean + sd * z
        return out.reshape(shape) if shape else float(out[0])

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        perm = np.arange(n)
        if n > 1:
            u = self.uniform((n - 1,))
            for i in range(n - 1, 0, -1):
                j = int(u[n - 1 - i] * (i + 1))
                perm[i], perm[j] = perm[j], perm[i]
        return perm
