"""Seeded, splittable random streams.

Seeds are derived with the SplitMix64 finalizer (Steele, Lea and Flood
constants) so that a master seed and an index always name the same stream.
Uniform variates come from a ``numpy`` PCG64 generator keyed by the derived
seed; normal variates use the Box-Muller transform on those uniforms.

"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULTIPLIER_1 = 0xBF58476D1CE4E5B9
MIX_MULTIPLIER_2 = 0x94D049BB133111EB


def mix64(value):
    """One SplitMix64 output for state ``value`` (64-bit in, 64-bit out)."""
    z = (value + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MULTIPLIER_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULTIPLIER_2) & MASK64
    return z ^ (z >> 31)


class Rng:
    """Random stream for one seed.

    ``split(index)`` derives an independent child stream without consuming
    draws from this one.

    """

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self._generator = np.random.Generator(
            np.random.PCG64(mix64(self.seed)))

    def __repr__(self):
        return 'Rng(seed={:#x})'.format(self.seed)

    def split(self, index):
        """Child stream number ``index``."""
        return Rng(mix64(self.seed ^ (int(index) & MASK64)))

    def random(self, size=None):
        """Uniform variates on [0, 1)."""
        return self._generator.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        """Normal variates by the Box-Muller transform."""
        count = 1 if size is None else int(np.prod(size))
        # 1 - U lies in (0, 1], so the logarithm is finite
        u1 = 1.0 - self._generator.random(count)
        u2 = self._generator.random(count)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        out = loc + scale * z
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def integers(self, high):
        """Uniform integer on [0, high)."""
        return int(self._generator.integers(high))

    def sample_without_replacement(self, population, count):
        """``count`` distinct integers drawn uniformly from [0, population)."""
        return self._generator.choice(population, size=count, replace=False)

    def categorical(self, probabilities):
        """Index drawn from the discrete distribution ``probabilities``."""
        return int(self._generator.choice(len(probabilities),
                                          p=probabilities))
