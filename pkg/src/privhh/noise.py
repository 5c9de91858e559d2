"""Seeded Laplace noise for reproducible private releases.

Draws use the inverse CDF of a 64-bit uniform so a given seed always
replays the same noise sequence; uniforms are clamped one ulp away from
the endpoints to keep the log argument positive.
"""

from __future__ import annotations

import numpy as np

_EDGE = np.finfo(np.float64).eps


def laplace_from_uniform(u, scale: float):
    """Inverse Laplace CDF: u in (0, 1) -> a Laplace(scale) variate.

    u = 1/2 maps to 0; the sign of u - 1/2 picks the tail.
    """
    centered = u - 0.5
    return -scale * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))


class NoiseSource:
    """Stateful Laplace sampler; identical seeds yield identical draws."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def laplace(self, scale: float, size=None):
        """Draw from Laplace(scale): density (1/2b) exp(-|x|/b), b = scale.

        Returns a float when size is None, else an ndarray of that shape.
        """
        if scale <= 0:
            raise ValueError(f"scale must be positive, got {scale}")
        u = self._rng.random() if size is None else self._rng.random(size)
        draw = laplace_from_uniform(np.clip(u, _EDGE, 1.0 - _EDGE), scale)
        return float(draw) if size is None else draw


class ZeroNoiseSource(NoiseSource):
    """Test hook: every draw is exactly 0.

    Only tests may construct this; production entry points always build a
    real NoiseSource from a caller-supplied seed.
    """

    def __init__(self) -> None:
        super().__init__(seed=0)

    def laplace(self, scale: float, size=None):
        if scale <= 0:
            raise ValueError(f"scale must be positive, got {scale}")
        return 0.0 if size is None else np.zeros(size)


def sample_laplace(scale: float, noise: NoiseSource) -> float:
    """One Laplace(scale) draw from the given source; mean 0, variance 2*scale**2."""
    return noise.laplace(scale)
