"""Seeded random streams.

A :class:`SeededStream` wraps a PCG64 bit generator and produces standard
normal variates through the Box-Muller transform of its own uniforms, so a
sequence depends only on the seed and not on numpy's normal sampler.
Replicates never share a stream; each derives ``child(i)``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SeededStream"]

_SEED_MASK = (1 << 64) - 1


class SeededStream:
    """Deterministic source of uniform, normal and Bernoulli draws.

    Parameters
    ----------
    seed : int
        Reduced modulo 2**64.
    spawn_key : tuple of int
        Path of child indices from the root stream.
    """

    def __init__(self, seed, spawn_key=()):
        self.seed = int(seed) & _SEED_MASK
        self.spawn_key = tuple(int(k) for k in spawn_key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))
        self.position = 0

    def __repr__(self):
        return f"SeededStream(seed={self.seed}, spawn_key={self.spawn_key}, position={self.position})"

    def child(self, i):
        """Independent stream for replicate ``i``; injective in ``i``."""
        if i < 0:
            raise ValueError("child index must be non-negative")
        return SeededStream(self.seed, self.spawn_key + (int(i),))

    def uniform(self, size):
        """Uniforms on the open interval (0, 1)."""
        n = int(np.prod(size))
        self.position += n
        # PCG64 doubles live on [0, 1); shift by half an ulp step to exclude 0
        u = self._gen.random(n)
        u = (np.floor(u * 2.0**53) + 0.5) / 2.0**53
        return u.reshape(size)

    def normal(self, size):
        """Standard normal variates via Box-Muller."""
        if isinstance(size, (int, np.integer)):
            size = (int(size),)
        n = int(np.prod(size))
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * m)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:n].reshape(size)

    def bernoulli(self, p):
        """Independent indicators with success probabilities ``p`` (array)."""
        p = np.asarray(p, dtype=np.float64)
        return self.uniform(p.shape) < p
