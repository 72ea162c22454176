"""Seeded, label-split random streams.

Every stochastic step in the lab draws from an ``RngStream`` identified by
``(master seed, label)``. The label is hashed into the seed sequence, so the
draw order of one stream never depends on what any other stream did. That is
what makes parallel fan-out (images, seeds, categories) bit-reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label: str) -> tuple[int, ...]:
    # sha256 is stable across processes and platforms, unlike hash().
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


class RngStream:
    """Deterministic random stream for one (seed, label) pair."""

    def __init__(self, seed: int, label: str = "root"):
        self.seed = int(seed)
        self.label = label
        self.draws = 0
        key = np.random.SeedSequence(entropy=self.seed, spawn_key=_label_key(label))
        self._gen = np.random.Generator(np.random.PCG64(key))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r}, draws={self.draws})"

    def child(self, sublabel: str) -> "RngStream":
        """A fresh independent stream scoped under this one's label."""
        return RngStream(self.seed, f"{self.label}/{sublabel}")

    def sample_gaussian(self, shape) -> np.ndarray:
        """i.i.d. standard-normal draws of the given shape, float64."""
        self.draws += 1
        return self._gen.standard_normal(size=shape, dtype=np.float64)

    def sample_beta(self, alpha: float) -> float:
        """One draw from the symmetric Beta(alpha, alpha) on [0, 1]."""
        if alpha <= 0:
            raise ValueError(f"beta shape parameter must be positive, got {alpha}")
        self.draws += 1
        return float(self._gen.beta(alpha, alpha))

    def uniform(self, low: float = 0.0, high: float = 1.0, shape=None):
        self.draws += 1
        out = self._gen.uniform(low, high, size=shape)
        return float(out) if shape is None else out

    def integers(self, low: int, high: int, shape=None):
        """Uniform integers in [low, high)."""
        self.draws += 1
        out = self._gen.integers(low, high, size=shape)
        return int(out) if shape is None else out

    def permutation(self, n: int) -> np.ndarray:
        self.draws += 1
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        self.draws += 1
        return self._gen.choice(n, size=size, replace=replace)


def sample_gaussian(stream: RngStream, shape) -> np.ndarray:
    return stream.sample_gaussian(shape)


def sample_beta(stream: RngStream, alpha: float) -> float:
    return stream.sample_beta(alpha)
