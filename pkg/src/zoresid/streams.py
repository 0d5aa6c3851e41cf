"""Seeded, forkable random streams and direction samplers.

Directions come in four flavors: uniform on the unit sphere, uniform in the
unit ball, standard Gaussian, and Rademacher (iid signs). Every sampler is a
pure function of (stream, d): reruns with the same stream state reproduce the
draw bit for bit. Streams are backed by the counter-based Philox generator so
forked substreams used by parallel sweeps never overlap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Distribution",
    "RandomStream",
    "DirectionSample",
    "sample_sphere",
    "sample_ball",
    "sample_gaussian",
    "sample_rademacher",
    "sample_sphere_batch",
    "sample_ball_batch",
    "sample_gaussian_batch",
    "sample_rademacher_batch",
]


class Distribution(enum.Enum):
    UNIT_SPHERE = "sphere"
    UNIT_BALL = "ball"
    STANDARD_GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"


class DimensionError(ValueError):
    """Raised when a sampler is asked for a direction with d < 1."""


@dataclass
class RandomStream:
    """Counter-tracked RNG stream with deterministic forking.

    `seed` plus the (immutable) `spawn_key` fully determine the sequence;
    `counter` records how many scalar variates have been consumed. Forking
    with a fixed child index always yields the same substream, independent of
    how much the parent has been used.
    """

    seed: int
    spawn_key: tuple[int, ...] = ()
    counter: int = field(default=0, init=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def fork(self, index: int) -> "RandomStream":
        """Deterministic child stream; disjoint from the parent and siblings."""
        return RandomStream(self.seed, self.spawn_key + (int(index),))

    def normal(self, shape) -> np.ndarray:
        out = self._gen.standard_normal(shape)
        self.counter += out.size
        return out

    def uniform(self, shape) -> np.ndarray:
        out = self._gen.random(shape)
        self.counter += out.size
        return out

    def signs(self, shape) -> np.ndarray:
        out = self._gen.integers(0, 2, size=shape) * 2.0 - 1.0
        self.counter += out.size
        return out

    def integers(self, low, high, shape=None):
        out = self._gen.integers(low, high, size=shape)
        self.counter += np.size(out)
        return out


@dataclass
class DirectionSample:
    vector: np.ndarray
    distribution: Distribution
    dim: int


def _check_dim(d: int) -> None:
    if d < 1:
        raise DimensionError(f"direction dimension must be >= 1, got {d}")


def sample_gaussian_batch(stream: RandomStream, n: int, d: int) -> np.ndarray:
    _check_dim(d)
    return stream.normal((n, d))


def sample_sphere_batch(stream: RandomStream, n: int, d: int) -> np.ndarray:
    """n iid directions uniform on the unit sphere, via normalized Gaussians."""
    _check_dim(d)
    z = stream.normal((n, d))
    norms = np.linalg.norm(z, axis=1)
    # Exact-zero Gaussian draws are float-possible; redraw those rows.
    bad = norms == 0.0
    while np.any(bad):
        z[bad] = stream.normal((int(bad.sum()), d))
        norms[bad] = np.linalg.norm(z[bad], axis=1)
        bad = norms == 0.0
    return z / norms[:, None]


def sample_ball_batch(stream: RandomStream, n: int, d: int) -> np.ndarray:
    """Sphere direction times U^(1/d) radius: uniform in the closed unit ball."""
    u = sample_sphere_batch(stream, n, d)
    r = stream.uniform(n) ** (1.0 / d)
    return u * r[:, None]


def sample_rademacher_batch(stream: RandomStream, n: int, d: int) -> np.ndarray:
    _check_dim(d)
    return stream.signs((n, d))


def sample_sphere(stream: RandomStream, d: int) -> DirectionSample:
    return DirectionSample(sample_sphere_batch(stream, 1, d)[0], Distribution.UNIT_SPHERE, d)


def sample_ball(stream: RandomStream, d: int) -> DirectionSample:
    return DirectionSample(sample_ball_batch(stream, 1, d)[0], Distribution.UNIT_BALL, d)


def sample_gaussian(stream: RandomStream, d: int) -> DirectionSample:
    return DirectionSample(sample_gaussian_batch(stream, 1, d)[0], Distribution.STANDARD_GAUSSIAN, d)


def sample_rademacher(stream: RandomStream, d: int) -> DirectionSample:
    return DirectionSample(sample_rademacher_batch(stream, 1, d)[0], Distribution.RADEMACHER, d)
