"""Noisy-max vote aggregation and its deterministic companions.

A query is summarized by a histogram of teacher votes over ``m`` classes.
The released label is the class whose vote count, perturbed with Laplace
noise of scale ``1/gamma``, is largest:

    f = argmax_j { counts[j] + Lap(1/gamma) }

``gamma`` is the inverse noise scale: larger gamma means less noise and a
weaker privacy guarantee.  Each query incurs a pure privacy cost of
``2 * gamma`` (NOT gamma: a one-example change can move two vote counts by
one each, so gamma = 0.05 costs epsilon = 0.1 per query).

All noise is produced by inverse-CDF transform of a seeded uniform stream,
one draw per class consumed in class-index order, so runs are reproducible
bit for bit given a seed.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .seeding import derive_rng, MECHANISM_NOISE

# Uniform draws below 2^-53 are snapped up to it before the inverse-CDF
# transform; numpy's random() is [0, 1) and the transform needs (0, 1).
_MIN_UNIFORM = 2.0 ** -53


@dataclass(frozen=True, slots=True)
class VoteHistogram:
    """Per-query vector of teacher vote counts over the classes.

    Invariants: at least two classes, every count non-negative, at least
    one vote in total.
    """

    counts: tuple[int, ...]

    def __post_init__(self):
        coerced = []
        for j, c in enumerate(self.counts):
            if not isinstance(c, numbers.Integral):
                raise ValueError(f"count for class {j} is not an integer: {c!r}")
            c = int(c)
            if c < 0:
                raise ValueError(f"count for class {j} is negative: {c}")
            coerced.append(c)
        if len(coerced) < 2:
            raise ValueError(f"need at least 2 classes, got {len(coerced)}")
        if sum(coerced) < 1:
            raise ValueError("histogram must contain at least one vote")
        object.__setattr__(self, "counts", tuple(coerced))

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True, slots=True)
class MechanismParams:
    """Inverse noise scale gamma (> 0) and the RNG master seed.

    The Laplace noise scale is ``1/gamma`` (in votes); it is exposed as
    ``scale`` so reports can show both and avoid unit confusion.
    """

    gamma: float
    seed: int = 0

    def __post_init__(self):
        g = float(self.gamma)
        if not (g > 0.0) or not math.isfinite(g):
            raise ValueError(f"gamma must be a positive finite real, got {self.gamma!r}")
        if not math.isfinite(1.0 / g):
            raise ValueError(f"Laplace scale 1/gamma is not finite for gamma={self.gamma!r}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def scale(self) -> float:
        """Laplace noise scale 1/gamma."""
        return 1.0 / self.gamma


def tally_votes(labels, m: int) -> VoteHistogram:
    """Count label votes into a histogram over ``m`` classes.

    Raises ValueError if any label falls outside [0, m) or the sequence
    is empty (a histogram needs at least one vote).
    """
    if m < 2:
        raise ValueError(f"need at least 2 classes, got m={m}")
    counts = [0] * m
    for i, label in enumerate(labels):
        if not isinstance(label, numbers.Integral):
            raise ValueError(f"label at position {i} is not an integer: {label!r}")
        label = int(label)
        if not 0 <= label < m:
            raise ValueError(f"label at position {i} out of range [0, {m}): {label}")
        counts[label] += 1
    return VoteHistogram(tuple(counts))


def laplace_inverse_cdf(u: float, b: float) -> float:
    """Quantile function of the Laplace distribution with location 0, scale b.

    Returns the x with CDF(x) = u.  This is the sole noise transform in the
    package: feeding it a seeded uniform stream makes every run replayable.

    Raises ValueError unless 0 < u < 1 and b > 0.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie strictly inside (0, 1), got {u!r}")
    if not b > 0.0:
        raise ValueError(f"scale b must be positive, got {b!r}")
    if u < 0.5:
        return b * math.log(2.0 * u)
    return -b * math.log(2.0 * (1.0 - u))


def _draw_noise(rng: np.random.Generator, b: float, size: int) -> np.ndarray:
    """Vector of Laplace(0, b) draws via the inverse-CDF transform.

    Consumes exactly ``size`` uniforms from ``rng`` in order.  Draws of
    exactly 0.0 (probability 2^-53) are snapped to the smallest positive
    representable uniform instead of rejected, so stream positions never
    depend on draw values.
    """
    u = np.maximum(rng.random(size), _MIN_UNIFORM)
    return np.where(u < 0.5, b * np.log(2.0 * u), -b * np.log(2.0 * (1.0 - u)))


def noisy_argmax(hist: VoteHistogram, params: MechanismParams,
                 rng: np.random.Generator | None = None) -> int:
    """Release the index of the largest noise-perturbed vote count.

    One fresh Laplace(0, 1/gamma) draw is added per class, in class-index
    order.  When ``rng`` is omitted a generator is derived from
    ``params.seed``, making the call a pure function of (hist, params);
    callers answering many queries pass their own per-query stream.

    Ties after perturbation (possible only through finite precision) break
    toward the smallest class index.
    """
    if rng is None:
        rng = derive_rng(params.seed, MECHANISM_NOISE, 0)
    noise = _draw_noise(rng, params.scale, hist.num_classes)
    perturbed = np.asarray(hist.counts, dtype=float) + noise
    return int(np.argmax(perturbed))


def plurality(hist: VoteHistogram) -> int:
    """Deterministic argmax of the raw counts; ties break to the smallest index."""
    return hist.counts.index(max(hist.counts))


def gap(hist: VoteHistogram) -> tuple[int, float]:
    """Vote margin between the top and runner-up classes.

    Returns (absolute gap, gap normalized by the total number of votes).
    A normalized gap of 1.0 means the vote was unanimous.
    """
    top, second = sorted(hist.counts, reverse=True)[:2]
    absolute = top - second
    return absolute, absolute / hist.total
