"""Independent ground truth for the mechanism and the accountant.

Everything here recomputes, from first principles and at desk scale only,
quantities the rest of the package bounds analytically:

  * ``outcome_distribution`` — exact per-class win probabilities of the
    noisy argmax, by piecewise adaptive quadrature;
  * ``mc_outcome_frequencies`` — the same distribution by seeded sampling,
    used to cross-check the quadrature;
  * ``enumerate_neighbors`` — every histogram reachable by changing one
    training example of one teacher;
  * ``exact_moment`` / ``empirical_eps`` — the privacy-loss moment and
    worst-case log-ratio computed exactly from the outcome distributions.

None of these functions share code with the bounds they audit; that is the
point.  Sizes are guarded (m <= 16, n <= 10^4) and fail loudly.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .mechanism import VoteHistogram, _draw_noise
from .seeding import derive_rng, MECHANISM_NOISE

MAX_CLASSES = 16
MAX_TEACHERS = 10_000

# Laplace tails beyond 40 scale units carry mass < e^-40; integrating over
# [min count - 40/gamma, max count + 40/gamma] keeps the truncation error
# far below the quadrature tolerance.
_TAIL_SCALE_UNITS = 40.0

# Requested absolute / relative tolerance per class integral.  Relative
# accuracy matters: moment and log-ratio checks divide probabilities that
# can be astronomically small.
_QUAD_EPSABS = 1e-13
_QUAD_EPSREL = 1e-10

# Certified resolution of quadrature results; comparisons of quadrature
# output against analytic bounds should allow this much slack (for flat
# two-class histograms the q bound is exactly tight, so infinite-precision
# equality meets finite-precision integration).
QUADRATURE_TOLERANCE = 1e-9

_MC_CHUNK = 200_000


class UnsupportedSizeError(ValueError):
    """Histogram too large for the desk-scale quadrature oracle."""


@dataclass(frozen=True, slots=True)
class OutcomeDistribution:
    """Per-class probabilities that the noisy argmax returns each class."""

    probs: tuple[float, ...]

    def __post_init__(self):
        for j, p in enumerate(self.probs):
            if p < -1e-12 or p > 1.0 + 1e-12:
                raise ValueError(f"probability for class {j} outside [0, 1]: {p!r}")
        total = sum(self.probs)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within 1e-9")
        object.__setattr__(self, "probs", tuple(max(0.0, float(p)) for p in self.probs))


@dataclass(frozen=True, slots=True)
class AdjacentPair:
    """Two histograms induced by datasets differing in one training example.

    One example changing for one teacher moves that teacher's vote, so the
    count vectors differ by at most 1 in at most two coordinates and the
    totals differ by at most 1.
    """

    d: VoteHistogram
    d_prime: VoteHistogram

    def __post_init__(self):
        a, b = self.d, self.d_prime
        if a.num_classes != b.num_classes:
            raise ValueError("adjacent histograms must share the class count")
        diffs = [y - x for x, y in zip(a.counts, b.counts)]
        if any(abs(d) > 1 for d in diffs):
            raise ValueError(f"counts differ by more than 1 in a coordinate: {diffs}")
        if sum(1 for d in diffs if d != 0) > 2:
            raise ValueError(f"counts differ in more than two coordinates: {diffs}")
        if abs(a.total - b.total) > 1:
            raise ValueError(f"totals differ by more than 1: {a.total} vs {b.total}")


def _check_size(hist: VoteHistogram) -> None:
    if hist.num_classes > MAX_CLASSES:
        raise UnsupportedSizeError(
            f"quadrature oracle supports m <= {MAX_CLASSES}, got {hist.num_classes}")
    if hist.total > MAX_TEACHERS:
        raise UnsupportedSizeError(
            f"quadrature oracle supports n <= {MAX_TEACHERS}, got {hist.total}")


@functools.lru_cache(maxsize=4096)
def _outcome_probs(counts: tuple[int, ...], gamma: float) -> tuple[float, ...]:
    """Win probability of every class, one adaptive quadrature per class.

    Class j wins exactly when its perturbed count tops the rest, so

        P(j) = integral  pdf(t - n_j) * prod_{k != j} cdf(t - n_k)  dt

    with Laplace pdf/cdf of scale b = 1/gamma.  The integrand has kinks at
    every distinct count, which are passed to the integrator as explicit
    breakpoints; the window truncates the tails 40 scale units beyond the
    extreme counts.
    """
    b = 1.0 / gamma
    values = [float(c) for c in counts]
    lo = min(values) - _TAIL_SCALE_UNITS * b
    hi = max(values) + _TAIL_SCALE_UNITS * b
    kinks = sorted(set(values))
    exp = math.exp
    probs = []
    for j, nj in enumerate(values):
        others = [nk for k, nk in enumerate(values) if k != j]

        def integrand(t, nj=nj, others=others, b=b):
            v = exp(-abs(t - nj) / b) / (2.0 * b)
            for nk in others:
                y = t - nk
                v *= 0.5 * exp(y / b) if y < 0.0 else 1.0 - 0.5 * exp(-y / b)
            return v

        value, _ = quad(integrand, lo, hi, points=kinks, limit=200,
                        epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL)
        probs.append(max(0.0, value))
    return tuple(probs)


def outcome_distribution(hist: VoteHistogram, gamma: float) -> OutcomeDistribution:
    """Exact noisy-argmax outcome distribution for one histogram.

    Raises UnsupportedSizeError beyond m = 16 classes or n = 10^4 votes.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    _check_size(hist)
    return OutcomeDistribution(_outcome_probs(hist.counts, float(gamma)))


def mc_outcome_frequencies(hist: VoteHistogram, gamma: float, trials: int,
                           seed: int = 0) -> OutcomeDistribution:
    """Empirical outcome frequencies over seeded noisy-argmax trials.

    Consumes the uniform stream exactly as ``trials`` sequential
    ``noisy_argmax`` calls would (one draw per class in class order), but
    vectorized in chunks; ``trials=1`` therefore reproduces a single
    mechanism invocation for the same seed.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    m = hist.num_classes
    counts_row = np.asarray(hist.counts, dtype=float)
    rng = derive_rng(seed, MECHANISM_NOISE, 0)
    wins = np.zeros(m, dtype=np.int64)
    remaining = trials
    while remaining > 0:
        chunk = min(remaining, _MC_CHUNK)
        noise = _draw_noise(rng, 1.0 / gamma, chunk * m).reshape(chunk, m)
        winners = np.argmax(counts_row + noise, axis=1)
        wins += np.bincount(winners, minlength=m)
        remaining -= chunk
    return OutcomeDistribution(tuple(wins / trials))


def enumerate_neighbors(hist: VoteHistogram) -> list[AdjacentPair]:
    """All adjacent histograms, paired with the original.

    Covers both shapes a one-example change can induce: a vote moving
    between two classes (the changed teacher flips its prediction) and a
    single class gaining or losing a vote.  Results are deduplicated and
    deterministically ordered; variants violating histogram invariants
    (e.g. dropping the last vote) are excluded.
    """
    counts = hist.counts
    m = len(counts)
    seen: set[tuple[int, ...]] = set()
    pairs: list[AdjacentPair] = []

    def emit(candidate: tuple[int, ...]) -> None:
        if candidate in seen:
            return
        seen.add(candidate)
        try:
            neighbor = VoteHistogram(candidate)
        except ValueError:
            return
        pairs.append(AdjacentPair(d=hist, d_prime=neighbor))

    for j in range(m):
        if counts[j] < 1:
            continue
        for k in range(m):
            if k == j:
                continue
            moved = list(counts)
            moved[j] -= 1
            moved[k] += 1
            emit(tuple(moved))
    for j in range(m):
        bumped = list(counts)
        bumped[j] += 1
        emit(tuple(bumped))
    for j in range(m):
        if counts[j] < 1:
            continue
        dropped = list(counts)
        dropped[j] -= 1
        emit(tuple(dropped))
    return pairs


def exact_moment(pair: AdjacentPair, gamma: float, order: int) -> float:
    """Privacy-loss moment  log sum_o P_d(o)^(l+1) / P_d'(o)^l,  exactly.

    Both outcome distributions come from the quadrature; the sum is taken
    in log space.  Outcomes with zero probability under d contribute
    nothing; a zero under d' with positive mass under d would make the
    moment infinite (impossible for Laplace noise at supported sizes, so
    +inf here signals an internal error).
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    p = outcome_distribution(pair.d, gamma).probs
    q = outcome_distribution(pair.d_prime, gamma).probs
    log_terms = []
    for pj, qj in zip(p, q):
        if pj == 0.0:
            continue
        if qj == 0.0:
            return math.inf
        log_terms.append((order + 1) * math.log(pj) - order * math.log(qj))
    peak = max(log_terms)
    return peak + math.log(sum(math.exp(t - peak) for t in log_terms))


def empirical_eps(pair: AdjacentPair, gamma: float) -> float:
    """Worst-case |log P_d(o) / P_d'(o)| over outcomes — the realized epsilon.

    Outcomes whose probability underflows to zero under both histograms are
    skipped; one-sided zeros yield +inf (an internal error at supported
    sizes, as for ``exact_moment``).
    """
    p = outcome_distribution(pair.d, gamma).probs
    q = outcome_distribution(pair.d_prime, gamma).probs
    worst = 0.0
    for pj, qj in zip(p, q):
        if pj == 0.0 and qj == 0.0:
            continue
        if pj == 0.0 or qj == 0.0:
            return math.inf
        worst = max(worst, abs(math.log(pj) - math.log(qj)))
    return worst
