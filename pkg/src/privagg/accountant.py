"""Moments-based privacy accounting for the noisy-max mechanism.

For each query the accountant records upper bounds on the log moment
generating function of the privacy loss,

    alpha(l) = log E[ exp(l * C) ],    C = log(P_d(outcome) / P_d'(outcome)),

at integer orders l drawn from a small grid (default 1..8).  Two bounds are
available per query:

  * data-independent:  alpha(l) <= 2 * gamma^2 * l * (l + 1), valid always;
  * data-dependent:    a tighter bound that applies when the plurality
    winner is overwhelmingly likely, i.e. when an upper bound q on
    Pr[outcome != winner] stays below a gamma-dependent threshold.

Per-query entries take the smaller applicable bound.  Across queries the
moments add, and the final (epsilon, delta) guarantee comes from the tail
bound  delta = min_l exp(alpha_total(l) - l * epsilon), rearranged for
epsilon at a target delta.

The closed-form alternative kept for comparison is the strong-composition
guarantee  epsilon = 4*T*gamma^2 + 2*gamma*sqrt(2*T*ln(1/delta))  over T
queries; the moments route is never worse on the workloads this package
targets and is usually much tighter.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .mechanism import VoteHistogram, plurality

# 1 - e^{2*gamma} * q below this is treated as out of domain for the
# data-dependent bound; cannot trigger for q below the validity threshold
# but guards callers that bypass the threshold check.
_DENOMINATOR_GUARD = 1e-12


class MomentSource(enum.Enum):
    """Which bound produced a per-order moment entry."""

    DATA_INDEPENDENT = "DataIndependent"
    DATA_DEPENDENT = "DataDependent"


class GuaranteeMethod(enum.Enum):
    """Which analysis produced an (epsilon, delta) guarantee."""

    MOMENTS = "Moments"
    STRONG_COMPOSITION = "StrongComposition"


@dataclass(frozen=True, slots=True)
class LambdaGrid:
    """Ascending grid of positive integer moment orders."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise ValueError("lambda grid must be non-empty")
        if any(v < 1 for v in vals):
            raise ValueError(f"lambda grid values must be >= 1, got {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"lambda grid must be strictly increasing, got {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def up_to(cls, lambda_max: int) -> "LambdaGrid":
        """Grid of all integers 1..lambda_max."""
        if lambda_max < 1:
            raise ValueError(f"lambda_max must be >= 1, got {lambda_max}")
        return cls(tuple(range(1, lambda_max + 1)))

    @classmethod
    def default(cls) -> "LambdaGrid":
        return cls.up_to(8)


@dataclass(frozen=True, slots=True)
class MomentEntry:
    order: int
    alpha: float
    source: MomentSource

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"moment order must be >= 1, got {self.order}")
        if not self.alpha >= 0.0:
            raise ValueError(f"moment bound must be non-negative, got {self.alpha!r}")


@dataclass(frozen=True, slots=True)
class QueryMoment:
    """Per-query moment bounds with provenance.

    ``q_bound`` is the upper bound on Pr[outcome != plurality winner] used
    to decide whether the data-dependent bound applied; each entry records
    which bound won at its order.
    """

    query_id: str
    gamma: float
    q_bound: float
    entries: tuple[MomentEntry, ...]

    def __post_init__(self):
        if not 0.0 <= self.q_bound <= 1.0:
            raise ValueError(f"q_bound must lie in [0, 1], got {self.q_bound!r}")
        if not self.entries:
            raise ValueError("QueryMoment needs at least one entry")

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(e.order for e in self.entries)

    def alpha(self, order: int) -> float:
        for e in self.entries:
            if e.order == order:
                return e.alpha
        raise KeyError(f"no moment recorded at order {order}")


@dataclass
class PrivacyLedger:
    """Append-only log of per-query moments; the composition source of truth.

    Metadata pins the mechanism configuration: one gamma, one lambda grid,
    one master seed per ledger.  Appends with a mismatched gamma or grid
    are rejected so composition never silently mixes configurations.
    """

    gamma: float
    lambda_grid: LambdaGrid
    seed: int = 0
    _entries: list[QueryMoment] = field(default_factory=list, repr=False)

    def append(self, moment: QueryMoment) -> None:
        if moment.gamma != self.gamma:
            raise ValueError(
                f"ledger gamma is {self.gamma}, entry has gamma {moment.gamma}")
        if moment.orders != self.lambda_grid.values:
            raise ValueError(
                f"ledger grid is {self.lambda_grid.values}, entry has {moment.orders}")
        self._entries.append(moment)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[QueryMoment]:
        return iter(tuple(self._entries))


@dataclass(frozen=True, slots=True)
class Guarantee:
    """An (epsilon, delta) differential-privacy guarantee.

    ``argmin_lambda`` is the grid order achieving the tail-bound minimum
    (None for the strong-composition method and for the zero-query special
    case, where no order is selected).
    """

    epsilon: float
    delta: float
    method: GuaranteeMethod
    argmin_lambda: int | None = None

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie strictly inside (0, 1), got {self.delta!r}")


def data_independent_moment(gamma: float, order: int) -> float:
    """Moment bound 2 * gamma^2 * l * (l + 1), valid for every query.

    Defined at order 0 as well (returning 0) for convenience in tests.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    return 2.0 * gamma * gamma * order * (order + 1)


def q_threshold(gamma: float) -> float:
    """Validity boundary (e^{2g} - 1)/(e^{4g} - 1) for the data-dependent bound.

    The data-dependent bound applies only to queries whose q stays strictly
    below this value.  Tends to 1/2 as gamma -> 0 and falls toward 0 for
    large gamma.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    return math.expm1(2.0 * gamma) / math.expm1(4.0 * gamma)


def q_upper_bound(hist: VoteHistogram, gamma: float) -> float:
    """Upper bound on Pr[noisy argmax != plurality winner].

    With winner j* and per-class deficits d_j = counts[j*] - counts[j], the
    bound is  sum_{j != j*} (2 + gamma*d_j) / (4 * exp(gamma*d_j)),  clamped
    to 1 (the raw sum exceeds 1 for flat histograms).
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    winner = plurality(hist)
    top = hist.counts[winner]
    raw = 0.0
    for j, c in enumerate(hist.counts):
        if j == winner:
            continue
        d = gamma * (top - c)
        raw += (2.0 + d) / (4.0 * math.exp(d))
    return min(1.0, raw)


def data_dependent_moment(q: float, gamma: float, order: int) -> float:
    """Quorum-sensitive moment bound, valid for q below q_threshold(gamma).

        alpha(l) <= log( (1-q) * ((1-q) / (1 - e^{2g} q))^l + q * e^{2g*l} )

    Evaluated in log space via logaddexp/log1p so small q loses no
    precision.  Non-decreasing in q over its domain.

    Raises ValueError when q >= q_threshold(gamma) (callers must fall back
    to the data-independent bound) or when the denominator 1 - e^{2g} q is
    too close to zero to trust.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    threshold = q_threshold(gamma)
    if q >= threshold:
        raise ValueError(
            f"data-dependent bound needs q < {threshold:.6g} at gamma={gamma:.6g}, "
            f"got q={q:.6g}; use the data-independent bound instead")
    if q == 0.0:
        return 0.0
    denom = -math.expm1(2.0 * gamma + math.log(q))  # 1 - e^{2g} * q
    if denom < _DENOMINATOR_GUARD:
        raise ValueError(
            f"1 - e^(2*gamma)*q = {denom:.3g} is below the stability guard; "
            "treat this q as out of domain")
    log_first = (order + 1) * math.log1p(-q) - order * math.log(denom)
    log_second = math.log(q) + 2.0 * gamma * order
    alpha = _log_add(log_first, log_second)
    # The bound is >= 0 exactly; chop float dust from the cancellation at q ~ 0.
    return max(0.0, alpha)


def _log_add(logx: float, logy: float) -> float:
    """log(exp(logx) + exp(logy)) without leaving log space."""
    a, b = min(logx, logy), max(logx, logy)
    if a == -math.inf:
        return b
    return b + math.log1p(math.exp(a - b))


def per_query_moment(hist: VoteHistogram, gamma: float, grid: LambdaGrid,
                     query_id: str = "") -> QueryMoment:
    """Best available moment bound for one query at every grid order.

    Computes q from the raw (un-noised) histogram, takes the smaller of the
    data-independent and (when q is below threshold) data-dependent bounds
    at each order, and records which one won.  Because q depends on the
    actual votes, the resulting entries — and any epsilon derived from them
    — are themselves data-dependent quantities.
    """
    qb = q_upper_bound(hist, gamma)
    usable = qb < q_threshold(gamma)
    entries = []
    for order in grid.values:
        indep = data_independent_moment(gamma, order)
        alpha, source = indep, MomentSource.DATA_INDEPENDENT
        if usable:
            try:
                dep = data_dependent_moment(qb, gamma, order)
            except ValueError:
                pass
            else:
                if dep < indep:
                    alpha, source = dep, MomentSource.DATA_DEPENDENT
        entries.append(MomentEntry(order=order, alpha=alpha, source=source))
    return QueryMoment(query_id=query_id, gamma=gamma, q_bound=qb,
                       entries=tuple(entries))


def compose(ledger: PrivacyLedger) -> dict[int, float]:
    """Sum the per-query moments order-wise: alpha_total(l) = sum_i alpha_i(l).

    Plain addition is exact composition for adaptive mechanisms; no other
    aggregation is applied.  An empty ledger composes to all zeros.
    """
    totals = {order: 0.0 for order in ledger.lambda_grid.values}
    for moment in ledger:
        if moment.orders != ledger.lambda_grid.values:
            raise ValueError(
                f"ledger grid is {ledger.lambda_grid.values}, "
                f"entry {moment.query_id!r} has {moment.orders}")
        for entry in moment.entries:
            totals[entry.order] += entry.alpha
    return totals


def eps_for_delta(totals: Mapping[int, float], delta: float) -> Guarantee:
    """Smallest epsilon the tail bound certifies at failure probability delta.

        epsilon = min_l ( alpha_total(l) + ln(1/delta) ) / l

    Note this is a bound artifact: it stays positive even for all-zero
    totals (ln(1/delta)/l_max).  Zero-query ledgers should be special-cased
    by the caller (see ``moments_guarantee``).
    """
    if not totals:
        raise ValueError("totals must be non-empty")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie strictly inside (0, 1), got {delta!r}")
    log_inv_delta = -math.log(delta)
    best_eps, best_order = math.inf, None
    for order in sorted(totals):
        alpha = totals[order]
        if alpha < 0.0:
            raise ValueError(f"alpha_total({order}) is negative: {alpha!r}")
        eps = (alpha + log_inv_delta) / order
        if eps < best_eps:
            best_eps, best_order = eps, order
    return Guarantee(epsilon=best_eps, delta=delta,
                     method=GuaranteeMethod.MOMENTS, argmin_lambda=best_order)


def delta_for_eps(totals: Mapping[int, float], epsilon: float) -> float:
    """Tail-bound failure probability at a target epsilon.

        delta = min_l exp( alpha_total(l) - l * epsilon ),  clamped to <= 1.
    """
    if not totals:
        raise ValueError("totals must be non-empty")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon!r}")
    best = min(totals[order] - order * epsilon for order in totals)
    if best >= 0.0:
        return 1.0
    return math.exp(best)


def strong_composition_eps(gamma: float, num_queries: int, delta: float) -> Guarantee:
    """Closed-form strong-composition guarantee over ``num_queries`` queries.

        epsilon = 4*T*gamma^2 + 2*gamma*sqrt(2*T*ln(1/delta))

    Kept as the looser baseline the moments route is compared against.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    if num_queries < 0:
        raise ValueError(f"num_queries must be >= 0, got {num_queries}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie strictly inside (0, 1), got {delta!r}")
    t = float(num_queries)
    eps = 4.0 * t * gamma * gamma + 2.0 * gamma * math.sqrt(2.0 * t * math.log(1.0 / delta))
    return Guarantee(epsilon=eps, delta=delta,
                     method=GuaranteeMethod.STRONG_COMPOSITION, argmin_lambda=None)


def moments_guarantee(ledger: PrivacyLedger, delta: float) -> Guarantee:
    """Composed moments guarantee for a ledger.

    A ledger with zero queries reveals nothing, so epsilon is reported as 0
    by special case rather than the tail bound's ln(1/delta)/l_max artifact.
    """
    if len(ledger) == 0:
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie strictly inside (0, 1), got {delta!r}")
        return Guarantee(epsilon=0.0, delta=delta,
                         method=GuaranteeMethod.MOMENTS, argmin_lambda=None)
    return eps_for_delta(compose(ledger), delta)
