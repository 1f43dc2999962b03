"""Certified verdicts for the moment/series conditions of the multiple-sum SLLN.

Every check builds the term field over a finite box, sums it, and bounds the
rest with an analytic envelope when one is available (separable families
``product`` and ``power_log``).  Tabulated normalizations or per-index moment
fields have no envelope and yield INCONCLUSIVE unless the caller supplies a
TailStrategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import signal

from .distributions import DistributionSpec
from .lattice import as_index, increment, index_grids, prefix_sums
from .normalization import NormalizationSpec, check_hypotheses, log_floor
from .series import (
    DeltaPowerLogFactor,
    Envelope,
    GeometricPowerLogFactor,
    PowerLogFactor,
    SeriesReport,
    TailStrategy,
    series_sum,
)

__all__ = [
    "ConditionError",
    "default_box",
    "brunk_prohorov_a",
    "equal_moment_terms",
    "check_equal_moment_condition",
    "eq4_terms",
    "check_eq4",
    "alpha_terms",
    "check_alpha_condition",
    "ThreeSeries",
    "three_series",
    "CovarianceSpec",
    "covariance_series",
    "TruncationReport",
    "verify_truncation_bounds",
]


class ConditionError(ValueError):
    pass


def default_box(r: int) -> tuple[int, ...]:
    if r <= 2:
        return (512,) * r
    if r == 3:
        return (64,) * 3
    return (16,) * r


def _box(box, r: int | None) -> tuple[int, ...]:
    if box is None:
        if r is None:
            raise ConditionError("give either a box or a dimension r")
        return default_box(r)
    box = as_index(box)
    if r is not None and len(box) != r:
        raise ConditionError(f"box {box} does not have {r} axes")
    return box


def _require_hypotheses(spec: NormalizationSpec, box) -> None:
    rep = check_hypotheses(spec, box)
    if not rep.monotone:
        raise ConditionError(f"normalization is not monotone: {rep.monotone_violation}")
    if not rep.tends_to_infinity_along_max:
        raise ConditionError("normalization does not tend to infinity under max-convergence")


def _norm_power_factors(spec: NormalizationSpec, r: int, power: float, gain: float = 0.0):
    """Factors of |n|^gain / b_n^power, or None when b has no separable form."""
    exps = spec.exponents
    if exps is None:
        return None
    p, beta = exps
    return tuple(PowerLogFactor(power * p - gain, power * beta) for _ in range(r))


def _auto_tail(tail, strategy_factory):
    if tail is None or tail == "auto":
        return strategy_factory()
    if tail == "none":
        return TailStrategy.none()
    return tail


# Brunk-Prohorov coefficients -------------------------------------------------

def brunk_prohorov_a(moment_field: np.ndarray, q: int) -> np.ndarray:
    """a_n = Delta[ |n|^{q-1} * sum_{k <= n} E Z_k^{2q} ].

    ``moment_field`` holds E Z_k^{2q} over a box.  Integer inputs stay exact
    in int64 while the intermediate products fit.
    """
    if int(q) != q or q < 1:
        raise ConditionError("q must be an integer >= 1")
    q = int(q)
    moments = np.asarray(moment_field)
    if np.any(moments < 0):
        raise ConditionError("moments E Z^{2q} must be nonnegative")
    shape = moments.shape
    cum = prefix_sums(moments)
    size = np.ones(shape, dtype=np.int64)
    for g in index_grids(shape):
        size = size * g
    if cum.dtype.kind == "i":
        bound = float(size.max()) ** (q - 1) * float(np.abs(cum).max())
        if bound < 2.0 ** (62 - len(shape)):  # the increment adds 2^r such terms
            return increment(size ** (q - 1) * cum)
        cum = cum.astype(np.float64)
    return increment(size.astype(np.float64) ** (q - 1) * cum)


# Brunk-Prohorov series and the identical-moment condition -------------------------

def equal_moment_terms(q: int, spec: NormalizationSpec, box) -> np.ndarray:
    """|n|^{q-1} / b_n^{2q} over the box."""
    box = as_index(box)
    size = np.ones(box)
    for g in index_grids(box):
        size = size * g
    return size ** (q - 1) / spec.values(box) ** (2 * q)


def check_equal_moment_condition(q: int, spec: NormalizationSpec, box=None, tail=None,
                                 r: int | None = None) -> SeriesReport:
    """sum_n |n|^{q-1} / b_n^{2q} < oo (identical 2q-th moments)."""
    if int(q) != q or q < 1:
        raise ConditionError("q must be an integer >= 1")
    box = _box(box, r)
    _require_hypotheses(spec, box)

    def strategy():
        factors = _norm_power_factors(spec, len(box), 2 * q, gain=q - 1)
        if factors is None:
            return TailStrategy.none()
        return TailStrategy.exact(Envelope(1.0, factors), note="exact separable envelope, integral test per axis")

    return series_sum(equal_moment_terms(q, spec, box), len(box), box, _auto_tail(tail, strategy))


def eq4_terms(q: int, spec: NormalizationSpec, box, moments=None, mu: float | None = None) -> np.ndarray:
    """a_n / b_n^{2q} with a_n from ``brunk_prohorov_a``."""
    box = as_index(box)
    if moments is None:
        if mu is None:
            raise ConditionError("give a moment field or an identical moment mu")
        moments = np.full(box, float(mu))
    moments = np.asarray(moments)
    if moments.shape != box:
        raise ConditionError(f"moment field shape {moments.shape} differs from box {box}")
    a = brunk_prohorov_a(moments, q)
    return a / spec.values(box) ** (2 * q)


def check_eq4(q: int, spec: NormalizationSpec, box=None, moments=None, mu: float | None = None,
              tail=None, r: int | None = None) -> SeriesReport:
    """sum_n a_n / b_n^{2q} < oo for the Brunk-Prohorov coefficients a_n.

    With identical moments ``mu`` the closed form
    a_n = mu * prod_i (n_i^q - (n_i - 1)^q) gives an exact separable envelope.
    """
    if int(q) != q or q < 1:
        raise ConditionError("q must be an integer >= 1")
    q = int(q)
    if moments is not None:
        box = np.asarray(moments).shape
    box = _box(box, r)
    _require_hypotheses(spec, box)
    terms = eq4_terms(q, spec, box, moments=moments, mu=mu)

    def strategy():
        exps = spec.exponents
        if moments is not None or exps is None:
            return TailStrategy.none()
        p, beta = exps
        factors = tuple(DeltaPowerLogFactor(q, 2 * q * p, 2 * q * beta) for _ in box)
        return TailStrategy.exact(Envelope(float(mu), factors),
                                  note="closed-form a_n, integral test per axis")

    terms = np.maximum(terms, 0.0)  # a_n >= 0 analytically; clears -0.0 round-off
    return series_sum(terms, len(box), box, _auto_tail(tail, strategy))


# alpha-moment condition ---------------------------------------------------------

def alpha_terms(alpha: float, spec: NormalizationSpec, box, moment: float = 1.0,
                moment_exponent: float = 0.0, moment_field=None) -> np.ndarray:
    """E|Z_n|^alpha / b_n^alpha with E|Z_n|^alpha = moment * |n|^moment_exponent or a field."""
    box = as_index(box)
    b = spec.values(box)
    if moment_field is not None:
        m = np.asarray(moment_field, dtype=np.float64)
    else:
        m = np.full(box, float(moment))
        if moment_exponent:
            for g in index_grids(box):
                m = m * g.astype(np.float64) ** moment_exponent
    return m / b**alpha


def check_alpha_condition(alpha: float, spec: NormalizationSpec, box=None, moment: float = 1.0,
                          moment_exponent: float = 0.0, moment_field=None, tail=None,
                          r: int | None = None) -> SeriesReport:
    """sum_n E|Z_n|^alpha / b_n^alpha < oo for 1 <= alpha <= 2."""
    if not 1 <= alpha <= 2:
        raise ConditionError("alpha must lie in [1, 2]")
    if moment_field is not None:
        box = np.asarray(moment_field).shape
    box = _box(box, r)
    _require_hypotheses(spec, box)
    terms = alpha_terms(alpha, spec, box, moment, moment_exponent, moment_field)

    def strategy():
        factors = _norm_power_factors(spec, len(box), alpha, gain=moment_exponent)
        if moment_field is not None or factors is None:
            return TailStrategy.none()
        return TailStrategy.exact(Envelope(float(moment), factors),
                                  note="exact separable envelope, integral test per axis")

    return series_sum(terms, len(box), box, _auto_tail(tail, strategy))


# three series -------------------------------------------------------------------

class ThreeSeries(NamedTuple):
    tail_probability: SeriesReport
    truncated_mean: SeriesReport
    truncated_variance: SeriesReport


def _majorant_order(dist: DistributionSpec) -> float:
    for alpha in (2.0, 1.75, 1.5, 1.25, 1.0):
        if math.isfinite(dist.abs_moment(alpha)):
            return alpha
    raise ConditionError("distribution has no finite moment of order >= 1")


def _tail_min_b(spec: NormalizationSpec, box) -> float:
    # smallest b_n over {n : n not <= box} for a monotone analytic family
    r = len(box)
    return min(spec.eval(tuple(M + 1 if i == j else 1 for j in range(r))) for i, M in enumerate(box))


def three_series(dist: DistributionSpec, spec: NormalizationSpec, box=None,
                 r: int | None = None) -> ThreeSeries:
    """The three series: P(|Z| >= b_n), |E Z^{b_n}| / b_n, Var Z^{b_n} / b_n^2.

    Majorants come from E phi(Z) / phi(b_n) with phi(x) = |x|^alpha, using the
    largest alpha <= 2 with a finite moment.  The variance series also gets a
    minorant c / b_n^2 with c = E[Z^2 1{|Z| < b*}] - (Var Z / b*)^2, where b* is
    the smallest b_n on the tail region.
    """
    if abs(dist.mean) > 1e-12:
        raise ConditionError("three_series needs a centered distribution")
    box = _box(box, r)
    _require_hypotheses(spec, box)
    r = len(box)
    b = spec.values(box)
    alpha = _majorant_order(dist)
    m_alpha = dist.abs_moment(alpha)
    maj_factors = _norm_power_factors(spec, r, alpha)
    majorant = Envelope(m_alpha, maj_factors) if maj_factors else None
    maj_note = f"Markov-type majorant E|Z|^{alpha:g} / b_n^{alpha:g}"

    first = series_sum(dist.tail_prob(b), r, box, TailStrategy(majorant=majorant, note=maj_note))

    if dist.is_symmetric:
        second = series_sum(np.zeros(box), r, box,
                            TailStrategy(support=(0,) * r, note="symmetric law: truncated means vanish"))
    else:
        second = series_sum(np.abs(dist.trunc_mean(b)) / b, r, box,
                            TailStrategy(majorant=majorant, note=maj_note))

    minorant = None
    if spec.exponents is not None and math.isfinite(dist.variance):
        b_star = _tail_min_b(spec, box)
        c = dist.trunc_second(b_star) - (dist.variance / b_star) ** 2
        if c > 0:
            minorant = Envelope(float(c), _norm_power_factors(spec, r, 2.0))
    third = series_sum(dist.trunc_var(b) / b**2, r, box,
                       TailStrategy(majorant=majorant, minorant=minorant, note=maj_note))
    return ThreeSeries(first, second, third)


# stationary covariance series -------------------------------------------------

@dataclass(frozen=True)
class CovarianceSpec:
    """Covariance R(k) = E[Z_{n+k} Z_n] of a wide-sense stationary field.

    kinds: ``white`` (R vanishes off 0), ``geometric`` (R(k) = var * rho^{k_1+...+k_r}),
    ``constant`` (R = c), ``moving_average`` (finite kernel ``weights`` with
    innovation variance ``var``), ``callable`` (``func`` of r index arrays, with
    ``var`` = R(0)).
    """

    kind: str
    var: float = 1.0
    rho: float = 0.0
    weights: np.ndarray | None = None
    func: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("white", "geometric", "constant", "moving_average", "callable"):
            raise ConditionError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "geometric" and not abs(self.rho) < 1:
            raise ConditionError("geometric covariance needs |rho| < 1")
        if self.kind == "moving_average" and self.weights is None:
            raise ConditionError("moving_average covariance needs kernel weights")

    @property
    def r0(self) -> float:
        if self.kind == "moving_average":
            w = np.asarray(self.weights, dtype=np.float64)
            return self.var * float(np.sum(w * w))
        return self.var

    def lag_table(self) -> np.ndarray:
        """R(k) for lags 0 <= k_i < L_i of a moving-average kernel."""
        w = np.asarray(self.weights, dtype=np.float64)
        full = signal.correlate(w, w, mode="full", method="direct")
        return self.var * full[tuple(slice(s - 1, None) for s in w.shape)]

    def values(self, box) -> np.ndarray:
        """R(n) for n in the box (positive lags only)."""
        box = as_index(box)
        grids = index_grids(box)
        if self.kind == "white":
            return np.zeros(box)
        if self.kind == "geometric":
            total = sum(grids)
            return self.var * np.broadcast_to(float(self.rho) ** total.astype(np.float64), box)
        if self.kind == "constant":
            return np.full(box, self.var)
        if self.kind == "callable":
            return np.broadcast_to(np.asarray(self.func(*grids), dtype=np.float64), box).copy()
        table = self.lag_table()
        if table.ndim != len(box):
            raise ConditionError("kernel dimension differs from the box dimension")
        out = np.zeros(box)
        region = tuple(slice(0, min(b, s - 1)) for b, s in zip(box, table.shape))
        src = tuple(slice(1, 1 + reg.stop) for reg in region)
        out[region] = table[src]
        return out


def covariance_series(cov: CovarianceSpec, box=None, tail=None, r: int | None = None) -> SeriesReport:
    """sum_n |R(n)| / |n|^2 * prod_i L(n_i)^2 with L(m) = max(ln m, 1)."""
    box = _box(box, r)
    r = len(box)
    R = cov.values(box)
    if np.any(np.abs(R) > abs(cov.r0) * (1 + 1e-12)):
        raise ConditionError("covariance violates |R(k)| <= R(0)")
    weight = np.ones(box)
    for g in index_grids(box):
        weight = weight * log_floor(g) ** 2 / g.astype(np.float64) ** 2
    terms = np.abs(R) * weight

    def strategy():
        if cov.kind == "white":
            return TailStrategy(support=(0,) * r, note="R vanishes off the origin")
        if cov.kind == "moving_average":
            shape = np.asarray(cov.weights).shape
            return TailStrategy(support=tuple(s - 1 for s in shape),
                                note="moving-average covariance has finite range")
        if cov.kind == "geometric":
            env = Envelope(abs(cov.var), tuple(GeometricPowerLogFactor(cov.rho, 2.0, -2.0) for _ in range(r)))
            return TailStrategy.exact(env, note="geometric majorant per axis")
        if cov.kind == "constant":
            env = Envelope(abs(cov.var), tuple(PowerLogFactor(2.0, -2.0) for _ in range(r)))
            return TailStrategy.exact(env, note="exact separable envelope, integral test per axis")
        return TailStrategy.none()

    return series_sum(terms, r, box, _auto_tail(tail, strategy))


# truncation inequalities --------------------------------------------------------

@dataclass(frozen=True)
class TruncationReport:
    alpha: float
    b: float
    tail: tuple[float, float]
    truncated_mean: tuple[float, float]
    truncated_second: tuple[float, float]

    @property
    def pairs(self) -> tuple[tuple[float, float], ...]:
        return (self.tail, self.truncated_mean, self.truncated_second)

    @property
    def holds(self) -> bool:
        return all(lhs <= rhs * (1 + 1e-9) for lhs, rhs in self.pairs)


def verify_truncation_bounds(dist: DistributionSpec, alpha: float, b: float) -> TruncationReport:
    """Evaluate, for phi(x) = |x|^alpha and a centered X,

        P(|X| >= b)            <= E phi(X) / phi(b)
        |E X 1{|X| < b}|       <= b   E phi(X) / phi(b)
        E X^2 1{|X| < b}       <= b^2 E phi(X) / phi(b)
    """
    if not 1 <= alpha <= 2:
        raise ConditionError("alpha must lie in [1, 2]")
    if b <= 0:
        raise ConditionError("b must be positive")
    if abs(dist.mean) > 1e-12:
        raise ConditionError("truncation bounds need a centered distribution")
    m = dist.abs_moment(alpha)
    if not math.isfinite(m):
        raise ConditionError(f"E|X|^{alpha} is infinite for {dist.kind}")
    ratio = m / b**alpha
    return TruncationReport(
        alpha,
        b,
        (float(dist.tail_prob(b)), ratio),
        (abs(float(dist.trunc_mean(b))), b * ratio),
        (float(dist.trunc_second(b)), b * b * ratio),
    )
