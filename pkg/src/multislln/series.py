"""Certified summation of nonnegative multiple series.

A finite computation sums the terms over a box; the omitted tail
{n : n not <= box} is bracketed by separable envelopes c * prod_i f_i(n_i)
whose one-dimensional tails are bounded analytically (integral test for
power-log factors, geometric series for exponential factors).  A verdict is
CONVERGES only with a finite upper tail bound and DIVERGES only with a
divergent minorant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .lattice import as_index, index_grids

__all__ = [
    "Verdict",
    "SeriesReport",
    "SeriesError",
    "PowerLogFactor",
    "DeltaPowerLogFactor",
    "GeometricPowerLogFactor",
    "Envelope",
    "TailStrategy",
    "powerlog_tail",
    "series_sum",
]

# relative padding applied to every analytic tail bound
_PAD = 1e-12
# largest index summed explicitly before an integral test takes over
_EXPLICIT_LIMIT = 10**6


class SeriesError(ValueError):
    pass


class Verdict(str, enum.Enum):
    CONVERGES = "CONVERGES"
    DIVERGES = "DIVERGES"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class SeriesReport:
    partial_sum: float
    tail_lower: float
    tail_upper: float
    verdict: Verdict
    certificate: str

    def __post_init__(self):
        if self.tail_lower > self.tail_upper:
            raise SeriesError("tail_lower exceeds tail_upper")
        if self.verdict is Verdict.CONVERGES and not math.isfinite(self.tail_upper):
            raise SeriesError("CONVERGES requires a finite tail upper bound")
        if self.verdict is Verdict.DIVERGES and self.tail_lower != math.inf:
            raise SeriesError("DIVERGES requires an infinite tail lower bound")

    @property
    def total_lower(self) -> float:
        return self.partial_sum + self.tail_lower

    @property
    def total_upper(self) -> float:
        return self.partial_sum + self.tail_upper

    def to_json(self) -> dict:
        return {
            "partial_sum": self.partial_sum,
            "tail_lower": self.tail_lower,
            "tail_upper": self.tail_upper,
            "verdict": self.verdict.value,
            "certificate": self.certificate,
        }


def _powlog(s: float, t: float) -> str:
    parts = []
    if s:
        parts.append(f"m^{-s:g}")
    if t:
        parts.append(f"L(m)^{-t:g}")
    return " ".join(parts) or "1"


def _log_floor(m):
    return np.maximum(np.log(np.asarray(m, dtype=np.float64)), 1.0)


def _integral(a: float, s: float, t: float) -> float:
    """int_a^oo x^{-s} (ln x)^{-t} dx for a > 1 (inf when divergent)."""
    la = math.log(a)
    if s > 1:
        with mpmath.workdps(30):
            val = (s - 1) ** (t - 1) * mpmath.gammainc(1 - t, (s - 1) * la)
        return float(val)
    if s == 1 and t > 1:
        return la ** (1 - t) / (t - 1)
    return math.inf


def powerlog_tail(M: int, s: float, t: float) -> tuple[float, float]:
    """Bracket for sum_{m > M} m^{-s} L(m)^{-t}, L(m) = max(ln m, 1).

    Terms up to the point where L = ln and the summand is nonincreasing are
    added explicitly; the rest is bracketed by int_{M0+1}^oo and int_{M0}^oo.
    """
    if s < 0 or (s == 0 and t <= 0):
        # terms do not tend to zero
        return math.inf, math.inf
    M0 = max(M, 3)
    if s > 0 and s * math.log(M0) + t < 0:
        M0 = max(M0, math.ceil(math.exp(-t / s)) + 1)
    if M0 - M > _EXPLICIT_LIMIT:
        return 0.0, math.inf
    head = 0.0
    if M0 > M:
        m = np.arange(M + 1, M0 + 1, dtype=np.float64)
        head = math.fsum(m ** (-s) * _log_floor(m) ** (-t))
    lo = _integral(M0 + 1, s, t)
    hi = _integral(M0, s, t)
    return head + lo * (1 - _PAD), head + hi * (1 + _PAD)


@dataclass(frozen=True)
class PowerLogFactor:
    """f(m) = m^{-s} L(m)^{-t}."""

    s: float
    t: float = 0.0

    def values(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        return m ** (-self.s) * _log_floor(m) ** (-self.t)

    def tail(self, M: int) -> tuple[float, float]:
        return powerlog_tail(M, self.s, self.t)

    def describe(self) -> str:
        return _powlog(self.s, self.t)


@dataclass(frozen=True)
class DeltaPowerLogFactor:
    """f(m) = (m^q - (m-1)^q) m^{-s} L(m)^{-t}.

    Uses q (m-1)^{q-1} <= m^q - (m-1)^q <= q m^{q-1} on the tail.
    """

    q: int
    s: float
    t: float = 0.0

    def values(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        return (m**self.q - (m - 1) ** self.q) * m ** (-self.s) * _log_floor(m) ** (-self.t)

    def tail(self, M: int) -> tuple[float, float]:
        q = self.q
        lo, hi = powerlog_tail(M, self.s - q + 1, self.t)
        shrink = (M / (M + 1)) ** (q - 1)
        return q * shrink * lo, q * hi

    def describe(self) -> str:
        return f"(m^{self.q}-(m-1)^{self.q}) " + _powlog(self.s, self.t)


@dataclass(frozen=True)
class GeometricPowerLogFactor:
    """f(m) = |rho|^m m^{-s} L(m)^{-t}, with |rho| < 1."""

    rho: float
    s: float = 0.0
    t: float = 0.0

    def values(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        return abs(self.rho) ** m * m ** (-self.s) * _log_floor(m) ** (-self.t)

    def tail(self, M: int) -> tuple[float, float]:
        r = abs(self.rho)
        if r == 0:
            return 0.0, 0.0
        if r >= 1:
            return math.inf, math.inf
        first = float(self.values(np.array([M + 1]))[0])
        M0 = max(M + 1, 3)
        # m^{-s} L^{-t} is nonincreasing beyond M0 when s ln m + t >= 0 there
        if self.s < 0 or self.s * math.log(M0) + self.t < 0:
            return first, math.inf
        head = 0.0
        if M0 > M + 1:
            head = math.fsum(self.values(np.arange(M + 1, M0, dtype=np.float64)))
        env = float(np.asarray(M0, dtype=np.float64) ** (-self.s) * _log_floor(M0) ** (-self.t))
        hi = head + env * r**M0 / (1 - r)
        return first * (1 - _PAD), hi * (1 + _PAD)

    def describe(self) -> str:
        return f"{abs(self.rho):g}^m " + _powlog(self.s, self.t)


@dataclass(frozen=True)
class Envelope:
    """c * prod_i f_i(n_i), claimed to bound the term on the tail region."""

    coef: float
    factors: tuple

    def values(self, shape: Sequence[int]) -> np.ndarray:
        out = np.full(tuple(shape), float(self.coef))
        for f, g in zip(self.factors, index_grids(shape)):
            out = out * f.values(g)
        return out

    def tail_bounds(self, box: Sequence[int]) -> tuple[float, float]:
        """Bracket of sum of the envelope over {n : n not <= box}."""
        if self.coef == 0:
            return 0.0, 0.0
        heads = [math.fsum(f.values(np.arange(1, M + 1))) for f, M in zip(self.factors, box)]
        tails = [f.tail(M) for f, M in zip(self.factors, box)]
        lo = _outside_sum(heads, [t[0] for t in tails])
        hi = _outside_sum(heads, [t[1] for t in tails])
        return self.coef * lo, self.coef * hi

    def describe(self) -> str:
        return f"{self.coef:g} * " + " * ".join(f.describe() for f in self.factors)


def _mul(a: float, b: float) -> float:
    return 0.0 if a == 0 or b == 0 else a * b


def _outside_sum(heads: list[float], tails: list[float]) -> float:
    # prod(H_i + T_i) - prod(H_i), expanded so no cancellation occurs
    inner = 1.0
    outside = 0.0
    for h, t in zip(heads, tails):
        outside = _mul(outside, h + t) + _mul(inner, t)
        inner = inner * h
    return outside


@dataclass(frozen=True)
class TailStrategy:
    """How the omitted tail is bounded.

    ``majorant``/``minorant`` are envelopes valid on the tail region.
    ``support`` declares that terms vanish outside {n <= support}.
    ``divergence_bound``: with no minorant, a partial sum exceeding this bound
    certifies divergence (the caller asserts the series total would not
    exceed it if convergent).
    """

    majorant: Envelope | None = None
    minorant: Envelope | None = None
    support: tuple | None = None
    divergence_bound: float | None = None
    note: str = ""

    @classmethod
    def none(cls, divergence_bound: float | None = None) -> "TailStrategy":
        return cls(divergence_bound=divergence_bound)

    @classmethod
    def exact(cls, envelope: Envelope, note: str = "") -> "TailStrategy":
        return cls(majorant=envelope, minorant=envelope, note=note)


def series_sum(
    term: Callable[..., np.ndarray] | np.ndarray,
    r: int,
    box: Sequence[int],
    tail: TailStrategy | None = None,
) -> SeriesReport:
    """Sum a nonnegative r-fold series over ``box`` and certify the rest.

    ``term`` is either an array of term values over the box or a callable
    taking r broadcastable 1-based index arrays.
    """
    box = as_index(box)
    if len(box) != r:
        raise SeriesError(f"box {box} does not have {r} axes")
    tail = tail or TailStrategy()
    values = np.asarray(term(*index_grids(box)) if callable(term) else term, dtype=np.float64)
    values = np.broadcast_to(values, box)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0] + 1
        raise SeriesError(f"non-finite term at {tuple(int(c) for c in bad)}")
    if np.any(values < 0):
        bad = np.argwhere(values < 0)[0] + 1
        raise SeriesError(f"negative term at {tuple(int(c) for c in bad)}")
    partial = math.fsum(values.ravel())

    if tail.support is not None and all(m >= s for m, s in zip(box, tail.support)):
        return SeriesReport(partial, 0.0, 0.0, Verdict.CONVERGES,
                            f"terms vanish outside the box {tuple(tail.support)}")

    lo, hi = 0.0, math.inf
    notes = []
    if tail.majorant is not None:
        _, hi = tail.majorant.tail_bounds(box)
        notes.append(f"majorant {tail.majorant.describe()}")
    if tail.minorant is not None:
        lo, _ = tail.minorant.tail_bounds(box)
        if tail.minorant is not tail.majorant:
            notes.append(f"minorant {tail.minorant.describe()}")
    if tail.divergence_bound is not None and partial > tail.divergence_bound:
        lo = math.inf
        notes.append(f"partial sum exceeds the declared bound {tail.divergence_bound:g}")
    if tail.note:
        notes.insert(0, tail.note)
    if lo == math.inf:
        hi = math.inf
        verdict = Verdict.DIVERGES
    elif math.isfinite(hi):
        verdict = Verdict.CONVERGES
    else:
        verdict = Verdict.INCONCLUSIVE
    if lo > hi:
        # inconsistent envelopes mean a caller bug, not a mathematical fact
        raise SeriesError(f"minorant tail {lo} exceeds majorant tail {hi}")
    cert = "; ".join(notes) if notes else "no tail information"
    return SeriesReport(partial, lo, hi, verdict, cert)
