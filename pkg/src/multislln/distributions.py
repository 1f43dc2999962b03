"""Marginal laws with closed-form (or quadrature) moment and truncation oracles.

Truncation follows X^t = X * 1{|X| < t}; tail probabilities are P(|X| >= t).
All ``t``-dependent oracles accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

__all__ = ["DistributionSpec"]

_KINDS = ("normal", "two_point", "uniform", "symmetric_pareto", "constant")


def _double_factorial_odd(j: int) -> int:
    # (j-1)!! for even j, i.e. E U^j for a standard normal U
    return math.prod(range(j - 1, 0, -2)) if j > 0 else 1


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "normal" and self.params[1] <= 0:
            raise ValueError("normal needs sigma > 0")
        if self.kind == "uniform" and not self.params[0] < self.params[1]:
            raise ValueError("uniform needs a < b")
        if self.kind == "symmetric_pareto":
            gamma, scale = self.params
            if gamma <= 1 or scale <= 0:
                raise ValueError("symmetric_pareto needs tail index > 1 and scale > 0")
        if self.kind == "two_point":
            values, probs = self.params
            if len(values) != len(probs) or not values:
                raise ValueError("two_point needs matching values and probabilities")
            if any(p < 0 for p in probs) or not math.isclose(sum(probs), 1.0, abs_tol=1e-12):
                raise ValueError("two_point probabilities must be nonnegative and sum to 1")

    # constructors -----------------------------------------------------------

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0):
        return cls("normal", (float(mu), float(sigma)))

    @classmethod
    def two_point(cls, v: float = 1.0):
        """Symmetric +-v with probability 1/2 each."""
        return cls.discrete([-float(v), float(v)], [0.5, 0.5])

    @classmethod
    def discrete(cls, values: Sequence[float], probs: Sequence[float]):
        pairs = sorted(zip((float(v) for v in values), (float(p) for p in probs)))
        return cls("two_point", (tuple(v for v, _ in pairs), tuple(p for _, p in pairs)))

    @classmethod
    def uniform(cls, a: float, b: float):
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def symmetric_pareto(cls, gamma: float, scale: float = 1.0):
        return cls("symmetric_pareto", (float(gamma), float(scale)))

    @classmethod
    def constant(cls, c: float):
        return cls("constant", (float(c),))

    # basic moments ----------------------------------------------------------

    @property
    def is_symmetric(self) -> bool:
        if self.kind == "normal":
            return self.params[0] == 0.0
        if self.kind == "uniform":
            return self.params[0] == -self.params[1]
        if self.kind == "symmetric_pareto":
            return True
        if self.kind == "constant":
            return self.params[0] == 0.0
        values, probs = self.params
        law = dict(zip(values, probs))
        return all(math.isclose(law.get(-v, 0.0), p, abs_tol=1e-15) for v, p in law.items())

    @property
    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "normal":
            return p[0]
        if k == "uniform":
            return 0.5 * (p[0] + p[1])
        if k == "symmetric_pareto":
            return 0.0
        if k == "constant":
            return p[0]
        return math.fsum(v * q for v, q in zip(*p))

    @property
    def variance(self) -> float:
        k, p = self.kind, self.params
        if k == "normal":
            return p[1] ** 2
        if k == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        if k == "symmetric_pareto":
            gamma, scale = p
            return gamma * scale**2 / (gamma - 2) if gamma > 2 else math.inf
        if k == "constant":
            return 0.0
        m = self.mean
        return math.fsum(q * (v - m) ** 2 for v, q in zip(*p))

    def abs_moment(self, alpha: float) -> float:
        """E|Z|^alpha (inf when it does not exist)."""
        k, p = self.kind, self.params
        if k == "normal":
            mu, sigma = p
            if mu == 0.0:
                return sigma**alpha * 2 ** (alpha / 2) * math.gamma((alpha + 1) / 2) / math.sqrt(math.pi)
            def f(x):
                return abs(x) ** alpha * math.exp(-0.5 * ((x - mu) / sigma) ** 2)
            lo, hi = mu - 40 * sigma, mu + 40 * sigma
            pts = [0.0] if lo < 0 < hi else None
            val, _ = integrate.quad(f, lo, hi, points=pts, epsabs=1e-13, epsrel=1e-12, limit=200)
            return val / (sigma * math.sqrt(2 * math.pi))
        if k == "uniform":
            a, b = p
            def F(x):
                return math.copysign(abs(x) ** (alpha + 1), x) / (alpha + 1)
            return (F(b) - F(a)) / (b - a)
        if k == "symmetric_pareto":
            gamma, scale = p
            return gamma * scale**alpha / (gamma - alpha) if alpha < gamma else math.inf
        if k == "constant":
            return abs(p[0]) ** alpha
        return math.fsum(q * abs(v) ** alpha for v, q in zip(*p))

    def even_moment(self, order: int) -> float:
        """E Z^order for an even positive integer order."""
        if order <= 0 or order % 2:
            raise ValueError("even_moment needs a positive even order")
        k, p = self.kind, self.params
        if k == "normal":
            mu, sigma = p
            return math.fsum(
                math.comb(order, j) * mu ** (order - j) * sigma**j * _double_factorial_odd(j)
                for j in range(0, order + 1, 2)
            )
        if k == "symmetric_pareto" and order >= p[0]:
            return math.inf
        return self.abs_moment(float(order))

    # tails and truncation ---------------------------------------------------

    def tail_prob(self, t):
        """P(|Z| >= t)."""
        t = np.asarray(t, dtype=np.float64)
        k, p = self.kind, self.params
        if k == "normal":
            mu, sigma = p
            out = special.ndtr((-t - mu) / sigma) + special.ndtr((mu - t) / sigma)
            out = np.where(t <= 0, 1.0, np.minimum(out, 1.0))
        elif k == "uniform":
            a, b = p
            inside = np.clip(np.minimum(b, t) - np.maximum(a, -t), 0.0, None)
            out = np.where(t <= 0, 1.0, 1.0 - inside / (b - a))
        elif k == "symmetric_pareto":
            gamma, scale = p
            out = np.where(t <= scale, 1.0, (scale / np.maximum(t, scale)) ** gamma)
        elif k == "constant":
            out = np.where(abs(p[0]) >= t, 1.0, 0.0)
        else:
            out = sum(q * (abs(v) >= t) for v, q in zip(*p))
            out = np.asarray(out, dtype=np.float64) + np.zeros_like(t)
        return out if out.ndim else float(out)

    def _trunc_power(self, t, power: int):
        # E[Z^power * 1{|Z| < t}] for power in {1, 2}
        t = np.asarray(t, dtype=np.float64)
        k, p = self.kind, self.params
        if k == "normal":
            mu, sigma = p
            tt = np.maximum(t, 0.0)
            a = (-tt - mu) / sigma
            b = (tt - mu) / sigma
            dphi = special.ndtr(b) - special.ndtr(a)
            pa = np.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
            pb = np.exp(-0.5 * b * b) / math.sqrt(2 * math.pi)
            if power == 1:
                out = mu * dphi + sigma * (pa - pb)
            else:
                out = mu * mu * dphi + 2 * mu * sigma * (pa - pb) + sigma**2 * (dphi + a * pa - b * pb)
        elif k == "uniform":
            a, b = p
            lo = np.maximum(a, -t)
            hi = np.minimum(b, t)
            hi = np.maximum(hi, lo)
            out = (hi ** (power + 1) - lo ** (power + 1)) / ((power + 1) * (b - a))
        elif k == "symmetric_pareto":
            gamma, scale = p
            if power == 1:
                out = np.zeros_like(t)
            else:
                tt = np.maximum(t, scale)
                if gamma == 2.0:
                    out = 2 * scale**2 * np.log(tt / scale)
                else:
                    out = gamma * scale**gamma * (tt ** (2 - gamma) - scale ** (2 - gamma)) / (2 - gamma)
        elif k == "constant":
            c = p[0]
            out = np.where(abs(c) < t, c**power, 0.0)
        else:
            out = sum(q * v**power * (abs(v) < t) for v, q in zip(*p))
            out = np.asarray(out, dtype=np.float64) + np.zeros_like(t)
        return out if np.ndim(out) else float(out)

    def trunc_mean(self, t):
        """E[Z 1{|Z| < t}]."""
        return self._trunc_power(t, 1)

    def trunc_second(self, t):
        """E[Z^2 1{|Z| < t}]."""
        return self._trunc_power(t, 2)

    def trunc_var(self, t):
        """Var(Z 1{|Z| < t})."""
        m = self.trunc_mean(t)
        out = np.maximum(np.asarray(self.trunc_second(t)) - np.asarray(m) ** 2, 0.0)
        return out if out.ndim else float(out)

    # sampling ---------------------------------------------------------------

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Quantile transform of uniforms in (0, 1)."""
        u = np.asarray(u, dtype=np.float64)
        k, p = self.kind, self.params
        if k == "normal":
            return p[0] + p[1] * special.ndtri(u)
        if k == "uniform":
            return p[0] + (p[1] - p[0]) * u
        if k == "symmetric_pareto":
            gamma, scale = p
            lower = u < 0.5
            w = np.where(lower, 2 * u, 2 * u - 1)
            mag = scale * (1.0 - w) ** (-1.0 / gamma)
            return np.where(lower, -mag, mag)
        if k == "constant":
            return np.full_like(u, p[0])
        values, probs = p
        cum = np.cumsum(probs)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(values) - 1)
        return np.asarray(values)[idx]

    # JSON -------------------------------------------------------------------

    def to_json(self) -> dict:
        k, p = self.kind, self.params
        if k == "normal":
            return {"kind": "normal", "mu": p[0], "sigma": p[1]}
        if k == "uniform":
            return {"kind": "uniform", "a": p[0], "b": p[1]}
        if k == "symmetric_pareto":
            return {"kind": "symmetric_pareto", "gamma": p[0], "scale": p[1]}
        if k == "constant":
            return {"kind": "constant", "c": p[0]}
        return {"kind": "two_point", "values": list(p[0]), "probs": list(p[1])}

    @classmethod
    def from_json(cls, obj: dict) -> "DistributionSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValueError("distribution must be an object with a 'kind' key")
        kind = obj["kind"]
        keys = {
            "normal": {"mu", "sigma"},
            "uniform": {"a", "b"},
            "symmetric_pareto": {"gamma", "scale"},
            "constant": {"c"},
        }
        if kind == "two_point":
            if "v" in obj:
                _only(obj, {"kind", "v"})
                return cls.two_point(float(obj["v"]))
            _only(obj, {"kind", "values", "probs"})
            return cls.discrete(obj["values"], obj["probs"])
        if kind not in keys:
            raise ValueError(f"unknown distribution kind {kind!r}")
        _only(obj, keys[kind] | {"kind"})
        missing = keys[kind] - set(obj)
        if missing:
            raise ValueError(f"{kind} is missing {sorted(missing)}")
        if kind == "normal":
            return cls.normal(obj["mu"], obj["sigma"])
        if kind == "uniform":
            return cls.uniform(obj["a"], obj["b"])
        if kind == "symmetric_pareto":
            return cls.symmetric_pareto(obj["gamma"], obj["scale"])
        return cls.constant(obj["c"])


def _only(obj: dict, allowed: set) -> None:
    extra = set(obj) - allowed
    if extra:
        raise ValueError(f"unexpected keys {sorted(extra)} for {obj.get('kind')}")
