"""Reproducible random fields and Monte Carlo diagnostics for the multi-index SLLN.

Randomness is counter-based: the uniform attached to lattice point k in
replicate ``rep`` is a hash of (seed, rep, stream, k_1, ..., k_r).  A value
therefore does not depend on the box it is generated in or on the order in
which replicates are processed.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import DistributionSpec
from .lattice import DEFAULT_MAX_POINTS, FieldError, as_index, index_grids, prefix_sums, shell_labels
from .normalization import NormalizationSpec

__all__ = [
    "CenterMode",
    "FieldGenSpec",
    "ShellRow",
    "ShellStats",
    "counter_uniforms",
    "gen_field",
    "slln_diagnostic",
    "maximal_ratio",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps modulo 2^64
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def counter_uniforms(seed: int, rep: int, stream: int, coords: Sequence[np.ndarray]) -> np.ndarray:
    """Uniforms in (0, 1), one per lattice point of the broadcast of ``coords``."""
    with np.errstate(over="ignore"):
        key = np.array([seed & _MASK64], dtype=np.uint64)
        key = _mix(key + _GOLDEN)
        key = _mix(key ^ np.uint64(rep & _MASK64))
        key = _mix(key ^ (np.uint64(stream) * _GOLDEN))
        h = key
        for c in coords:
            h = _mix(h + np.asarray(c, dtype=np.uint64) * _GOLDEN)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class CenterMode(str, enum.Enum):
    ANALYTIC_MEAN = "analytic_mean"
    NONE = "none"


@dataclass(frozen=True)
class FieldGenSpec:
    """How to generate Z over a box.

    ``iid``: Z_k = dist quantile of a per-index uniform.
    ``ortho_martingale``: Z_n = prod_i xi^(i)_{n_i} from r independent centered
    per-axis sequences (``axis_dists``); a multiparameter martingale-difference array.
    ``moving_average``: Z_n = sum_l w_l eps_{n+l} over the kernel lag box, with
    i.i.d. innovations ``dist``.
    """

    kind: str
    box: tuple
    seed: int
    dist: DistributionSpec | None = None
    axis_dists: tuple = ()
    weights: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "box", as_index(self.box))
        if self.kind not in ("iid", "ortho_martingale", "moving_average"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == "ortho_martingale":
            if len(self.axis_dists) != len(self.box):
                raise ValueError("ortho_martingale needs one distribution per axis")
            if any(abs(d.mean) > 1e-12 for d in self.axis_dists):
                raise ValueError("ortho_martingale axis distributions must be centered")
        elif self.dist is None:
            raise ValueError(f"{self.kind} needs a distribution")
        if self.kind == "moving_average":
            w = np.asarray(self.weights, dtype=np.float64)
            if w.ndim != len(self.box):
                raise ValueError("kernel dimension differs from the box dimension")
            object.__setattr__(self, "weights", w)

    @property
    def r(self) -> int:
        return len(self.box)

    def mean(self) -> float:
        """E Z_n (the same at every n for all three constructions)."""
        if self.kind == "iid":
            return self.dist.mean
        if self.kind == "ortho_martingale":
            return 0.0
        return self.dist.mean * float(self.weights.sum())

    def even_moment(self, order: int) -> float:
        """E Z_n^order for even order."""
        if self.kind == "iid":
            return self.dist.even_moment(order)
        if self.kind == "ortho_martingale":
            return math.prod(d.even_moment(order) for d in self.axis_dists)
        w = self.weights
        if order == 2 and self.dist.mean == 0:
            return self.dist.variance * float(np.sum(w * w))
        if self.dist.kind == "normal":
            mu, sigma = self.dist.params
            return DistributionSpec.normal(mu * float(w.sum()), sigma * math.sqrt(float(np.sum(w * w)))).even_moment(order)
        raise ValueError("moving-average moments beyond order 2 need normal innovations")

    def with_box(self, box) -> "FieldGenSpec":
        return FieldGenSpec(self.kind, tuple(box), self.seed, self.dist, self.axis_dists, self.weights)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "box": list(self.box), "seed": self.seed}
        if self.kind == "ortho_martingale":
            out["axis_dists"] = [d.to_json() for d in self.axis_dists]
        else:
            out["dist"] = self.dist.to_json()
        if self.kind == "moving_average":
            out["weights"] = self.weights.tolist()
        return out


def gen_field(spec: FieldGenSpec, rep: int = 0, max_points: int = DEFAULT_MAX_POINTS) -> np.ndarray:
    """One realization of the field over ``spec.box`` for replicate ``rep``."""
    if math.prod(spec.box) > max_points:
        raise FieldError(f"box {spec.box} exceeds the memory cap of {max_points} points")
    if spec.kind == "iid":
        if spec.dist.kind == "constant":
            return np.full(spec.box, spec.dist.params[0])
        u = counter_uniforms(spec.seed, rep, 0, index_grids(spec.box))
        return spec.dist.ppf(u)
    if spec.kind == "ortho_martingale":
        out = np.ones(spec.box)
        for axis, (d, g) in enumerate(zip(spec.axis_dists, index_grids(spec.box))):
            xi = d.ppf(counter_uniforms(spec.seed, rep, 1 + axis, (g,)))
            out = out * xi
        return out
    w = spec.weights
    ext = tuple(n + L - 1 for n, L in zip(spec.box, w.shape))
    eps = spec.dist.ppf(counter_uniforms(spec.seed, rep, 0, index_grids(ext)))
    out = np.zeros(spec.box)
    for lag in np.ndindex(w.shape):
        if w[lag] == 0:
            continue
        out += w[lag] * eps[tuple(slice(l, l + n) for l, n in zip(lag, spec.box))]
    return out


@dataclass(frozen=True)
class ShellRow:
    t: int
    pop: int
    p50: float
    p90: float
    max: float


@dataclass(frozen=True)
class ShellStats:
    rows: tuple[ShellRow, ...]
    replications: int
    seed: int

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shell_t", "pop", "p50", "p90", "max", "replications", "seed"])
        for row in self.rows:
            w.writerow([row.t, row.pop, format(row.p50, ".17g"), format(row.p90, ".17g"),
                        format(row.max, ".17g"), self.replications, self.seed])
        return buf.getvalue()


def _shell_sups(stat: np.ndarray, labels: np.ndarray, n_shells: int) -> np.ndarray:
    out = np.zeros(n_shells)
    np.maximum.at(out, labels.ravel(), stat.ravel())
    return out


def slln_diagnostic(gen: FieldGenSpec, spec: NormalizationSpec, replications: int,
                    center: CenterMode | str = CenterMode.ANALYTIC_MEAN, threads: int = 1,
                    scale: float = 1.0) -> ShellStats:
    """Quantiles over replicates of sup_{n in shell t} |S_n - E S_n| / b_n.

    Shells are {n : 2^t <= |n| < 2^(t+1)}.  Centering is analytic (|n| E Z),
    never empirical.  ``scale`` multiplies the field before summation.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    center = CenterMode(center)
    box = gen.box
    labels = shell_labels(box)
    n_shells = int(labels.max()) + 1
    b = spec.values(box)
    expected = 0.0
    if center is CenterMode.ANALYTIC_MEAN:
        size = np.ones(box)
        for g in index_grids(box):
            size = size * g
        expected = size * (scale * gen.mean())

    def one(rep: int) -> np.ndarray:
        z = gen_field(gen, rep)
        if scale != 1.0:
            z = z * scale
        s = prefix_sums(z)
        return _shell_sups(np.abs(s - expected) / b, labels, n_shells)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sups = list(pool.map(one, range(replications)))
    else:
        sups = [one(rep) for rep in range(replications)]
    sups = np.array(sups)  # (replications, n_shells), ordered by replicate
    pops = np.bincount(labels.ravel(), minlength=n_shells)
    rows = []
    for t in range(n_shells):
        if pops[t] == 0:
            continue
        col = sups[:, t]
        p50, p90 = np.quantile(col, [0.5, 0.9])
        rows.append(ShellRow(t, int(pops[t]), float(p50), float(p90), float(col.max())))
    return ShellStats(tuple(rows), replications, gen.seed)


def maximal_ratio(gen: FieldGenSpec, q: int, replications: int, threads: int = 1) -> float:
    """Monte Carlo E max_{k <= N} S_k^{2q} divided by |N|^{q-1} sum_{k <= N} E Z_k^{2q}.

    N is the generator's box.  A diagnostic of the maximal inequality with an
    unspecified constant; the value is reported, not asserted.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    moment = gen.even_moment(2 * q)
    size = math.prod(gen.box)
    denom = size ** (q - 1) * size * moment
    if denom == 0:
        return 0.0

    def one(rep: int) -> float:
        s = prefix_sums(gen_field(gen, rep))
        return float(np.max(s ** (2 * q)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            maxima = list(pool.map(one, range(replications)))
    else:
        maxima = [one(rep) for rep in range(replications)]
    return math.fsum(maxima) / replications / denom
