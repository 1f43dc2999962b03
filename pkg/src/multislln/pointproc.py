"""Marked Poisson processes on rectangular windows and the random measures they induce.

Positions live in the window (0, T_1] x ... x (0, T_r].  The unit cells are
C_n = (n_1 - 1, n_1] x ... x (n_r - 1, n_r], so a point with a coordinate
exactly equal to an integer m belongs to the cell with index m on that axis.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .distributions import DistributionSpec
from .lattice import as_index, index_grids
from .normalization import NormalizationSpec
from .series import Envelope, PowerLogFactor, SeriesReport, TailStrategy, series_sum

__all__ = [
    "PointProcessError",
    "IntensitySpec",
    "MarkKernel",
    "MarkedPointSet",
    "gen_marked_poisson",
    "measure_sum",
    "cell_field",
    "ergodic_ratio",
    "pp_condition_terms",
    "pp_condition_series",
]


class PointProcessError(ValueError):
    pass


@dataclass(frozen=True)
class IntensitySpec:
    """Intensity measure Lambda.

    ``homogeneous``: constant ``rate``.  ``separable``: density
    prod_i densities[i](x_i) with declared per-axis upper bounds ``bounds``.
    """

    kind: str
    rate: float = 0.0
    densities: tuple = ()
    bounds: tuple = ()

    def __post_init__(self):
        if self.kind == "homogeneous":
            if self.rate <= 0:
                raise PointProcessError("homogeneous intensity needs rate > 0")
        elif self.kind == "separable":
            if len(self.densities) != len(self.bounds) or not self.densities:
                raise PointProcessError("separable intensity needs one density and bound per axis")
            if any(b <= 0 for b in self.bounds):
                raise PointProcessError("density bounds must be positive")
        else:
            raise PointProcessError(f"unknown intensity kind {self.kind!r}")

    @classmethod
    def homogeneous(cls, rate: float) -> "IntensitySpec":
        return cls("homogeneous", rate=float(rate))

    @classmethod
    def separable(cls, densities: Sequence[Callable], bounds: Sequence[float]) -> "IntensitySpec":
        return cls("separable", densities=tuple(densities), bounds=tuple(float(b) for b in bounds))

    def density(self, x: np.ndarray) -> np.ndarray:
        """Intensity at positions x of shape (..., r)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "homogeneous":
            return np.full(x.shape[:-1], self.rate)
        out = np.ones(x.shape[:-1])
        for i, g in enumerate(self.densities):
            out = out * np.asarray(g(x[..., i]), dtype=np.float64)
        return out

    def axis_mass(self, axis: int, lo: float, hi: float) -> float:
        g = self.densities[axis]
        val, _ = integrate.quad(lambda s: float(g(np.array(s))), lo, hi, epsabs=1e-12, epsrel=1e-10)
        return val

    def measure(self, lower: Sequence[float], upper: Sequence[float]) -> float:
        """Lambda of the rectangle (lower, upper]."""
        if self.kind == "homogeneous":
            return self.rate * math.prod(u - l for l, u in zip(lower, upper))
        return math.prod(self.axis_mass(i, l, u) for i, (l, u) in enumerate(zip(lower, upper)))


@dataclass(frozen=True)
class MarkKernel:
    """Conditional mark law P(. | x).

    ``independent``: marks i.i.d. from ``dist`` regardless of position.
    ``position_scaled``: mark = scale(x) * draw from ``dist``, with
    ``scale_bound`` >= sup scale declared for tail certification.
    """

    kind: str
    dist: DistributionSpec
    scale: Callable | None = None
    scale_bound: float | None = None

    def __post_init__(self):
        if self.kind not in ("independent", "position_scaled"):
            raise PointProcessError(f"unknown mark kernel {self.kind!r}")
        if self.kind == "position_scaled" and self.scale is None:
            raise PointProcessError("position_scaled kernel needs a scale function")

    @classmethod
    def independent(cls, dist: DistributionSpec) -> "MarkKernel":
        return cls("independent", dist)

    def _scale(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "independent":
            return np.ones(x.shape[:-1])
        s = np.asarray(self.scale(x), dtype=np.float64)
        if np.any(s <= 0):
            raise PointProcessError("mark scale must be positive")
        return s

    def cond_mean(self, x: np.ndarray) -> np.ndarray:
        """E(y | x)."""
        return self._scale(x) * self.dist.mean

    def cond_second(self, x: np.ndarray) -> np.ndarray:
        """E(y^2 | x)."""
        return self._scale(x) ** 2 * (self.dist.variance + self.dist.mean**2)

    def sample(self, positions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        draws = self.dist.ppf(1.0 - rng.random(len(positions)))
        if self.kind == "independent":
            return draws
        return self._scale(positions) * draws


@dataclass
class MarkedPointSet:
    """Finite marked point set in the window (0, T], sorted by cell index."""

    window: tuple
    positions: np.ndarray
    marks: np.ndarray
    seed: int | None = None
    proposed: int = 0
    accepted: int = 0

    def __post_init__(self):
        self.window = tuple(float(t) for t in self.window)
        if any(t <= 0 for t in self.window):
            raise PointProcessError("window sides must be positive")
        r = len(self.window)
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, r)
        self.marks = np.asarray(self.marks, dtype=np.float64).reshape(-1)
        if len(self.marks) != len(self.positions):
            raise PointProcessError("one mark per point is required")
        inside = np.all((self.positions > 0) & (self.positions <= np.array(self.window)), axis=1)
        if not inside.all():
            bad = int(np.flatnonzero(~inside)[0])
            raise PointProcessError(f"point {bad} at {self.positions[bad].tolist()} lies outside the window")
        cells = self.cells()
        order = np.lexsort(cells.T[::-1]) if len(cells) else np.arange(0)
        self.positions = self.positions[order]
        self.marks = self.marks[order]

    @property
    def r(self) -> int:
        return len(self.window)

    def __len__(self) -> int:
        return len(self.marks)

    def cells(self) -> np.ndarray:
        """1-based cell index of each point: ceil of each coordinate."""
        return np.ceil(self.positions).astype(np.int64)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x_{i + 1}" for i in range(self.r)] + ["mark"])
        for x, y in zip(self.positions, self.marks):
            w.writerow([format(v, ".17g") for v in x] + [format(y, ".17g")])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {"window": list(self.window), "seed": self.seed, "count": len(self),
                "proposed": self.proposed, "accepted": self.accepted}

    @classmethod
    def from_csv(cls, text: str, sidecar: dict) -> "MarkedPointSet":
        rows = [row for row in csv.reader(io.StringIO(text)) if row]
        r = len(sidecar["window"])
        if len(rows[0]) != r + 1:
            raise PointProcessError("CSV column count does not match the window dimension")
        data = np.array([[float(v) for v in row] for row in rows[1:]]).reshape(-1, r + 1)
        return cls(tuple(sidecar["window"]), data[:, :r], data[:, r], sidecar.get("seed"),
                   sidecar.get("proposed", 0), sidecar.get("accepted", 0))

    def save(self, csv_path, json_path) -> None:
        with open(csv_path, "w", newline="") as fh:
            fh.write(self.to_csv())
        with open(json_path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def gen_marked_poisson(intensity: IntensitySpec, kernel: MarkKernel, window: Sequence[float],
                       seed: int) -> MarkedPointSet:
    """Poisson process with intensity ``intensity`` on (0, T], marks drawn from ``kernel``.

    Inhomogeneous intensities are simulated by thinning a homogeneous process
    at rate prod(bounds); a proposal whose density exceeds the declared bound
    raises PointProcessError.
    """
    window = tuple(float(t) for t in window)
    if any(t <= 0 for t in window):
        raise PointProcessError("window sides must be positive")
    r = len(window)
    if intensity.kind == "separable" and len(intensity.densities) != r:
        raise PointProcessError("intensity dimension differs from the window dimension")
    rng = np.random.default_rng(seed)
    volume = math.prod(window)
    rate = intensity.rate if intensity.kind == "homogeneous" else math.prod(intensity.bounds)
    count = int(rng.poisson(rate * volume))
    # 1 - U lies in (0, 1], so positions fill (0, T]
    pos = np.array(window) * (1.0 - rng.random((count, r)))
    proposed = count
    if intensity.kind == "separable":
        dens = intensity.density(pos)
        if np.any(dens > rate * (1 + 1e-12)):
            bad = int(np.flatnonzero(dens > rate * (1 + 1e-12))[0])
            raise PointProcessError(
                f"density {dens[bad]:.6g} at {pos[bad].tolist()} exceeds the declared bound {rate:.6g}"
            )
        keep = rng.random(count) * rate < dens
        pos = pos[keep]
    marks = kernel.sample(pos, rng)
    return MarkedPointSet(window, pos, marks, seed, proposed, len(pos))


def _in_box(pts: MarkedPointSet, lower, upper) -> np.ndarray:
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if lower.shape != (pts.r,) or upper.shape != (pts.r,):
        raise PointProcessError("box dimension differs from the point set dimension")
    if np.any(lower < 0) or np.any(upper > np.array(pts.window)) or np.any(lower > upper):
        raise PointProcessError(f"box ({lower.tolist()}, {upper.tolist()}] is not inside the window")
    return np.all((pts.positions > lower) & (pts.positions <= upper), axis=1)


def measure_sum(pts: MarkedPointSet, lower: Sequence[float], upper: Sequence[float]) -> float:
    """S((lower, upper]) = sum of marks of points in the half-open box."""
    mask = _in_box(pts, lower, upper)
    return math.fsum(pts.marks[mask])


def cell_field(pts: MarkedPointSet, N: Sequence[int]) -> np.ndarray:
    """Z_n = S(C_n) over the box {n <= N}."""
    N = as_index(N)
    if len(N) != pts.r:
        raise PointProcessError("N has the wrong dimension")
    if any(n > t for n, t in zip(N, pts.window)):
        raise PointProcessError(f"N = {N} exceeds the window {pts.window}")
    out = np.zeros(N)
    cells = pts.cells()
    keep = np.all(cells <= np.array(N), axis=1)
    idx = tuple((cells[keep] - 1).T)
    np.add.at(out, idx, pts.marks[keep])
    return out


def ergodic_ratio(pts: MarkedPointSet, corners: Sequence[Sequence[float]]) -> list[tuple[tuple, float]]:
    """S((0, x]) / Lebesgue((0, x]) for every corner x."""
    out = []
    for x in corners:
        x = tuple(float(c) for c in x)
        vol = math.prod(x)
        if vol <= 0:
            raise PointProcessError(f"corner {x} has zero volume")
        out.append((x, measure_sum(pts, (0.0,) * pts.r, x) / vol))
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _cell_integrals(intensity: IntensitySpec, kernel: MarkKernel, box) -> np.ndarray:
    # int_{C_n} E(y^2|x) Lambda(dx) for each cell n <= box
    r = len(box)
    if kernel.kind == "independent":
        second = kernel.dist.variance + kernel.dist.mean**2
        if intensity.kind == "homogeneous":
            return np.full(box, intensity.rate * second)
        out = np.full(box, second)
        for axis, (n, g) in enumerate(zip(box, index_grids(box))):
            masses = np.array([intensity.axis_mass(axis, m - 1.0, float(m)) for m in range(1, n + 1)])
            out = out * masses.reshape(g.shape)
        return out
    # tensor Gauss-Legendre with 8 nodes per axis on every cell
    nodes = 0.5 * (_GL_NODES + 1.0)
    weights = 0.5 * _GL_WEIGHTS
    out = np.zeros(box)
    for offs in np.ndindex((len(nodes),) * r):
        w = math.prod(weights[o] for o in offs)
        x = np.stack(np.broadcast_arrays(*[g - 1.0 + nodes[o] for g, o in zip(index_grids(box), offs)]), axis=-1)
        out += w * kernel.cond_second(x) * intensity.density(x)
    return out


def pp_condition_terms(intensity: IntensitySpec, kernel: MarkKernel, spec: NormalizationSpec, box) -> np.ndarray:
    """b_n^{-2} int_{C_n} E(y^2 | x) Lambda(dx) over the box."""
    box = as_index(box)
    if kernel.dist.mean != 0:
        raise PointProcessError("marks must be centered (E(y|x) = 0); subtract the conditional mean first")
    return _cell_integrals(intensity, kernel, box) / spec.values(box) ** 2


def pp_condition_series(intensity: IntensitySpec, kernel: MarkKernel, spec: NormalizationSpec,
                        box, tail=None) -> SeriesReport:
    """sum_n b_n^{-2} int_{C_n} E(y^2 | x) Lambda(dx) < oo, certified when possible."""
    box = as_index(box)
    terms = pp_condition_terms(intensity, kernel, spec, box)
    if tail is None or tail == "auto":
        tail = _pp_tail(intensity, kernel, spec, len(box))
    elif tail == "none":
        tail = TailStrategy.none()
    return series_sum(terms, len(box), box, tail)


def _pp_tail(intensity, kernel, spec, r) -> TailStrategy:
    exps = spec.exponents
    if exps is None:
        return TailStrategy.none()
    p, beta = exps
    factors = tuple(PowerLogFactor(2 * p, 2 * beta) for _ in range(r))
    second = kernel.dist.variance + kernel.dist.mean**2
    if kernel.kind == "independent" and intensity.kind == "homogeneous":
        return TailStrategy.exact(Envelope(intensity.rate * second, factors),
                                  note="homogeneous intensity, position-free marks: lambda sigma^2 / b_n^2")
    density_bound = intensity.rate if intensity.kind == "homogeneous" else math.prod(intensity.bounds)
    if kernel.kind == "position_scaled":
        if kernel.scale_bound is None:
            return TailStrategy.none()
        second = second * kernel.scale_bound**2
    return TailStrategy(majorant=Envelope(density_bound * second, factors),
                        note="bounded density and mark scale majorant")
