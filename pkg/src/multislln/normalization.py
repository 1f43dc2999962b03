"""Normalization fields b_n and the structural hypotheses the limit theorems use."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lattice import (
    FieldError,
    as_index,
    increment,
    index_grids,
    is_monotone,
    read_field_csv,
    shell_labels,
)

__all__ = [
    "NormalizationSpec",
    "HypothesisReport",
    "log_floor",
    "check_hypotheses",
]

DELTA_TOL = 1e-12


def log_floor(m):
    """L(m) = max(ln m, 1); keeps logarithmic weights positive and monotone at m in {1, 2}."""
    return np.maximum(np.log(np.asarray(m, dtype=np.float64)), 1.0)


@dataclass(frozen=True)
class NormalizationSpec:
    """A family of normalizations b_n.

    ``product``: b_n = |n|.
    ``power_log``: b_n = |n|^p * prod_i L(n_i)^beta with L(m) = max(ln m, 1).
    ``tabulated``: explicit positive values over a box (``table``).
    """

    family: str
    p: float = 1.0
    beta: float = 0.0
    table: np.ndarray | None = field(default=None, compare=False, repr=False)
    csv: str | None = None

    def __post_init__(self):
        if self.family not in ("product", "power_log", "tabulated"):
            raise ValueError(f"unknown normalization family {self.family!r}")
        if self.family == "power_log" and (self.p < 0 or self.beta < 0):
            raise ValueError("power_log needs p >= 0 and beta >= 0")
        if self.family == "tabulated":
            if self.table is None:
                if self.csv is None:
                    raise ValueError("tabulated normalization needs a table or a csv path")
                object.__setattr__(self, "table", read_field_csv(self.csv).astype(np.float64))
            table = np.asarray(self.table, dtype=np.float64)
            if not np.all(table > 0):
                raise ValueError("tabulated normalization must be positive")
            object.__setattr__(self, "table", table)

    @classmethod
    def product(cls) -> "NormalizationSpec":
        return cls("product")

    @classmethod
    def power_log(cls, p: float, beta: float) -> "NormalizationSpec":
        return cls("power_log", p=float(p), beta=float(beta))

    @classmethod
    def tabulated(cls, table) -> "NormalizationSpec":
        return cls("tabulated", table=np.asarray(table, dtype=np.float64))

    @property
    def exponents(self) -> tuple[float, float] | None:
        """(p, beta) for the separable families, None for tabulated."""
        if self.family == "product":
            return 1.0, 0.0
        if self.family == "power_log":
            return self.p, self.beta
        return None

    def eval(self, n: Sequence[int]) -> float:
        n = as_index(n)
        if self.family == "tabulated":
            if len(n) != self.table.ndim or any(c > s for c, s in zip(n, self.table.shape)):
                raise FieldError(f"index {n} outside the tabulated box {self.table.shape}")
            return float(self.table[tuple(c - 1 for c in n)])
        p, beta = self.exponents
        value = float(math.prod(n)) ** p
        if beta:
            value *= math.prod(max(math.log(c), 1.0) ** beta for c in n)
        return value

    def values(self, shape: Sequence[int]) -> np.ndarray:
        """b_n over the whole box {k <= shape}."""
        shape = as_index(shape)
        if self.family == "tabulated":
            if len(shape) != self.table.ndim or any(c > s for c, s in zip(shape, self.table.shape)):
                raise FieldError(f"box {shape} exceeds the tabulated box {self.table.shape}")
            return self.table[tuple(slice(0, c) for c in shape)].copy()
        p, beta = self.exponents
        out = np.ones(shape, dtype=np.float64)
        for g in index_grids(shape):
            out = out * (g.astype(np.float64) ** p * log_floor(g) ** beta)
        return out

    def to_json(self) -> dict:
        if self.family == "product":
            return {"family": "product"}
        if self.family == "power_log":
            return {"family": "power_log", "p": self.p, "beta": self.beta}
        if self.csv is None:
            raise ValueError("an in-memory tabulated normalization has no JSON form")
        return {"family": "tabulated", "csv": self.csv}

    @classmethod
    def from_json(cls, obj: dict) -> "NormalizationSpec":
        if not isinstance(obj, dict) or "family" not in obj:
            raise ValueError("normalization must be an object with a 'family' key")
        family = obj["family"]
        allowed = {"product": {"family"}, "power_log": {"family", "p", "beta"},
                   "tabulated": {"family", "csv"}}
        if family not in allowed:
            raise ValueError(f"unknown normalization family {family!r}")
        extra = set(obj) - allowed[family]
        if extra:
            raise ValueError(f"unexpected keys for {family}: {sorted(extra)}")
        if family == "product":
            return cls.product()
        if family == "power_log":
            return cls.power_log(float(obj["p"]), float(obj["beta"]))
        return cls("tabulated", csv=str(obj["csv"]))


@dataclass(frozen=True)
class HypothesisReport:
    monotone: bool
    delta_nonneg: bool
    tends_to_infinity_along_max: bool
    heuristic: bool
    monotone_violation: tuple | None = None


def check_hypotheses(spec: NormalizationSpec, probe: Sequence[int]) -> HypothesisReport:
    """Monotonicity, Delta[b] >= 0 and b_n -> oo (max-convergence) on a probe box.

    For the analytic families divergence to infinity is decided from the
    exponents; for tabulated fields it is a heuristic: the minimum of b over
    the outermost dyadic shell must exceed the minimum over the previous one.
    """
    probe = as_index(probe)
    b = spec.values(probe)
    mono = is_monotone(b)
    delta_ok = bool(np.all(increment(b) >= -DELTA_TOL))
    if spec.family == "tabulated":
        labels = shell_labels(probe)
        top = int(labels.max())
        if top == 0:
            grows = False
        else:
            grows = bool(b[labels == top].min() > b[labels == top - 1].min())
        return HypothesisReport(mono.monotone, delta_ok, grows, True, mono.violation)
    p, beta = spec.exponents
    # max-convergence sends max_i n_i -> oo, so either exponent suffices
    return HypothesisReport(mono.monotone, delta_ok, p > 0 or beta > 0, False, mono.violation)
