"""Multi-index Kronecker lemma: the nonnegative checker and the signed counterexample."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice import ConvergenceMode, MultiIndex, as_index, increment, prefix_sums, shell_labels
from .normalization import NormalizationSpec

__all__ = [
    "KroneckerError",
    "KroneckerReport",
    "kronecker_check",
    "counterexample_field",
    "CounterexampleReport",
    "counterexample_verify",
]


class KroneckerError(ValueError):
    pass


@dataclass(frozen=True)
class KroneckerReport:
    """Partial sums of sum x_k / b_k and the normalized sums (1/b_n) sum_{k<=n} x_k.

    ``ratio_curve`` follows the diagonal (MIN) or the per-shell maxima (MAX);
    ``series_curve`` holds the weighted partial sums at the same indices.
    """

    mode: ConvergenceMode
    series_partial: float
    ratio_curve: list
    series_curve: list


def kronecker_check(x: np.ndarray, spec: NormalizationSpec,
                    mode: ConvergenceMode | str = ConvergenceMode.MAX) -> KroneckerReport:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        bad = tuple(int(c) + 1 for c in np.argwhere(x < 0)[0])
        raise KroneckerError(f"negative entry at {bad}; the lemma needs nonnegative terms")
    mode = ConvergenceMode(mode)
    b = spec.values(x.shape)
    weighted = prefix_sums(x / b)
    ratio = prefix_sums(x) / b
    if mode is ConvergenceMode.MIN:
        idx = [(m,) * x.ndim for m in range(1, min(x.shape) + 1)]
    else:
        labels = shell_labels(x.shape)
        idx = []
        for t in range(int(labels.max()) + 1):
            masked = np.where(labels == t, ratio, -np.inf)
            flat = int(np.argmax(masked))
            if masked.flat[flat] == -np.inf:
                continue
            idx.append(tuple(int(c) + 1 for c in np.unravel_index(flat, x.shape)))
    ratio_curve = [(n, float(ratio[tuple(c - 1 for c in n)])) for n in idx]
    series_curve = [(n, float(weighted[tuple(c - 1 for c in n)])) for n in idx]
    return KroneckerReport(mode, float(weighted[(-1,) * x.ndim]), ratio_curve, series_curve)


def counterexample_field(N: Sequence[int]) -> np.ndarray:
    """x_{k1 k2} = -k2 (k1 = 1), 2 k2 (k1 = 2), 0 (k1 > 2), over {k <= N}."""
    N = as_index(N)
    if len(N) != 2:
        raise KroneckerError("the counterexample is two-dimensional")
    k2 = np.arange(1, N[1] + 1, dtype=np.int64)
    x = np.zeros(N, dtype=np.int64)
    x[0] = -k2
    if N[0] >= 2:
        x[1] = 2 * k2
    return x


@dataclass
class CounterexampleReport:
    N: MultiIndex
    delta_b_is_one: bool
    weighted_sums_zero: bool
    ratio_matches: bool
    rows: list = field(repr=False)  # (n1, n2, weighted_sum, ratio, expected_ratio), Fractions
    diagonal: list = field(repr=False)  # (m, ratio)
    superdiagonal: list = field(repr=False)  # (m, ratio) along (m, m^2)

    @property
    def ok(self) -> bool:
        return self.delta_b_is_one and self.weighted_sums_zero and self.ratio_matches


def counterexample_verify(N: Sequence[int]) -> CounterexampleReport:
    """Check the counterexample identities with b_n = n1 n2 in exact rational arithmetic.

    For 2 <= n1 <= N1 and 1 <= n2 <= N2:
      sum_{k <= n} x_k / b_k == 0  and  (1/b_n) sum_{k <= n} x_k == (n2 + 1) / (2 n1).
    """
    N = as_index(N)
    if len(N) != 2 or N[0] < 2:
        raise KroneckerError("need N = (N1, N2) with N1 >= 2")
    N1, N2 = N
    x = counterexample_field(N)
    b = NormalizationSpec.product().values(N).astype(np.int64)
    delta_ok = bool(np.all(increment(b) == 1))

    plain = prefix_sums(x)  # exact int64
    # weighted prefix sums in rationals, one row at a time
    weighted = [[Fraction(0)] * (N2 + 1) for _ in range(N1 + 1)]
    for k1 in range(1, N1 + 1):
        row, above = weighted[k1], weighted[k1 - 1]
        for k2 in range(1, N2 + 1):
            term = Fraction(int(x[k1 - 1, k2 - 1]), k1 * k2)
            row[k2] = row[k2 - 1] + above[k2] - above[k2 - 1] + term

    rows = []
    zero_ok = ratio_ok = True
    for n1 in range(2, N1 + 1):
        for n2 in range(1, N2 + 1):
            ws = weighted[n1][n2]
            ratio = Fraction(int(plain[n1 - 1, n2 - 1]), n1 * n2)
            expected = Fraction(n2 + 1, 2 * n1)
            zero_ok &= ws == 0
            ratio_ok &= ratio == expected
            rows.append((n1, n2, ws, ratio, expected))

    diagonal = [(m, Fraction(int(plain[m - 1, m - 1]), m * m)) for m in range(2, min(N) + 1)]
    superdiagonal = [
        (m, Fraction(int(plain[m - 1, m * m - 1]), m**3))
        for m in range(2, N1 + 1)
        if m * m <= N2
    ]
    return CounterexampleReport(N, delta_ok, zero_ok, ratio_ok, rows, diagonal, superdiagonal)
