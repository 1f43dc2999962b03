import math

import mpmath
import numpy as np
import pytest

from multislln.lattice import FieldError, increment
from multislln.normalization import NormalizationSpec, check_hypotheses


def test_eval_product():
    assert NormalizationSpec.product().eval((3, 4)) == 12


def test_eval_power_log_floor_at_one():
    assert NormalizationSpec.power_log(0.5, 1.0).eval((1, 1)) == 1.0


def test_eval_power_log_high_precision():
    with mpmath.workdps(40):
        oracle = float(8 * mpmath.log(8) ** mpmath.mpf("1.2"))
    assert oracle == pytest.approx(19.258659107960756, rel=1e-15)
    assert NormalizationSpec.power_log(0.5, 0.6).eval((8, 8)) == pytest.approx(oracle, rel=1e-14)


def test_values_agree_with_eval():
    spec = NormalizationSpec.power_log(0.3, 0.7)
    vals = spec.values((5, 6, 2))
    for n in [(1, 1, 1), (5, 6, 2), (3, 2, 1)]:
        assert vals[tuple(c - 1 for c in n)] == pytest.approx(spec.eval(n), rel=1e-14)


def test_tabulated_lookup_and_bounds():
    spec = NormalizationSpec.tabulated([[1.0, 2.0], [3.0, 4.0]])
    assert spec.eval((2, 1)) == 3.0
    with pytest.raises(FieldError):
        spec.eval((3, 1))
    with pytest.raises(ValueError):
        NormalizationSpec.tabulated([[1.0, -2.0]])


def test_product_hypotheses():
    rep = check_hypotheses(NormalizationSpec.product(), (16, 16))
    assert (rep.monotone, rep.delta_nonneg, rep.tends_to_infinity_along_max) == (True, True, True)
    assert not rep.heuristic


def test_max_normalization_has_negative_increment():
    n1, n2 = np.meshgrid(np.arange(1, 9), np.arange(1, 9), indexing="ij")
    b = np.maximum(n1, n2).astype(float)
    assert increment(b)[1, 1] == -1.0  # 2 - 2 - 2 + 1
    rep = check_hypotheses(NormalizationSpec.tabulated(b), (8, 8))
    assert rep.monotone and not rep.delta_nonneg
    assert rep.heuristic and rep.tends_to_infinity_along_max


def test_sum_normalization_has_zero_interior_increment():
    n1, n2 = np.meshgrid(np.arange(1, 9), np.arange(1, 9), indexing="ij")
    b = (n1 + n2).astype(float)
    assert np.all(increment(b)[1:, 1:] == 0)
    assert check_hypotheses(NormalizationSpec.tabulated(b), (8, 8)).delta_nonneg


def test_decreasing_tabulated_not_monotone():
    b = np.array([[1.0, 2.0], [0.5, 3.0]])
    rep = check_hypotheses(NormalizationSpec.tabulated(b), (2, 2))
    assert not rep.monotone
    assert rep.monotone_violation == ((1, 1), (2, 1))


@pytest.mark.parametrize("p,beta", [(1.0, 0.0), (0.5, 0.6), (0.25, 2.0), (0.0, 1.0)])
def test_power_log_is_monotone(p, beta):
    spec = NormalizationSpec.power_log(p, beta)
    b = spec.values((30, 30))
    assert np.all(np.diff(b, axis=0) >= 0) and np.all(np.diff(b, axis=1) >= 0)


def test_larger_log_exponent_dominates_beyond_three():
    lo = NormalizationSpec.power_log(0.5, 0.2).values((40, 40))
    hi = NormalizationSpec.power_log(0.5, 0.9).values((40, 40))
    assert np.all(hi[2:, 2:] / lo[2:, 2:] >= 1.0)


def test_json_round_trip(tmp_path):
    for spec in (NormalizationSpec.product(), NormalizationSpec.power_log(0.5, 0.6)):
        assert NormalizationSpec.from_json(spec.to_json()) == spec
    path = tmp_path / "b.csv"
    path.write_text("n1,value\n1,1\n2,4\n3,9\n")
    spec = NormalizationSpec.from_json({"family": "tabulated", "csv": str(path)})
    assert spec.eval((3,)) == 9.0
    with pytest.raises(ValueError):
        NormalizationSpec.from_json({"family": "power_log", "p": 1, "beta": 0, "q": 2})


def test_zero_exponents_do_not_diverge():
    rep = check_hypotheses(NormalizationSpec.power_log(0.0, 0.0), (4, 4))
    assert not rep.tends_to_infinity_along_max
    assert math.isclose(NormalizationSpec.power_log(0, 0).eval((9, 9)), 1.0)
