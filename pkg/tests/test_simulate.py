import numpy as np
import pytest
from scipy import stats

from multislln.distributions import DistributionSpec as D
from multislln.lattice import FieldError, index_grids, prefix_sums
from multislln.normalization import NormalizationSpec as N
from multislln.simulate import (
    CenterMode,
    FieldGenSpec,
    counter_uniforms,
    gen_field,
    maximal_ratio,
    slln_diagnostic,
)


def iid(box, dist=None, seed=7):
    return FieldGenSpec("iid", box, seed, dist or D.normal(0, 1))


def test_uniforms_are_uniform_and_open():
    u = counter_uniforms(3, 0, 0, index_grids((300, 300)))
    assert 0 < u.min() and u.max() < 1
    assert stats.kstest(u.ravel(), "uniform").pvalue > 1e-3


def test_streams_and_replicates_differ():
    g = index_grids((50, 50))
    a = counter_uniforms(1, 0, 0, g)
    assert not np.array_equal(a, counter_uniforms(1, 1, 0, g))
    assert not np.array_equal(a, counter_uniforms(1, 0, 1, g))
    assert not np.array_equal(a, counter_uniforms(2, 0, 0, g))
    assert abs(np.corrcoef(a.ravel(), counter_uniforms(1, 1, 0, g).ravel())[0, 1]) < 0.05


def test_constant_zero_field():
    assert np.all(gen_field(iid((4, 4), D.constant(0.0))) == 0)


@pytest.mark.parametrize("kind", ["iid", "ortho", "ma"])
def test_field_is_extensible(kind):
    if kind == "iid":
        spec = iid((4, 4))
    elif kind == "ortho":
        spec = FieldGenSpec("ortho_martingale", (4, 4), 5, axis_dists=(D.normal(0, 1), D.two_point(1.0)))
    else:
        spec = FieldGenSpec("moving_average", (4, 4), 5, D.normal(0, 1), weights=np.array([[1.0, 0.3], [0.2, 0.1]]))
    small = gen_field(spec, rep=3)
    big = gen_field(spec.with_box((8, 8)), rep=3)
    np.testing.assert_array_equal(big[:4, :4], small)


def test_iid_normal_moments():
    z = gen_field(iid((400, 400)))
    assert abs(z.mean()) < 4 / 400
    assert z.var() == pytest.approx(1.0, abs=4 * np.sqrt(2 / 160000))


def test_moving_average_covariance():
    w = np.array([1.0, 0.6, -0.3])
    spec = FieldGenSpec("moving_average", (200000,), 11, D.normal(0, 1), weights=w)
    z = gen_field(spec)
    for k in range(4):
        emp = np.mean(z[: len(z) - k] * z[k:])
        theory = float(np.sum(w[: len(w) - k] * w[k:])) if k < len(w) else 0.0
        assert emp == pytest.approx(theory, abs=0.02)


def test_ortho_partial_sums_factorize():
    spec = FieldGenSpec("ortho_martingale", (30, 40), 9, axis_dists=(D.two_point(1.0), D.two_point(1.0)))
    z = gen_field(spec)
    xi1, xi2 = z[:, 0] * z[0, 0], z[0, :] * z[0, 0]
    s = prefix_sums(z)
    np.testing.assert_array_equal(s, np.outer(np.cumsum(xi1), np.cumsum(xi2)))


def test_ortho_uncorrelated():
    spec = FieldGenSpec("ortho_martingale", (2, 2), 1, axis_dists=(D.normal(0, 1), D.normal(0, 1)))
    samples = np.array([gen_field(spec, rep).ravel() for rep in range(4000)])
    corr = np.corrcoef(samples.T)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) < 0.08


def test_ortho_requires_centered():
    with pytest.raises(ValueError):
        FieldGenSpec("ortho_martingale", (2, 2), 1, axis_dists=(D.normal(1, 1), D.normal(0, 1)))


def test_memory_cap():
    with pytest.raises(FieldError):
        gen_field(iid((100, 100)), max_points=1000)


def test_zero_field_diagnostic():
    stats_ = slln_diagnostic(iid((16, 16), D.constant(0.0)), N.product(), 3)
    assert np.all(stats_.column("p90") == 0) and np.all(stats_.column("max") == 0)
    assert stats_.column("pop").sum() == 256


def test_diagnostic_deterministic_across_threads():
    gen = iid((32, 32))
    a = slln_diagnostic(gen, N.product(), 8, threads=1)
    b = slln_diagnostic(gen, N.product(), 8, threads=4)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "shell_t,pop,p50,p90,max,replications,seed"


def test_centering_matters_for_noncentered_law():
    gen = iid((32, 32), D.normal(2.0, 1.0))
    centered = slln_diagnostic(gen, N.product(), 5, CenterMode.ANALYTIC_MEAN)
    raw = slln_diagnostic(gen, N.product(), 5, CenterMode.NONE)
    assert raw.column("p50")[-1] == pytest.approx(2.0, abs=0.1)
    assert centered.column("p50")[-1] < 0.1


def test_product_normalization_decays():
    st_ = slln_diagnostic(iid((64, 64)), N.product(), 20)
    p90 = st_.column("p90")
    assert p90[-1] < p90[4] / 4


def test_maximal_ratio_zero_and_scale():
    assert maximal_ratio(iid((10,), D.constant(0.0)), 1, 3) == 0.0
    a = maximal_ratio(iid((50, 20)), 2, 10)
    b = maximal_ratio(iid((50, 20), D.normal(0, 3.0)), 2, 10)
    assert b == pytest.approx(a, rel=1e-9)


def test_maximal_ratio_doob_scale():
    ratio = maximal_ratio(iid((1000,)), 1, 200)
    assert 0.5 < ratio < 4.0


def test_maximal_ratio_threads_match():
    gen = iid((40, 40))
    assert maximal_ratio(gen, 1, 6, threads=3) == maximal_ratio(gen, 1, 6)
