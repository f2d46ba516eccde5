import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airfrac import _kalman_py
from airfrac.errors import DataError, DegenerateLikelihoodError
from airfrac.ingest import AnnualSeries
from airfrac.sim import substream
from airfrac.tvaf import (
    StateSpaceSpec,
    concat_series,
    detect_switch,
    fit_tvaf,
    kalman_filter,
    kalman_smoother,
    loglik,
)
from oracles import joint_gaussian


def _run(g, e, su2, se2, switch="auto", a1=0.45, p1=2.0, start=2000):
    E = AnnualSeries(start, e)
    spec = StateSpaceSpec(E, su2, se2, switch, a1, p1)
    filt = kalman_filter(AnnualSeries(start, g), spec)
    return spec, filt, kalman_smoother(filt, spec)


def _check_against_oracle(g, e, su2, se2, switch="auto", a1=0.45, p1=2.0):
    spec, filt, est = _run(g, e, su2, se2, switch, a1, p1)
    f, c = spec.transition()
    ref = joint_gaussian(np.asarray(g, float), np.asarray(e, float), f, c, a1, p1, su2, se2)
    np.testing.assert_allclose(filt.predicted_mean, ref["pred_m"], atol=1e-8)
    np.testing.assert_allclose(filt.predicted_variance, ref["pred_v"], atol=1e-8)
    np.testing.assert_allclose(filt.filtered_mean, ref["filt_m"], atol=1e-8)
    np.testing.assert_allclose(filt.filtered_variance, ref["filt_v"], atol=1e-8)
    np.testing.assert_allclose(est.smoothed_mean.values, ref["sm"], atol=1e-8)
    np.testing.assert_allclose(est.smoothed_variance.values, ref["sv"], atol=1e-8)
    assert filt.loglik == pytest.approx(ref["ll"], abs=1e-8)
    assert loglik(AnnualSeries(2000, g), spec) == pytest.approx(ref["ll"], abs=1e-8)
    return spec, est


class TestJointGaussianOracle:
    def test_four_point_instance_with_switch(self):
        g = [0.3, 1.1, -1.6, -2.9]
        e = [1.0, 2.0, -1.0, -2.0]
        spec, est = _check_against_oracle(g, e, 1.0, 0.1)
        assert spec.switch_year == 2002
        f, c = spec.transition()
        assert list(f) == [1.0, -1.0, 1.0, 1.0] and list(c) == [0.0, 1.0, 0.0, 0.0]

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(2, 6),
        st.integers(0, 2 ** 32 - 1),
        st.floats(0.05, 3.0),
        st.floats(0.0, 0.5),
    )
    def test_random_instances(self, T, seed, su2, se2):
        rng = np.random.default_rng(seed)
        e = rng.uniform(0.3, 3.0, T) * rng.choice([1, -1], T)
        g = rng.normal(0, 2, T)
        _check_against_oracle(g, e, su2, se2)

    def test_no_switch_mode(self):
        g = [0.3, 1.1, -1.6, -2.9]
        e = [1.0, 2.0, -1.0, -2.0]
        spec, _ = _check_against_oracle(g, e, 0.5, 0.2, switch=None)
        assert spec.switch_year is None


def test_reflection_consistency():
    g = np.array([0.3, 1.1, -1.6, -2.9])
    e = np.array([1.0, 2.0, -1.0, -2.0])
    _, f1, s1 = _run(g, e, 1.0, 0.1)
    # beta_t = 1 - alpha_t from tau on turns the model into a plain random walk
    tau = 2
    g2, e2 = g.copy(), e.copy()
    g2[tau:] = g[tau:] - e[tau:]
    e2[tau:] = -e[tau:]
    _, f2, s2 = _run(g2, e2, 1.0, 0.1, switch=None)
    m1, m2 = s1.smoothed_mean.values, s2.smoothed_mean.values
    np.testing.assert_allclose(m1[:tau], m2[:tau], atol=1e-10)
    np.testing.assert_allclose(m1[tau:], 1.0 - m2[tau:], atol=1e-10)
    np.testing.assert_allclose(s1.smoothed_variance.values, s2.smoothed_variance.values, atol=1e-10)
    assert f1.loglik == pytest.approx(f2.loglik, abs=1e-10)


def _hist_like(T=64, seed=0):
    rng = substream(seed, "emissions")
    e = 4.3 + np.cumsum(0.1 + 0.19 * rng.standard_normal(T))
    g = 0.45 * e + 0.9 * rng.standard_normal(T)
    return AnnualSeries(1959, g), AnnualSeries(1959, e)


def test_diffuse_prior_sensitivity():
    g, e = _hist_like()
    means = []
    for p1 in (1e6, 1e7, 1e8):
        spec = StateSpaceSpec(e, 0.8, 1e-4, None, 0.45, p1)
        means.append(kalman_smoother(kalman_filter(g, spec), spec).smoothed_mean.values)
    np.testing.assert_allclose(means[0], means[1], atol=1e-6)
    np.testing.assert_allclose(means[1], means[2], atol=1e-6)


def test_constant_state_limit_is_regression_slope():
    g, e = _hist_like()
    spec = StateSpaceSpec(e, 0.8, 0.0, None, 0.45, 1e7)
    m = kalman_smoother(kalman_filter(g, spec), spec).smoothed_mean.values
    slope = (e.values @ g.values) / (e.values @ e.values)
    assert np.ptp(m) < 1e-9
    assert abs(m[0] - slope) < 1e-6


def test_static_mean_limit():
    y = np.random.default_rng(3).normal(0.4, 1.0, 25)
    spec = StateSpaceSpec(AnnualSeries(0, np.ones(25)), 1.0, 0.0, None, 0.45, 1e7)
    filt = kalman_filter(AnnualSeries(0, y), spec)
    np.testing.assert_allclose(filt.filtered_mean, np.cumsum(y) / np.arange(1, 26), atol=1e-6)


def test_noiseless_observation_pins_state():
    e = AnnualSeries(0, np.linspace(1, 3, 10))
    spec = StateSpaceSpec(e, 1e-12, 0.0, None, 0.45, 1e7)
    filt = kalman_filter(0.7 * e, spec)
    np.testing.assert_allclose(filt.filtered_mean, 0.7, atol=1e-9)


def test_degenerate_likelihood_is_reported():
    e = AnnualSeries(0, [1.0, 2.0, 3.0])
    spec = StateSpaceSpec(e, 0.0, 0.0, None, 0.45, 1.0)
    with pytest.raises(DegenerateLikelihoodError, match="year 1"):
        kalman_filter(AnnualSeries(0, [1.0, 2.0, 3.0]), spec)


def test_switch_validation_and_detection():
    e = AnnualSeries(2070, [2.0, 1.0, -0.5, -1.0])
    assert detect_switch(e) == 2072
    assert detect_switch(AnnualSeries(0, [1.0, 2.0])) is None
    assert StateSpaceSpec(e, 1.0, 1.0, 2072).switch_year == 2072
    with pytest.raises(DataError):
        StateSpaceSpec(e, 1.0, 1.0, 2073)
    with pytest.raises(DataError):
        StateSpaceSpec(e, -1.0, 1.0)
    # later sign changes do not add a second reflection
    e2 = AnnualSeries(0, [1.0, -1.0, 1.0, -1.0])
    f, _ = StateSpaceSpec(e2, 1.0, 1.0).transition()
    assert list(f) == [-1.0, 1.0, 1.0, 1.0]


def test_smoother_properties():
    g, e = _hist_like(seed=4)
    spec = StateSpaceSpec(e, 0.7, 1e-3, None)
    est = kalman_smoother(kalman_filter(g, spec), spec)
    assert np.all(est.smoothed_variance.values <= est.filtered_variance.values + 1e-15)
    assert np.all(est.band_low.values <= est.smoothed_mean.values)
    assert np.all(est.smoothed_mean.values <= est.band_high.values)
    row = est.rows()[0]
    assert list(row) == ["year", "alpha_smoothed", "var", "lo95", "hi95", "alpha_filtered"]


def test_backend_parity():
    fast = pytest.importorskip("airfrac._kalman")
    g, e = _hist_like(seed=9)
    e2 = np.concatenate([e.values, -np.linspace(0.1, 3, 20)])
    g2 = np.concatenate([g.values, np.random.default_rng(1).normal(0, 1, 20)])
    f = np.ones(e2.size)
    c = np.zeros(e2.size)
    f[63], c[63] = -1.0, 1.0
    args = (g2, e2, f, c, 0.45, 1e7, 0.8, 1e-3)
    assert fast.kalman_loglik(*args) == pytest.approx(_kalman_py.kalman_loglik(*args), rel=1e-12)
    a = fast.kalman_filter(*args)
    b = _kalman_py.kalman_filter(*args)
    for x, y in zip(a[:6], b[:6]):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)
    sa = fast.kalman_smooth(*a[:4], f)
    sb = _kalman_py.kalman_smooth(*b[:4], f)
    for x, y in zip(sa, sb):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)


def _simulate_model(T, su2, se2, seed, alpha1=0.45):
    rng = substream(seed, "g", T)
    e = 5 + np.cumsum(0.1 + 0.2 * rng.standard_normal(T))
    a = alpha1 + np.concatenate([[0.0], np.cumsum(math.sqrt(se2) * rng.standard_normal(T - 1))])
    g = a * e + math.sqrt(su2) * rng.standard_normal(T)
    return AnnualSeries(1, g), AnnualSeries(1, e), a


@pytest.fixture(scope="module")
def constant_alpha_fits():
    # same T as the variance-recovery check
    out = []
    for r in range(100):
        g, e, _ = _simulate_model(500, 0.8, 0.0, 1000 + r)
        out.append((g, e, fit_tvaf(g, e)))
    return out


class TestMaximumLikelihood:
    def test_obs_variance_recovered(self):
        errs = []
        for r in range(100):
            g, e, _ = _simulate_model(500, 0.64, 1e-4, r)
            errs.append(abs(fit_tvaf(g, e).ml_params[0] / 0.64 - 1))
        assert np.median(errs) < 0.10

    def test_constant_alpha_state_variance_near_zero(self, constant_alpha_fits):
        small = sum(est.ml_params[1] < 1e-4 for _, _, est in constant_alpha_fits)
        assert small >= 90

    def test_constant_alpha_path_inside_regression_ci(self, constant_alpha_fits):
        ok = 0
        for g, e, est in constant_alpha_fits:
            ev, gv = e.values, g.values
            slope = ev @ gv / (ev @ ev)
            resid = gv - slope * ev
            se = math.sqrt(resid @ resid / (len(gv) - 1) / (ev @ ev))
            ok += np.all(np.abs(est.smoothed_mean.values - slope) <= 1.96 * se)
        assert ok >= 90

    def test_metadata_and_short_input(self):
        g, e, _ = _simulate_model(40, 0.5, 1e-3, 5)
        est = fit_tvaf(g, e)
        info = est.summary()
        assert info["optimizer"]["starts"] == 8 and info["optimizer"]["converged"]
        assert info["backend"] in ("cython", "python")
        with pytest.raises(DataError):
            fit_tvaf(g.sel(1, 9), e.sel(1, 9))


def test_concat_series():
    a = AnnualSeries(2020, [1.0, 2.0])
    b = AnnualSeries(2022, [3.0])
    assert concat_series(a, b) == AnnualSeries(2020, [1.0, 2.0, 3.0])
    with pytest.raises(DataError):
        concat_series(a, AnnualSeries(2023, [3.0]))
