import math
import warnings

import numpy as np
import pytest
from scipy.stats import binom

from bayestherm import (
    Cost,
    EstimatorKind,
    PriorSpec,
    ProbeConfig,
    UnsupportedEstimatorError,
    averaged_estimate_and_error,
    build_grid,
    build_prior,
    confidence_interval,
    confidence_outcomes,
    detectable_range,
    finite_cost,
    fisher_information,
    global_crb,
    global_relative_error,
    global_rrms,
    outcome_table,
    rms_deviation,
    sweep,
    van_trees_bound,
    van_trees_equilibrium,
)
from bayestherm.estimators import ALL_KINDS, ERROR_KINDS
from bayestherm.global_metrics import (
    BoundaryConditionWarning,
    averaged_estimate,
    global_result,
    outcome_weights,
    prior_boundary_ok,
)
from bayestherm.thermal_model import likelihood_vector

K = EstimatorKind


@pytest.fixture(scope="module")
def sweep200(jeffreys200, eq200):
    ts = [0.5, 1.0, 2.0, 3.0, 5.0, 50.0]
    return {r.true_t: r for r in sweep(ts, jeffreys200, eq200)}


def test_two_outcome_weighting():
    grid = build_grid(0.01, 20, step=1e-3)
    cfg = ProbeConfig(1)
    prior = build_prior(PriorSpec("flat", 0.01, 20), cfg, grid)
    table = outcome_table(prior, cfg)
    t = 3.0
    p = likelihood_vector(t, cfg)
    for kind in ERROR_KINDS:
        theta, err = averaged_estimate_and_error(t, kind, prior, cfg)
        assert theta == pytest.approx(p @ table.estimates[kind], rel=1e-12)
        assert err == pytest.approx(p @ table.errors[kind], rel=1e-12)


def test_mode_average_error_unsupported(jeffreys200, eq200):
    with pytest.raises(UnsupportedEstimatorError):
        averaged_estimate_and_error(1.0, "md", jeffreys200, eq200)
    assert averaged_estimate(1.0, "md", jeffreys200, eq200) > 0


def test_unbiased_near_unit_temperature(sweep200):
    for kind in ALL_KINDS:
        assert 0.9 <= sweep200[1.0].mean_estimate[kind] <= 1.1, kind


def test_mean_bias_inside_range(sweep200):
    r = sweep200[3.0]
    bias = {k: abs(r.mean_estimate[k] / 3.0 - 1) for k in ERROR_KINDS}
    assert bias[K.MEAN] > bias[K.RELATIVE_MEAN]
    assert bias[K.MEAN] > 0.5


def test_sweep_matches_single_point_functions(sweep200, jeffreys200, eq200):
    r = sweep200[2.0]
    for kind in ERROR_KINDS:
        theta, err = averaged_estimate_and_error(2.0, kind, jeffreys200, eq200)
        assert r.mean_estimate[kind] == pytest.approx(theta, rel=1e-12)
        assert r.mean_error[kind] == pytest.approx(err, rel=1e-12)
        assert r.rms[kind] == pytest.approx(rms_deviation(2.0, kind, jeffreys200, eq200), rel=1e-12)
        assert r.confidence[kind] == confidence_interval(2.0, kind, 0.9, jeffreys200, eq200)


def test_sweep_invariants(sweep200):
    for r in sweep200.values():
        assert r.credible_width > 0
        for kind in ALL_KINDS:
            lo, hi = r.confidence[kind]
            assert r.rms[kind] >= 0 and lo <= hi


def test_rms_collapses_for_single_outcome(jeffreys200, eq200):
    table = outcome_table(jeffreys200, eq200)
    theta0 = table.estimates[K.RELATIVE_MEAN][0]
    assert rms_deviation(0.0, "2r", jeffreys200, eq200) == pytest.approx(3.29 * theta0, rel=1e-12)


def test_relative_median_rms_scale_at_unit_temperature(sweep200, eq200):
    rel = sweep200[1.0].rms[K.RELATIVE_MEDIAN] / 1.0
    assert 0.01 < rel < 1.0
    local_crb = 3.29 / math.sqrt(fisher_information(1.0, eq200))
    assert rel == pytest.approx(local_crb, rel=0.25)


def test_relative_mean_rms_beats_mean_inside_range(sweep200):
    for t in (2.0, 3.0, 5.0):
        assert sweep200[t].rms[K.RELATIVE_MEAN] < sweep200[t].rms[K.MEAN]


def test_confidence_full_level_spans_all_estimates(jeffreys200, eq200):
    table = outcome_table(jeffreys200, eq200)
    est = table.estimates[K.MEDIAN]
    lo, hi = confidence_interval(1.0, "1", 1.0, jeffreys200, eq200)
    assert (lo, hi) == (est.min(), est.max())


def _binomial_oracle(n, q, level):
    cdf = binom.cdf(np.arange(n + 1), n, q)
    lo_set = np.flatnonzero(cdf <= (1 - level) / 2)
    a = lo_set[-1] if lo_set.size else 0
    b = np.flatnonzero(cdf >= (1 + level) / 2)[0]
    return int(a), int(b)


@pytest.mark.parametrize("t", [0.3, 1.0, 4.0, math.inf])
@pytest.mark.parametrize("level", [0.5, 0.9, 0.99])
def test_confidence_outcomes_binomial_oracle(t, level, eq200):
    p = likelihood_vector(t, eq200)
    q = 0.5 if math.isinf(t) else 1 / (1 + math.exp(1 / t))
    assert confidence_outcomes(p, level) == _binomial_oracle(200, q, level)


def test_fair_coin_outcomes(eq200):
    a, b = confidence_outcomes(likelihood_vector(math.inf, eq200), 0.9)
    assert abs(a - 88) <= 1 and abs(b - 112) <= 1


def test_confidence_contains_median_estimate(jeffreys200, eq200):
    table = outcome_table(jeffreys200, eq200)
    for t in (0.2, 0.5, 1.0, 3.0, 6.0, 50.0):
        p = outcome_weights(t, eq200, table)[0]
        n_med = int(np.searchsorted(np.cumsum(p), 0.5))
        for kind in ALL_KINDS:
            lo, hi = confidence_interval(t, kind, 0.9, jeffreys200, eq200)
            assert lo <= table.estimates[kind][n_med] <= hi


def test_confidence_level_validation(jeffreys200, eq200):
    with pytest.raises(ValueError):
        confidence_interval(1.0, "2r", 0.0, jeffreys200, eq200)


def test_cost_vanishes_for_sharp_prior():
    grid = build_grid(0.999, 1.001, step=1e-6)
    cfg = ProbeConfig(10)
    prior = build_prior(PriorSpec("flat", 0.9999995, 1.0000005), cfg, grid)
    for kind in ERROR_KINDS:
        assert float(finite_cost(kind, prior, cfg, 0.999, 1.001)) < 1e-12


def test_costs_decrease_with_probe_number(full_grid):
    spec = PriorSpec("jeffreys")
    prev = None
    for n in (10, 100, 1000):
        cfg = ProbeConfig(n)
        prior = build_prior(spec, cfg, full_grid)
        costs = {k: finite_cost(k, prior, cfg, 0.1, 10) for k in ERROR_KINDS}
        if prev is not None:
            for k in ERROR_KINDS:
                assert costs[k] < prev[k]
        prev = costs


def test_cost_units_and_cross_comparison(jeffreys200, eq200):
    mean = finite_cost("2", jeffreys200, eq200, 0.1, 10)
    log = finite_cost("2l", jeffreys200, eq200, 0.1, 10)
    assert mean.unit == "t^2" and log.unit == "1"
    with pytest.raises(TypeError):
        mean < log
    with pytest.raises(TypeError):
        finite_cost("2r", jeffreys200, eq200, 0.1, 10) >= finite_cost("1r", jeffreys200, eq200, 0.1, 10)
    assert mean <= Cost(mean.value, K.MEAN, "t^2")
    with pytest.raises(UnsupportedEstimatorError):
        finite_cost("md", jeffreys200, eq200, 0.1, 10)


def test_finite_cost_range_validation(jeffreys200, eq200):
    with pytest.raises(ValueError):
        finite_cost("2r", jeffreys200, eq200, 0.001, 10)


def test_relative_error_positive(jeffreys200, eq200):
    for kind in ERROR_KINDS:
        e = global_relative_error(kind, jeffreys200, eq200, 0.1, 10)
        assert 0 < e < math.inf


def test_small_n_relative_errors_near_bound(full_grid):
    cfg = ProbeConfig(10)
    prior = build_prior(PriorSpec("jeffreys"), cfg, full_grid)
    vt = van_trees_equilibrium(10)[0]
    for kind in ("2r", "1r"):
        assert 0.5 * vt < global_relative_error(kind, prior, cfg, 0.1, 10) < 2 * vt


def test_relative_error_near_bound_at_200(jeffreys200, eq200):
    vt = van_trees_equilibrium(200)[0]
    assert global_relative_error("2r", jeffreys200, eq200, 0.1, 10) < 1.5 * vt


def test_crb_closed_form_value():
    # (4/pi)[asin sqrt q(10) - asin sqrt q(0.1)] = 0.9596034 at equilibrium
    assert global_crb(ProbeConfig(10_000), 0.1, 10) == pytest.approx(0.1005148, rel=1e-6)


def test_crb_scaling_and_quadrature(full_grid):
    a, b = global_crb(ProbeConfig(100), 0.1, 10), global_crb(ProbeConfig(10_000), 0.1, 10)
    assert a / b == pytest.approx(10.0, rel=1e-12)
    num = global_crb(ProbeConfig(100), 0.1, 10, grid=full_grid, numeric=True)
    assert num == pytest.approx(a, rel=5e-3)


def test_crb_nonequilibrium_is_numeric():
    v = global_crb(ProbeConfig(200, 0.1), 0.1, 10)
    assert 0 < v < math.inf


def test_van_trees_terms(jeffreys200, eq200):
    vt = van_trees_bound(eq200, jeffreys200)
    assert vt.fisher_term == pytest.approx(200 * (math.pi**2 / 8 - 1), rel=1e-2)
    assert vt.prior_term == pytest.approx(math.pi**2 / 8 + 1, rel=1e-2)
    assert vt.boundary_ok
    assert vt.bound == pytest.approx(van_trees_equilibrium(200)[0], rel=1e-2)


@pytest.mark.parametrize("kind", ["flat", "reciprocal"])
def test_boundary_warning(kind, full_grid, eq200):
    prior = build_prior(PriorSpec(kind, 0.01, 200), eq200, full_grid)
    assert not prior_boundary_ok(prior)
    with pytest.warns(BoundaryConditionWarning):
        assert not van_trees_bound(eq200, prior).boundary_ok


def test_van_trees_equilibrium_values():
    exact, approx = van_trees_equilibrium(1)
    assert exact == pytest.approx(6.58 / math.pi, rel=1e-12)
    exact, approx = van_trees_equilibrium(200)
    assert exact == pytest.approx(0.47013, abs=1e-5)
    assert approx == pytest.approx(0.47043, abs=1e-5)
    assert abs(approx / exact - 1) < 1e-3
    for n in np.unique(np.geomspace(1, 1e6, 400).astype(int)):
        e, a = van_trees_equilibrium(int(n))
        assert abs(a / e - 1) < 1e-2
    with pytest.raises(ValueError):
        van_trees_equilibrium(0)


def test_rrms_obeys_bound_and_relative_mean_is_best(full_grid):
    cfg = ProbeConfig(10)
    prior = build_prior(PriorSpec("jeffreys"), cfg, full_grid)
    vt = van_trees_bound(cfg, prior).bound
    values = {k: global_rrms(k, prior, cfg) for k in ALL_KINDS}
    assert min(values.values()) >= vt
    assert min(values, key=values.get) is K.RELATIVE_MEAN


@pytest.mark.slow
def test_bound_looseness_grows_with_n(full_grid):
    ratios = []
    for n in (1000, 2000):
        cfg = ProbeConfig(n)
        prior = build_prior(PriorSpec("jeffreys"), cfg, full_grid)
        ratios.append(global_rrms("2r", prior, cfg) / van_trees_equilibrium(n)[0])
    assert 1 <= ratios[0] < ratios[1]


def test_global_result_bundle(jeffreys200, eq200):
    res = global_result(eq200, jeffreys200, 0.1, 10, kinds=["2r", "md"], with_rrms=True)
    assert set(res.finite_cost) == {K.RELATIVE_MEAN}
    assert res.van_trees_numeric == pytest.approx(res.van_trees_equilibrium, rel=1e-2)
    assert res.rrms[K.RELATIVE_MEAN] >= res.van_trees_numeric
    assert res.crb == pytest.approx(global_crb(eq200, 0.1, 10))


def test_nonequilibrium_prior_mismatch(jeffreys200):
    with pytest.raises(ValueError):
        outcome_table(jeffreys200, ProbeConfig(200, 0.1))


def test_relative_estimators_win_inside_range(jeffreys200, eq200):
    r = sweep([3.0], jeffreys200, eq200)[0]
    for good in (K.RELATIVE_MEAN, K.RELATIVE_MEDIAN):
        for bad in (K.MEAN, K.MEDIAN, K.LOG_MEAN):
            assert r.rms[good] < r.rms[bad]
