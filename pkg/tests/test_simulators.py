import math

import numpy as np
import pytest

from pseudopost import streams
from pseudopost.errors import DimensionMismatch, NonPositiveCovariate
from pseudopost.simulators import (
    LinearGaussianModel,
    ToyModel,
    analytic_mu_v,
    conditional_mean_toy,
    generate_observed,
    model_from_config,
)
from pseudopost.surrogate import SurrogateFit, residuals


def test_toy_prior_moments():
    rng = streams.substream(1, "prior-test")
    draws = np.array([ToyModel().draw_prior(rng) for _ in range(100_000)])
    assert np.all(np.abs(draws.mean(axis=0)) <= 4 * 5 / math.sqrt(1e5))
    np.testing.assert_allclose(draws.std(axis=0), 5.0, rtol=0.05)


def test_degenerate_prior():
    assert ToyModel(prior_sd=0.0).draw_prior(np.random.default_rng(0)).tolist() == [0.0, 0.0]


def test_toy_covariates():
    xs, ys = ToyModel().simulate_batch([2.0, 2.0], 100_000, streams.substream(2, "x"))
    assert np.all(xs > 0)
    assert abs(np.log(xs).mean() - 0.4) <= 4 * 0.5 / math.sqrt(1e5)


def test_toy_noiseless_mean():
    xs, ys = ToyModel(noise_sd=0.0).simulate_batch([2.0, 3.0], 50, np.random.default_rng(3))
    np.testing.assert_array_equal(ys, 3.0 * np.log(xs[:, 0]) + 2.0 * xs[:, 0])


def test_conditional_mean_examples():
    assert conditional_mean_toy([2, 2], 1.0) == 2.0
    assert conditional_mean_toy([2, 2], math.e) == pytest.approx(2 + 2 * math.e)
    assert conditional_mean_toy([0, 0], 3.7) == 0.0
    with pytest.raises(NonPositiveCovariate):
        conditional_mean_toy([1, 1], 0.0)


def test_generate_observed():
    data = generate_observed(ToyModel(), [2, 2], 200, streams.substream(7, streams.OBSERVED))
    assert data.n == 200 and np.all(data.xs > 0)
    assert generate_observed(ToyModel(), [2, 2], 1, np.random.default_rng(0)).n == 1
    again = generate_observed(ToyModel(), [2, 2], 200, streams.substream(7, streams.OBSERVED))
    np.testing.assert_array_equal(data.xs, again.xs)
    np.testing.assert_array_equal(data.ys, again.ys)
    with pytest.raises(ValueError):
        generate_observed(ToyModel(), [2, 2], 0, np.random.default_rng(0))


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        ToyModel().simulate_batch([1.0, 2.0, 3.0], 2, np.random.default_rng(0))


def test_analytic_mu_v_exact_representation():
    model = LinearGaussianModel(a=[1.0, -1.0], b=0.5, x_mean=[2.0], x_cov=[[1.0]], noise_sd=0.0)
    theta = np.array([0.3, 0.7])
    fit = SurrogateFit.from_coefficients([model.a @ theta + model.b, 0.0])
    mu, v = analytic_mu_v(model, theta, fit)
    assert mu == pytest.approx(0.0, abs=1e-15)
    assert v == 0.0


def test_analytic_mu_v_against_simulation(lg_model):
    fit = SurrogateFit.from_coefficients([0.2, 0.6])
    theta = np.array([0.4, -0.3])
    xs, ys = lg_model.simulate_batch(theta, 1_000_000, streams.substream(5, "mu-v"))
    r = residuals(fit, xs, ys)
    mu, v = analytic_mu_v(lg_model, theta, fit)
    assert abs(r.mean() - mu) <= 4 * math.sqrt(v / r.size)
    # sample variance se for Gaussian residuals: v sqrt(2/n)
    assert abs(r.var(ddof=1) - v) <= 4 * v * math.sqrt(2 / r.size)


def test_exact_batch_means_match_pairwise(lg_model):
    theta = np.array([0.1, 0.5])
    fit = SurrogateFit.from_coefficients([1.0, 1.0])
    rng = np.random.default_rng(9)
    exact = [lg_model.batch_means(theta, 20, rng) for _ in range(20_000)]
    r = np.array([yb - xb @ fit.beta for xb, yb in exact])
    mu, v = analytic_mu_v(lg_model, theta, fit)
    assert abs(r.mean() - mu) <= 4 * math.sqrt(v / 20 / r.size)
    assert r.var() == pytest.approx(v / 20, rel=0.05)


def test_model_config_round_trip(lg_model):
    for model in (ToyModel(noise_sd=0.5), lg_model):
        rebuilt = model_from_config(model.to_config())
        assert rebuilt.to_config() == model.to_config()
    with pytest.raises(ValueError):
        model_from_config({"model": "nope"})
