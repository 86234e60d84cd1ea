import math

import numpy as np
import pytest

from pseudopost import streams
from pseudopost.errors import EmptyChain, NonFiniteTarget
from pseudopost.reference_mcmc import (
    MhConfig,
    ToyLogPosterior,
    chain_summary,
    mahalanobis_region_contains,
    rwmh,
    toy_log_likelihood,
    toy_log_prior,
)
from pseudopost.simulators import ToyModel, generate_observed
from pseudopost.surrogate import Dataset

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _toy_data(seed=0):
    return generate_observed(ToyModel(), [2.0, 2.0], 200, streams.substream(seed, streams.OBSERVED))


def test_likelihood_examples():
    one = Dataset(np.array([[1.0]]), np.array([0.8]))
    assert toy_log_likelihood([0.8, 5.0], one) == pytest.approx(-HALF_LOG_2PI)
    shifted = Dataset(np.array([[1.0]]), np.array([1.8]))
    assert toy_log_likelihood([0.8, 5.0], shifted) == pytest.approx(-HALF_LOG_2PI - 0.5)


def test_prior_examples():
    assert toy_log_prior([0.0, 0.0]) == pytest.approx(-math.log(2 * math.pi * 25))
    assert toy_log_prior([5.0, 0.0]) - toy_log_prior([0.0, 0.0]) == pytest.approx(-0.5)


def test_fast_posterior_matches_direct():
    data = _toy_data()
    post = ToyLogPosterior(data)
    for theta in ([2.0, 2.0], [-1.0, 3.5], [0.0, 0.0]):
        direct = toy_log_likelihood(theta, data) + toy_log_prior(theta)
        assert post(np.array(theta)) == pytest.approx(direct, rel=1e-10)


def _std_normal(t):
    return -0.5 * float(t @ t)


def test_standard_normal_target():
    chain = rwmh(_std_normal, MhConfig(n_iter=100_000, burn_in=1000, step_sd=2.0, init=(0.0,), seed=1))
    x = chain.samples[:, 0]
    # batch-means effective standard error
    batches = x[: len(x) // 100 * 100].reshape(100, -1).mean(axis=1)
    se = batches.std(ddof=1) / math.sqrt(100)
    assert abs(x.mean()) <= 4 * se
    assert x.var() == pytest.approx(1.0, rel=0.1)
    summary = chain_summary(chain)
    assert summary["cov"][0][0] == pytest.approx(1.0, rel=0.1)


def test_detailed_balance_histogram():
    chain = rwmh(_std_normal, MhConfig(n_iter=200_000, burn_in=2000, step_sd=1.5, init=(0.0,), seed=2))
    edges = np.linspace(-3, 3, 21)
    counts, _ = np.histogram(chain.samples[:, 0], bins=edges)
    from scipy.stats import norm

    probs = np.diff(norm.cdf(edges))
    tv = 0.5 * np.abs(counts / chain.samples.shape[0] - probs).sum()
    assert tv < 0.05


def test_acceptance_decreases_with_step():
    post = ToyLogPosterior(_toy_data())
    rates = [rwmh(post, MhConfig(n_iter=5000, burn_in=100, step_sd=s, init=(2.0, 2.0), seed=3)).acceptance_rate for s in (0.05, 0.5, 5)]
    assert rates[0] > rates[1] > rates[2]


def test_chain_shape_and_determinism():
    post = ToyLogPosterior(_toy_data())
    cfg = MhConfig(seed=4)
    a, b = rwmh(post, cfg), rwmh(post, cfg)
    assert a.samples.shape == (35_000, 2)
    assert 0.0 <= a.acceptance_rate <= 1.0
    np.testing.assert_array_equal(a.samples, b.samples)


def test_tuning_reaches_target_band():
    post = ToyLogPosterior(_toy_data())
    chain = rwmh(post, MhConfig(n_iter=10_000, burn_in=1000, step_sd=5.0, seed=5, tune=True))
    assert 0.15 <= chain.acceptance_rate <= 0.45


def test_config_and_target_errors():
    with pytest.raises(ValueError):
        MhConfig(n_iter=100, burn_in=100)
    with pytest.raises(NonFiniteTarget):
        rwmh(lambda t: -math.inf, MhConfig(n_iter=10, burn_in=0))


def test_summary_examples():
    const = np.tile([1.5, -2.0], (10, 1))
    s = chain_summary(const)
    assert s["mean"] == [1.5, -2.0]
    np.testing.assert_allclose(s["cov"], 0.0, atol=1e-30)
    assert chain_summary(np.array([[0.0, 0.0], [2.0, 2.0]]))["mean"] == [1.0, 1.0]
    with pytest.raises(EmptyChain):
        chain_summary(np.empty((0, 2)))


def test_mahalanobis_region():
    samples = np.random.default_rng(0).normal(size=(20_000, 2))
    assert mahalanobis_region_contains(samples, [0.5, -0.5])
    assert not mahalanobis_region_contains(samples, [4.0, 4.0])
