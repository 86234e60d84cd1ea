"""Random-walk Metropolis-Hastings reference posterior for the toy model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import streams
from .errors import DimensionMismatch, EmptyChain, NonFiniteTarget, NonPositiveCovariate
from .surrogate import Dataset

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MhConfig:
    n_iter: int = 40_000
    burn_in: int = 5_000
    step_sd: float = 0.1
    init: tuple = (0.0, 0.0)
    seed: int = 0
    tune: bool = False

    def __post_init__(self) -> None:
        if self.n_iter < 1 or not 0 <= self.burn_in < self.n_iter:
            raise ValueError(f"need 0 <= burn_in < n_iter, got burn_in={self.burn_in}, n_iter={self.n_iter}")
        if not self.step_sd > 0:
            raise ValueError("step_sd must be > 0")
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))


@dataclass(frozen=True)
class Chain:
    samples: np.ndarray  # (n_iter - burn_in, p)
    log_target_trace: np.ndarray
    accepted: np.ndarray  # bool, per retained iteration
    acceptance_rate: float  # over all n_iter proposals
    step_sd: float  # proposal scale actually used (after tuning)


def toy_log_likelihood(theta, data: Dataset) -> float:
    """Gaussian log-likelihood of y given x with mean theta_1 log x + theta_0 x and unit variance."""
    x = data.xs[:, 0]
    if np.any(x <= 0):
        raise NonPositiveCovariate("toy likelihood needs every x > 0")
    r = data.ys - theta[1] * np.log(x) - theta[0] * x
    return float(-0.5 * data.n * LOG_2PI - 0.5 * r @ r)


def toy_log_prior(theta, prior_sd: float = 5.0) -> float:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != 2:
        raise DimensionMismatch("toy prior is two-dimensional")
    var = prior_sd * prior_sd
    return float(-math.log(2.0 * math.pi * var) - theta @ theta / (2.0 * var))


class ToyLogPosterior:
    """Unnormalised toy log posterior evaluated through precomputed sums.

    The residual is linear in theta, so the likelihood reduces to a quadratic
    form in theta; this matches ``toy_log_likelihood + toy_log_prior`` up to
    rounding and costs O(1) per call.
    """

    def __init__(self, data: Dataset, prior_sd: float = 5.0) -> None:
        x = data.xs[:, 0]
        if np.any(x <= 0):
            raise NonPositiveCovariate("toy likelihood needs every x > 0")
        design = np.column_stack((x, np.log(x)))
        self._gram = design.T @ design
        self._cross = design.T @ data.ys
        self._yy = float(data.ys @ data.ys)
        self._const = -0.5 * data.n * LOG_2PI - math.log(2.0 * math.pi * prior_sd**2)
        self._inv_var = 1.0 / prior_sd**2

    def __call__(self, theta) -> float:
        t0, t1 = float(theta[0]), float(theta[1])
        g = self._gram
        quad = g[0, 0] * t0 * t0 + 2.0 * g[0, 1] * t0 * t1 + g[1, 1] * t1 * t1
        rss = self._yy - 2.0 * (self._cross[0] * t0 + self._cross[1] * t1) + quad
        return self._const - 0.5 * rss - 0.5 * self._inv_var * (t0 * t0 + t1 * t1)


def _run(log_target, start: np.ndarray, lp0: float, step_sd: float, n: int, rng: np.random.Generator):
    p = start.size
    steps = step_sd * rng.standard_normal((n, p))
    log_u = np.log(rng.random(n))
    out = np.empty((n, p))
    lps = np.empty(n)
    acc = np.zeros(n, dtype=bool)
    cur, lp = start.copy(), lp0
    for i in range(n):
        cand = cur + steps[i]
        lp_c = log_target(cand)
        # symmetric proposal: accept with prob min(1, exp(lp_c - lp))
        if lp_c >= lp or log_u[i] < lp_c - lp:
            cur, lp = cand, lp_c
            acc[i] = True
        out[i] = cur
        lps[i] = lp
    return out, lps, acc


def tune_step(
    log_target,
    init,
    step_sd: float,
    rng: np.random.Generator,
    target: tuple[float, float] = (0.2, 0.4),
    rounds: int = 20,
    round_len: int = 500,
) -> tuple[float, np.ndarray]:
    """Rescale ``step_sd`` in short pilot runs until acceptance falls in ``target``.

    Returns the tuned scale and the last pilot state (used as the chain start).
    """
    cur = np.asarray(init, dtype=float)
    lp = log_target(cur)
    for _ in range(rounds):
        out, lps, acc = _run(log_target, cur, lp, step_sd, round_len, rng)
        cur, lp = out[-1], lps[-1]
        rate = acc.mean()
        if target[0] <= rate <= target[1]:
            break
        # geometric adjustment toward the middle of the target band
        step_sd *= math.exp(4.0 * (rate - 0.5 * (target[0] + target[1])))
    return step_sd, cur


def rwmh(log_target: Callable, config: MhConfig) -> Chain:
    """Isotropic Gaussian random-walk MH; the first ``burn_in`` states are discarded.

    With ``config.tune`` a pilot phase (on its own substream) adapts the step
    scale first; the chain itself still starts from ``config.init``.
    """
    init = np.asarray(config.init, dtype=float)
    lp0 = log_target(init)
    if not math.isfinite(lp0):
        raise NonFiniteTarget("log target is not finite at the initial state")
    step_sd = config.step_sd
    if config.tune:
        step_sd, _ = tune_step(log_target, init, step_sd, streams.substream(config.seed, streams.MCMC, 1))
    rng = streams.substream(config.seed, streams.MCMC, 0)
    out, lps, acc = _run(log_target, init, lp0, step_sd, config.n_iter, rng)
    b = config.burn_in
    return Chain(
        samples=out[b:],
        log_target_trace=lps[b:],
        accepted=acc[b:],
        acceptance_rate=float(acc.mean()),
        step_sd=step_sd,
    )


def chain_summary(chain: Chain | np.ndarray, probs=(0.005, 0.025, 0.5, 0.975, 0.995)) -> dict:
    samples = chain.samples if isinstance(chain, Chain) else np.asarray(chain, dtype=float)
    if samples.shape[0] == 0:
        raise EmptyChain("chain has no samples")
    mean = samples.mean(axis=0)
    cov = np.atleast_2d(np.cov(samples, rowvar=False, ddof=1)) if samples.shape[0] > 1 else np.zeros((samples.shape[1],) * 2)
    quantiles = {f"q{p:g}": np.quantile(samples, p, axis=0).tolist() for p in probs}
    return {"mean": mean.tolist(), "cov": cov.tolist(), "quantiles": quantiles, "n": int(samples.shape[0])}


def mahalanobis_region_contains(samples: np.ndarray, point, level: float = 0.99) -> bool:
    """Whether ``point`` lies in the elliptical ``level`` credible region of ``samples``.

    The region is {t : (t - mean)' S^-1 (t - mean) <= q}, with q the
    ``level`` quantile of the same distance over the samples.
    """
    mean = samples.mean(axis=0)
    prec = np.linalg.inv(np.atleast_2d(np.cov(samples, rowvar=False)))
    dev = samples - mean
    d2 = np.einsum("ij,jk,ik->i", dev, prec, dev)
    q = np.quantile(d2, level)
    diff = np.asarray(point, dtype=float) - mean
    return bool(diff @ prec @ diff <= q)
