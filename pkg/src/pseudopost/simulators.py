"""Forward simulators: the interface the engine consumes and two concrete models.

``ToyModel`` is the nonlinear log-normal regression used for the end-to-end
experiment. ``LinearGaussianModel`` has closed-form residual moments and is
used as an oracle for the population-level checks.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonPositiveCovariate
from .surrogate import Dataset, SurrogateFit, augment


class SimulatorModel(ABC):
    """Prior over theta plus a conditional sampler of (x, y) pairs.

    Subclasses implement ``draw_prior`` and ``simulate_batch``; everything
    else has a generic default. All randomness comes from the generator
    passed in, so a fixed generator state gives a fixed output.
    """

    param_dim: int
    covariate_dim: int
    prior_sd: float

    @abstractmethod
    def draw_prior(self, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def simulate_batch(self, theta, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Return ``m`` iid pairs as arrays of shape (m, d) and (m,)."""

    def simulate_pair(self, theta, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        xs, ys = self.simulate_batch(theta, 1, rng)
        return xs[0], float(ys[0])

    def batch_means(self, theta, m: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        """Sufficient statistics of a batch for the residual mean.

        Returns the mean augmented covariate (length d+1) and the mean
        response; the batch residual under any beta is then
        ``ybar - beta @ xbar``.
        """
        xs, ys = self.simulate_batch(theta, m, rng)
        return augment(xs).mean(axis=0), float(ys.mean())

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.param_dim:
            raise DimensionMismatch(f"theta has dimension {theta.size}, model expects {self.param_dim}")
        return theta

    def to_config(self) -> dict:
        raise NotImplementedError


def conditional_mean_toy(theta, x):
    """theta_1 * log(x) + theta_0 * x, for x > 0."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise NonPositiveCovariate("toy conditional mean needs x > 0")
    t0, t1 = float(theta[0]), float(theta[1])
    out = t1 * np.log(x_arr) + t0 * x_arr
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ToyModel(SimulatorModel):
    """log X ~ N(theta_1 / logx_scale, logx_sd^2); Y | X ~ N(theta_1 log X + theta_0 X, noise_sd^2).

    Prior is N(0, prior_sd^2 I_2). ``prior_sd = 0`` gives a point mass at the
    origin, which tests use as a degenerate prior.
    """

    prior_sd: float = 5.0
    logx_sd: float = 0.5
    noise_sd: float = 1.0
    logx_scale: float = 5.0

    param_dim = 2
    covariate_dim = 1

    def __post_init__(self) -> None:
        if self.prior_sd < 0 or self.logx_sd <= 0 or self.noise_sd < 0 or self.logx_scale <= 0:
            raise ValueError("ToyModel scales must be positive")

    def draw_prior(self, rng):
        return rng.normal(0.0, self.prior_sd, size=2)

    def simulate_batch(self, theta, m, rng):
        theta = self.check_theta(theta)
        logx = theta[1] / self.logx_scale + self.logx_sd * rng.standard_normal(m)
        x = np.exp(logx)
        # recompute log x from the stored x so y is an exact function of the returned covariate
        y = theta[1] * np.log(x) + theta[0] * x + self.noise_sd * rng.standard_normal(m)
        return x.reshape(m, 1), y

    def to_config(self) -> dict:
        return {
            "model": "toy",
            "prior_sd": self.prior_sd,
            "logx_sd": self.logx_sd,
            "noise_sd": self.noise_sd,
            "logx_scale": self.logx_scale,
        }


def _vec(value, size: int | None = None) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if size is not None and arr.size != size:
        raise DimensionMismatch(f"expected length {size}, got {arr.size}")
    return arr


@dataclass(frozen=True, eq=False)
class LinearGaussianModel(SimulatorModel):
    """Analytic oracle model.

    X ~ N(x_mean, x_cov) independently of theta, and
    Y = a.theta + b + x_coef.X + eps with
    eps ~ N(0, noise_sd^2 * exp(hetero.theta)).
    Prior is N(0, prior_sd^2 I_p). With Gaussian X and eps the batch mean
    residual is exactly Gaussian, so the closed-form population weight is
    exact for this model.

    ``exact_batch_means`` lets ``batch_means`` draw the batch averages
    directly from their (exact) Gaussian law instead of simulating ``m``
    pairs; the distribution is identical and the cost is O(1) in ``m``.
    """

    a: np.ndarray
    b: float
    x_mean: np.ndarray
    x_cov: np.ndarray
    noise_sd: float
    x_coef: np.ndarray | None = None
    hetero: np.ndarray | None = None
    prior_sd: float = 1.0
    exact_batch_means: bool = True
    _x_factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        a = _vec(self.a)
        x_mean = _vec(self.x_mean)
        d = x_mean.size
        x_cov = np.asarray(self.x_cov, dtype=float).reshape(d, d)
        if not np.allclose(x_cov, x_cov.T):
            raise ValueError("x_cov must be symmetric")
        w, V = np.linalg.eigh(x_cov)
        if np.any(w < -1e-12 * max(1.0, float(np.abs(w).max(initial=0.0)))):
            raise ValueError("x_cov must be positive semi-definite")
        if self.noise_sd < 0 or self.prior_sd < 0:
            raise ValueError("noise_sd and prior_sd must be >= 0")
        x_coef = np.zeros(d) if self.x_coef is None else _vec(self.x_coef, d)
        hetero = np.zeros(a.size) if self.hetero is None else _vec(self.hetero, a.size)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "x_mean", x_mean)
        object.__setattr__(self, "x_cov", x_cov)
        object.__setattr__(self, "x_coef", x_coef)
        object.__setattr__(self, "hetero", hetero)
        object.__setattr__(self, "_x_factor", V * np.sqrt(np.clip(w, 0.0, None)))

    @property
    def param_dim(self) -> int:  # type: ignore[override]
        return self.a.size

    @property
    def covariate_dim(self) -> int:  # type: ignore[override]
        return self.x_mean.size

    def noise_variance(self, theta) -> np.ndarray | float:
        theta = np.asarray(theta, dtype=float)
        return self.noise_sd**2 * np.exp(theta @ self.hetero)

    def draw_prior(self, rng):
        return rng.normal(0.0, self.prior_sd, size=self.param_dim)

    def simulate_batch(self, theta, m, rng):
        theta = self.check_theta(theta)
        d = self.covariate_dim
        xs = self.x_mean + rng.standard_normal((m, d)) @ self._x_factor.T
        sd = math.sqrt(self.noise_variance(theta))
        ys = self.a @ theta + self.b + xs @ self.x_coef + sd * rng.standard_normal(m)
        return xs, ys

    def batch_means(self, theta, m, rng):
        if not self.exact_batch_means:
            return super().batch_means(theta, m, rng)
        theta = self.check_theta(theta)
        root_m = math.sqrt(m)
        xbar = self.x_mean + (self._x_factor @ rng.standard_normal(self.covariate_dim)) / root_m
        sd = math.sqrt(self.noise_variance(theta))
        ybar = self.a @ theta + self.b + xbar @ self.x_coef + sd * rng.standard_normal() / root_m
        return augment(xbar), float(ybar)

    def projection_limit(self, theta_true) -> SurrogateFit:
        """Best linear projection of Y on (1, X) when data come from ``theta_true``."""
        theta_true = self.check_theta(theta_true)
        beta = np.concatenate(([self.a @ theta_true + self.b], self.x_coef))
        return SurrogateFit.from_coefficients(beta)

    def to_config(self) -> dict:
        return {
            "model": "linear_gaussian",
            "a": self.a.tolist(),
            "b": self.b,
            "x_mean": self.x_mean.tolist(),
            "x_cov": self.x_cov.tolist(),
            "noise_sd": self.noise_sd,
            "x_coef": self.x_coef.tolist(),
            "hetero": self.hetero.tolist(),
            "prior_sd": self.prior_sd,
            "exact_batch_means": self.exact_batch_means,
        }


def analytic_mu_v(model: LinearGaussianModel, theta, fit: SurrogateFit):
    """Exact residual mean and variance of Y - beta.(1, X) given theta.

    ``theta`` may be a single point or an array of points of shape (n, p);
    the return values broadcast accordingly.
    """
    if fit.d != model.covariate_dim:
        raise DimensionMismatch(f"fit has {fit.d} slopes, model has {model.covariate_dim} covariates")
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != model.param_dim:
        raise DimensionMismatch(f"theta has dimension {theta.shape[-1]}, model expects {model.param_dim}")
    gap = model.x_coef - fit.beta[1:]
    mu = theta @ model.a + model.b - fit.beta[0] + gap @ model.x_mean
    v = gap @ model.x_cov @ gap + model.noise_variance(theta)
    if np.ndim(mu) == 0:
        return float(mu), float(v)
    return mu, v


def generate_observed(model: SimulatorModel, theta_true, n_obs: int, rng: np.random.Generator) -> Dataset:
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    xs, ys = model.simulate_batch(theta_true, n_obs, rng)
    return Dataset(xs, ys)


def model_from_config(cfg: dict) -> SimulatorModel:
    """Build a model from its JSON config (extra keys are ignored)."""
    kind = cfg.get("model")
    if kind == "toy":
        keys = ("prior_sd", "logx_sd", "noise_sd", "logx_scale")
        return ToyModel(**{k: float(cfg[k]) for k in keys if k in cfg})
    if kind == "linear_gaussian":
        required = ("a", "b", "x_mean", "x_cov", "noise_sd")
        missing = [k for k in required if k not in cfg]
        if missing:
            raise ValueError(f"linear_gaussian config missing {missing}")
        optional = ("x_coef", "hetero", "prior_sd", "exact_batch_means")
        kwargs = {k: cfg[k] for k in required + optional if k in cfg}
        return LinearGaussianModel(**kwargs)
    raise ValueError(f"unknown model {kind!r}; expected 'toy' or 'linear_gaussian'")
