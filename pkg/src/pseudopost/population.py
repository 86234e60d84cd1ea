"""Population-level weights, quadrature functionals and identified-set tools."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import streams
from .errors import CouplingViolated, NonPositiveBandwidth, ZeroNormalizer
from .simulators import SimulatorModel
from .surrogate import SurrogateFit, residuals

HALF_LOG_E = math.exp(-0.5)


@dataclass(frozen=True)
class MomentProfile:
    mu: float
    v: float

    def __post_init__(self) -> None:
        if self.v < 0:
            raise ValueError("variance must be >= 0")


def _check_tau(tau) -> None:
    if not np.all(np.asarray(tau) > 0):
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {tau}")


def l_m_gaussian(mu, v, m: int, tau: float):
    """Expected kernel weight when the batch mean residual is N(mu, v/m).

    sqrt(tau^2 / (tau^2 + s^2)) * exp(-mu^2 / (2 (tau^2 + s^2))), s^2 = v/m.
    Broadcasts over array inputs.
    """
    _check_tau(tau)
    if m < 1:
        raise ValueError("m must be >= 1")
    tau2 = tau * tau
    eff = tau2 + np.asarray(v, dtype=float) / m
    out = np.sqrt(tau2 / eff) * np.exp(-np.square(mu) / (2.0 * eff))
    return float(out) if np.ndim(out) == 0 else out


def l_infinity(mu, tau: float):
    _check_tau(tau)
    out = np.exp(-np.square(mu) / (2.0 * tau * tau))
    return float(out) if np.ndim(out) == 0 else out


def uniform_gap_bound(v_sup: float, tau: float, m: int) -> float:
    """Uniform bound e^{-1/2} v_sup / (tau^2 m) on |L_M - L_inf|."""
    _check_tau(tau)
    if m < 1 or v_sup < 0:
        raise ValueError("need m >= 1 and v_sup >= 0")
    return HALF_LOG_E * v_sup / (tau * tau * m)


def moment_profile_from_residuals(res) -> MomentProfile:
    res = np.asarray(res, dtype=float)
    if res.size < 2:
        raise ValueError("need at least two residuals")
    return MomentProfile(mu=float(res.mean()), v=float(res.var(ddof=1)))


def estimate_moment_profile(model: SimulatorModel, theta, fit: SurrogateFit, n_sim: int, rng: np.random.Generator) -> MomentProfile:
    """Sample mean and unbiased variance of residuals over ``n_sim`` simulated pairs."""
    if n_sim < 2:
        raise ValueError("n_sim must be >= 2")
    xs, ys = model.simulate_batch(theta, n_sim, rng)
    return moment_profile_from_residuals(residuals(fit, xs, ys))


def mc_weight_estimate(
    model: SimulatorModel,
    theta,
    fit: SurrogateFit,
    m: int,
    tau: float,
    n_rep: int,
    rng: np.random.Generator,
    max_pairs_per_chunk: int = 2_000_000,
) -> tuple[float, float]:
    """Average of exp(-R^2 / 2 tau^2) over ``n_rep`` independent batches of size ``m``.

    Batches are simulated pair by pair (never through a model's batch-mean
    shortcut) so the estimate is independent of any closed form.
    Returns (estimate, standard error).
    """
    _check_tau(tau)
    if n_rep < 2:
        raise ValueError("n_rep must be >= 2")
    per_chunk = max(1, max_pairs_per_chunk // m)
    weights = np.empty(n_rep)
    done = 0
    while done < n_rep:
        k = min(per_chunk, n_rep - done)
        xs, ys = model.simulate_batch(theta, k * m, rng)
        r = residuals(fit, xs, ys).reshape(k, m).mean(axis=1)
        weights[done : done + k] = np.exp(-r * r / (2.0 * tau * tau))
        done += k
    return float(weights.mean()), float(weights.std(ddof=1) / math.sqrt(n_rep))


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product grid with normalised prior-mass weights."""

    points: np.ndarray  # (N, p)
    weights: np.ndarray  # (N,), sums to 1
    axes: tuple

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def gaussian_prior_grid(p: int, prior_sd: float, n_per_dim: int | Sequence[int] = 201, width: float = 6.0, mean=None) -> QuadratureGrid:
    """Rectangle-rule grid over mean +/- width * prior_sd for an isotropic Gaussian prior."""
    counts = [n_per_dim] * p if isinstance(n_per_dim, int) else list(n_per_dim)
    if len(counts) != p:
        raise ValueError("need one grid size per dimension")
    mean = np.zeros(p) if mean is None else np.asarray(mean, dtype=float)
    axes = tuple(np.linspace(mean[k] - width * prior_sd, mean[k] + width * prior_sd, counts[k]) for k in range(p))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.reshape(-1) for g in mesh], axis=1)
    logdens = -0.5 * np.sum(np.square((points - mean) / prior_sd), axis=1)
    w = np.exp(logdens - logdens.max())
    return QuadratureGrid(points=points, weights=w / w.sum(), axes=axes)


def phi_functional(grid: QuadratureGrid, weight_values, h: Callable | np.ndarray) -> float:
    """Quadrature version of  int h p L / int p L.

    ``h`` is either precomputed values on the grid points or a vectorised
    callable on the (N, p) point array.
    """
    L = np.asarray(weight_values, dtype=float)
    hv = h(grid.points) if callable(h) else np.asarray(h, dtype=float)
    hv = np.broadcast_to(hv, L.shape)
    pl = grid.weights * L
    z = pl.sum()
    if not z > 0:
        raise ZeroNormalizer("population weight vanishes on the whole grid")
    return float(pl @ hv / z)


def halfspace_fraction(grid: QuadratureGrid, axis: int, threshold: float) -> np.ndarray:
    """Cell-averaged indicator of {theta[axis] > threshold} on the grid.

    Each node stands for a cell of width equal to the grid spacing; the node
    value is the fraction of its cell above the threshold. This keeps the
    rectangle rule second-order accurate for half-space indicators.
    """
    ax = grid.axes[axis]
    step = float(ax[1] - ax[0]) if len(ax) > 1 else 1.0
    return np.clip((grid.points[:, axis] + 0.5 * step - threshold) / step, 0.0, 1.0)


def marginal_quantile(grid: QuadratureGrid, weight_values, axis: int, q: float) -> float:
    """q-quantile of one coordinate under the grid measure p * L (linear interpolation)."""
    ax = grid.axes[axis]
    pl = grid.weights * np.asarray(weight_values, dtype=float)
    idx = np.searchsorted(ax, grid.points[:, axis])
    marg = np.bincount(idx, weights=pl, minlength=len(ax))
    step = float(ax[1] - ax[0])
    edges = np.concatenate(([ax[0] - 0.5 * step], ax + 0.5 * step))
    cdf = np.concatenate(([0.0], np.cumsum(marg))) / marg.sum()
    return float(np.interp(q, cdf, edges))


def normalizer(grid: QuadratureGrid, weight_values) -> float:
    """Z = int p L over the grid."""
    return float(grid.weights @ np.asarray(weight_values, dtype=float))


@dataclass(frozen=True)
class IdentifiedSetScan:
    grid: np.ndarray  # (N, p)
    mu_hat: np.ndarray
    v_hat: np.ndarray
    mu_sq: np.ndarray
    tolerance: float
    members: np.ndarray  # indices

    @property
    def member_mask(self) -> np.ndarray:
        mask = np.zeros(self.mu_sq.size, dtype=bool)
        mask[self.members] = True
        return mask


def noise_floor_tolerance(v_hat, n_sim: int, factor: float = 9.0) -> float:
    """factor * v / n_sim: roughly the squared 3-sigma error of a residual mean."""
    return factor * float(np.max(v_hat)) / n_sim


def scan_identified_set(
    model: SimulatorModel,
    fit: SurrogateFit,
    grid,
    n_sim: int,
    tolerance: float | None = None,
    seed: int = 0,
    max_parallel: int = 1,
) -> IdentifiedSetScan:
    """Estimate mu(theta)^2 on each grid point and keep those below ``tolerance``.

    Each point uses its own substream. The default tolerance is the
    Monte Carlo noise floor of the estimates (see ``noise_floor_tolerance``).
    """
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("grid must be non-empty")

    def one(i: int) -> MomentProfile:
        return estimate_moment_profile(model, pts[i], fit, n_sim, streams.substream(seed, streams.SCAN, i))

    if max_parallel > 1:
        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            profiles = list(pool.map(one, range(pts.shape[0])))
    else:
        profiles = [one(i) for i in range(pts.shape[0])]
    mu = np.array([pr.mu for pr in profiles])
    v = np.array([pr.v for pr in profiles])
    mu_sq = mu * mu
    tol = noise_floor_tolerance(v, n_sim) if tolerance is None else float(tolerance)
    if tol < 0:
        raise ValueError("tolerance must be >= 0")
    members = np.flatnonzero(mu_sq <= tol)
    return IdentifiedSetScan(grid=pts, mu_hat=mu, v_hat=v, mu_sq=mu_sq, tolerance=tol, members=members)


@dataclass(frozen=True)
class ConcentrationBoundParams:
    eta: float
    v_max: float
    v_min: float
    tau: float
    m: int

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("need 0 < v_min <= v_max")
        _check_tau(self.tau)
        if self.m < 1:
            raise ValueError("m must be >= 1")


def laplace_ratio_envelope(params: ConcentrationBoundParams, coupling_k: float = 1.0) -> float:
    """exp(-eta / (4 (tau^2 + v_max / m))), valid once m tau^2 >= coupling_k."""
    if params.m * params.tau**2 < coupling_k:
        raise CouplingViolated(f"m*tau^2 = {params.m * params.tau**2:.3g} < K = {coupling_k}")
    return math.exp(-params.eta / (4.0 * (params.tau**2 + params.v_max / params.m)))
