"""Batched simulation, kernel weighting and the self-normalised particle measure."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from . import streams
from .errors import EmptyBatch, EmptyInput, LengthMismatch, NonFiniteH, NonPositiveBandwidth
from .simulators import SimulatorModel
from .surrogate import SurrogateFit, residuals

LOG_TINY = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class CalibrationConfig:
    n_theta: int
    batch_size: int
    bandwidth: float
    seed: int
    max_parallel: int = 1

    def __post_init__(self) -> None:
        if self.n_theta < 1:
            raise ValueError("n_theta must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (self.bandwidth > 0) or not math.isfinite(self.bandwidth):
            raise NonPositiveBandwidth(f"bandwidth must be positive and finite, got {self.bandwidth}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")

    def as_record(self) -> dict:
        """Fields that determine the output (parallelism is only a hint)."""
        rec = asdict(self)
        rec.pop("max_parallel")
        return rec


@dataclass(frozen=True)
class ParticleDraws:
    """Prior draws with the batch statistics needed to weight them under any beta."""

    thetas: np.ndarray  # (n, p)
    xbar: np.ndarray  # (n, d + 1), mean augmented covariate per batch
    ybar: np.ndarray  # (n,)
    batch_size: int
    seed: int

    @property
    def n(self) -> int:
        return self.ybar.shape[0]

    def batch_residuals(self, fit: SurrogateFit) -> np.ndarray:
        return self.ybar - self.xbar @ fit.beta


@dataclass(frozen=True)
class WeightedParticleSet:
    thetas: np.ndarray
    residuals: np.ndarray
    log_weights: np.ndarray
    weights: np.ndarray
    config: CalibrationConfig
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def particles(self) -> list[dict]:
        return [
            {"theta": t.tolist(), "R": float(r), "log_w": float(lw), "w": float(w)}
            for t, r, lw, w in zip(self.thetas, self.residuals, self.log_weights, self.weights)
        ]


def batch_residual(fit: SurrogateFit, batch: Sequence[tuple]) -> float:
    """Mean of y - beta.(1, x) over a batch of (x, y) pairs."""
    if len(batch) == 0:
        raise EmptyBatch("batch must contain at least one pair")
    xs = np.array([np.asarray(x, dtype=float).reshape(-1) for x, _ in batch])
    ys = np.array([float(y) for _, y in batch])
    return float(residuals(fit, xs, ys).mean())


def kernel_log_weight(r, tau: float):
    if not tau > 0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {tau}")
    return -np.square(r) / (2.0 * tau * tau)


def self_normalize(log_weights) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0:
        raise EmptyInput("cannot normalise an empty weight vector")
    if not np.all(np.isfinite(lw)):
        raise ValueError("log-weights must be finite")
    w = np.exp(lw - logsumexp(lw))
    return w / w.sum()


def effective_sample_size(ps: WeightedParticleSet | np.ndarray) -> float:
    w = ps.weights if isinstance(ps, WeightedParticleSet) else np.asarray(ps, dtype=float)
    return float(1.0 / np.sum(w * w))


def expectation(ps: WeightedParticleSet, h: Callable | np.ndarray, vectorized: bool = False) -> float:
    """Weighted average of h over the particles.

    ``h`` is a callable on a single theta, a callable on the whole (n, p)
    array when ``vectorized`` is set, or precomputed values.
    """
    if callable(h):
        vals = h(ps.thetas) if vectorized else np.array([h(t) for t in ps.thetas], dtype=float)
    else:
        vals = h
    vals = np.asarray(vals, dtype=float).reshape(-1)
    if vals.size != ps.n:
        raise LengthMismatch(f"{vals.size} values for {ps.n} particles")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteH("test function is not finite on every particle")
    return float(ps.weights @ vals)


def _simulate_chunk(model: SimulatorModel, indices: range, batch_size: int, seed: int):
    p = model.param_dim
    k = model.covariate_dim + 1
    thetas = np.empty((len(indices), p))
    xbar = np.empty((len(indices), k))
    ybar = np.empty(len(indices))
    for row, j in enumerate(indices):
        rng = streams.substream(seed, streams.PRIOR_AND_BATCH, j)
        theta = model.draw_prior(rng)
        thetas[row] = theta
        xbar[row], ybar[row] = model.batch_means(theta, batch_size, rng)
    return thetas, xbar, ybar


def _chunks(n: int, n_chunks: int) -> list[range]:
    n_chunks = max(1, min(n_chunks, n))
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    return [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]


def resolve_parallelism(hint: int | None = None) -> int:
    if hint is not None:
        return max(1, int(hint))
    env = os.environ.get("PSEUDOPOST_THREADS")
    return max(1, int(env)) if env and env.isdigit() else 1


def simulate_particles(model: SimulatorModel, n_theta: int, batch_size: int, seed: int, max_parallel: int = 1) -> ParticleDraws:
    """Draw theta_j from the prior and a fresh batch of pairs for each.

    Particle j uses its own substream keyed by (seed, j): the output is the
    same for any ``max_parallel``, and the first k particles are the same for
    any ``n_theta >= k``.
    """
    # several chunks per worker keeps the pool busy when chunk costs differ
    parts = _chunks(n_theta, 4 * max_parallel if max_parallel > 1 else 1)
    if max_parallel > 1:
        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            results = list(pool.map(lambda r: _simulate_chunk(model, r, batch_size, seed), parts))
    else:
        results = [_simulate_chunk(model, r, batch_size, seed) for r in parts]
    thetas, xbar, ybar = (np.concatenate(cols) for cols in zip(*results))
    return ParticleDraws(thetas=thetas, xbar=xbar, ybar=ybar, batch_size=batch_size, seed=seed)


def weigh_particles(draws: ParticleDraws, fit: SurrogateFit, config: CalibrationConfig) -> WeightedParticleSet:
    r = draws.batch_residuals(fit)
    lw = kernel_log_weight(r, config.bandwidth)
    return WeightedParticleSet(
        thetas=draws.thetas,
        residuals=r,
        log_weights=lw,
        weights=self_normalize(lw),
        config=config,
        degenerate=bool(lw.max() < LOG_TINY),
    )


def run_calibration(model: SimulatorModel, fit: SurrogateFit, config: CalibrationConfig) -> WeightedParticleSet:
    if fit.d != model.covariate_dim:
        raise LengthMismatch(f"fit has {fit.d} slopes but model has {model.covariate_dim} covariates")
    draws = simulate_particles(model, config.n_theta, config.batch_size, config.seed, config.max_parallel)
    return weigh_particles(draws, fit, config)


def pilot_bandwidth(
    model: SimulatorModel,
    fit: SurrogateFit,
    batch_size: int,
    seed: int,
    n_pilot: int = 200,
    factor: float = 0.5,
) -> float:
    """``factor`` times the spread of prior-predictive batch residuals."""
    rs = np.empty(n_pilot)
    for j in range(n_pilot):
        rng = streams.substream(seed, streams.PILOT, j)
        theta = model.draw_prior(rng)
        xbar, ybar = model.batch_means(theta, batch_size, rng)
        rs[j] = ybar - xbar @ fit.beta
    sd = float(np.std(rs, ddof=1))
    if not sd > 0:
        raise NonPositiveBandwidth("pilot residuals have zero spread; set the bandwidth explicitly")
    return factor * sd


@dataclass(frozen=True)
class SummarySpec:
    """Per-summary targets and bandwidths for multi-relation weighting."""

    targets: np.ndarray
    bandwidths: np.ndarray

    def __post_init__(self) -> None:
        targets = np.asarray(self.targets, dtype=float).reshape(-1)
        bandwidths = np.asarray(self.bandwidths, dtype=float).reshape(-1)
        if targets.size != bandwidths.size:
            raise LengthMismatch("targets and bandwidths differ in length")
        if np.any(~(bandwidths > 0)):
            raise NonPositiveBandwidth("all summary bandwidths must be positive")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "bandwidths", bandwidths)

    @classmethod
    def centered(cls, bandwidths) -> "SummarySpec":
        """Zero targets, matching residual-based summaries."""
        bandwidths = np.asarray(bandwidths, dtype=float).reshape(-1)
        return cls(np.zeros_like(bandwidths), bandwidths)


def multi_summary_log_weight(batch_means, spec: SummarySpec) -> float:
    """Sum over summaries of -(mean_k - target_k)^2 / (2 tau_k^2)."""
    m = np.asarray(batch_means, dtype=float).reshape(-1)
    if m.size != spec.targets.size:
        raise LengthMismatch(f"{m.size} batch means for {spec.targets.size} summaries")
    return float(np.sum(-np.square(m - spec.targets) / (2.0 * np.square(spec.bandwidths))))
