"""Ordinary least-squares surrogate projection of Y on (1, X)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularDesign

GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class Dataset:
    """Paired observations; ``xs`` has shape (n, d) and ``ys`` shape (n,)."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        if xs.ndim != 2 or ys.ndim != 1:
            raise DimensionMismatch("xs must be 2-d and ys 1-d")
        if xs.shape[0] != ys.shape[0]:
            raise DimensionMismatch(f"{xs.shape[0]} covariate rows but {ys.shape[0]} responses")
        if ys.shape[0] < 1:
            raise DimensionMismatch("dataset must contain at least one observation")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.ys.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]


@dataclass(frozen=True)
class SurrogateFit:
    beta: np.ndarray
    n_fit: int
    residual_variance: float
    gram_condition: float

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if beta.size < 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a non-empty finite vector")
        if self.residual_variance < 0:
            raise ValueError("residual_variance must be >= 0")
        object.__setattr__(self, "beta", beta)

    @property
    def d(self) -> int:
        return self.beta.size - 1

    @classmethod
    def from_coefficients(cls, beta) -> "SurrogateFit":
        """Wrap known coefficients (e.g. an analytic probability limit)."""
        return cls(beta=np.asarray(beta, dtype=float), n_fit=0, residual_variance=0.0, gram_condition=1.0)


def augment(x) -> np.ndarray:
    """Prepend the intercept entry: x -> (1, x_1, ..., x_d).

    Works row-wise on a 2-d array as well.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        return np.concatenate(([1.0], x.reshape(-1)))
    return np.hstack((np.ones((x.shape[0], 1)), x))


def fit_ols(data: Dataset, condition_limit: float = GRAM_CONDITION_LIMIT) -> SurrogateFit:
    """Least-squares fit of ``ys`` on the augmented covariates.

    Solved through a thin QR factorization of the design rather than by
    inverting the Gram matrix. Raises ``SingularDesign`` when the Gram
    condition number exceeds ``condition_limit``.
    """
    X = augment(data.xs)
    n, k = X.shape
    if n < k:
        raise SingularDesign(f"need at least {k} observations for {k} coefficients, got {n}")
    gram = X.T @ X
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > condition_limit:
        raise SingularDesign(f"Gram condition number {cond:.3g} exceeds {condition_limit:.3g}")
    q, r = np.linalg.qr(X, mode="reduced")
    beta = np.linalg.solve(r, q.T @ data.ys)
    resid = data.ys - X @ beta
    dof = n - k
    sigma2 = float(resid @ resid / dof) if dof > 0 else 0.0
    return SurrogateFit(beta=beta, n_fit=n, residual_variance=sigma2, gram_condition=cond)


def residual(fit: SurrogateFit, x, y: float) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != fit.d:
        raise DimensionMismatch(f"covariate has dimension {x.size}, fit expects {fit.d}")
    return float(y - fit.beta @ augment(x))


def residuals(fit: SurrogateFit, xs, ys) -> np.ndarray:
    """Vectorised ``residual`` over rows of ``xs``."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs.reshape(-1, fit.d) if fit.d > 0 else xs.reshape(-1, 0)
    if xs.shape[1] != fit.d:
        raise DimensionMismatch(f"covariates have dimension {xs.shape[1]}, fit expects {fit.d}")
    return np.asarray(ys, dtype=float) - augment(xs) @ fit.beta
