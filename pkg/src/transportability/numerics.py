"""Numerical kernels: seeded random streams, samplers, OLS and logistic fits.

Random streams are numpy ``PCG64`` generators seeded through
``SeedSequence(seed, spawn_key=path)``, so a (seed, substream path) pair
yields the same draws on every platform and numpy release that keeps the
PCG64 stream stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    InvalidParameter,
    RankDeficient,
    Separation,
)

PROB_CLIP = 1e-6
PIVOT_TOL = 1e-12


class RandomSource:
    """Single-owner random stream identified by ``seed`` and a substream path."""

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= seed < 2**64:
            raise InvalidParameter(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(int(i) for i in path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def substream(self, index: int) -> "RandomSource":
        """Independent child stream; depends only on (seed, path, index)."""
        return RandomSource(self.seed, self.path + (index,))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, path={self.path})"


def sample_negative_binomial(mean, dispersion, rng: RandomSource, size=None):
    """Negative binomial draws in mean/dispersion form, var = mean + mean**2/dispersion.

    Drawn as a gamma-Poisson mixture: rate ~ Gamma(dispersion, mean/dispersion),
    count ~ Poisson(rate).
    """
    if not (mean > 0 and dispersion > 0):
        raise InvalidParameter(f"mean and dispersion must be positive, got {mean}, {dispersion}")
    rate = rng.generator.gamma(dispersion, mean / dispersion, size=size)
    return rng.generator.poisson(rate)


def sample_bernoulli(p, rng: RandomSource, size=None):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr >= 0) | (p_arr > 1)):
        raise InvalidParameter("bernoulli probability outside [0, 1]")
    u = rng.generator.random(size=size if size is not None else p_arr.shape)
    draws = (u < p_arr).astype(int)
    return int(draws) if draws.ndim == 0 else draws


def sample_normal(mean, sd, rng: RandomSource, size=None):
    if not sd > 0:
        raise InvalidParameter(f"sd must be positive, got {sd}")
    return rng.generator.normal(mean, sd, size=size)


# -- least squares -----------------------------------------------------------

@dataclass(frozen=True)
class LinearFit:
    coefficients: tuple[float, ...]
    residual_sum_squares: float
    basis_degree: Optional[int] = None  # None for general (non-polynomial) designs

    def predict(self, x):
        """Evaluate a polynomial-basis fit at ``x`` (scalar or array)."""
        if self.basis_degree is None:
            raise TypeError("predict() needs a polynomial-basis fit; use predict_design()")
        return polynomial_design(x, self.basis_degree) @ np.asarray(self.coefficients)

    def predict_design(self, design):
        return np.asarray(design, dtype=float) @ np.asarray(self.coefficients)


def _cholesky(gram: np.ndarray) -> np.ndarray:
    k = gram.shape[0]
    L = np.zeros_like(gram)
    pivots = []
    for j in range(k):
        d = gram[j, j] - L[j, :j] @ L[j, :j]
        pivots.append(d)
        if d <= PIVOT_TOL * max(max(pivots), 0.0) or d <= 0:
            raise RankDeficient(f"design column {j} is collinear with earlier columns")
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, k):
            L[i, j] = (gram[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def _cho_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = L.shape[0]
    z = np.zeros(k)
    for i in range(k):
        z[i] = (b[i] - L[i, :i] @ z[:i]) / L[i, i]
    out = np.zeros(k)
    for i in reversed(range(k)):
        out[i] = (z[i] - L[i + 1:, i] @ out[i + 1:]) / L[i, i]
    return out


def fit_ols(design_rows, responses, basis_degree: Optional[int] = None) -> LinearFit:
    """Least squares through the normal equations.

    Columns are scaled to unit norm before a Cholesky factorisation; a pivot
    below ``1e-12`` of the largest pivot means the design is rank deficient.
    One round of iterative refinement tightens the residual orthogonality.
    """
    X = np.atleast_2d(np.asarray(design_rows, dtype=float))
    y = np.asarray(responses, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"design {X.shape} does not match responses {y.shape}")
    rows, cols = X.shape
    if rows < cols:
        raise RankDeficient(f"{rows} rows cannot determine {cols} coefficients")

    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise RankDeficient("design has an all-zero column")
    Xs = X / norms
    L = _cholesky(Xs.T @ Xs)
    z = _cho_solve(L, Xs.T @ y)
    z += _cho_solve(L, Xs.T @ (y - Xs @ z))
    beta = z / norms
    resid = y - X @ beta
    return LinearFit(tuple(float(b) for b in beta), float(resid @ resid), basis_degree)


def polynomial_design(x, degree: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.stack([x**p for p in range(degree + 1)], axis=-1)


def fit_polynomial(x, y, degree: int = 1) -> LinearFit:
    return fit_ols(polynomial_design(x, degree), y, basis_degree=degree)


# -- logistic regression -----------------------------------------------------

@dataclass(frozen=True)
class LogisticFit:
    coefficients: tuple[float, float]  # (intercept, slope) on the original x scale
    converged: bool
    iterations: int

    @property
    def intercept(self) -> float:
        return self.coefficients[0]

    @property
    def slope(self) -> float:
        return self.coefficients[1]


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    # split by sign so exp() never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(z):
    out = _sigmoid(np.atleast_1d(z))
    return float(out[0]) if np.ndim(z) == 0 else out


def logistic_loglik(coefficients, features, labels) -> float:
    b0, b1 = coefficients
    eta = b0 + b1 * np.asarray(features, dtype=float)
    lab = np.asarray(labels, dtype=float)
    # log p = -log(1+e^-eta); log(1-p) = -log(1+e^eta)
    return float(np.sum(-lab * np.logaddexp(0, -eta) - (1 - lab) * np.logaddexp(0, eta)))


def logistic_score(coefficients, features, labels) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    resid = np.asarray(labels, dtype=float) - _sigmoid(coefficients[0] + coefficients[1] * x)
    return np.array([resid.sum(), resid @ x])


def fit_logistic(
    features: Sequence[float],
    labels: Sequence[int],
    *,
    step_tol: float = 1e-10,
    grad_tol: float = 1e-8,
    max_iter: int = 100,
    separation_bound: float = 30.0,
) -> LogisticFit:
    """Maximum-likelihood fit of P(label=1 | x) = sigmoid(b0 + b1*x) by Newton-Raphson.

    Newton runs on the standardised covariate; any standardised coefficient
    beyond ``separation_bound`` (or failure to converge within ``max_iter``)
    raises :class:`Separation`, since the MLE is then infinite or unusable.
    """
    x = np.asarray(features, dtype=float)
    lab = np.asarray(labels, dtype=float)
    if x.shape != lab.shape or x.ndim != 1:
        raise DimensionMismatch("features and labels must be 1-d and of equal length")
    if x.size < 2:
        raise DegenerateLabels("need at least two observations")
    if not np.all((lab == 0) | (lab == 1)):
        raise InvalidParameter("labels must be 0 or 1")
    if lab.min() == lab.max():
        raise DegenerateLabels("all labels identical")
    x0, x1 = x[lab == 0], x[lab == 1]
    # one covariate: a finite MLE exists iff neither class lies weakly on one side of the other
    if x0.max() <= x1.min() or x1.max() <= x0.min():
        raise Separation("labels are (quasi-)separated by a threshold on x")

    center, scale = x.mean(), x.std()
    if scale == 0:
        raise RankDeficient("covariate is constant; slope is not identifiable")
    Z = np.column_stack([np.ones_like(x), (x - center) / scale])

    beta = np.zeros(2)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = _sigmoid(Z @ beta)
        grad = Z.T @ (lab - p)
        w = p * (1 - p)
        hess = (Z * w[:, None]).T @ Z
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise Separation("information matrix singular; labels are separable") from None
        beta = beta + step
        if np.max(np.abs(beta)) > separation_bound:
            raise Separation(
                f"standardised coefficients {beta.round(2).tolist()} exceed {separation_bound}"
            )
        # the step is applied even when the gradient test passes: one extra
        # Newton polish costs nothing and keeps results reproducible to ~1e-15
        if np.max(np.abs(step)) < step_tol or np.max(np.abs(grad)) < grad_tol:
            converged = True
            break
    if not converged:
        raise Separation(f"Newton-Raphson did not converge in {max_iter} iterations")

    slope = beta[1] / scale
    intercept = beta[0] - slope * center
    return LogisticFit((float(intercept), float(slope)), True, it)


def predict_probability(fit: LogisticFit, x, eps: float = PROB_CLIP):
    """sigmoid(b0 + b1*x), clipped into [eps, 1 - eps]."""
    p = np.clip(_sigmoid(np.atleast_1d(fit.intercept + fit.slope * np.asarray(x, dtype=float))), eps, 1 - eps)
    return float(p[0]) if np.ndim(x) == 0 else p
