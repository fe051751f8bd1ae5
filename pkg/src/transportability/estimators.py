"""ATE estimators: naive difference in means, interaction OLS, IPSW and the
plug-in g-formula.

The transport estimators (everything except the naive one) average over the
target records only; trial records are never part of the target sample.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import AteEstimate, Method, StudyDataset
from .errors import DegenerateTrial, InvalidParameter, MissingTarget, RankDeficient
from .numerics import LogisticFit, fit_logistic, fit_ols, fit_polynomial, predict_probability


@dataclass(frozen=True)
class PropensityPolicy:
    """Known, constant probability of assignment to the treated arm."""

    e1: float = 0.5

    def __post_init__(self):
        if not 0 < self.e1 < 1:
            raise InvalidParameter(f"e1 must lie in (0, 1), got {self.e1}")


@dataclass(frozen=True)
class EligibilityModel:
    logistic: LogisticFit
    n: int
    m: int

    def probability(self, x):
        return predict_probability(self.logistic, x)

    def odds(self, x):
        p = self.probability(x)
        return p / (1 - p)


@dataclass(frozen=True)
class IpswDetail:
    weights: tuple[float, ...]
    max_weight: float
    effective_sample_size: float


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / (w @ w))


def _require_arms(dataset: StudyDataset, per_arm: int = 1) -> None:
    if min(dataset.n_treated, dataset.n_control) < per_arm:
        raise DegenerateTrial(
            f"need >= {per_arm} record(s) per arm, have treated={dataset.n_treated}, "
            f"control={dataset.n_control}"
        )


def _require_transport(dataset: StudyDataset, per_arm: int = 2) -> None:
    _require_arms(dataset, per_arm)
    if dataset.m < 1:
        raise MissingTarget("transport estimators need at least one target record")


def estimate_naive(dataset: StudyDataset) -> AteEstimate:
    _require_arms(dataset)
    a, y = dataset.a_trial, dataset.y_trial
    value = y[a == 1].mean() - y[a == 0].mean()
    return AteEstimate(Method.NAIVE, float(value))


def estimate_interaction_ols(dataset: StudyDataset) -> AteEstimate:
    """Fit y = alpha + theta * (a * x) on the trial, report theta * mean(target x).

    The model has no marginal terms for a or x, so the reported number is the
    marginal effect it implies over the target sample.
    """
    _require_transport(dataset)
    ax = dataset.a_trial * dataset.x_trial
    design = np.column_stack([np.ones_like(ax), ax])
    fit = fit_ols(design, dataset.y_trial)
    alpha, theta = fit.coefficients
    value = theta * dataset.x_target.mean()
    return AteEstimate(Method.INTERACTION_OLS, float(value), {"intercept": alpha, "theta": theta})


def fit_eligibility(dataset: StudyDataset) -> EligibilityModel:
    """Logistic model of P(trial | x) over the stacked trial and target covariates."""
    if dataset.m < 1:
        raise MissingTarget("eligibility model needs target records")
    return EligibilityModel(fit_logistic(dataset.x_all, dataset.s_all), dataset.n, dataset.m)


def ipsw_value(y, a, odds, n: int, m: int, e1: float = 0.5) -> tuple[float, np.ndarray]:
    """Horvitz-Thompson IPSW sum given trial-eligibility odds per trial subject.

    Returns the estimate and the per-subject sampling weights ``n / (m * odds)``.
    """
    y, a, odds = (np.asarray(v, dtype=float) for v in (y, a, odds))
    weights = (n / m) / odds
    contrast = a / e1 - (1 - a) / (1 - e1)
    return float(np.mean(weights * y * contrast)), weights


def estimate_ipsw(dataset: StudyDataset, policy: PropensityPolicy = PropensityPolicy()) -> AteEstimate:
    _require_transport(dataset)
    model = fit_eligibility(dataset)
    value, weights = ipsw_value(
        dataset.y_trial, dataset.a_trial, model.odds(dataset.x_trial), dataset.n, dataset.m, policy.e1
    )
    detail = IpswDetail(
        tuple(weights.tolist()), float(weights.max()), effective_sample_size(weights)
    )
    return AteEstimate(
        Method.IPSW,
        value,
        {"weights": detail, "eligibility": model.logistic.coefficients, "e1": policy.e1},
    )


def _fit_arm(x, y, degree: int, label: str, fallbacks: list):
    if np.ptp(x) == 0 and degree > 0:
        fallbacks.append(label)
        return fit_polynomial(x, y, 0)
    try:
        return fit_polynomial(x, y, degree)
    except RankDeficient as exc:
        raise RankDeficient(f"{label} arm: {exc}") from None


def estimate_gformula(dataset: StudyDataset, basis_degree: int = 1) -> AteEstimate:
    """Plug-in g-formula with per-arm polynomial outcome models.

    An arm whose covariate is constant falls back to an intercept-only model;
    the arm is listed under ``detail["fallback_arms"]``.
    """
    if basis_degree < 0:
        raise InvalidParameter("basis_degree must be >= 0")
    _require_transport(dataset, per_arm=basis_degree + 2)
    x, a, y = dataset.x_trial, dataset.a_trial, dataset.y_trial
    fallbacks: list[str] = []
    mu1 = _fit_arm(x[a == 1], y[a == 1], basis_degree, "treated", fallbacks)
    mu0 = _fit_arm(x[a == 0], y[a == 0], basis_degree, "control", fallbacks)
    if fallbacks:
        warnings.warn(f"constant covariate in {fallbacks}; using intercept-only fit", stacklevel=2)
    xt = dataset.x_target
    value = float(np.mean(mu1.predict(xt) - mu0.predict(xt)))
    return AteEstimate(
        Method.GFORMULA,
        value,
        {
            "treated_coefficients": mu1.coefficients,
            "control_coefficients": mu0.coefficients,
            "basis_degree": basis_degree,
            "fallback_arms": fallbacks,
        },
    )


ESTIMATORS = {
    Method.NAIVE: estimate_naive,
    Method.INTERACTION_OLS: estimate_interaction_ols,
    Method.IPSW: estimate_ipsw,
    Method.GFORMULA: estimate_gformula,
}


def estimate_all(dataset: StudyDataset, policy: PropensityPolicy = PropensityPolicy(),
                 basis_degree: int = 1) -> dict[Method, AteEstimate]:
    return {
        Method.NAIVE: estimate_naive(dataset),
        Method.INTERACTION_OLS: estimate_interaction_ols(dataset),
        Method.IPSW: estimate_ipsw(dataset, policy),
        Method.GFORMULA: estimate_gformula(dataset, basis_degree),
    }
