"""Simulated GenAI code-review study.

Population covariate (years of experience) is negative binomial, trial
selection is logit-linear and decreasing in experience, arms are randomized
with a fixed propensity and the treatment effect decays exponentially in
experience: ``tau(x) = effect_scale * exp(-x / effect_decay)``. The outcome has
no marginal dependence on x.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Arm, Sample, StudyDataset, SubjectRecord, validate
from .errors import ConfigError, InvalidParameter, NonConvergentTail
from .numerics import (
    RandomSource,
    sample_bernoulli,
    sample_negative_binomial,
    sample_normal,
    sigmoid,
)

TAIL_MASS = 1e-12
X_MAX_CAP = 10**6
CALIBRATION_POPULATIONS = ("target", "full")


@dataclass(frozen=True)
class SimulationConfig:
    population_size: int = 1000
    covariate_mean: float = 10.0
    covariate_dispersion: float = 3.0
    selection_intercept: float = 0.3
    selection_slope: float = -0.25
    effect_scale: Optional[float] = None  # None: calibrate to target_ate
    effect_decay: float = 20.0
    target_ate: float = 16.7
    # "target": average of tau(X) over non-trial subjects; "full": whole population
    calibration_population: str = "target"
    baseline: float = 50.0
    noise_sd: float = 10.0
    e1: float = 0.5

    def __post_init__(self):
        if self.population_size < 1:
            raise ConfigError("population_size must be positive")
        if not (self.covariate_mean > 0 and self.covariate_dispersion > 0):
            raise ConfigError("covariate_mean and covariate_dispersion must be positive")
        if not self.effect_decay > 0:
            raise ConfigError("effect_decay must be positive")
        if self.effect_scale is not None and not self.effect_scale > 0:
            raise ConfigError("effect_scale must be positive")
        if not self.noise_sd > 0:
            raise ConfigError("noise_sd must be positive")
        if not 0 < self.e1 < 1:
            raise ConfigError("e1 must lie in (0, 1)")
        if self.calibration_population not in CALIBRATION_POPULATIONS:
            raise ConfigError(f"calibration_population must be one of {CALIBRATION_POPULATIONS}")
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and math.isnan(v):
                raise ConfigError(f"{f.name} is NaN")

    def selection_probability(self, x):
        return sigmoid(self.selection_intercept + self.selection_slope * np.asarray(x, dtype=float))

    def calibrated(self) -> "SimulationConfig":
        if self.effect_scale is not None:
            return self
        return dataclasses.replace(self, effect_scale=calibrate_effect_scale(self))


def covariate_pmf(mean: float, dispersion: float, tail_mass: float = TAIL_MASS) -> np.ndarray:
    """NB probability mass on 0..x_max, truncated once the tail is below ``tail_mass``."""
    q = mean / (mean + dispersion)
    log_p = dispersion * math.log1p(-q)  # log P(X=0) = dispersion * log(dispersion/(mean+dispersion))
    probs = []
    k = 0
    while True:
        p = math.exp(log_p)
        probs.append(p)
        # past the mode successive pmf ratios never exceed max(ratio, q) < 1,
        # so the remaining mass is bounded by a geometric series
        ratio = (k + dispersion) / (k + 1) * q
        r = max(ratio, q)
        if ratio < 1 and p * r / (1 - r) < tail_mass:
            break
        k += 1
        if k > X_MAX_CAP:
            raise NonConvergentTail(f"tail mass still above {tail_mass} at x={X_MAX_CAP}")
        log_p += math.log(ratio)
    return np.array(probs)


def calibration_weights(config: SimulationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Support points and (unnormalised) mass of the population tau is averaged over."""
    pmf = covariate_pmf(config.covariate_mean, config.covariate_dispersion)
    xs = np.arange(pmf.size, dtype=float)
    if config.calibration_population == "target":
        pmf = pmf * (1 - config.selection_probability(xs))
    return xs, pmf


def expected_decay(config: SimulationConfig) -> float:
    """E[exp(-X / effect_decay)] over the calibration population."""
    xs, w = calibration_weights(config)
    return float(np.sum(w * np.exp(-xs / config.effect_decay)) / np.sum(w))


def calibrate_effect_scale(config: SimulationConfig) -> float:
    if config.target_ate == 0:
        raise InvalidParameter("target_ate must be non-zero")
    return config.target_ate / expected_decay(config)


def true_cate(x, config: SimulationConfig):
    if config.effect_scale is None:
        config = config.calibrated()
    return config.effect_scale * np.exp(-np.asarray(x, dtype=float) / config.effect_decay)


@dataclass(frozen=True)
class SimulatedStudy:
    dataset: StudyDataset
    true_effects: np.ndarray  # tau(x) per record, same order as dataset.records

    @property
    def target_ate(self) -> float:
        """Realised mean true effect over the target records."""
        mask = self.dataset.s_all == 0
        return float(self.true_effects[mask].mean())

    @property
    def trial_ate(self) -> float:
        mask = self.dataset.s_all == 1
        return float(self.true_effects[mask].mean())


def generate_dataset(config: SimulationConfig, rng: RandomSource) -> SimulatedStudy:
    config = config.calibrated()
    N = config.population_size
    x = sample_negative_binomial(config.covariate_mean, config.covariate_dispersion, rng, N)
    x = x.astype(float)
    s = sample_bernoulli(config.selection_probability(x), rng)
    tau = true_cate(x, config)

    trial = np.flatnonzero(s == 1)
    a = sample_bernoulli(np.full(trial.size, config.e1), rng)
    noise = sample_normal(0.0, config.noise_sd, rng, trial.size)
    y = config.baseline + tau[trial] * a + noise

    records = [SubjectRecord(xi, Sample.TARGET) for xi in x.tolist()]
    for j, i in enumerate(trial.tolist()):
        records[i] = SubjectRecord(float(x[i]), Sample.TRIAL, Arm(int(a[j])), float(y[j]))
    return SimulatedStudy(validate(records), tau)
