"""Monte-Carlo replication study, config files and JSON report assembly."""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import Method, StudyDataset
from .diagnostics import diagnose
from .errors import ConfigError, NumericalError, ReplicationFailed, TransportError, ValidationError
from .estimators import ESTIMATORS, PropensityPolicy, estimate_all
from .numerics import RandomSource
from .simulation import SimulationConfig, generate_dataset

log = logging.getLogger(__name__)

MAX_RETRIES = 3
METHOD_ORDER = (Method.NAIVE, Method.INTERACTION_OLS, Method.IPSW, Method.GFORMULA)


# -- config files --------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(SimulationConfig)}


def _coerce(name: str, text: str):
    default = getattr(SimulationConfig(), name)
    if name == "calibration_population":
        return text
    if name == "effect_scale":
        return None if text.lower() in ("", "none", "auto") else float(text)
    if isinstance(default, int):
        return int(text)
    return float(text)


def config_overrides(pairs: dict[str, str], base: SimulationConfig = SimulationConfig()) -> SimulationConfig:
    unknown = sorted(set(pairs) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    try:
        values = {k: _coerce(k, v) for k, v in pairs.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return dataclasses.replace(base, **values)


def parse_config(text: str, base: SimulationConfig = SimulationConfig()) -> SimulationConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return config_overrides(pairs, base)


def load_config(path) -> SimulationConfig:
    if path is None:
        return SimulationConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_json(config: SimulationConfig) -> dict:
    return dataclasses.asdict(config)


# -- replications --------------------------------------------------------------

def replication_stream(master_seed: int, index: int, attempt: int = 0) -> RandomSource:
    rng = RandomSource(master_seed).substream(index)
    return rng if attempt == 0 else rng.substream(attempt)


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    attempt: int
    n: int
    m: int
    realized_target_ate: float
    estimates: dict[Method, float]
    failures: tuple[str, ...] = ()


def run_single(config: SimulationConfig, rng: RandomSource) -> tuple[StudyDataset, dict[Method, float], float]:
    study = generate_dataset(config, rng)
    ests = estimate_all(study.dataset, PropensityPolicy(config.e1))
    return study.dataset, {m: e.value for m, e in ests.items()}, study.target_ate


def _replicate_slot(args) -> ReplicationResult:
    config, master_seed, index = args
    failures = []
    for attempt in range(MAX_RETRIES + 1):
        try:
            ds, values, realized = run_single(config, replication_stream(master_seed, index, attempt))
        except (NumericalError, ValidationError) as exc:
            failures.append(f"attempt {attempt}: {exc.code}: {exc}")
            continue
        if all(np.isfinite(v) for v in values.values()):
            return ReplicationResult(index, attempt, ds.n, ds.m, realized, values, tuple(failures))
        failures.append(f"attempt {attempt}: non-finite estimate")
    raise ReplicationFailed(f"replication {index} failed {MAX_RETRIES + 1} times: {failures}")


def quantile(values, q: float) -> float:
    """Linear interpolation between order statistics (Hyndman-Fan type 7)."""
    return float(np.quantile(np.asarray(values, dtype=float), q, method="linear"))


@dataclass(frozen=True)
class MethodSummary:
    estimates: tuple[float, ...]
    median: float
    q25: float
    q75: float
    mean: float
    bias: float
    rmse: float
    minimum: float
    maximum: float

    @property
    def iqr(self) -> float:
        return self.q75 - self.q25

    @classmethod
    def from_estimates(cls, estimates: Sequence[float], true_tau: float) -> "MethodSummary":
        v = np.asarray(estimates, dtype=float)
        return cls(
            tuple(v.tolist()),
            quantile(v, 0.5),
            quantile(v, 0.25),
            quantile(v, 0.75),
            float(v.mean()),
            float(v.mean() - true_tau),
            float(np.sqrt(np.mean((v - true_tau) ** 2))),
            float(v.min()),
            float(v.max()),
        )

    def to_json(self) -> dict:
        return {
            "median": self.median,
            "q25": self.q25,
            "q75": self.q75,
            "mean": self.mean,
            "bias": self.bias,
            "rmse": self.rmse,
            "min": self.minimum,
            "max": self.maximum,
            "estimates": list(self.estimates),
        }


@dataclass(frozen=True)
class ReplicationSummary:
    per_method: dict[Method, MethodSummary]
    true_tau: float
    replications: int
    master_seed: int
    config: SimulationConfig
    trial_sizes: tuple[int, ...] = ()
    realized_target_ates: tuple[float, ...] = ()
    retries: tuple[str, ...] = field(default=())

    def __getitem__(self, method) -> MethodSummary:
        return self.per_method[Method(method)]

    def to_json(self) -> dict:
        return {
            "true_tau": self.true_tau,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "config": config_to_json(self.config),
            "methods": {m.value: self.per_method[m].to_json() for m in METHOD_ORDER},
            "trial_sizes": list(self.trial_sizes),
            "mean_trial_size": float(np.mean(self.trial_sizes)) if self.trial_sizes else None,
            "realized_target_ates": list(self.realized_target_ates),
            "retries": list(self.retries),
        }


def summarize(results: Sequence[ReplicationResult], config: SimulationConfig,
              master_seed: int) -> ReplicationSummary:
    results = sorted(results, key=lambda r: r.index)
    true_tau = config.target_ate
    per_method = {
        m: MethodSummary.from_estimates([r.estimates[m] for r in results], true_tau)
        for m in METHOD_ORDER
    }
    retries = tuple(f"replication {r.index}: {f}" for r in results for f in r.failures)
    return ReplicationSummary(
        per_method,
        true_tau,
        len(results),
        master_seed,
        config,
        tuple(r.n for r in results),
        tuple(r.realized_target_ate for r in results),
        retries,
    )


def run_replications(config: SimulationConfig, replications: int, master_seed: int,
                     workers: int = 1) -> ReplicationSummary:
    """Replication ``i`` draws its dataset from substream ``i`` of ``master_seed``.

    A replication whose estimators fail is re-drawn from child substreams of
    slot ``i`` (at most ``MAX_RETRIES`` times); the failure is kept in the
    summary's retry log. Results are reduced in index order, so ``workers``
    never changes the output.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    config = config.calibrated()
    jobs = [(config, master_seed, i) for i in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_slot, jobs, chunksize=max(1, replications // (4 * workers))))
    else:
        results = [_replicate_slot(job) for job in jobs]
    for r in results:
        for f in r.failures:
            log.warning("replication %d re-drawn: %s", r.index, f)
    return summarize(results, config, master_seed)


# -- single-dataset estimation -------------------------------------------------

def estimate_report(dataset: StudyDataset, methods: Sequence[Method] = METHOD_ORDER,
                    e1: float = 0.5, degree: int = 1, seed: Optional[int] = None) -> dict:
    """JSON-ready estimates and diagnostics for one dataset.

    Estimator failures become per-method ``{"error": {...}}`` entries.
    """
    policy = PropensityPolicy(e1)
    estimates = {}
    ipsw_detail = None
    for method in methods:
        method = Method(method)
        try:
            if method is Method.IPSW:
                est = ESTIMATORS[method](dataset, policy)
            elif method is Method.GFORMULA:
                est = ESTIMATORS[method](dataset, degree)
            else:
                est = ESTIMATORS[method](dataset)
        except TransportError as exc:
            estimates[method.value] = {"error": exc.to_json()}
            continue
        entry = {"value": est.value}
        if method is Method.IPSW:
            ipsw_detail = est.detail["weights"]
            entry["max_weight"] = ipsw_detail.max_weight
            entry["ess"] = ipsw_detail.effective_sample_size
            entry["eligibility_coefficients"] = list(est.detail["eligibility"])
        elif method is Method.INTERACTION_OLS:
            entry["intercept"] = est.detail["intercept"]
            entry["theta"] = est.detail["theta"]
        elif method is Method.GFORMULA:
            entry["treated_coefficients"] = list(est.detail["treated_coefficients"])
            entry["control_coefficients"] = list(est.detail["control_coefficients"])
            entry["basis_degree"] = degree
            entry["fallback_arms"] = list(est.detail["fallback_arms"])
        estimates[method.value] = entry
    report = diagnose(dataset, policy, ipsw_detail)
    return {
        "estimates": estimates,
        "diagnostics": report.to_json(),
        "meta": {"n": dataset.n, "m": dataset.m, "seed": seed},
    }


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"
