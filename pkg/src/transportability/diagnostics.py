"""Empirical checks of the transport preconditions the data can speak to.

Covers covariate shift (standardized mean difference), support overlap and
the transportable covariate range, positivity of trial eligibility, and IPSW
weight health. Reports facts and threshold flags; there is no overall verdict.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .data import StudyDataset
from .errors import TransportError, ZeroVariance
from .estimators import IpswDetail, PropensityPolicy, estimate_ipsw, fit_eligibility

MIN_ELIGIBILITY_WARN = 0.01
ESS_FRACTION_WARN = 0.1
DOMINANT_WEIGHT_SHARE = 0.5


def covariate_shift_smd(dataset: StudyDataset) -> float:
    """(mean target x - mean trial x) / sqrt((var_trial + var_target) / 2).

    Variances are population (ddof=0) variances of each sample.
    """
    xt, xo = dataset.x_trial, dataset.x_target
    if xt.size < 2 or xo.size < 2:
        raise ZeroVariance("need at least two trial and two target records")
    pooled = np.sqrt((xt.var() + xo.var()) / 2)
    if pooled == 0:
        raise ZeroVariance("pooled covariate standard deviation is zero")
    return float((xo.mean() - xt.mean()) / pooled)


@dataclass(frozen=True)
class SupportReport:
    trial_support: tuple[float, float]
    target_support: tuple[float, float]
    transportable_range: tuple[float, float]
    out_of_support_fraction: float

    @property
    def overlap_empty(self) -> bool:
        lo, hi = self.transportable_range
        return lo > hi


def check_support(dataset: StudyDataset) -> SupportReport:
    t_lo = t_hi = o_lo = o_hi = None
    for r in dataset.records:
        if r.s:
            t_lo = r.x if t_lo is None else min(t_lo, r.x)
            t_hi = r.x if t_hi is None else max(t_hi, r.x)
        else:
            o_lo = r.x if o_lo is None else min(o_lo, r.x)
            o_hi = r.x if o_hi is None else max(o_hi, r.x)
    if o_lo is None:
        raise ValueError("support check needs at least one target record")
    xo = dataset.x_target
    outside = int(np.count_nonzero((xo < t_lo) | (xo > t_hi)))
    return SupportReport(
        (t_lo, t_hi),
        (o_lo, o_hi),
        (max(t_lo, o_lo), min(t_hi, o_hi)),
        outside / dataset.m,
    )


@dataclass(frozen=True)
class EligibilityBin:
    x_low: float
    x_high: float
    count: int
    min_eligibility: float
    mean_eligibility: float


@dataclass(frozen=True)
class PositivityReport:
    min_eligibility: float
    bins: tuple[EligibilityBin, ...]
    warning: bool
    threshold: float = MIN_ELIGIBILITY_WARN


def check_positivity(dataset: StudyDataset, threshold: float = MIN_ELIGIBILITY_WARN,
                     n_bins: int = 10) -> PositivityReport:
    """Fitted P(trial | x) at every target x: minimum plus an equal-count bin table."""
    model = fit_eligibility(dataset)
    xo = np.sort(dataset.x_target)
    p = model.probability(xo)
    bins = tuple(
        EligibilityBin(float(xs[0]), float(xs[-1]), int(xs.size), float(ps.min()), float(ps.mean()))
        for xs, ps in zip(np.array_split(xo, n_bins), np.array_split(p, n_bins))
        if xs.size
    )
    min_elig = float(p.min())
    return PositivityReport(min_elig, bins, min_elig < threshold, threshold)


@dataclass(frozen=True)
class WeightHealth:
    max_weight: float
    effective_sample_size: float
    extreme: bool


def weight_health(detail: IpswDetail | np.ndarray) -> WeightHealth:
    w = np.asarray(detail.weights if isinstance(detail, IpswDetail) else detail, dtype=float)
    if w.size == 0 or np.any(w <= 0):
        raise ValueError("weights must be non-empty and positive")
    total = w.sum()
    ess = float(total**2 / (w @ w))
    mx = float(w.max())
    extreme = ess < ESS_FRACTION_WARN * w.size or mx > DOMINANT_WEIGHT_SHARE * total
    return WeightHealth(mx, ess, bool(extreme))


@dataclass
class DiagnosticsReport:
    smd: Optional[float] = None
    trial_support: Optional[tuple[float, float]] = None
    target_support: Optional[tuple[float, float]] = None
    transportable_range: Optional[tuple[float, float]] = None
    out_of_support_fraction: Optional[float] = None
    min_eligibility: Optional[float] = None
    max_weight: Optional[float] = None
    effective_sample_size: Optional[float] = None
    warnings: list[str] = field(default_factory=list)
    errors: dict[str, dict] = field(default_factory=dict)
    positivity: Optional[PositivityReport] = None

    def to_json(self) -> dict:
        out = {
            "smd": self.smd,
            "trial_support": _pair(self.trial_support),
            "target_support": _pair(self.target_support),
            "transportable_range": _pair(self.transportable_range),
            "out_of_support_fraction": self.out_of_support_fraction,
            "min_eligibility": self.min_eligibility,
            "max_weight": self.max_weight,
            "ess": self.effective_sample_size,
            "warnings": list(self.warnings),
        }
        if self.positivity is not None:
            out["eligibility_bins"] = [asdict(b) for b in self.positivity.bins]
        if self.errors:
            out["errors"] = dict(self.errors)
        return out


def _pair(v):
    return None if v is None else [v[0], v[1]]


def diagnose(dataset: StudyDataset, policy: PropensityPolicy = PropensityPolicy(),
             ipsw_detail: Optional[IpswDetail] = None) -> DiagnosticsReport:
    """Run every diagnostic that applies; failures are recorded, not raised."""
    report = DiagnosticsReport()
    try:
        report.smd = covariate_shift_smd(dataset)
    except TransportError as exc:
        report.errors["smd"] = exc.to_json()

    if dataset.m >= 1:
        sup = check_support(dataset)
        report.trial_support = sup.trial_support
        report.target_support = sup.target_support
        report.transportable_range = sup.transportable_range
        report.out_of_support_fraction = sup.out_of_support_fraction
        if sup.overlap_empty:
            report.warnings.append("trial and target covariate supports do not overlap")
        elif sup.out_of_support_fraction > 0:
            report.warnings.append(
                f"{sup.out_of_support_fraction:.1%} of target records lie outside the trial support"
            )

        try:
            pos = check_positivity(dataset)
            report.positivity = pos
            report.min_eligibility = pos.min_eligibility
            if pos.warning:
                report.warnings.append(
                    f"minimum fitted trial eligibility {pos.min_eligibility:.3g} below {pos.threshold}"
                )
        except TransportError as exc:
            report.errors["positivity"] = exc.to_json()

        if ipsw_detail is None:
            try:
                ipsw_detail = estimate_ipsw(dataset, policy).detail["weights"]
            except TransportError as exc:
                report.errors["weights"] = exc.to_json()
    else:
        report.errors["support"] = {"type": "MissingTarget", "message": "no target records"}

    if ipsw_detail is not None:
        health = weight_health(ipsw_detail)
        report.max_weight = health.max_weight
        report.effective_sample_size = health.effective_sample_size
        if health.extreme:
            report.warnings.append("IPSW weights are extreme (low ESS or one dominant weight)")
    return report
