"""Discovery/validation stratification: maximally selected log-rank threshold
search on a discovery cohort, low/high split of a validation cohort, KM curves
and significance on the validation side only.

The search scans every distinct score value inside a quantile window (default
10-90%) that leaves both groups at least a minimum fraction of the cohort. The
p-value attached to the discovered threshold is the naive log-rank p and is
always labelled maximally selected and uncorrected. The boundary rule is fixed:
score <= threshold -> low group.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .survival import Cohort, CoxFit, KMCurve, LogRankResult, SurvivalRecord, cox_fit, km_fit, logrank_test

MAX_SEL_NOTE = "maximally selected, uncorrected"
GROUP_COVARIATE = "high_group"


class StratificationError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdSearchConfig:
    score_name: str
    quantile_lo: float = 0.1
    quantile_hi: float = 0.9
    min_group_fraction: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.quantile_lo < self.quantile_hi < 1.0:
            raise ValueError("quantile window must satisfy 0 < lo < hi < 1")
        if not 0.0 <= self.min_group_fraction < 0.5:
            raise ValueError("min_group_fraction must lie in [0, 0.5)")


@dataclass(frozen=True)
class ThresholdSearchResult:
    threshold: float
    logrank: LogRankResult
    n_candidates: int
    p_value_note: str = MAX_SEL_NOTE


@dataclass(frozen=True)
class GroupAssignment:
    """Deterministic low/high split: score <= threshold -> low. Cases missing
    the score are excluded and counted."""

    score_name: str
    threshold: float
    low: tuple
    high: tuple
    n_excluded: int

    @property
    def degenerate(self) -> bool:
        return not self.low or not self.high

    def labels(self) -> dict:
        out = {r.case_id: "low" for r in self.low}
        out.update({r.case_id: "high" for r in self.high})
        return out


@dataclass(frozen=True)
class StratificationResult:
    threshold: float
    discovery_logrank: LogRankResult
    validation_logrank: LogRankResult
    validation_hr: CoxFit
    assignment: GroupAssignment
    km_low: KMCurve
    km_high: KMCurve
    p_value_note: str = MAX_SEL_NOTE


def discover_threshold(cohort: Cohort, cfg: ThresholdSearchConfig) -> ThresholdSearchResult:
    """Maximally selected log-rank threshold over the admissible candidate set.

    Candidates are the distinct observed score values inside the quantile
    window that leave both groups >= min_group_fraction of the scored cohort.
    Ties in the statistic break toward the candidate nearest the median score.
    The discovery step never sees any other cohort's survival data.
    """
    scored = cohort.with_score(cfg.score_name)
    if len(scored) < 20:
        raise StratificationError(
            f"threshold search needs >= 20 records with score {cfg.score_name!r}, got {len(scored)}")
    n_events = sum(1 for r in scored if r.event)
    if n_events < 2:
        raise StratificationError(f"threshold search needs >= 2 events, got {n_events}")

    scores = np.array([r.covariates[cfg.score_name] for r in scored], dtype=np.float64)
    if np.ptp(scores) == 0.0:
        raise StratificationError(f"score {cfg.score_name!r} has no variation")

    lo_value, hi_value = np.quantile(scores, [cfg.quantile_lo, cfg.quantile_hi])
    n = len(scores)
    min_group = cfg.min_group_fraction * n
    candidates = []
    for value in np.unique(scores):
        if value < lo_value or value > hi_value:
            continue
        n_low = int((scores <= value).sum())
        if n_low < min_group or (n - n_low) < min_group:
            continue
        candidates.append(float(value))
    if not candidates:
        raise StratificationError(
            f"no admissible threshold candidates in the {cfg.quantile_lo:g}-{cfg.quantile_hi:g} quantile window")

    median_score = float(np.median(scores))
    best = None
    for value in candidates:
        low = [r for r in scored if r.covariates[cfg.score_name] <= value]
        high = [r for r in scored if r.covariates[cfg.score_name] > value]
        result = logrank_test(low, high)
        key = (result.chi_square, -abs(value - median_score), -value)
        if best is None or key > best[0]:
            best = (key, value, result)
    _, threshold, logrank = best
    return ThresholdSearchResult(threshold=threshold, logrank=logrank, n_candidates=len(candidates))


def apply_threshold(cohort: Cohort, score_name: str, threshold: float) -> GroupAssignment:
    """Split a cohort at the threshold (score <= threshold -> low)."""
    low, high = [], []
    n_excluded = 0
    for record in cohort.records:
        value = record.covariates.get(score_name)
        if value is None:
            n_excluded += 1
        elif value <= threshold:
            low.append(record)
        else:
            high.append(record)
    return GroupAssignment(score_name=score_name, threshold=threshold,
                           low=tuple(low), high=tuple(high), n_excluded=n_excluded)


def run_protocol(discovery: Cohort, validation: Cohort, cfg: ThresholdSearchConfig) -> StratificationResult:
    """Full discovery/validation protocol.

    The threshold comes from the discovery cohort alone; the validation cohort
    is split at it and reported with its own log-rank test, per-group KM
    curves, and a univariate Cox hazard ratio (with 95% CI) for the group
    indicator (high = 1).
    """
    search = discover_threshold(discovery, cfg)
    assignment = apply_threshold(validation, cfg.score_name, search.threshold)
    if assignment.degenerate:
        side = "high" if not assignment.high else "low"
        raise StratificationError(
            f"validation stratification is degenerate: the {side} group is empty at threshold {search.threshold:g}")
    validation_logrank = logrank_test(assignment.low, assignment.high)
    indicator_records = tuple(
        SurvivalRecord(r.case_id, r.time, r.event, {GROUP_COVARIATE: float(flag)})
        for group, flag in ((assignment.low, 0.0), (assignment.high, 1.0))
        for r in group)
    validation_hr = cox_fit(indicator_records, [GROUP_COVARIATE])
    return StratificationResult(threshold=search.threshold,
                                discovery_logrank=search.logrank,
                                validation_logrank=validation_logrank,
                                validation_hr=validation_hr,
                                assignment=assignment,
                                km_low=km_fit(assignment.low),
                                km_high=km_fit(assignment.high))


# ---------------------------------------------------------------------------
# Pathologist TIL-category merging
# ---------------------------------------------------------------------------

class CategoryMerge(Enum):
    """How to collapse three-level TIL categories into two groups."""

    LOW_MODERATE_VS_HIGH = "low-moderate-vs-high"
    LOW_VS_MODERATE_HIGH = "low-vs-moderate-high"


_TIL_LEVELS = ("low", "moderate", "high")


@dataclass(frozen=True)
class CategoryMergeResult:
    labels: tuple
    degenerate: bool


def merge_til_categories(levels, merge: CategoryMerge) -> CategoryMergeResult:
    """Collapse Low/Moderate/High TIL levels into two groups 'A' and 'B'.

    LOW_MODERATE_VS_HIGH puts Low and Moderate in 'A', High in 'B';
    LOW_VS_MODERATE_HIGH puts Low alone in 'A'. A result with a single
    realised group is flagged degenerate.
    """
    merge = CategoryMerge(merge)
    levels = list(levels)
    if not levels:
        raise ValueError("no TIL levels to merge")
    labels = []
    for level in levels:
        norm = str(level).strip().lower()
        if norm not in _TIL_LEVELS:
            raise ValueError(f"unknown TIL level {level!r} (expected Low, Moderate or High)")
        if merge is CategoryMerge.LOW_MODERATE_VS_HIGH:
            labels.append("B" if norm == "high" else "A")
        else:
            labels.append("A" if norm == "low" else "B")
    return CategoryMergeResult(labels=tuple(labels), degenerate=len(set(labels)) < 2)
