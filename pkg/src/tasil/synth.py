"""Synthetic tumour-microenvironment and cohort generation.

Grids carry disc-shaped tumour nests ringed by a tumour-associated-stroma band;
each stroma cell independently flips to lymphocyte with probability theta, so
theta is the planted ground-truth infiltration level. Cohorts draw theta per
case, score the generated grid, and sample exponential survival whose hazard
shrinks with theta (higher infiltration, lower risk), so downstream statistics
can be tested against a known effect direction.

All randomness flows from numpy SeedSequence: the cohort generator spawns one
child sequence per case, so case k is identical no matter how many cases are
generated or in which order.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cooccur import DEFAULT_CONNECTIVITY, comparison_scores, count_cooccurrences
from .grid import AnalysisClass, DEFAULT_PATCH_SIZE_UM, PatchLabelGrid
from .survival import Cohort, SurvivalRecord

MAX_THETA = 0.8  # keeps the stroma band populated so the score denominator stays positive

SCORE_COLUMNS = ("tasil", "l_percentage", "ts_ratio", "ic_coloc", "tilab")


@dataclass(frozen=True)
class SynthGridConfig:
    rows: int = 96
    cols: int = 96
    n_tumour_nests: int = 3
    nest_radius_range: tuple = (6, 12)
    stroma_width: int = 3
    infiltration_theta: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")
        if self.n_tumour_nests < 1:
            raise ValueError("n_tumour_nests must be positive")
        r_min, r_max = self.nest_radius_range
        if not 1 <= r_min <= r_max:
            raise ValueError("nest_radius_range must satisfy 1 <= min <= max")
        if self.stroma_width < 1:
            raise ValueError("stroma_width must be positive")
        if not 0.0 <= self.infiltration_theta <= MAX_THETA:
            raise ValueError(f"infiltration_theta must lie in [0, {MAX_THETA}]")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")


def generate_grid(cfg: SynthGridConfig) -> tuple[PatchLabelGrid, float]:
    """Generate one grid; returns (grid, ground-truth theta). Deterministic given the seed."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    grid = _generate_grid_with_rng(cfg, rng, slide_id=f"synth-{cfg.rng_seed}")
    return grid, cfg.infiltration_theta


def _generate_grid_with_rng(cfg: SynthGridConfig, rng, slide_id: str) -> PatchLabelGrid:
    rows, cols = cfg.rows, cfg.cols
    labels = np.full((rows, cols), AnalysisClass.NON_ROI.value, dtype=np.uint8)
    rr, cc = np.mgrid[0:rows, 0:cols]
    tumour = np.zeros((rows, cols), dtype=bool)
    tas_band = np.zeros((rows, cols), dtype=bool)
    r_min, r_max = cfg.nest_radius_range
    for _ in range(cfg.n_tumour_nests):
        radius = int(rng.integers(r_min, r_max + 1))
        if rows - 1 - radius < radius or cols - 1 - radius < radius:
            raise ValueError(
                f"nest of radius {radius} cannot be placed in a {rows}x{cols} grid")
        r0 = int(rng.integers(radius, rows - radius))
        c0 = int(rng.integers(radius, cols - radius))
        dist_sq = (rr - r0) ** 2 + (cc - c0) ** 2
        tumour |= dist_sq <= radius ** 2
        tas_band |= dist_sq <= (radius + cfg.stroma_width) ** 2
    tas_band &= ~tumour
    labels[tas_band] = AnalysisClass.TAS.value
    labels[tumour] = AnalysisClass.TUMOUR.value
    # infiltration: each stroma cell flips independently with probability theta
    flips = rng.random((rows, cols)) < cfg.infiltration_theta
    labels[tas_band & flips] = AnalysisClass.LYMPHOCYTE.value
    return PatchLabelGrid(slide_id, labels, AnalysisClass, DEFAULT_PATCH_SIZE_UM)


@dataclass(frozen=True)
class SynthCohortConfig:
    n_cases: int = 200
    theta_range: tuple = (0.0, 0.8)
    baseline_hazard: float = 0.03  # events per month at theta = 0
    effect_beta: float = 1.0  # hazard multiplier exp(-beta * theta)
    censor_horizon_months: float = 240.0
    rng_seed: int = 0
    grid: SynthGridConfig = SynthGridConfig()

    def __post_init__(self):
        if self.n_cases < 1:
            raise ValueError("n_cases must be positive")
        lo, hi = self.theta_range
        if not 0.0 <= lo <= hi <= MAX_THETA:
            raise ValueError(f"theta_range must satisfy 0 <= low <= high <= {MAX_THETA}")
        if not self.baseline_hazard > 0:
            raise ValueError("baseline_hazard must be positive")
        if not self.censor_horizon_months > 0:
            raise ValueError("censor_horizon_months must be positive")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")


class SynthCohort(NamedTuple):
    cohort: Cohort
    theta_by_case: dict
    grids: tuple | None


def generate_cohort(cfg: SynthCohortConfig, include_grids: bool = False) -> SynthCohort:
    """Generate a scored synthetic cohort with known per-case infiltration.

    Per case: draw theta uniformly from theta_range, generate a grid from the
    grid template (theta and seed overridden per case), attach its defined
    digital scores as covariates, then draw an exponential event time with
    rate baseline_hazard * exp(-effect_beta * theta) censored at an independent
    uniform time within the horizon. ``event`` is True when the event precedes
    the censoring time.
    """
    root = np.random.SeedSequence(cfg.rng_seed)
    children = root.spawn(cfg.n_cases)
    records = []
    thetas = {}
    grids = [] if include_grids else None
    width = max(5, len(str(cfg.n_cases - 1)))
    for k in range(cfg.n_cases):
        rng = np.random.default_rng(children[k])
        case_id = f"case-{k:0{width}d}"
        theta = float(rng.uniform(*cfg.theta_range))
        grid_cfg = SynthGridConfig(rows=cfg.grid.rows, cols=cfg.grid.cols,
                                   n_tumour_nests=cfg.grid.n_tumour_nests,
                                   nest_radius_range=cfg.grid.nest_radius_range,
                                   stroma_width=cfg.grid.stroma_width,
                                   infiltration_theta=theta,
                                   rng_seed=cfg.grid.rng_seed)
        grid = _generate_grid_with_rng(grid_cfg, rng, slide_id=case_id)
        scores = comparison_scores(grid, count_cooccurrences(grid, DEFAULT_CONNECTIVITY))
        covariates = {name: value for name in SCORE_COLUMNS
                      if (value := getattr(scores, name)) is not None}

        rate = cfg.baseline_hazard * np.exp(-cfg.effect_beta * theta)
        event_time = float(rng.exponential(1.0 / rate))
        censor_time = float(cfg.censor_horizon_months * (1.0 - rng.random()))  # (0, horizon]
        time = min(event_time, censor_time)
        records.append(SurvivalRecord(case_id, time, event_time <= censor_time, covariates))
        thetas[case_id] = theta
        if include_grids:
            grids.append(grid)
    cohort = Cohort(f"synth-{cfg.rng_seed}", tuple(records))
    return SynthCohort(cohort=cohort, theta_by_case=thetas,
                       grids=tuple(grids) if include_grids else None)
