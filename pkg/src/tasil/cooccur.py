"""Spatial co-occurrence counting and the digital scores built on it.

A co-occurrence is one unordered pair of adjacent patches whose classes are
both in {tumour, TAS, lymphocyte}; pairs touching non-ROI are ignored. Each
geometric pair is counted exactly once (the score is a ratio, so a uniform
double-count convention would cancel anyway). Adjacency "in any direction"
defaults to the 8-neighbourhood; the 4-neighbourhood is available for
sensitivity analysis.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .grid import AnalysisClass, PatchLabelGrid, class_counts


class Connectivity(IntEnum):
    FOUR_NEIGHBOUR = 4
    EIGHT_NEIGHBOUR = 8


DEFAULT_CONNECTIVITY = Connectivity.EIGHT_NEIGHBOUR

# Forward offsets only, so each unordered neighbour pair is visited once.
_FORWARD_OFFSETS = {
    Connectivity.FOUR_NEIGHBOUR: ((0, 1), (1, 0)),
    Connectivity.EIGHT_NEIGHBOUR: ((0, 1), (1, 0), (1, 1), (1, -1)),
}


@dataclass(frozen=True)
class CooccurrenceCounts:
    """Unordered adjacent-pair counts over {tumour (t), TAS (s), lymphocyte (l)}."""

    tt: int = 0
    tl: int = 0
    ts: int = 0
    ll: int = 0
    ls: int = 0
    ss: int = 0

    def __post_init__(self):
        for name in ("tt", "tl", "ts", "ll", "ls", "ss"):
            if getattr(self, name) < 0:
                raise ValueError(f"count {name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tt + self.tl + self.ts + self.ll + self.ls + self.ss

    def scaled(self, factor: int) -> "CooccurrenceCounts":
        return CooccurrenceCounts(self.tt * factor, self.tl * factor, self.ts * factor,
                                  self.ll * factor, self.ls * factor, self.ss * factor)


# (row class, col class) -> CooccurrenceCounts field, classes ordered T=0, S=1, L=2.
_PAIR_FIELDS = {
    (AnalysisClass.TUMOUR, AnalysisClass.TUMOUR): "tt",
    (AnalysisClass.TUMOUR, AnalysisClass.TAS): "ts",
    (AnalysisClass.TUMOUR, AnalysisClass.LYMPHOCYTE): "tl",
    (AnalysisClass.TAS, AnalysisClass.TAS): "ss",
    (AnalysisClass.TAS, AnalysisClass.LYMPHOCYTE): "ls",
    (AnalysisClass.LYMPHOCYTE, AnalysisClass.LYMPHOCYTE): "ll",
}


def count_cooccurrences(grid: PatchLabelGrid,
                        conn: Connectivity = DEFAULT_CONNECTIVITY) -> CooccurrenceCounts:
    """Count every unordered adjacent pair of ROI patches, once per geometric pair."""
    if grid.classes is not AnalysisClass:
        raise ValueError("co-occurrence counting expects an AnalysisClass grid")
    conn = Connectivity(conn)
    a = grid.labels
    non_roi = AnalysisClass.NON_ROI.value
    pair_hist = np.zeros(16, dtype=np.int64)
    for dr, dc in _FORWARD_OFFSETS[conn]:
        rows, cols = a.shape
        if dr >= rows or abs(dc) >= cols:
            continue
        first = a[: rows - dr, :]
        second = a[dr:, :]
        if dc >= 0:
            first = first[:, : cols - dc]
            second = second[:, dc:]
        else:
            first = first[:, -dc:]
            second = second[:, : cols + dc]
        mask = (first != non_roi) & (second != non_roi)
        lo = np.minimum(first[mask], second[mask]).astype(np.int64)
        hi = np.maximum(first[mask], second[mask]).astype(np.int64)
        pair_hist += np.bincount(lo * 4 + hi, minlength=16)
    fields = {}
    for (ca, cb), name in _PAIR_FIELDS.items():
        lo, hi = min(ca.value, cb.value), max(ca.value, cb.value)
        fields[name] = int(pair_hist[lo * 4 + hi])
    return CooccurrenceCounts(**fields)


def tasil_score(counts: CooccurrenceCounts) -> float | None:
    """Fraction of TAS co-occurrences that involve lymphocytes: ls / (ss + ls + ts).

    0 means no lymphocytic infiltration of the tumour-associated stroma, 1 means
    every TAS co-occurrence pairs with a lymphocyte. None when the grid has no
    TAS co-occurrences at all (denominator 0).
    """
    denom = counts.ss + counts.ls + counts.ts
    if denom == 0:
        return None
    return counts.ls / denom


def l_percentage(grid: PatchLabelGrid) -> float | None:
    """Lymphocyte patches as a fraction of all ROI patches; None if everything is non-ROI."""
    counts = class_counts(grid)
    roi = grid.n_patches - counts[AnalysisClass.NON_ROI]
    if roi == 0:
        return None
    return counts[AnalysisClass.LYMPHOCYTE] / roi


def ts_ratio(grid: PatchLabelGrid, counts: CooccurrenceCounts) -> float | None:
    """Tumour patches over tumour + TAS patches.

    Patch-count surrogate for published tumour/stroma-ratio scores, kept here
    for concordance comparison; swap in a custom strategy via
    ``comparison_scores`` to reproduce a specific published variant.
    """
    cells = class_counts(grid)
    denom = cells[AnalysisClass.TUMOUR] + cells[AnalysisClass.TAS]
    if denom == 0:
        return None
    return cells[AnalysisClass.TUMOUR] / denom


def ic_colocalisation(grid: PatchLabelGrid, counts: CooccurrenceCounts) -> float | None:
    """Tumour-lymphocyte co-occurrences over all tumour/lymphocyte co-occurrences.

    Adjacency surrogate for published immune-cancer colocalisation measures;
    pluggable like the other comparison strategies.
    """
    denom = counts.tt + counts.tl + counts.ll
    if denom == 0:
        return None
    return counts.tl / denom


def tilab(grid: PatchLabelGrid, counts: CooccurrenceCounts) -> float | None:
    """Mean of the lymphocyte/(lymphocyte+tumour) patch ratio and ic_colocalisation.

    Count-ratio surrogate for published lymphocyte-abundance scores; pluggable
    like the other comparison strategies.
    """
    cells = class_counts(grid)
    lt = cells[AnalysisClass.LYMPHOCYTE] + cells[AnalysisClass.TUMOUR]
    coloc = ic_colocalisation(grid, counts)
    if lt == 0 or coloc is None:
        return None
    l2t = cells[AnalysisClass.LYMPHOCYTE] / lt
    return 0.5 * (l2t + coloc)


@dataclass(frozen=True)
class DigitalScores:
    """The five per-slide digital scores; None marks an undefined value
    (degenerate denominator), never a sentinel number."""

    tasil: float | None
    l_percentage: float | None
    ts_ratio: float | None
    ic_coloc: float | None
    tilab: float | None

    def __post_init__(self):
        for name in ("tasil", "l_percentage", "ts_ratio", "ic_coloc", "tilab"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"score {name}={value} outside [0, 1]")


def comparison_scores(grid: PatchLabelGrid, counts: CooccurrenceCounts, *,
                      ts_ratio_fn=ts_ratio, ic_coloc_fn=ic_colocalisation,
                      tilab_fn=tilab) -> DigitalScores:
    """All five digital scores for one grid; each field None on a zero denominator.

    The three comparison-score strategies are keyword-replaceable: any callable
    ``(grid, counts) -> float | None`` may stand in for the default formulas.
    """
    return DigitalScores(
        tasil=tasil_score(counts),
        l_percentage=l_percentage(grid),
        ts_ratio=ts_ratio_fn(grid, counts),
        ic_coloc=ic_coloc_fn(grid, counts),
        tilab=tilab_fn(grid, counts),
    )


SCORE_CSV_COLUMNS = ("slide_id", "tasil", "l_percentage", "ts_ratio", "ic_coloc", "tilab")


def float_field(value: float | None) -> str:
    """Stable CSV rendering: empty field for undefined, 12 significant digits otherwise."""
    return "" if value is None else format(float(value), ".12g")


def score_csv_row(slide_id: str, scores: DigitalScores) -> list[str]:
    """One scores-CSV row in SCORE_CSV_COLUMNS order."""
    return [slide_id,
            float_field(scores.tasil),
            float_field(scores.l_percentage),
            float_field(scores.ts_ratio),
            float_field(scores.ic_coloc),
            float_field(scores.tilab)]
