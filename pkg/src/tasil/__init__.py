"""Stroma/lymphocyte co-occurrence scoring and survival analysis on tissue
patch label grids: the TASIL score and companion digital scores, a survival
statistics core (Kaplan-Meier, log-rank, Cox, concordance, Spearman), a
discovery/validation stratification protocol, and a synthetic
tumour-microenvironment generator for end-to-end validation.
"""

__version__ = "0.1.0"

from .grid import (AnalysisClass, AnnotationClass, ConfusionMatrix, PatchLabelGrid,
                   TLGParseError, accuracy, class_counts, class_fractions,
                   confusion_matrix, load_grid, macro_f1, map_to_analysis_classes,
                   save_grid)
from .cooccur import (Connectivity, CooccurrenceCounts, DigitalScores,
                      comparison_scores, count_cooccurrences, l_percentage,
                      tasil_score)
from .survival import (Cohort, CoxFit, Direction, KMCurve, LogRankResult,
                       SurvivalRecord, c_index, cox_fit, cox_partial_loglik,
                       km_fit, load_cohort, logrank_test, save_cohort, spearman)
from .stratify import (CategoryMerge, GroupAssignment, StratificationResult,
                       ThresholdSearchConfig, apply_threshold, discover_threshold,
                       merge_til_categories, run_protocol)
from .synth import SynthCohortConfig, SynthGridConfig, generate_cohort, generate_grid

__all__ = [
    "AnalysisClass", "AnnotationClass", "ConfusionMatrix", "PatchLabelGrid",
    "TLGParseError", "accuracy", "class_counts", "class_fractions",
    "confusion_matrix", "load_grid", "macro_f1", "map_to_analysis_classes",
    "save_grid",
    "Connectivity", "CooccurrenceCounts", "DigitalScores", "comparison_scores",
    "count_cooccurrences", "l_percentage", "tasil_score",
    "Cohort", "CoxFit", "Direction", "KMCurve", "LogRankResult",
    "SurvivalRecord", "c_index", "cox_fit", "cox_partial_loglik", "km_fit",
    "load_cohort", "logrank_test", "save_cohort", "spearman",
    "CategoryMerge", "GroupAssignment", "StratificationResult",
    "ThresholdSearchConfig", "apply_threshold", "discover_threshold",
    "merge_til_categories", "run_protocol",
    "SynthCohortConfig", "SynthGridConfig", "generate_cohort", "generate_grid",
]
