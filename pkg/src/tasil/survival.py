"""Survival statistics: Kaplan-Meier, two-group log-rank, Cox proportional
hazards (Breslow ties), Harrell's concordance index, and Spearman rank
correlation, plus the cohort CSV format.

Conventions, fixed and documented rather than inherited from any one source:
ties in event times use the Breslow approximation; confidence intervals are
95% with z = 1.959964; log-rank p-values are two-sided via chi-square(1);
a subject censored at an event time is still at risk at that time.
"""

import csv
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .special import chi2_sf, normal_two_sided_p, student_t_two_sided_p

Z_95 = 1.959964


@dataclass(frozen=True)
class SurvivalRecord:
    """One case: follow-up time in months, event flag (True = event observed,
    False = censored), and named real-valued covariates."""

    case_id: str
    time: float
    event: bool
    covariates: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.time > 0:
            raise ValueError(f"record {self.case_id!r}: time must be positive, got {self.time}")
        for name, value in self.covariates.items():
            if not math.isfinite(value):
                raise ValueError(f"record {self.case_id!r}: covariate {name!r} is not finite")


@dataclass(frozen=True)
class Cohort:
    name: str
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.case_id for r in self.records]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"cohort {self.name!r}: duplicate case ids {dup[:5]}")

    def __len__(self):
        return len(self.records)

    def with_score(self, name: str) -> tuple:
        """Records carrying the named covariate (others are excluded by analyses)."""
        return tuple(r for r in self.records if name in r.covariates)


# ---------------------------------------------------------------------------
# Kaplan-Meier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KMStep:
    time: float
    survival: float
    n_at_risk: int
    n_events: int


@dataclass(frozen=True)
class KMCurve:
    """Product-limit estimate. Steps exist only at event times; censored-only
    times do not create steps but shrink later risk sets. ``censor_times``
    (sorted) are carried for plotting tick marks."""

    steps: tuple
    n_total: int
    censor_times: tuple = ()

    def survival_at(self, t: float) -> float:
        """Step-function evaluation; 1.0 before the first event."""
        value = 1.0
        for step in self.steps:
            if step.time <= t:
                value = step.survival
            else:
                break
        return value


def km_fit(records) -> KMCurve:
    """Kaplan-Meier product-limit estimator S(t) = prod_{t_i <= t} (1 - d_i / n_i)."""
    records = tuple(records)
    if not records:
        raise ValueError("Kaplan-Meier estimation needs at least one record")
    times = np.array([r.time for r in records], dtype=np.float64)
    events = np.array([r.event for r in records], dtype=bool)
    order = np.sort(times)
    event_times, d = np.unique(times[events], return_counts=True)
    n_at_risk = len(records) - np.searchsorted(order, event_times, side="left")
    survival = np.cumprod(1.0 - d / n_at_risk)
    steps = tuple(KMStep(float(t), float(s), int(n), int(k))
                  for t, s, n, k in zip(event_times, survival, n_at_risk, d))
    censor_times = tuple(sorted(float(t) for t in times[~events]))
    return KMCurve(steps, n_total=len(records), censor_times=censor_times)


# ---------------------------------------------------------------------------
# Log-rank test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogRankResult:
    chi_square: float
    p_value: float
    observed_a: float
    expected_a: float
    observed_b: float
    expected_b: float
    n_a: int
    n_b: int


def logrank_test(group_a, group_b) -> LogRankResult:
    """Standard two-group log-rank test.

    At each distinct event time the expected split of events follows the
    hypergeometric model over the pooled risk set; the statistic is
    (O_A - E_A)^2 / V against chi-square with one degree of freedom.
    """
    group_a, group_b = tuple(group_a), tuple(group_b)
    if not group_a or not group_b:
        raise ValueError("log-rank test needs two non-empty groups")
    ta = np.array([r.time for r in group_a], dtype=np.float64)
    ea = np.array([r.event for r in group_a], dtype=bool)
    tb = np.array([r.time for r in group_b], dtype=np.float64)
    eb = np.array([r.event for r in group_b], dtype=bool)
    if not (ea.any() or eb.any()):
        raise ValueError("log-rank test needs at least one event overall")

    event_times = np.unique(np.concatenate([ta[ea], tb[eb]]))
    sorted_a, sorted_b = np.sort(ta), np.sort(tb)
    at_risk_a = len(ta) - np.searchsorted(sorted_a, event_times, side="left")
    at_risk_b = len(tb) - np.searchsorted(sorted_b, event_times, side="left")
    n = at_risk_a + at_risk_b
    d_a = _counts_at(ta[ea], event_times)
    d_b = _counts_at(tb[eb], event_times)
    d = d_a + d_b

    frac_a = at_risk_a / n
    expected_a = d * frac_a
    with np.errstate(divide="ignore", invalid="ignore"):
        var_terms = d * frac_a * (1.0 - frac_a) * (n - d) / (n - 1.0)
    var_terms[n <= 1] = 0.0
    variance = float(var_terms.sum())

    o_a = float(d_a.sum())
    e_a = float(expected_a.sum())
    o_b = float(d_b.sum())
    e_b = float(d.sum() - expected_a.sum())
    if variance > 0.0:
        chi_square = (o_a - e_a) ** 2 / variance
    else:
        chi_square = 0.0
    return LogRankResult(chi_square=chi_square, p_value=chi2_sf(chi_square, 1.0),
                         observed_a=o_a, expected_a=e_a,
                         observed_b=o_b, expected_b=e_b,
                         n_a=len(group_a), n_b=len(group_b))


def _counts_at(event_times_for_group, grid_times):
    counts = np.zeros(len(grid_times), dtype=np.float64)
    uniq, c = np.unique(event_times_for_group, return_counts=True)
    idx = np.searchsorted(grid_times, uniq)
    counts[idx] = c
    return counts


# ---------------------------------------------------------------------------
# Cox proportional hazards (Breslow ties)
# ---------------------------------------------------------------------------

def _design(records, covariate_names):
    covariate_names = list(covariate_names)
    n, p = len(records), len(covariate_names)
    x = np.empty((n, p), dtype=np.float64)
    for i, record in enumerate(records):
        for j, name in enumerate(covariate_names):
            if name not in record.covariates:
                raise ValueError(f"record {record.case_id!r} is missing covariate {name!r}")
            x[i, j] = record.covariates[name]
    if not np.isfinite(x).all():
        raise ValueError("covariates contain non-finite values")
    times = np.array([r.time for r in records], dtype=np.float64)
    events = np.array([r.event for r in records], dtype=bool)
    return x, times, events


def cox_partial_loglik(beta, records, covariate_names):
    """Breslow partial log-likelihood with exact gradient and Hessian.

    For each distinct event time with event set D (size d) and risk set R the
    contribution is sum_{i in D} x_i.beta - d * log sum_{k in R} exp(x_k.beta).
    The log-sum-exp is shifted by the max linear predictor to guard overflow.
    """
    records = tuple(records)
    beta = np.asarray(beta, dtype=np.float64)
    x, times, events = _design(records, covariate_names)
    p = x.shape[1]
    if beta.shape != (p,):
        raise ValueError(f"beta must have length {p}")

    eta = x @ beta
    shift = float(eta.max()) if len(eta) else 0.0
    w = np.exp(eta - shift)

    order = np.argsort(times, kind="stable")[::-1]  # descending: grow risk set
    loglik = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    s0 = 0.0
    s1 = np.zeros(p)
    s2 = np.zeros((p, p))
    i = 0
    n = len(records)
    while i < n:
        t = times[order[i]]
        event_idx = []
        while i < n and times[order[i]] == t:
            k = order[i]
            wk = w[k]
            s0 += wk
            s1 += wk * x[k]
            s2 += wk * np.outer(x[k], x[k])
            if events[k]:
                event_idx.append(k)
            i += 1
        if event_idx:
            d = len(event_idx)
            loglik += float(eta[event_idx].sum()) - d * (math.log(s0) + shift)
            mean = s1 / s0
            grad += x[event_idx].sum(axis=0) - d * mean
            hess -= d * (s2 / s0 - np.outer(mean, mean))
    return loglik, grad, hess


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class CoxCoefficient:
    name: str
    coef: float
    se: float
    hazard_ratio: float
    ci_low: float
    ci_high: float
    p_value: float


@dataclass(frozen=True)
class CoxFit:
    coefficients: tuple
    loglik: float
    loglik_null: float
    iterations: int
    converged: bool
    degenerate: bool
    n_used: int
    n_events: int
    n_excluded: int

    def __getitem__(self, name: str) -> CoxCoefficient:
        for coefficient in self.coefficients:
            if coefficient.name == name:
                return coefficient
        raise KeyError(name)


def cox_fit(records, covariate_names, *, max_iter: int = 50, grad_tol: float = 1e-8,
            loglik_tol: float = 1e-10, separation_bound: float = 20.0) -> CoxFit:
    """Newton-Raphson maximisation of the Breslow partial likelihood from beta = 0.

    Records missing any requested covariate are excluded and counted. Separation
    (monotone likelihood) is flagged as degenerate once any |beta| exceeds
    ``separation_bound``; non-convergence within ``max_iter`` iterations leaves
    ``converged`` False. Standard errors come from the inverse negative Hessian
    at the optimum; Wald p-values are two-sided normal.
    """
    covariate_names = list(covariate_names)
    records = tuple(records)
    used = tuple(r for r in records
                 if all(name in r.covariates for name in covariate_names))
    n_excluded = len(records) - len(used)
    n_events = sum(1 for r in used if r.event)
    if n_events < 2:
        raise ValueError(f"Cox fit needs at least 2 events, got {n_events}")
    x, _, _ = _design(used, covariate_names)
    for j, name in enumerate(covariate_names):
        if np.ptp(x[:, j]) == 0.0:
            raise ValueError(f"covariate {name!r} is constant across records")

    p = len(covariate_names)
    beta = np.zeros(p)
    loglik, grad, hess = cox_partial_loglik(beta, used, covariate_names)
    loglik_null = loglik
    iterations = 0
    converged = bool(np.max(np.abs(grad)) < grad_tol)
    degenerate = False
    while not converged and iterations < max_iter:
        iterations += 1
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-hess, grad, rcond=None)[0]
        new_beta = beta + step
        new_loglik, new_grad, new_hess = cox_partial_loglik(new_beta, used, covariate_names)
        halvings = 0
        while new_loglik < loglik and halvings < 30:
            step *= 0.5
            halvings += 1
            new_beta = beta + step
            new_loglik, new_grad, new_hess = cox_partial_loglik(new_beta, used, covariate_names)
        delta_loglik = new_loglik - loglik
        beta, loglik, grad, hess = new_beta, new_loglik, new_grad, new_hess
        if np.max(np.abs(beta)) > separation_bound:
            degenerate = True
            break
        if np.max(np.abs(grad)) < grad_tol or abs(delta_loglik) < loglik_tol:
            converged = True

    se = np.full(p, math.nan)
    try:
        cov = np.linalg.inv(-hess)
        diag = np.diag(cov)
        with np.errstate(invalid="ignore"):
            se = np.where(diag > 0, np.sqrt(np.maximum(diag, 0.0)), math.nan)
    except np.linalg.LinAlgError:
        pass

    coefficients = []
    for j, name in enumerate(covariate_names):
        b, s = float(beta[j]), float(se[j])
        if math.isfinite(s) and s > 0:
            ci_low, ci_high = _safe_exp(b - Z_95 * s), _safe_exp(b + Z_95 * s)
            p_value = normal_two_sided_p(b / s)
        else:
            ci_low = ci_high = p_value = math.nan
        coefficients.append(CoxCoefficient(name=name, coef=b, se=s, hazard_ratio=_safe_exp(b),
                                           ci_low=ci_low, ci_high=ci_high, p_value=p_value))
    return CoxFit(coefficients=tuple(coefficients), loglik=float(loglik),
                  loglik_null=float(loglik_null), iterations=iterations,
                  converged=converged and not degenerate, degenerate=degenerate,
                  n_used=len(used), n_events=n_events, n_excluded=n_excluded)


# ---------------------------------------------------------------------------
# Concordance index
# ---------------------------------------------------------------------------

class Direction(Enum):
    HIGHER_SCORE_HIGHER_RISK = "higher-risk"
    HIGHER_SCORE_LOWER_RISK = "lower-risk"


def c_index(records, risk_score_name: str, direction: Direction) -> float:
    """Harrell's concordance index for a named score.

    Comparable pairs (i, j) have time_i < time_j with an observed event for i;
    a pair is concordant when the subject the score marks as riskier is the one
    who failed first, ties in score count one half. Records missing the score
    are ignored.
    """
    direction = Direction(direction)
    scored = [r for r in records if risk_score_name in r.covariates]
    if not scored:
        raise ValueError(f"no records carry score {risk_score_name!r}")
    times = np.array([r.time for r in scored], dtype=np.float64)
    events = np.array([r.event for r in scored], dtype=bool)
    scores = np.array([r.covariates[risk_score_name] for r in scored], dtype=np.float64)

    comparable = (times[:, None] < times[None, :]) & events[:, None]
    n_comparable = int(comparable.sum())
    if n_comparable == 0:
        raise ValueError("concordance index needs at least one comparable pair")
    if direction is Direction.HIGHER_SCORE_HIGHER_RISK:
        concordant = comparable & (scores[:, None] > scores[None, :])
    else:
        concordant = comparable & (scores[:, None] < scores[None, :])
    tied = comparable & (scores[:, None] == scores[None, :])
    return (int(concordant.sum()) + 0.5 * int(tied.sum())) / n_comparable


# ---------------------------------------------------------------------------
# Spearman rank correlation
# ---------------------------------------------------------------------------

class SpearmanResult(NamedTuple):
    rho: float
    p_value: float


#: Exact-permutation p-values are used up to this sample size, the Student-t
#: approximation above it.
SPEARMAN_EXACT_MAX_N = 10


def spearman(x, y, *, exact_max_n: int = SPEARMAN_EXACT_MAX_N) -> SpearmanResult:
    """Spearman rank-order correlation with mid-ranks for ties.

    rho is the Pearson correlation of the rank vectors. The two-sided p-value
    is exact (full permutation enumeration) for n <= exact_max_n and otherwise
    uses t = rho * sqrt((n - 2) / (1 - rho^2)) against Student-t(n - 2).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1D sequences of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("Spearman correlation needs at least 3 observations")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise ValueError("constant sequence: rank correlation is undefined")

    rx = _midranks(x)
    ry = _midranks(y)
    rho = _pearson(rx, ry)
    if n <= exact_max_n:
        p_value = _spearman_exact_p(rx, ry, rho)
    else:
        if 1.0 - rho * rho <= 0.0:
            p_value = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
            p_value = student_t_two_sided_p(t, n - 2)
    return SpearmanResult(rho=float(rho), p_value=float(p_value))


def _midranks(a):
    order = np.argsort(a, kind="stable")
    ranks = np.empty(len(a), dtype=np.float64)
    sorted_vals = a[order]
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average of 1-based positions
        i = j + 1
    return ranks


def _pearson(u, v):
    uc = u - u.mean()
    vc = v - v.mean()
    return float((uc @ vc) / math.sqrt((uc @ uc) * (vc @ vc)))


def _spearman_exact_p(rx, ry, rho_observed, chunk: int = 100_000):
    """Two-sided exact p over all permutations of one rank vector."""
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    denom = math.sqrt(float((rxc @ rxc) * (ryc @ ryc)))
    threshold = abs(rho_observed) - 1e-12
    total = math.factorial(len(rx))
    hits = 0
    perms = itertools.permutations(ryc.tolist())
    while True:
        block = list(itertools.islice(perms, chunk))
        if not block:
            break
        dots = np.asarray(block) @ rxc
        hits += int((np.abs(dots / denom) >= threshold).sum())
    return hits / total


# ---------------------------------------------------------------------------
# Cohort CSV format
# ---------------------------------------------------------------------------

COHORT_CSV_PREFIX = ("case_id", "time_months", "event")


def load_cohort(path, name: str | None = None) -> Cohort:
    """Read the cohort CSV format: header ``case_id,time_months,event,<covariate...>``,
    event in {0, 1}, empty covariate fields omitted from the record."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty cohort file") from None
        if tuple(header[:3]) != COHORT_CSV_PREFIX:
            raise ValueError(f"{path}: header must start with {','.join(COHORT_CSV_PREFIX)}")
        covariate_names = header[3:]
        records = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            case_id, time_field, event_field = row[0], row[1], row[2]
            try:
                time = float(time_field)
            except ValueError:
                raise ValueError(f"{path}:{line_no}: time_months {time_field!r} is not a number") from None
            if event_field not in ("0", "1"):
                raise ValueError(f"{path}:{line_no}: event must be 0 or 1, got {event_field!r}")
            covariates = {}
            for cov_name, cell in zip(covariate_names, row[3:]):
                if cell == "":
                    continue
                try:
                    covariates[cov_name] = float(cell)
                except ValueError:
                    raise ValueError(f"{path}:{line_no}: covariate {cov_name!r} value {cell!r} is not a number") from None
            records.append(SurvivalRecord(case_id, time, event_field == "1", covariates))
    return Cohort(name or path.stem, tuple(records))


def save_cohort(cohort: Cohort, path, covariate_columns=None) -> None:
    """Write the cohort CSV; covariate column order defaults to the sorted union
    of covariate names. Missing values render as empty fields."""
    if covariate_columns is None:
        names = set()
        for record in cohort.records:
            names.update(record.covariates)
        covariate_columns = sorted(names)
    covariate_columns = list(covariate_columns)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(COHORT_CSV_PREFIX) + covariate_columns)
        for record in cohort.records:
            row = [record.case_id, format(record.time, ".12g"), "1" if record.event else "0"]
            for cov_name in covariate_columns:
                value = record.covariates.get(cov_name)
                row.append("" if value is None else format(value, ".12g"))
            writer.writerow(row)
