"""Batch command-line surface.

Subcommands: score, survival km|logrank|cox, stratify, correlate, cindex,
eval-seg, synth grid|cohort, plot-km. Every run with file outputs writes a JSON
manifest next to its primary output; reruns with an equal manifest produce
byte-identical outputs. All randomized subcommands require an explicit --seed.

Exit status: 0 success, 1 usage error, 2 data/validation error.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .cooccur import (SCORE_CSV_COLUMNS, Connectivity, comparison_scores,
                      count_cooccurrences, float_field, score_csv_row)
from .grid import (AnalysisClass, AnnotationClass, accuracy, confusion_matrix,
                   load_grid, macro_f1, save_grid)
from .stratify import GROUP_COVARIATE, ThresholdSearchConfig, run_protocol
from .survival import (Cohort, Direction, c_index, cox_fit, km_fit, KMCurve,
                       KMStep, load_cohort, logrank_test, save_cohort, spearman)
from .synth import SCORE_COLUMNS, SynthCohortConfig, SynthGridConfig, generate_cohort, generate_grid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

KM_CSV_HEADER = ("group", "time", "survival", "n_at_risk", "n_events")

_DOMAINS = {"analysis": AnalysisClass, "annotation": AnnotationClass}


class _Parser(argparse.ArgumentParser):
    # the contract here is exit 1 for usage errors (argparse defaults to 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8", newline="")


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class RunManifest:
    command: str
    version: str
    config: dict
    inputs: list
    outputs: list
    seeds: list


def _manifest(args, command, inputs, outputs, seeds=()) -> None:
    """Write the run manifest next to the primary output (no-op without file outputs)."""
    outputs = [str(p) for p in outputs if p is not None]
    if not outputs:
        return
    skip = {"handler", "command", "subcommand"}
    config = {}
    for key, value in vars(args).items():
        if key in skip or callable(value):
            continue
        config[key] = _jsonable(value)
    manifest = RunManifest(command=command, version=__version__, config=config,
                           inputs=[str(p) for p in inputs], outputs=outputs,
                           seeds=list(seeds))
    path = Path(outputs[0] + ".manifest.json")
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _km_rows(label: str, curve: KMCurve):
    for step in curve.steps:
        yield [label, float_field(step.time), float_field(step.survival),
               str(step.n_at_risk), str(step.n_events)]


def km_csv_text(groups) -> str:
    """KM CSV for a sequence of (label, KMCurve): one header, rows grouped by label."""
    rows = [list(KM_CSV_HEADER)]
    for label, curve in groups:
        rows.extend(_km_rows(label, curve))
    return _csv_text(rows)


def read_km_groups(path):
    """Parse KM curves back out of a KM CSV or a stratification report.

    Returns (groups, p_value) where groups is a list of (label, KMCurve) in
    order of first appearance. Censor tick positions are inferred from risk-set
    drops between steps (one tick at each gap midpoint), since the CSV does not
    record censoring times; p_value is taken from a ``validation_p`` preamble
    line when present.
    """
    header = ",".join(KM_CSV_HEADER)
    by_label: dict[str, list] = {}
    p_value = None
    in_block = False
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line == header:
                in_block = True
                continue
            if not line.strip():
                in_block = False
                continue
            fields = next(csv.reader([line]))
            if in_block:
                if len(fields) != len(KM_CSV_HEADER):
                    raise ValueError(f"{path}: bad KM row {line!r}")
                label = fields[0]
                by_label.setdefault(label, []).append(
                    KMStep(time=float(fields[1]), survival=float(fields[2]),
                           n_at_risk=int(fields[3]), n_events=int(fields[4])))
            elif len(fields) == 2 and fields[0] == "validation_p":
                p_value = float(fields[1])
    if not by_label:
        raise ValueError(f"{path}: no KM curve blocks found (expected header {header!r})")
    groups = []
    for label, steps in by_label.items():
        censor_times = []
        for current, nxt in zip(steps, steps[1:]):
            dropped = current.n_at_risk - current.n_events - nxt.n_at_risk
            if dropped > 0:
                censor_times.append(0.5 * (current.time + nxt.time))
        groups.append((label, KMCurve(steps=tuple(steps),
                                      n_total=steps[0].n_at_risk,
                                      censor_times=tuple(censor_times))))
    return groups, p_value


def _read_table(path):
    """Generic CSV: returns (fieldnames, list of row dicts with empty cells dropped)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        rows = [{k: v for k, v in row.items() if v not in (None, "")} for row in reader]
    return reader.fieldnames, rows


def _split_groups(cohort: Cohort, group_col: str):
    values = sorted({r.covariates[group_col] for r in cohort.records if group_col in r.covariates})
    groups = []
    for value in values:
        members = [r for r in cohort.records if r.covariates.get(group_col) == value]
        groups.append((f"{group_col}={format(value, 'g')}", members))
    excluded = sum(1 for r in cohort.records if group_col not in r.covariates)
    return groups, excluded


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_score(args):
    rows = []
    for path in args.grids:
        grid = load_grid(path)
        counts = count_cooccurrences(grid, Connectivity(args.conn))
        rows.append(score_csv_row(grid.slide_id, comparison_scores(grid, counts)))
    rows.sort(key=lambda r: r[0])  # order-independent output
    text = _csv_text([list(SCORE_CSV_COLUMNS)] + rows)
    _emit(text, args.out)
    _manifest(args, "score", inputs=args.grids, outputs=[args.out])
    return EXIT_OK


def _cmd_eval_seg(args):
    classes = _DOMAINS[args.domain]
    truth = load_grid(args.truth, classes)
    pred = load_grid(args.pred, classes)
    cm = confusion_matrix(truth, pred)
    acc, f1 = accuracy(cm), macro_f1(cm)
    rows = [["accuracy", "macro_f1"], [float_field(acc), float_field(f1)], []]
    rows.append(["truth\\pred"] + [m.code for m in classes])
    for member in classes:
        rows.append([member.code] + [str(int(v)) for v in cm.counts[member.value]])
    _emit(_csv_text(rows), args.out)
    if args.out is not None:
        print(f"accuracy={acc:.6g} macro_f1={f1:.6g}")
    _manifest(args, "eval-seg", inputs=[args.truth, args.pred], outputs=[args.out])
    return EXIT_OK


def _default_plot_path(out: Path | None, explicit: Path | None, suffix: str):
    if explicit is not None:
        return explicit
    if out is not None:
        return out.with_name(out.stem + suffix)
    return None


def _cmd_survival_km(args):
    cohort = load_cohort(args.cohort)
    if args.group_col:
        groups, excluded = _split_groups(cohort, args.group_col)
        if not groups:
            raise ValueError(f"no records carry group column {args.group_col!r}")
        if excluded:
            print(f"excluded {excluded} records missing {args.group_col!r}", file=sys.stderr)
    else:
        groups = [("all", list(cohort.records))]
    curves = [(label, km_fit(members)) for label, members in groups]
    _emit(km_csv_text(curves), args.out)
    plot_path = _default_plot_path(args.out, args.plot, "_km.svg")
    if plot_path is not None:
        from .plots import save_km_plot
        save_km_plot(curves, plot_path, title=cohort.name)
    _manifest(args, "survival km", inputs=[args.cohort], outputs=[args.out, plot_path])
    return EXIT_OK


def _cmd_survival_logrank(args):
    cohort = load_cohort(args.cohort)
    groups, excluded = _split_groups(cohort, args.group_col)
    if len(groups) != 2:
        raise ValueError(f"log-rank needs exactly 2 groups in {args.group_col!r}, found {len(groups)}")
    (label_a, members_a), (label_b, members_b) = groups
    result = logrank_test(members_a, members_b)
    rows = [["group", "n", "observed", "expected"],
            [label_a, str(result.n_a), float_field(result.observed_a), float_field(result.expected_a)],
            [label_b, str(result.n_b), float_field(result.observed_b), float_field(result.expected_b)],
            [],
            ["chi_square", "p_value", "n_excluded"],
            [float_field(result.chi_square), float_field(result.p_value), str(excluded)]]
    _emit(_csv_text(rows), args.out)
    if args.out is not None:
        print(f"chi_square={result.chi_square:.12g} p={result.p_value:.12g}")
    _manifest(args, "survival logrank", inputs=[args.cohort], outputs=[args.out])
    return EXIT_OK


def _cmd_survival_cox(args):
    cohort = load_cohort(args.cohort)
    names = [n.strip() for n in args.covariates.split(",") if n.strip()]
    if not names:
        raise ValueError("--covariates must name at least one covariate")
    fit = cox_fit(cohort.records, names)
    rows = [["covariate", "coef", "se", "hazard_ratio", "ci_low", "ci_high", "p_value"]]
    for c in fit.coefficients:
        rows.append([c.name, float_field(c.coef), float_field(c.se), float_field(c.hazard_ratio),
                     float_field(c.ci_low), float_field(c.ci_high), float_field(c.p_value)])
    rows.append([])
    rows.append(["loglik", "loglik_null", "iterations", "converged", "degenerate",
                 "n_used", "n_events", "n_excluded"])
    rows.append([float_field(fit.loglik), float_field(fit.loglik_null), str(fit.iterations),
                 str(int(fit.converged)), str(int(fit.degenerate)),
                 str(fit.n_used), str(fit.n_events), str(fit.n_excluded)])
    _emit(_csv_text(rows), args.out)
    if args.out is not None:
        for c in fit.coefficients:
            print(f"{c.name}: HR={c.hazard_ratio:.4g} [{c.ci_low:.4g}, {c.ci_high:.4g}] p={c.p_value:.4g}")
        print(f"loglik={fit.loglik:.6g} iterations={fit.iterations} converged={fit.converged}")
    _manifest(args, "survival cox", inputs=[args.cohort], outputs=[args.out])
    return EXIT_OK


def _cmd_stratify(args):
    discovery = load_cohort(args.discovery)
    validation = load_cohort(args.validation)
    cfg = ThresholdSearchConfig(score_name=args.score_col, quantile_lo=args.qlo,
                                quantile_hi=args.qhi, min_group_fraction=args.min_group_frac)
    result = run_protocol(discovery, validation, cfg)
    hr = result.validation_hr[GROUP_COVARIATE]
    rows = [["key", "value"],
            ["score", args.score_col],
            ["threshold", float_field(result.threshold)],
            ["discovery_chi_square", float_field(result.discovery_logrank.chi_square)],
            ["discovery_p", float_field(result.discovery_logrank.p_value)],
            ["discovery_p_note", result.p_value_note],
            ["n_low", str(len(result.assignment.low))],
            ["n_high", str(len(result.assignment.high))],
            ["n_excluded", str(result.assignment.n_excluded)],
            ["validation_chi_square", float_field(result.validation_logrank.chi_square)],
            ["validation_p", float_field(result.validation_logrank.p_value)],
            ["hazard_ratio_high_vs_low", float_field(hr.hazard_ratio)],
            ["hr_ci_low", float_field(hr.ci_low)],
            ["hr_ci_high", float_field(hr.ci_high)],
            ["hr_p", float_field(hr.p_value)],
            []]
    text = _csv_text(rows)
    text += km_csv_text([("low", result.km_low)])
    text += "\n"
    text += km_csv_text([("high", result.km_high)])
    _emit(text, args.out)
    plot_path = _default_plot_path(args.out, args.plot, "_km.svg")
    if plot_path is not None:
        from .plots import save_km_plot
        save_km_plot([("low", result.km_low), ("high", result.km_high)], plot_path,
                     title=f"{args.score_col} threshold {result.threshold:.4g} (validation)",
                     logrank_p=result.validation_logrank.p_value)
    if args.out is not None:
        print(f"threshold={result.threshold:.12g} validation_p={result.validation_logrank.p_value:.12g}")
    _manifest(args, "stratify", inputs=[args.discovery, args.validation],
              outputs=[args.out, plot_path])
    return EXIT_OK


def _lookup_column(rows_list, column, path_names):
    for fieldnames, rows, name in rows_list:
        if column in fieldnames:
            return rows, name
    raise ValueError(f"column {column!r} not found in {' or '.join(path_names)}")


def _cmd_correlate(args):
    tables = []
    names = []
    for path in [args.csv] + ([args.csv2] if args.csv2 else []):
        fieldnames, rows = _read_table(path)
        tables.append((fieldnames, rows, str(path)))
        names.append(str(path))
    x_rows, _ = _lookup_column(tables, args.x_col, names)
    y_rows, _ = _lookup_column(tables, args.y_col, names)
    if x_rows is y_rows:
        pairs = [(row[args.x_col], row[args.y_col]) for row in x_rows
                 if args.x_col in row and args.y_col in row]
    else:
        join = args.join_col
        y_by_key = {row[join]: row for row in y_rows if join in row}
        pairs = []
        for row in x_rows:
            other = y_by_key.get(row.get(join))
            if other and args.x_col in row and args.y_col in other:
                pairs.append((row[args.x_col], other[args.y_col]))
    if len(pairs) < 3:
        raise ValueError(f"correlation needs at least 3 paired values, got {len(pairs)}")
    x = [float(a) for a, _ in pairs]
    y = [float(b) for _, b in pairs]
    result = spearman(x, y)
    rows = [["x", "y", "n", "rho", "p_value"],
            [args.x_col, args.y_col, str(len(pairs)),
             float_field(result.rho), float_field(result.p_value)]]
    _emit(_csv_text(rows), args.out)
    if args.out is not None:
        print(f"rho={result.rho:.12g} p={result.p_value:.12g} n={len(pairs)}")
    _manifest(args, "correlate", inputs=[p for p in (args.csv, args.csv2) if p], outputs=[args.out])
    return EXIT_OK


def _cmd_cindex(args):
    cohort = load_cohort(args.cohort)
    direction = Direction(args.direction)
    n_scored = len(cohort.with_score(args.score_col))
    value = c_index(cohort.records, args.score_col, direction)
    print(f"c_index={value:.12g} score={args.score_col} direction={direction.value} "
          f"n_used={n_scored} n_excluded={len(cohort) - n_scored}")
    if args.out is not None:
        rows = [["score", "direction", "c_index", "n_used", "n_excluded"],
                [args.score_col, direction.value, float_field(value),
                 str(n_scored), str(len(cohort) - n_scored)]]
        _emit(_csv_text(rows), args.out)
    _manifest(args, "cindex", inputs=[args.cohort], outputs=[args.out])
    return EXIT_OK


def _cmd_synth_grid(args):
    cfg = SynthGridConfig(rows=args.rows, cols=args.cols, n_tumour_nests=args.nests,
                          nest_radius_range=(args.radius_min, args.radius_max),
                          stroma_width=args.stroma_width, infiltration_theta=args.theta,
                          rng_seed=args.seed)
    grid, theta = generate_grid(cfg)
    save_grid(grid, args.out)
    print(f"wrote {args.out} ({grid.rows}x{grid.cols}, theta={theta:g})")
    _manifest(args, "synth grid", inputs=[], outputs=[args.out], seeds=[args.seed])
    return EXIT_OK


def _cmd_synth_cohort(args):
    grid_template = SynthGridConfig(rows=args.grid_rows, cols=args.grid_cols,
                                    n_tumour_nests=args.nests,
                                    nest_radius_range=(args.radius_min, args.radius_max),
                                    stroma_width=args.stroma_width)
    cfg = SynthCohortConfig(n_cases=args.n_cases, theta_range=(args.theta_lo, args.theta_hi),
                            baseline_hazard=args.lambda0, effect_beta=args.beta,
                            censor_horizon_months=args.horizon, rng_seed=args.seed,
                            grid=grid_template)
    result = generate_cohort(cfg, include_grids=args.grids_dir is not None)
    save_cohort(result.cohort, args.out, covariate_columns=SCORE_COLUMNS)
    theta_out = args.theta_out or args.out.with_name(args.out.stem + "_theta.csv")
    theta_rows = [["case_id", "theta"]]
    theta_rows += [[case_id, float_field(theta)] for case_id, theta in result.theta_by_case.items()]
    theta_out.write_text(_csv_text(theta_rows), encoding="utf-8", newline="")
    outputs = [args.out, theta_out]
    if args.grids_dir is not None:
        args.grids_dir.mkdir(parents=True, exist_ok=True)
        for grid in result.grids:
            save_grid(grid, args.grids_dir / f"{grid.slide_id}.tlg")
        outputs.append(args.grids_dir)
    n_events = sum(1 for r in result.cohort.records if r.event)
    print(f"wrote {args.out} ({cfg.n_cases} cases, {n_events} events)")
    _manifest(args, "synth cohort", inputs=[], outputs=outputs, seeds=[args.seed])
    return EXIT_OK


def _cmd_plot_km(args):
    groups, p_value = read_km_groups(args.km_csv)
    if args.p_value is not None:
        p_value = args.p_value
    from .plots import save_km_plot
    save_km_plot(groups, args.out, title=args.title, logrank_p=p_value)
    print(f"wrote {args.out}")
    _manifest(args, "plot-km", inputs=[args.km_csv], outputs=[args.out])
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_out(parser, required=False, help_text="output file (default: stdout)"):
    parser.add_argument("--out", type=Path, required=required, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tasil",
                     description="Stroma/lymphocyte co-occurrence scores and survival analysis "
                                 "on tissue patch label grids.")
    parser.add_argument("--version", action="version", version=f"tasil {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND",
                                parser_class=_Parser)

    p = sub.add_parser("score", help="score TLG grid files into a scores CSV")
    p.add_argument("grids", nargs="+", type=Path, metavar="GRID.tlg")
    p.add_argument("--conn", type=int, choices=(4, 8), default=8,
                   help="adjacency connectivity (default 8)")
    _add_out(p)
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("eval-seg", help="segmentation agreement metrics for two grids")
    p.add_argument("truth", type=Path)
    p.add_argument("pred", type=Path)
    p.add_argument("--domain", choices=sorted(_DOMAINS), default="analysis")
    _add_out(p)
    p.set_defaults(handler=_cmd_eval_seg)

    p = sub.add_parser("survival", help="Kaplan-Meier, log-rank and Cox analyses")
    surv = p.add_subparsers(dest="subcommand", required=True, metavar="ANALYSIS",
                            parser_class=_Parser)

    q = surv.add_parser("km", help="Kaplan-Meier curves as KM CSV (+figure)")
    q.add_argument("cohort", type=Path)
    q.add_argument("--group-col", help="split curves by this covariate column")
    q.add_argument("--plot", type=Path, help="figure path (default: <out>_km.svg)")
    _add_out(q)
    q.set_defaults(handler=_cmd_survival_km)

    q = surv.add_parser("logrank", help="two-group log-rank test")
    q.add_argument("cohort", type=Path)
    q.add_argument("--group-col", required=True)
    _add_out(q)
    q.set_defaults(handler=_cmd_survival_logrank)

    q = surv.add_parser("cox", help="Cox proportional-hazards fit")
    q.add_argument("cohort", type=Path)
    q.add_argument("--covariates", required=True, help="comma-separated covariate columns")
    _add_out(q)
    q.set_defaults(handler=_cmd_survival_cox)

    p = sub.add_parser("stratify", help="discovery/validation threshold protocol")
    p.add_argument("discovery", type=Path)
    p.add_argument("validation", type=Path)
    p.add_argument("--score-col", required=True)
    p.add_argument("--qlo", type=float, default=0.1, help="lower quantile of the search window")
    p.add_argument("--qhi", type=float, default=0.9, help="upper quantile of the search window")
    p.add_argument("--min-group-frac", type=float, default=0.1,
                   help="minimum fraction of the cohort per group")
    p.add_argument("--plot", type=Path, help="KM figure path (default: <out>_km.svg)")
    _add_out(p)
    p.set_defaults(handler=_cmd_stratify)

    p = sub.add_parser("correlate", help="Spearman correlation of two columns")
    p.add_argument("csv", type=Path)
    p.add_argument("csv2", nargs="?", type=Path,
                   help="optional second file, joined on --join-col")
    p.add_argument("--x-col", required=True)
    p.add_argument("--y-col", required=True)
    p.add_argument("--join-col", default="case_id")
    _add_out(p)
    p.set_defaults(handler=_cmd_correlate)

    p = sub.add_parser("cindex", help="Harrell's concordance index for a score column")
    p.add_argument("cohort", type=Path)
    p.add_argument("--score-col", required=True)
    p.add_argument("--direction", choices=[d.value for d in Direction],
                   default=Direction.HIGHER_SCORE_HIGHER_RISK.value)
    _add_out(p)
    p.set_defaults(handler=_cmd_cindex)

    p = sub.add_parser("synth", help="synthetic grid / cohort generation")
    synth = p.add_subparsers(dest="subcommand", required=True, metavar="WHAT",
                             parser_class=_Parser)

    q = synth.add_parser("grid", help="generate one TLG grid")
    q.add_argument("--rows", type=int, default=96)
    q.add_argument("--cols", type=int, default=96)
    q.add_argument("--nests", type=int, default=3)
    q.add_argument("--radius-min", type=int, default=6)
    q.add_argument("--radius-max", type=int, default=12)
    q.add_argument("--stroma-width", type=int, default=3)
    q.add_argument("--theta", type=float, default=0.3)
    q.add_argument("--seed", type=int, required=True, help="RNG seed (required; no implicit entropy)")
    _add_out(q, required=True, help_text="output TLG path")
    q.set_defaults(handler=_cmd_synth_grid)

    q = synth.add_parser("cohort", help="generate a scored cohort CSV with a theta sidecar")
    q.add_argument("--n-cases", type=int, default=200)
    q.add_argument("--theta-lo", type=float, default=0.05)
    q.add_argument("--theta-hi", type=float, default=0.75)
    q.add_argument("--lambda0", type=float, default=0.02, help="baseline hazard per month")
    q.add_argument("--beta", type=float, default=1.0, help="hazard multiplier exp(-beta*theta)")
    q.add_argument("--horizon", type=float, default=120.0, help="censoring horizon in months")
    q.add_argument("--grid-rows", type=int, default=96)
    q.add_argument("--grid-cols", type=int, default=96)
    q.add_argument("--nests", type=int, default=3)
    q.add_argument("--radius-min", type=int, default=6)
    q.add_argument("--radius-max", type=int, default=12)
    q.add_argument("--stroma-width", type=int, default=3)
    q.add_argument("--seed", type=int, required=True, help="RNG seed (required; no implicit entropy)")
    q.add_argument("--theta-out", type=Path, help="theta sidecar path (default: <out>_theta.csv)")
    q.add_argument("--grids-dir", type=Path, help="also write one TLG per case into this directory")
    _add_out(q, required=True, help_text="output cohort CSV path")
    q.set_defaults(handler=_cmd_synth_cohort)

    p = sub.add_parser("plot-km", help="render a KM CSV (or stratify report) as an SVG step plot")
    p.add_argument("km_csv", type=Path)
    p.add_argument("--title")
    p.add_argument("--p-value", type=float, help="log-rank p to annotate (auto-read from reports)")
    _add_out(p, required=True, help_text="output figure path (.svg or .png)")
    p.set_defaults(handler=_cmd_plot_km)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"tasil: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
