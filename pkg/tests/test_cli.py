import json

from tasil.cli import run, read_km_groups
from tasil.grid import AnalysisClass, PatchLabelGrid, save_grid
from tasil.survival import Cohort, SurvivalRecord, save_cohort

T, S, L, N = AnalysisClass.TUMOUR, AnalysisClass.TAS, AnalysisClass.LYMPHOCYTE, AnalysisClass.NON_ROI


def write_fixture_grid(path):
    grid = PatchLabelGrid.from_flat(path.stem, 2, 2, [T, L, S, S])
    save_grid(grid, path)


def write_cohort(path, records, columns=None):
    save_cohort(Cohort(path.stem, records), path, covariate_columns=columns)


def simple_records(n=30, score=lambda i: i / 29.0, prefix="c"):
    return [SurvivalRecord(f"{prefix}{i:03d}", float(1 + i), i % 2 == 0, {"s": score(i)})
            for i in range(n)]


class TestScoreCommand:
    def test_fixture_grid_scores(self, tmp_path, capsys):
        grid_path = tmp_path / "fix.tlg"
        write_fixture_grid(grid_path)
        assert run(["score", str(grid_path)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "slide_id,tasil,l_percentage,ts_ratio,ic_coloc,tilab"
        fields = out[1].split(",")
        assert fields[0] == "fix"
        assert fields[1] == "0.4"

    def test_rows_sorted_by_slide_id(self, tmp_path):
        for name in ("bbb", "aaa"):
            write_fixture_grid(tmp_path / f"{name}.tlg")
        out = tmp_path / "scores.csv"
        assert run(["score", str(tmp_path / "bbb.tlg"), str(tmp_path / "aaa.tlg"),
                    "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert [line.split(",")[0] for line in lines[1:]] == ["aaa", "bbb"]

    def test_conn_flag_changes_counts(self, tmp_path, capsys):
        grid_path = tmp_path / "fix.tlg"
        write_fixture_grid(grid_path)
        run(["score", str(grid_path), "--conn", "4"])
        four = capsys.readouterr().out.splitlines()[1]
        run(["score", str(grid_path), "--conn", "8"])
        eight = capsys.readouterr().out.splitlines()[1]
        assert four != eight

    def test_manifest_written_next_to_output(self, tmp_path):
        grid_path = tmp_path / "fix.tlg"
        write_fixture_grid(grid_path)
        out = tmp_path / "scores.csv"
        run(["score", str(grid_path), "--out", str(out)])
        manifest = json.loads((tmp_path / "scores.csv.manifest.json").read_text())
        assert manifest["command"] == "score"
        assert manifest["outputs"] == [str(out)]
        assert manifest["config"]["conn"] == 8

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        assert run(["score", str(tmp_path / "nope.tlg")]) == 2
        assert "error" in capsys.readouterr().err

    def test_malformed_grid_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.tlg"
        bad.write_text("TLG v1 2 2 35.0\nTL\nT\n")
        assert run(["score", str(bad)]) == 2
        assert "row length mismatch" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_command_exits_one(self, capsys):
        assert run(["frobnicate"]) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_flag_exits_one(self, tmp_path, capsys):
        assert run(["score", str(tmp_path / "x.tlg"), "--conn", "5"]) == 1
        capsys.readouterr()

    def test_synth_without_seed_exits_one(self, tmp_path, capsys):
        assert run(["synth", "grid", "--out", str(tmp_path / "g.tlg")]) == 1
        assert "--seed" in capsys.readouterr().err

    def test_help_exits_zero(self, capsys):
        assert run(["--help"]) == 0
        capsys.readouterr()


class TestEvalSeg:
    def test_perfect_prediction(self, tmp_path, capsys):
        write_fixture_grid(tmp_path / "truth.tlg")
        write_fixture_grid(tmp_path / "pred.tlg")
        assert run(["eval-seg", str(tmp_path / "truth.tlg"), str(tmp_path / "pred.tlg")]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "accuracy,macro_f1"
        assert out[1].split(",")[0] == "1"

    def test_annotation_domain(self, tmp_path, capsys):
        (tmp_path / "t.tlg").write_text("TLG v1 1 4 35.0\nTLSK\n")
        (tmp_path / "p.tlg").write_text("TLG v1 1 4 35.0\nTLSS\n")
        assert run(["eval-seg", str(tmp_path / "t.tlg"), str(tmp_path / "p.tlg"),
                    "--domain", "annotation"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[1].split(",")[0] == "0.75"


class TestSurvivalCommands:
    def test_logrank_on_duplicated_cohort_is_null(self, tmp_path, capsys):
        # a cohort concatenated with itself, split by a copied group label
        records = [SurvivalRecord(f"a{i}", float(i + 1), i % 3 != 0, {"grp": 0.0})
                   for i in range(20)]
        records += [SurvivalRecord(f"b{i}", float(i + 1), i % 3 != 0, {"grp": 1.0})
                    for i in range(20)]
        path = tmp_path / "cohort.csv"
        write_cohort(path, records, columns=["grp"])
        assert run(["survival", "logrank", str(path), "--group-col", "grp"]) == 0
        out = capsys.readouterr().out
        assert "chi_square,p_value" in out
        lines = out.splitlines()
        stats = lines[lines.index("chi_square,p_value,n_excluded") + 1].split(",")
        assert float(stats[0]) == 0.0
        assert float(stats[1]) == 1.0

    def test_km_writes_csv_and_figure(self, tmp_path):
        path = tmp_path / "cohort.csv"
        write_cohort(path, simple_records(), columns=["s"])
        out = tmp_path / "km.csv"
        assert run(["survival", "km", str(path), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "group,time,survival,n_at_risk,n_events"
        assert lines[1].startswith("all,")
        assert (tmp_path / "km_km.svg").exists()

    def test_km_group_split(self, tmp_path, capsys):
        records = [SurvivalRecord(f"c{i}", float(i + 1), True, {"grp": float(i % 2)})
                   for i in range(10)]
        path = tmp_path / "cohort.csv"
        write_cohort(path, records, columns=["grp"])
        assert run(["survival", "km", str(path), "--group-col", "grp"]) == 0
        out = capsys.readouterr().out
        assert "grp=0," in out and "grp=1," in out

    def test_cox_output(self, tmp_path, capsys):
        path = tmp_path / "cohort.csv"
        write_cohort(path, simple_records(60), columns=["s"])
        assert run(["survival", "cox", str(path), "--covariates", "s"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "covariate,coef,se,hazard_ratio,ci_low,ci_high,p_value"
        assert out[1].split(",")[0] == "s"


class TestStratifyCommand:
    @staticmethod
    def planted(tmp_path, name, seed):
        import numpy as np
        rng = np.random.default_rng(seed)
        records = []
        for i in range(200):
            score = float(rng.uniform(0, 1))
            rate = 0.03 * (0.2 if score > 0.5 else 1.0)
            event_time = float(rng.exponential(1 / rate))
            censor = float(120 * (1 - rng.random()))
            records.append(SurvivalRecord(f"{name}{i}", min(event_time, censor),
                                          event_time <= censor, {"tasil": score}))
        path = tmp_path / f"{name}.csv"
        write_cohort(path, records, columns=["tasil"])
        return path

    def test_end_to_end_outputs(self, tmp_path):
        discovery = self.planted(tmp_path, "disc", 1)
        validation = self.planted(tmp_path, "val", 2)
        out = tmp_path / "report.csv"
        assert run(["stratify", str(discovery), str(validation),
                    "--score-col", "tasil", "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("key,value\nscore,tasil\nthreshold,")
        assert "validation_p," in text
        assert text.count("group,time,survival,n_at_risk,n_events") == 2
        assert (tmp_path / "report_km.svg").exists()
        manifest = json.loads((tmp_path / "report.csv.manifest.json").read_text())
        assert str(tmp_path / "report_km.svg") in manifest["outputs"]
        # report is plot-ready: the KM blocks parse back into two curves
        groups, p_value = read_km_groups(out)
        assert {label for label, _ in groups} == {"low", "high"}
        assert p_value is not None

    def test_plot_km_from_report_and_bare_csv(self, tmp_path):
        discovery = self.planted(tmp_path, "d2", 3)
        validation = self.planted(tmp_path, "v2", 4)
        report = tmp_path / "report.csv"
        run(["stratify", str(discovery), str(validation), "--score-col", "tasil",
             "--out", str(report)])
        fig = tmp_path / "curves.svg"
        assert run(["plot-km", str(report), "--out", str(fig)]) == 0
        assert fig.read_text().lstrip().startswith("<?xml")

    def test_degenerate_validation_is_data_error(self, tmp_path, capsys):
        discovery = self.planted(tmp_path, "d3", 5)
        records = [SurvivalRecord(f"x{i}", float(i + 1), True, {"tasil": 0.99})
                   for i in range(10)]
        validation = tmp_path / "deg.csv"
        write_cohort(validation, records, columns=["tasil"])
        assert run(["stratify", str(discovery), str(validation),
                    "--score-col", "tasil", "--out", str(tmp_path / "r.csv")]) == 2
        assert "degenerate" in capsys.readouterr().err


class TestCorrelate:
    def test_single_file(self, tmp_path, capsys):
        path = tmp_path / "data.csv"
        path.write_text("case_id,x,y\nc1,1,2\nc2,2,4\nc3,3,5\nc4,4,9\n")
        assert run(["correlate", str(path), "--x-col", "x", "--y-col", "y"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "x,y,n,rho,p_value"
        assert out[1].split(",")[3] == "1"

    def test_two_files_joined(self, tmp_path, capsys):
        first = tmp_path / "a.csv"
        first.write_text("case_id,theta\nc1,0.1\nc2,0.2\nc3,0.3\nc4,0.4\n")
        second = tmp_path / "b.csv"
        second.write_text("case_id,tasil\nc4,0.41\nc3,0.28\nc2,0.22\nc1,0.08\n")
        assert run(["correlate", str(first), str(second),
                    "--x-col", "theta", "--y-col", "tasil"]) == 0
        out = capsys.readouterr().out.splitlines()[1].split(",")
        assert out[2] == "4"
        assert float(out[3]) == 1.0

    def test_missing_column_is_data_error(self, tmp_path, capsys):
        path = tmp_path / "data.csv"
        path.write_text("case_id,x\nc1,1\n")
        assert run(["correlate", str(path), "--x-col", "x", "--y-col", "nope"]) == 2
        assert "not found" in capsys.readouterr().err


class TestCindex:
    def test_perfect_score(self, tmp_path, capsys):
        records = [SurvivalRecord(f"c{i}", float(i + 1), True, {"s": -float(i)})
                   for i in range(10)]
        path = tmp_path / "cohort.csv"
        write_cohort(path, records, columns=["s"])
        assert run(["cindex", str(path), "--score-col", "s"]) == 0
        assert "c_index=1 " in capsys.readouterr().out

    def test_direction_flag(self, tmp_path, capsys):
        records = [SurvivalRecord(f"c{i}", float(i + 1), True, {"s": float(i)})
                   for i in range(10)]
        path = tmp_path / "cohort.csv"
        write_cohort(path, records, columns=["s"])
        run(["cindex", str(path), "--score-col", "s", "--direction", "lower-risk"])
        assert "c_index=1 " in capsys.readouterr().out


class TestSynthCommands:
    def test_grid_round_trip(self, tmp_path, capsys):
        out = tmp_path / "g.tlg"
        assert run(["synth", "grid", "--rows", "40", "--cols", "40", "--nests", "2",
                    "--radius-min", "4", "--radius-max", "6", "--seed", "7",
                    "--out", str(out)]) == 0
        header = out.read_text().splitlines()[0]
        assert header == "TLG v1 40 40 35.0"
        manifest = json.loads((tmp_path / "g.tlg.manifest.json").read_text())
        assert manifest["seeds"] == [7]

    def test_cohort_with_sidecar_and_grids(self, tmp_path):
        out = tmp_path / "cohort.csv"
        grids_dir = tmp_path / "grids"
        assert run(["synth", "cohort", "--n-cases", "6", "--seed", "3",
                    "--grid-rows", "48", "--grid-cols", "48", "--nests", "2",
                    "--radius-min", "4", "--radius-max", "7",
                    "--out", str(out), "--grids-dir", str(grids_dir)]) == 0
        assert out.read_text().startswith("case_id,time_months,event,tasil,")
        sidecar = tmp_path / "cohort_theta.csv"
        assert sidecar.read_text().startswith("case_id,theta\n")
        assert len(list(grids_dir.glob("*.tlg"))) == 6

    def test_reruns_are_byte_identical(self, tmp_path):
        args = ["synth", "cohort", "--n-cases", "5", "--seed", "11",
                "--grid-rows", "48", "--grid-cols", "48", "--nests", "2",
                "--radius-min", "4", "--radius-max", "7"]
        first = tmp_path / "one.csv"
        second = tmp_path / "two.csv"
        run(args + ["--out", str(first)])
        run(args + ["--out", str(second)])
        assert first.read_bytes() == second.read_bytes()
        assert (tmp_path / "one_theta.csv").read_bytes() == (tmp_path / "two_theta.csv").read_bytes()


class TestPipeline:
    def test_synth_then_cindex_shows_planted_concordance(self, tmp_path, capsys):
        out = tmp_path / "cohort.csv"
        assert run(["synth", "cohort", "--n-cases", "400", "--beta", "2.5", "--seed", "5",
                    "--grid-rows", "64", "--grid-cols", "64", "--nests", "2",
                    "--radius-min", "5", "--radius-max", "9", "--out", str(out)]) == 0
        capsys.readouterr()
        assert run(["cindex", str(out), "--score-col", "tasil",
                    "--direction", "lower-risk"]) == 0
        printed = capsys.readouterr().out
        assert float(printed.split("c_index=")[1].split()[0]) > 0.6

    def test_theta_sidecar_correlates_with_tasil(self, tmp_path, capsys):
        out = tmp_path / "cohort.csv"
        run(["synth", "cohort", "--n-cases", "100", "--seed", "8",
             "--grid-rows", "64", "--grid-cols", "64", "--nests", "2",
             "--radius-min", "5", "--radius-max", "9", "--out", str(out)])
        capsys.readouterr()
        assert run(["correlate", str(tmp_path / "cohort_theta.csv"), str(out),
                    "--x-col", "theta", "--y-col", "tasil"]) == 0
        rho = float(capsys.readouterr().out.splitlines()[1].split(",")[3])
        assert rho > 0.9

    def test_scores_from_emitted_grids_match_cohort_csv(self, tmp_path):
        cohort_csv = tmp_path / "cohort.csv"
        grids_dir = tmp_path / "grids"
        run(["synth", "cohort", "--n-cases", "4", "--seed", "21",
             "--grid-rows", "48", "--grid-cols", "48", "--nests", "2",
             "--radius-min", "4", "--radius-max", "7",
             "--out", str(cohort_csv), "--grids-dir", str(grids_dir)])
        scores_csv = tmp_path / "scores.csv"
        run(["score", *sorted(str(p) for p in grids_dir.glob("*.tlg")),
             "--out", str(scores_csv)])
        cohort_lines = cohort_csv.read_text().splitlines()
        score_lines = scores_csv.read_text().splitlines()
        cohort_scores = {line.split(",")[0]: line.split(",")[3:] for line in cohort_lines[1:]}
        for line in score_lines[1:]:
            fields = line.split(",")
            assert fields[1:] == cohort_scores[fields[0]]
