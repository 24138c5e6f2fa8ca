import json

import numpy as np
import pytest

from streamcpd import Stream, write_series
from streamcpd.cli import main


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def synthetic_files(tmp_path):
    stream = tmp_path / "stream.csv"
    truth = tmp_path / "truth.txt"
    rc = run_cli(
        "simulate",
        "--d", "2",
        "--segments", "4",
        "--law", "fixed",
        "--segment-length", "80",
        "--shift", "5.0",
        "--seed", "7",
        "--stream-out", str(stream),
        "--truth-out", str(truth),
    )
    assert rc == 0
    return stream, truth


class TestSimulate:
    def test_fixed_seed_outputs_byte_identical(self, tmp_path):
        paths = []
        for name in ("run1", "run2"):
            stream = tmp_path / f"{name}.csv"
            truth = tmp_path / f"{name}.txt"
            rc = run_cli(
                "simulate", "--seed", "3", "--stream-out", str(stream), "--truth-out", str(truth)
            )
            assert rc == 0
            paths.append((stream, truth))
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    def test_single_segment_writes_empty_truth(self, tmp_path):
        truth = tmp_path / "truth.txt"
        rc = run_cli(
            "simulate",
            "--segments", "1",
            "--stream-out", str(tmp_path / "s.csv"),
            "--truth-out", str(truth),
        )
        assert rc == 0
        assert truth.read_text() == ""

    def test_generated_files_reingest_cleanly(self, synthetic_files, tmp_path, capsys):
        stream, _ = synthetic_files
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--lam", "10", "--alpha0", "0.01", "--beta0", "0.1",
            "--detections-out", str(tmp_path / "dets.ndjson"),
        )
        assert rc == 0
        assert "detections:" in capsys.readouterr().out


class TestDetect:
    def test_stationary_stream_stays_silent(self, tmp_path, capsys):
        stream = tmp_path / "flat.csv"
        rc = run_cli(
            "simulate",
            "--segments", "1",
            "--segment-length", "400",
            "--stream-out", str(stream),
            "--truth-out", str(tmp_path / "t.txt"),
        )
        assert rc == 0
        dets = tmp_path / "dets.ndjson"
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--lam", "10", "--alpha0", "0.01", "--beta0", "0.1",
            "--detections-out", str(dets),
        )
        assert rc == 0
        assert dets.read_text() == ""
        assert "detections: 0" in capsys.readouterr().out

    def test_vague_precision_cell_accepted(self, synthetic_files, tmp_path):
        stream, _ = synthetic_files
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--lam", "10", "--alpha0", "0.01", "--beta0", "0.1",
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 0

    def test_missing_input_exits_3(self, tmp_path, capsys):
        rc = run_cli(
            "detect",
            "--input", str(tmp_path / "missing.csv"),
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 3
        assert "error:" in capsys.readouterr().err

    def test_bad_hyperparameter_exits_2(self, synthetic_files, tmp_path):
        stream, _ = synthetic_files
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--lam", "0.2",
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 2

    def test_posterior_matrix_export(self, synthetic_files, tmp_path):
        stream, _ = synthetic_files
        matrix = tmp_path / "posterior.csv"
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--truncation", "50",
            "--detections-out", str(tmp_path / "d.ndjson"),
            "--posterior-out", str(matrix),
        )
        assert rc == 0
        rows = matrix.read_text().splitlines()
        assert len(rows) == 321  # initial state plus one row per observation
        first = [float(v) for v in rows[0].split(",")]
        assert first[0] == 1.0
        second = [float(v) for v in rows[1].split(",")]
        assert second[0] == pytest.approx(1.0 / 50.0)
        assert sum(second) == pytest.approx(1.0, abs=1e-9)

    def test_multivariate_model_runs(self, synthetic_files, tmp_path):
        stream, _ = synthetic_files
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--model", "multivariate",
            "--truncation", "60",
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 0

    def test_preprocessing_flags(self, synthetic_files, tmp_path):
        stream, _ = synthetic_files
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--difference", "--standardize",
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 0

    def test_config_file_and_flag_override(self, synthetic_files, tmp_path, capsys):
        stream, _ = synthetic_files
        cfg = tmp_path / "run.ini"
        cfg.write_text(f"[detect]\ninput = {stream}\nlam = 25\nalpha0 = 0.5\n")
        dets = tmp_path / "d.ndjson"
        rc = run_cli(
            "detect",
            "--config", str(cfg),
            "--lam", "10",  # flag overrides the file value
            "--detections-out", str(dets),
        )
        assert rc == 0
        echoed = capsys.readouterr().out
        assert "lam = 10.0" in echoed
        assert "alpha0 = 0.5" in echoed

    def test_config_echo_sidecar(self, synthetic_files, tmp_path):
        stream, _ = synthetic_files
        sidecar = tmp_path / "resolved.ini"
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--detections-out", str(tmp_path / "d.ndjson"),
            "--config-out", str(sidecar),
        )
        assert rc == 0
        text = sidecar.read_text()
        assert text.startswith("[detect]")
        assert "truncation = 500" in text


class TestPredictDetect:
    def test_constant_stream_yields_zero_scores_and_detections(self, tmp_path, capsys):
        stream = tmp_path / "const.csv"
        write_series(Stream.from_values(np.full(60, 2.0)), stream, "csv")
        scores = tmp_path / "scores.csv"
        dets = tmp_path / "d.ndjson"
        rc = run_cli(
            "predict-detect",
            "--input", str(stream),
            "--k", "5",
            "--scores-out", str(scores),
            "--detections-out", str(dets),
        )
        assert rc == 0
        lines = scores.read_text().splitlines()
        assert lines[0] == "t,anomaly_score"
        assert all(line.endswith(",0.0") for line in lines[1:])
        assert dets.read_text() == ""

    @pytest.mark.parametrize("k", [5, 10, 15])
    def test_window_lengths_accepted(self, tmp_path, k):
        rng = np.random.default_rng(0)
        stream = tmp_path / "s.csv"
        write_series(Stream.from_values(rng.normal(size=200)), stream, "csv")
        rc = run_cli(
            "predict-detect",
            "--input", str(stream),
            "--k", str(k),
            "--scores-out", str(tmp_path / "sc.csv"),
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 0

    def test_threshold_monotonicity(self, tmp_path):
        rng = np.random.default_rng(1)
        values = rng.normal(size=300)
        values[150:] += 6.0
        stream = tmp_path / "s.csv"
        write_series(Stream.from_values(values), stream, "csv")

        def detections_at(thr):
            dets = tmp_path / f"d{thr}.ndjson"
            rc = run_cli(
                "predict-detect",
                "--input", str(stream),
                "--thr", str(thr),
                "--refractory", "0",
                "--scores-out", str(tmp_path / f"sc{thr}.csv"),
                "--detections-out", str(dets),
            )
            assert rc == 0
            return {json.loads(l)["flagged_at"] for l in dets.read_text().splitlines()}

        assert detections_at(4.0) <= detections_at(2.0)

    def test_rank_deficient_fit_exits_5(self, tmp_path):
        stream = tmp_path / "const.csv"
        write_series(Stream.from_values(np.full(60, 1.0)), stream, "csv")
        rc = run_cli(
            "predict-detect",
            "--input", str(stream),
            "--predictor", "linear_ar",
            "--scores-out", str(tmp_path / "sc.csv"),
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 5

    def test_external_missing_index_exits_5(self, tmp_path):
        rng = np.random.default_rng(2)
        stream = tmp_path / "s.csv"
        write_series(Stream.from_values(rng.normal(size=100)), stream, "csv")
        preds = tmp_path / "preds.csv"
        write_series(Stream.from_values(rng.normal(size=10)), preds, "csv")
        rc = run_cli(
            "predict-detect",
            "--input", str(stream),
            "--predictor", "external",
            "--predictions", str(preds),
            "--scores-out", str(tmp_path / "sc.csv"),
            "--detections-out", str(tmp_path / "d.ndjson"),
        )
        assert rc == 5


class TestEvaluate:
    def test_identical_sets_score_one(self, tmp_path, capsys):
        truth = tmp_path / "truth.txt"
        truth.write_text("10\n20\n")
        dets = tmp_path / "d.ndjson"
        dets.write_text(
            '{"flagged_at": 12, "located_at": 10, "scheme": "map_set"}\n'
            '{"flagged_at": 22, "located_at": 20, "scheme": "map_set"}\n'
        )
        rc = run_cli("evaluate", "--truth", str(truth), "--detections", str(dets))
        assert rc == 0
        out = capsys.readouterr().out.splitlines()[-1]
        assert json.loads(out)["f_score"] == 1.0

    def test_worked_example(self, tmp_path, capsys):
        truth = tmp_path / "truth.txt"
        truth.write_text("10\n20\n")
        dets = tmp_path / "d.ndjson"
        dets.write_text(
            '{"flagged_at": 12, "located_at": 12, "scheme": "x"}\n'
            '{"flagged_at": 30, "located_at": 30, "scheme": "x"}\n'
        )
        rc = run_cli("evaluate", "--truth", str(truth), "--detections", str(dets))
        assert rc == 0
        out = capsys.readouterr().out.splitlines()[-1]
        report = json.loads(out)
        assert report == {
            "precision": 0.5,
            "recall": 0.5,
            "f_score": 0.5,
            "margin": 5,
            "matches": [[10, 12]],
        }

    def test_margin_default_is_five(self, tmp_path, capsys):
        truth = tmp_path / "truth.txt"
        truth.write_text("10\n")
        dets = tmp_path / "d.ndjson"
        dets.write_text('{"flagged_at": 15, "located_at": 15, "scheme": "x"}\n')
        rc = run_cli("evaluate", "--truth", str(truth), "--detections", str(dets))
        assert rc == 0
        report = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert report["margin"] == 5
        assert report["f_score"] == 1.0  # |15 - 10| == default margin

    def test_delay_flag_shifts_detections(self, tmp_path, capsys):
        truth = tmp_path / "truth.txt"
        truth.write_text("10\n")
        dets = tmp_path / "d.ndjson"
        dets.write_text('{"flagged_at": 18, "located_at": 18, "scheme": "x"}\n')
        rc = run_cli(
            "evaluate", "--truth", str(truth), "--detections", str(dets), "--delay", "3"
        )
        assert rc == 0
        report = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert report["matches"] == [[10, 15]]


class TestGridsearch:
    def test_default_grid_row_count_and_determinism(self, synthetic_files, tmp_path, capsys):
        stream, truth = synthetic_files
        out1, out2 = tmp_path / "grid1.csv", tmp_path / "grid2.csv"
        for out in (out1, out2):
            rc = run_cli(
                "gridsearch",
                "--input", str(stream),
                "--truth", str(truth),
                "--truncation", "100",
                "--out", str(out),
            )
            assert rc == 0
        lines = out1.read_text().splitlines()
        assert lines[0] == "lambda,alpha0,beta0,delay,precision,recall,f_score,error"
        assert len(lines) == 1 + 64
        assert out1.read_bytes() == out2.read_bytes()
        assert "best:" in capsys.readouterr().out

    def test_singleton_grid_matches_detect_evaluate_composition(
        self, synthetic_files, tmp_path, capsys
    ):
        stream, truth = synthetic_files
        out = tmp_path / "grid.csv"
        rc = run_cli(
            "gridsearch",
            "--input", str(stream),
            "--truth", str(truth),
            "--lams", "10", "--alpha0s", "0.01", "--beta0s", "0.1",
            "--truncation", "100",
            "--out", str(out),
        )
        assert rc == 0
        row = out.read_text().splitlines()[1].split(",")
        grid_f = row[6]
        dets = tmp_path / "d.ndjson"
        rc = run_cli(
            "detect",
            "--input", str(stream),
            "--lam", "10", "--alpha0", "0.01", "--beta0", "0.1",
            "--truncation", "100",
            "--detections-out", str(dets),
        )
        assert rc == 0
        capsys.readouterr()
        rc = run_cli("evaluate", "--truth", str(truth), "--detections", str(dets))
        assert rc == 0
        report = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert f"{report['f_score']:.6f}" == grid_f


class TestBench:
    def test_small_bench_structure(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        rc = run_cli(
            "bench",
            "--d", "2",
            "--t-values", "40,80",
            "--truncation", "30",
            "--out", str(out),
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "T,factorized_seconds,multivariate_seconds,ratio"
        assert [line.split(",")[0] for line in lines[1:]] == ["40", "80"]
        assert "speedup" in capsys.readouterr().out
