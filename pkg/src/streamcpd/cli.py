"""Command-line front end composing the library into reproducible runs.

Subcommands::

    simulate        generate a labeled synthetic stream
    detect          run the run-length engine over a series file
    predict-detect  run the prediction-error detector
    evaluate        score detections against ground truth
    gridsearch      exhaustive hyperparameter sweep, ranked by F-score
    bench           factorized-vs-multivariate cost comparison

Every option can also be supplied from an INI config file (section name =
subcommand name); explicit flags override file values, which override the
built-in defaults. The default config path comes from the
``STREAMCPD_CONFIG`` environment variable. Each command echoes its fully
resolved configuration to stdout (and to ``--config-out`` when given) so
any run can be reproduced exactly.

Exit codes: 0 success, 2 configuration error, 3 I/O or file-format error,
4 numeric failure, 5 predictor fit/replay error. Output files are written
to a temporary name and renamed, so failures leave no partial files.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import os
import sys
from dataclasses import dataclass

import numpy as np

from .bench import run_cost_benchmark
from .conjugate import NiwParams, NormalGammaParams
from .data import (
    FixedSegmentLength,
    GeometricSegmentLength,
    SyntheticSpec,
    _atomic_write,
    generate,
    read_changepoints,
    read_detections,
    read_series,
    write_changepoints,
    write_detections,
    write_posterior_matrix,
    write_series,
)
from .engine import BocdEngine, Detection, FactorizedModel, HazardSpec, MultivariateModel
from .errors import (
    ConfigError,
    DataFormatError,
    DataIOError,
    FitError,
    NumericError,
    ParameterError,
)
from .evaluate import ChangepointSet, GridSpec, apply_delay, eval_report_json, grid_search, margin_f_score
from .predictive import PredictorSpec, detect_by_threshold, fit_predictor, make_window_pairs, score_stream
from .preprocess import difference, standardize_apply, standardize_fit

__all__ = ["main"]

CONFIG_ENV_VAR = "STREAMCPD_CONFIG"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class _Opt:
    name: str
    kind: str  # int | float | str | bool | floats | ints
    default: object
    help: str
    choices: tuple | None = None
    required: bool = False

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


def _parse_value(opt: _Opt, raw):
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    try:
        if opt.kind == "bool":
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if opt.kind == "int":
            value = int(text)
        elif opt.kind == "float":
            value = float(text)
        elif opt.kind == "floats":
            value = tuple(float(p) for p in text.split(",") if p.strip())
        elif opt.kind == "ints":
            value = tuple(int(p) for p in text.split(",") if p.strip())
        else:
            value = text
    except ValueError as exc:
        raise ConfigError(f"option '{opt.name}': {exc}") from None
    if opt.choices is not None and value not in opt.choices:
        raise ConfigError(f"option '{opt.name}' must be one of {opt.choices}, got {value!r}")
    return value


def _add_options(parser: argparse.ArgumentParser, options: list[_Opt]) -> None:
    parser.add_argument("--config", default=None, help="INI config file (default: $%s)" % CONFIG_ENV_VAR)
    parser.add_argument("--config-out", default=None, help="write the resolved configuration here")
    for opt in options:
        flag = "--" + opt.name
        if opt.kind == "bool":
            parser.add_argument(flag, action=argparse.BooleanOptionalAction, default=None, help=opt.help)
        else:
            parser.add_argument(flag, default=None, help=opt.help, metavar=opt.kind.upper())


def _resolve(args, section: str, options: list[_Opt]) -> dict:
    file_cfg = _load_config(args.config)
    resolved = {}
    for opt in options:
        raw = getattr(args, opt.dest)
        if raw is None and file_cfg is not None and file_cfg.has_option(section, opt.name):
            raw = file_cfg.get(section, opt.name)
        if raw is None:
            if opt.required:
                raise ConfigError(f"[{section}] missing required option '{opt.name}'")
            resolved[opt.dest] = opt.default
        else:
            resolved[opt.dest] = _parse_value(opt, raw)
    return resolved


def _load_config(path: str | None) -> configparser.ConfigParser | None:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return None
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    return parser


def _format_config_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _echo_config(section: str, resolved: dict, options: list[_Opt], config_out: str | None) -> None:
    lines = [f"[{section}]"]
    for opt in options:
        value = resolved[opt.dest]
        if value is None:
            continue
        lines.append(f"{opt.name} = {_format_config_value(value)}")
    text = "\n".join(lines)
    print(text)
    if config_out:
        _atomic_write(config_out, lines)


def _series_format(fmt: str, path: str) -> str:
    if fmt != "auto":
        return fmt
    return "ndjson" if str(path).endswith((".ndjson", ".jsonl")) else "csv"


_FORMAT_OPT = _Opt("format", "str", "auto", "series file format", choices=("auto", "csv", "ndjson"))


# ----------------------------------------------------------------- simulate

_SIMULATE_OPTS = [
    _Opt("d", "int", 1, "stream dimension"),
    _Opt("segments", "int", 5, "number of stationary segments"),
    _Opt("law", "str", "fixed", "segment length law", choices=("fixed", "geometric")),
    _Opt("segment-length", "int", 100, "segment length for the fixed law"),
    _Opt("segment-lam", "float", 100.0, "expected segment length for the geometric law"),
    _Opt("shift", "float", 5.0, "mean jump per changepoint, in noise-sigma units"),
    _Opt("sigma", "float", 1.0, "noise standard deviation"),
    _Opt("seed", "int", 0, "random seed"),
    _FORMAT_OPT,
    _Opt("stream-out", "str", None, "output series file", required=True),
    _Opt("truth-out", "str", None, "output ground-truth changepoint file", required=True),
]


def _cmd_simulate(args) -> int:
    cfg = _resolve(args, "simulate", _SIMULATE_OPTS)
    _echo_config("simulate", cfg, _SIMULATE_OPTS, args.config_out)
    law = (
        FixedSegmentLength(cfg["segment_length"])
        if cfg["law"] == "fixed"
        else GeometricSegmentLength(cfg["segment_lam"])
    )
    spec = SyntheticSpec(
        d=cfg["d"],
        segment_count=cfg["segments"],
        length_law=law,
        mean_shift=cfg["shift"],
        noise_sigma=cfg["sigma"],
        seed=cfg["seed"],
    )
    labeled = generate(spec)
    fmt = _series_format(cfg["format"], cfg["stream_out"])
    write_series(labeled.stream, cfg["stream_out"], fmt)
    write_changepoints(labeled.truth, cfg["truth_out"])
    print(f"stream: {len(labeled.stream)} observations, {len(labeled.truth)} changepoints")
    return 0


# ------------------------------------------------------------------- detect

_DETECT_OPTS = [
    _Opt("input", "str", None, "input series file", required=True),
    _FORMAT_OPT,
    _Opt("model", "str", "factorized", "observation model", choices=("factorized", "multivariate")),
    _Opt("lam", "float", 50.0, "expected run length between changepoints"),
    _Opt("mu0", "float", 0.0, "prior mean"),
    _Opt("kappa0", "float", 1.0, "prior pseudo-count on the mean"),
    _Opt("alpha0", "float", 1.0, "prior Gamma shape (factorized model)"),
    _Opt("beta0", "float", 1.0, "prior Gamma rate (factorized model)"),
    _Opt("nu", "float", None, "prior degrees of freedom (multivariate; default d + 1)"),
    _Opt("psi-scale", "float", 1.0, "prior scale matrix is psi-scale * identity (multivariate)"),
    _Opt("truncation", "int", 500, "maximum retained run length"),
    _Opt("scheme", "str", "map_set", "extraction scheme", choices=("threshold", "max_prob", "map_set")),
    _Opt("threshold-p", "float", None, "posterior threshold for the threshold scheme"),
    _Opt("delay", "int", 0, "backward shift applied to detected changepoints"),
    _Opt("dedup-window", "int", 5, "suppress locations within this margin of an emitted one"),
    _Opt("difference", "bool", False, "first-difference the series before detection"),
    _Opt("standardize", "bool", False, "standardize using stats frozen on the calibration prefix"),
    _Opt("calibration-fraction", "float", 0.5, "prefix fraction used to fit standardization stats"),
    _Opt("detections-out", "str", None, "output detections NDJSON", required=True),
    _Opt("posterior-out", "str", None, "optional run-length posterior matrix CSV"),
]


def _prepare_stream(cfg, stream):
    if cfg["difference"]:
        stream = difference(stream)
    if cfg["standardize"]:
        n_cal = max(2, int(len(stream) * cfg["calibration_fraction"]))
        stats = standardize_fit(stream[:n_cal])
        stream = standardize_apply(stats, stream)
    return stream


def _cmd_detect(args) -> int:
    cfg = _resolve(args, "detect", _DETECT_OPTS)
    _echo_config("detect", cfg, _DETECT_OPTS, args.config_out)
    stream = read_series(cfg["input"], _series_format(cfg["format"], cfg["input"]))
    stream = _prepare_stream(cfg, stream)
    d = stream.d
    if cfg["model"] == "factorized":
        model = FactorizedModel(d, NormalGammaParams(cfg["mu0"], cfg["kappa0"], cfg["alpha0"], cfg["beta0"]))
    else:
        nu = cfg["nu"] if cfg["nu"] is not None else float(d + 1)
        model = MultivariateModel(
            NiwParams(np.full(d, cfg["mu0"]), cfg["kappa0"], nu, np.eye(d) * cfg["psi_scale"])
        )
    engine = BocdEngine(
        model,
        HazardSpec(cfg["lam"]),
        truncation=cfg["truncation"],
        scheme=cfg["scheme"],
        threshold=cfg["threshold_p"],
        delay=cfg["delay"],
        dedup_window=cfg["dedup_window"],
    )
    run = engine.run(stream, collect_posteriors=cfg["posterior_out"] is not None)
    write_detections(run.detections, cfg["detections_out"])
    if cfg["posterior_out"] is not None:
        write_posterior_matrix(run.posteriors, cfg["posterior_out"])
    print(f"detections: {len(run.detections)}")
    return 0


# ----------------------------------------------------------- predict-detect

_PREDICT_OPTS = [
    _Opt("input", "str", None, "input series file", required=True),
    _FORMAT_OPT,
    _Opt("predictor", "str", "persistence", "window predictor",
         choices=("persistence", "linear_ar", "external")),
    _Opt("k", "int", 5, "prediction window length"),
    _Opt("order", "int", 1, "autoregressive order (linear_ar)"),
    _Opt("predictions", "str", None, "prediction series CSV (external)"),
    _Opt("thr", "float", 2.0, "anomaly-score threshold"),
    _Opt("refractory", "int", None, "steps to suppress repeated flags (default: k)"),
    _Opt("calibration-fraction", "float", 0.5, "prefix fraction used to fit the predictor"),
    _Opt("scores-out", "str", None, "output anomaly-score CSV", required=True),
    _Opt("detections-out", "str", None, "output detections NDJSON", required=True),
]


def _cmd_predict_detect(args) -> int:
    cfg = _resolve(args, "predict-detect", _PREDICT_OPTS)
    _echo_config("predict-detect", cfg, _PREDICT_OPTS, args.config_out)
    stream = read_series(cfg["input"], _series_format(cfg["format"], cfg["input"]))
    n_cal = max(2, int(len(stream) * cfg["calibration_fraction"]))
    if n_cal >= len(stream):
        raise ConfigError("calibration fraction leaves no observations to score")
    calibration, scoring = stream[:n_cal], stream[n_cal:]
    spec = PredictorSpec(cfg["predictor"], cfg["k"], order=cfg["order"], path=cfg["predictions"])
    predictor = fit_predictor(spec, calibration)
    pairs = make_window_pairs(scoring, cfg["k"])
    scores = score_stream(predictor, pairs)
    refractory = cfg["refractory"] if cfg["refractory"] is not None else cfg["k"]
    changepoints = detect_by_threshold(scores, cfg["thr"], refractory)
    score_lines = ["t,anomaly_score"] + [f"{s.at_t},{repr(s.value)}" for s in scores]
    _atomic_write(cfg["scores_out"], score_lines)
    detections = [Detection(t, t, "prediction_error") for t in changepoints]
    write_detections(detections, cfg["detections_out"])
    print(f"detections: {len(detections)}")
    return 0


# ----------------------------------------------------------------- evaluate

_EVALUATE_OPTS = [
    _Opt("truth", "str", None, "ground-truth changepoint file", required=True),
    _Opt("detections", "str", None, "detections NDJSON file", required=True),
    _Opt("margin", "int", 5, "matching margin in steps"),
    _Opt("delay", "int", 0, "extra backward shift applied to detections before matching"),
]


def _cmd_evaluate(args) -> int:
    cfg = _resolve(args, "evaluate", _EVALUATE_OPTS)
    _echo_config("evaluate", cfg, _EVALUATE_OPTS, args.config_out)
    truth = read_changepoints(cfg["truth"])
    records = read_detections(cfg["detections"])
    detected = ChangepointSet.from_times(r.located_at for r in records if r.located_at >= 1)
    detected = apply_delay(detected, cfg["delay"])
    report = margin_f_score(truth, detected, cfg["margin"])
    print(eval_report_json(report))
    return 0


# --------------------------------------------------------------- gridsearch

_GRID_OPTS = [
    _Opt("input", "str", None, "input series file", required=True),
    _FORMAT_OPT,
    _Opt("truth", "str", None, "ground-truth changepoint file", required=True),
    _Opt("lams", "floats", (5.0, 10.0, 50.0, 100.0), "comma-separated expected run lengths"),
    _Opt("alpha0s", "floats", (0.01, 0.1, 1.0, 10.0), "comma-separated prior Gamma shapes"),
    _Opt("beta0s", "floats", (0.01, 0.1, 1.0, 10.0), "comma-separated prior Gamma rates"),
    _Opt("delays", "ints", (0,), "comma-separated detection delays"),
    _Opt("margin", "int", 5, "matching margin in steps"),
    _Opt("mu0", "float", 0.0, "prior mean"),
    _Opt("kappa0", "float", 1.0, "prior pseudo-count on the mean"),
    _Opt("truncation", "int", 500, "maximum retained run length"),
    _Opt("scheme", "str", "map_set", "extraction scheme", choices=("threshold", "max_prob", "map_set")),
    _Opt("threshold-p", "float", None, "posterior threshold for the threshold scheme"),
    _Opt("out", "str", None, "ranked results CSV", required=True),
]


def _cmd_gridsearch(args) -> int:
    cfg = _resolve(args, "gridsearch", _GRID_OPTS)
    _echo_config("gridsearch", cfg, _GRID_OPTS, args.config_out)
    stream = read_series(cfg["input"], _series_format(cfg["format"], cfg["input"]))
    truth = read_changepoints(cfg["truth"])
    grid = GridSpec(
        lambda_values=cfg["lams"],
        alpha0_values=cfg["alpha0s"],
        beta0_values=cfg["beta0s"],
        delay_values=cfg["delays"],
        mu0=cfg["mu0"],
        kappa0=cfg["kappa0"],
        truncation=cfg["truncation"],
        scheme=cfg["scheme"],
        threshold=cfg["threshold_p"],
    )
    results = grid_search(grid, stream, truth, cfg["margin"])
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["lambda", "alpha0", "beta0", "delay", "precision", "recall", "f_score", "error"])
    for result in results:
        cell = result.cell
        if result.report is not None:
            writer.writerow(
                [
                    repr(cell.lam),
                    repr(cell.alpha0),
                    repr(cell.beta0),
                    cell.delay,
                    "%.6f" % result.report.precision,
                    "%.6f" % result.report.recall,
                    "%.6f" % result.report.f_score,
                    "",
                ]
            )
        else:
            writer.writerow(
                [repr(cell.lam), repr(cell.alpha0), repr(cell.beta0), cell.delay, "", "", "", result.error]
            )
    _atomic_write(cfg["out"], buffer.getvalue().splitlines())
    best = next((r for r in results if r.report is not None), None)
    if best is None:
        print("no successful grid cells")
    else:
        print(
            "best: lambda=%s alpha0=%s beta0=%s delay=%d F=%.6f"
            % (best.cell.lam, best.cell.alpha0, best.cell.beta0, best.cell.delay, best.report.f_score)
        )
    return 0


# -------------------------------------------------------------------- bench

_BENCH_OPTS = [
    _Opt("d", "int", 4, "stream dimension"),
    _Opt("t-values", "ints", (1000, 2000, 3000, 4000), "comma-separated stream lengths"),
    _Opt("truncation", "int", 500, "maximum retained run length"),
    _Opt("lam", "float", 50.0, "expected run length between changepoints"),
    _Opt("seed", "int", 0, "random seed for the benchmark stream"),
    _Opt("out", "str", None, "timing table CSV", required=True),
]


def _cmd_bench(args) -> int:
    cfg = _resolve(args, "bench", _BENCH_OPTS)
    _echo_config("bench", cfg, _BENCH_OPTS, args.config_out)
    rows = run_cost_benchmark(
        d=cfg["d"],
        t_values=cfg["t_values"],
        truncation=cfg["truncation"],
        lam=cfg["lam"],
        seed=cfg["seed"],
    )
    lines = ["T,factorized_seconds,multivariate_seconds,ratio"]
    for row in rows:
        lines.append(
            "%d,%.6f,%.6f,%.3f"
            % (row.T, row.factorized_seconds, row.multivariate_seconds, row.ratio)
        )
        print(
            "T=%d: factorized %.3fs, multivariate %.3fs, speedup %.1fx"
            % (row.T, row.factorized_seconds, row.multivariate_seconds, row.ratio)
        )
    _atomic_write(cfg["out"], lines)
    return 0


# --------------------------------------------------------------------- main

_COMMANDS = [
    ("simulate", _cmd_simulate, _SIMULATE_OPTS, "generate a labeled synthetic stream"),
    ("detect", _cmd_detect, _DETECT_OPTS, "run the run-length engine over a series file"),
    ("predict-detect", _cmd_predict_detect, _PREDICT_OPTS, "run the prediction-error detector"),
    ("evaluate", _cmd_evaluate, _EVALUATE_OPTS, "score detections against ground truth"),
    ("gridsearch", _cmd_gridsearch, _GRID_OPTS, "exhaustive hyperparameter sweep"),
    ("bench", _cmd_bench, _BENCH_OPTS, "time the factorized vs multivariate engines"),
]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamcpd", description="Online multivariate changepoint detection toolkit."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, func, options, help_text in _COMMANDS:
        sub = subparsers.add_parser(name, help=help_text)
        _add_options(sub, options)
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, DataIOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
