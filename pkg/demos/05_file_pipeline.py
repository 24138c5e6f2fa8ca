"""The full file-based pipeline, twice: library calls and the CLI.

simulate -> detect -> evaluate, with every intermediate artifact on disk
in the package's stable formats (series CSV, detections NDJSON, one
changepoint per line). The CLI half shells out to the installed
``streamcpd`` entry point and reproduces the library half byte for byte.

Run from the repository root:  python demos/05_file_pipeline.py
"""

import json
import pathlib
import subprocess
import sys

from streamcpd import (
    BocdEngine,
    ChangepointSet,
    FactorizedModel,
    GeometricSegmentLength,
    HazardSpec,
    NormalGammaParams,
    SyntheticSpec,
    apply_delay,
    eval_report_json,
    generate,
    margin_f_score,
    read_changepoints,
    read_detections,
    read_series,
    write_changepoints,
    write_detections,
    write_series,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- library half -----------------------------------------------------------
labeled = generate(
    SyntheticSpec(
        d=3, segment_count=10, length_law=GeometricSegmentLength(70.0), mean_shift=5.0, seed=77
    )
)
stream_path = OUT / "pipeline_stream.csv"
truth_path = OUT / "pipeline_truth.txt"
write_series(labeled.stream, stream_path, "csv")
write_changepoints(labeled.truth, truth_path)
print(f"wrote {stream_path} ({len(labeled.stream)} observations) and {truth_path}")

stream = read_series(stream_path, "csv")
engine = BocdEngine(
    FactorizedModel(stream.d, NormalGammaParams(0.0, 1.0, 0.01, 0.1)),
    HazardSpec(10.0),
    truncation=500,
    scheme="map_set",
)
run = engine.run(stream)
detections_path = OUT / "pipeline_detections.ndjson"
write_detections(run.detections, detections_path)
print(f"wrote {detections_path} ({len(run.detections)} detections)")

truth = read_changepoints(truth_path)
detected = ChangepointSet.from_times(r.located_at for r in read_detections(detections_path))
report = margin_f_score(truth, apply_delay(detected, 0), margin=5)
print(f"library evaluation: {eval_report_json(report)}")

# --- CLI half ---------------------------------------------------------------
cli_dets = OUT / "pipeline_detections_cli.ndjson"
commands = [
    ["streamcpd", "detect",
     "--input", str(stream_path),
     "--lam", "10", "--alpha0", "0.01", "--beta0", "0.1",
     "--detections-out", str(cli_dets)],
    ["streamcpd", "evaluate", "--truth", str(truth_path), "--detections", str(cli_dets)],
]
for cmd in commands:
    print(f"\n$ {' '.join(cmd)}")
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        print(proc.stderr, file=sys.stderr)
        raise SystemExit(f"command failed with exit code {proc.returncode}")
    print(proc.stdout.rstrip())

assert cli_dets.read_bytes() == detections_path.read_bytes(), "CLI and library disagree"
cli_report = json.loads(proc.stdout.splitlines()[-1])
assert f"{cli_report['f_score']:.6f}" == f"{report.f_score:.6f}"
print("\nCLI output matches the library pipeline byte for byte.")
