import csv
import json
import shutil
import time

import pytest

from samez.cli import (EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_USAGE, PLOT_HEADER,
                       PRED_HEADER, aspect_sweep, main)
from samez.engagement import TRACE_HEADER

QUERY = ["--alt-ft", "1000", "--speed-kt", "400", "--aspect-deg", "180"]
CHEAP = ["--dt", "0.05", "--scan-step-nm", "4", "--tolerance-nm", "0.5"]


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_sim_json(capsys):
    assert main(["sim", "--sam", "sam_a", *QUERY, "--range-nm", "8"]) == EXIT_OK
    out = _json(capsys)
    assert out["result"] == "Hit" and out["termination_reason"] == "HitRadius"
    assert out["sam_id"] == "sam_a" and out["query"]["aspect_deg"] == 180.0


def test_sim_trace(tmp_path, capsys):
    p = tmp_path / "trace.csv"
    assert main(["sim", "--sam", "sam_b", *QUERY, "--range-nm", "20", "--trace", str(p)]) == 0
    rows = list(csv.reader(p.open()))
    assert tuple(rows[0]) == TRACE_HEADER and len(rows) == _json(capsys)["steps"] + 1
    assert main(["sim", "--sam", "sam_b", *QUERY, "--range-nm", "20", "--trace", str(p)]) \
        == EXIT_USAGE


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sim", "--sam", "sam_a", "--alt-ft", "1000"])
    assert exc.value.code == 2
    assert main(["sim", "--sam", "sam_z", *QUERY, "--range-nm", "8"]) == EXIT_USAGE
    assert main(["sim", "--sam", "sam_a", *QUERY, "--range-nm", "-1"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_envelope(capsys):
    assert main(["envelope", "--sam", "sam_a", *QUERY, *CHEAP]) == EXIT_OK
    out = _json(capsys)
    assert out["status"] == "Solved" and out["max_range_nm"] > 0
    assert out["bracket_hi_nm"] - out["bracket_lo_nm"] <= 0.5
    bad = ["--alt-ft", "60000", "--speed-kt", "400", "--aspect-deg", "10"]
    assert main(["envelope", "--sam", "sam_a", *bad]) == EXIT_USAGE
    assert "elevation_ft" in capsys.readouterr().err


def test_aspect_sweep():
    assert len(aspect_sweep(5)) == 37 and aspect_sweep(5)[-1] == 180.0
    assert len(aspect_sweep(1)) == 181
    assert aspect_sweep(7)[-2:] == [175.0, 180.0]
    with pytest.raises(ValueError):
        aspect_sweep(0)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    data, models = root / "data", root / "models"
    assert main(["dataset", "--sam", "sam_a", "--n", "80", "--seed", "1", "--out", str(data),
                 *CHEAP]) == 0
    assert main(["train", "--sam", "sam_a", "--data", str(data), "--out", str(models)]) == 0
    assert main(["eval", "--models", str(models), "--data", str(data),
                 "--out", str(models / "report.csv"), "--repeats", "1"]) == 0
    return root


def test_pipeline_artifacts(pipeline):
    models = pipeline / "models"
    assert len(list(models.glob("*_split.json"))) == 6
    assert len(list(models.glob("*_*[RN].json"))) == 18
    text = (models / "report.csv").read_text()
    assert len(text.splitlines()) == 19
    assert (models / "report.txt").read_text().startswith("sam_a")


def test_compose_predict_plotdata(pipeline, capsys):
    models = pipeline / "models"
    man = pipeline / "manifest.json"
    assert main(["compose", "--report", str(models / "report.csv"), "--out", str(man)]) == 0
    kind = _json(capsys)["kind"]
    assert kind in ("Single", "Homogeneous", "Heterogeneous")

    q = pipeline / "queries.csv"
    q.write_text("alt_ft,speed_kt,aspect_deg\n1000,400,150\n20000,700,10\n")
    assert main(["predict", "--manifest", str(man), "--input", str(q)]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert tuple(rows[0]) == PRED_HEADER and len(rows) == 3
    assert all(float(r[3]) > 0 for r in rows[1:])

    single = models / "s1_PR.json"
    assert main(["predict", "--model", str(single), *QUERY]) == 0
    assert '"extrapolated": 1' in capsys.readouterr().err

    out = pipeline / "plot.csv"
    assert main(["plotdata", "--manifest", str(man), "--alt-ft", "5000", "--speed-kt", "500",
                 "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == PLOT_HEADER and len(rows) == 38
    t0 = time.perf_counter()
    assert main(["plotdata", "--manifest", str(man), "--alt-ft", "5000", "--speed-kt", "500",
                 "--step-deg", "1"]) == 0
    assert time.perf_counter() - t0 < 2.0
    assert len(capsys.readouterr().out.splitlines()) == 182


def test_artifact_errors(pipeline, tmp_path):
    models = pipeline / "models"
    report = str(models / "report.csv")
    # refusing to overwrite
    assert main(["eval", "--models", str(models), "--data", str(pipeline / "data"),
                 "--out", report]) == EXIT_USAGE
    # nothing fits under a zero cap
    assert main(["compose", "--report", report, "--policy", "speed", "--rmse-cap", "0",
                 "--out", str(tmp_path / "m.json")]) == EXIT_INFEASIBLE
    assert main(["compose", "--report", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "m.json")]) == EXIT_INPUT
    assert main(["predict", "--model", str(tmp_path / "nope.json"), *QUERY]) == EXIT_INPUT

    data = tmp_path / "data"
    shutil.copytree(pipeline / "data", data)
    p = data / "sam_a_s2.csv"
    lines = p.read_text().splitlines()
    lines[1] = lines[1][:-1] + ("1" if lines[1][-1] != "1" else "2")
    p.write_text("\n".join(lines) + "\n")
    assert main(["eval", "--models", str(models), "--data", str(data),
                 "--out", str(tmp_path / "r.csv")]) == EXIT_INPUT
