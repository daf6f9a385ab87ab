"""samez command line: simulate, solve, sample, train, evaluate, compose, predict."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .engagement import (EngagementQuery, QueryValidationError, SimulationDiverged,
                         run_engagement, setup_engagement, write_trace)
from .envelope import SolverConfig, solve_max_range
from .evaluation import Report, ReportError, build_report, evaluate_model, parse_report
from .multimodel import (Assignment, IncompleteReportError, InfeasibleComposition, ManifestError,
                         compose_accuracy, compose_speed, load_multimodel, model_filename)
from .params import NM, ParamsError, resolve_params
from .sampling import (ALL_SETS, SECTORS, WHOLE, Dataset, DatasetFormatError, GenerationError,
                       file_sha256, generate_dataset, read_dataset, sector_by_key,
                       split_train_test, union)
from .surrogates import METHODS, ModelFormatError, TrainedModel, TrainingDiverged, grid_search
from .surrogates.search import unit_seed

log = logging.getLogger("samez")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_DIVERGED = 0, 2, 3, 4, 5
PRED_HEADER = ("alt_ft", "speed_kt", "aspect_deg", "pred_max_range_nm")
PLOT_HEADER = ("aspect_deg", "max_range_nm", "source")
SPLIT_FORMAT_VERSION = 1


class InputArtifactError(RuntimeError):
    """Missing, malformed or tampered input file (exit 3)."""


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _check_writable(path: Path, force: bool):
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; use --force to overwrite")


def _write_text(path: Path, text: str, force: bool):
    _check_writable(path, force)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _query(a) -> EngagementQuery:
    return EngagementQuery(a.alt_ft, a.speed_kt, a.aspect_deg).validate()


def _solver_cfg(a) -> SolverConfig:
    return SolverConfig(scan_step_nm=a.scan_step_nm, tolerance_nm=a.tolerance_nm, dt=a.dt,
                        scan_max_nm=a.scan_max_nm)


def _sets(arg: str):
    if arg == "all":
        return list(ALL_SETS)
    return [sector_by_key(k.strip()) for k in arg.split(",")]


def _methods(arg: str):
    ms = [m.strip().upper() for m in arg.split(",")]
    bad = [m for m in ms if m not in METHODS]
    if bad:
        raise ValueError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
    return ms


# ---------------------------------------------------------------------------
# commands


def cmd_sim(a):
    params = resolve_params(a.sam)
    q = _query(a)
    if not a.range_nm > 0:
        raise QueryValidationError([f"range_nm={a.range_nm} must be > 0"])
    m, t = setup_engagement(q, a.range_nm * NM, params)
    if a.trace:
        _check_writable(Path(a.trace), a.force)
        outcome, rows = run_engagement(m, t, params, a.dt, trace=True)
        write_trace(a.trace, rows)
    else:
        outcome = run_engagement(m, t, params, a.dt)
    _emit({**outcome.to_dict(), "sam_id": params.name, "query": q.__dict__,
           "range_nm": a.range_nm, "dt": a.dt})
    return EXIT_OK


def cmd_envelope(a):
    params = resolve_params(a.sam)
    q = _query(a)
    res = solve_max_range(q, params, _solver_cfg(a))
    _emit({**res.to_dict(), "sam_id": params.name, "query": q.__dict__})
    return EXIT_OK


def _dataset_path(out: Path, sam_id: str, key: str) -> Path:
    return out / f"{sam_id}_{key}.csv"


def cmd_dataset(a):
    params = resolve_params(a.sam)
    cfg = _solver_cfg(a)
    out = Path(a.out)
    sets = _sets(a.sector)
    paths = [_dataset_path(out, params.name, s.key) for s in sets]
    for p in paths:
        _check_writable(p, a.force)
    made = {}
    summary = []
    for s, p in zip(sets, paths):
        t0 = time.perf_counter()
        if s is WHOLE and a.whole_mode == "union":
            parts = [made.get(x.key) or read_dataset(_dataset_path(out, params.name, x.key))
                     for x in SECTORS]
            ds = union(parts)
        else:
            idx = ALL_SETS.index(s)
            ds = generate_dataset(params, s, a.n, unit_seed(a.seed, idx), cfg, a.workers,
                                  a.max_retries)
        ds.meta["run_config"] = {"sam": a.sam, "master_seed": a.seed, "n": a.n,
                                 "whole_mode": a.whole_mode, "workers": a.workers}
        ds.write(p, force=a.force)
        made[s.key] = ds
        log.info("%s: %d rows in %.1f s", p, len(ds), time.perf_counter() - t0)
        summary.append({"path": str(p), "rows": len(ds), "sha256": file_sha256(p),
                        **ds.meta.get("generation", {})})
    _emit({"datasets": summary})
    return EXIT_OK


def _split_record(ds_path: Path, ds: Dataset, seed: int, ratio: float):
    solved = ds.solved()
    tr, te = split_train_test(solved, ratio, seed)
    rec = {"format_version": SPLIT_FORMAT_VERSION, "dataset": ds_path.name,
           "dataset_sha256": file_sha256(ds_path), "seed": seed, "ratio": ratio,
           "n_rows": len(ds), "n_excluded": len(ds) - len(solved), "n_train": len(tr),
           "n_test": len(te), "train_sha256": tr.sha256(), "test_sha256": te.sha256()}
    return rec, tr, te


def _train_job(job):
    method, key, X, y, seed, sam_id, out, force = job
    hyper, model, rep = grid_search(method, X, y, seed, sam_id=sam_id, sector=key)
    mp = Path(out) / model_filename(key, method)
    model.save(mp, force=force)
    cv = Path(out) / f"{key}_{method}.cv.json"
    cv.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"sector": key, "method": method, "model": str(mp), "cv": rep.summary()}


def cmd_train(a):
    data = Path(a.data)
    out = Path(a.out)
    methods = _methods(a.methods)
    sam_id = resolve_params(a.sam).name
    jobs = []
    for s in _sets(a.sector):
        dp = _dataset_path(data, sam_id, s.key)
        if not dp.exists():
            raise InputArtifactError(f"dataset not found: {dp}")
        for m in methods:
            _check_writable(out / model_filename(s.key, m), a.force)
        ds = read_dataset(dp)
        rec, tr, _ = _split_record(dp, ds, a.split_seed, a.train_fraction)
        _write_text(out / f"{s.key}_split.json", json.dumps(rec, indent=2, sort_keys=True) + "\n",
                    True)
        for m in methods:
            seed = unit_seed(a.seed, ALL_SETS.index(s), METHODS.index(m))
            jobs.append((m, s.key, tr.X, tr.y, seed, sam_id, str(out), a.force))
    out.mkdir(parents=True, exist_ok=True)
    if a.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=a.workers) as ex:
            results = list(ex.map(_train_job, jobs))
    else:
        results = [_train_job(j) for j in jobs]
    for r in results:
        log.info("%s %s: %s", r["sector"], r["method"], r["cv"])
    _emit({"models": results})
    return EXIT_OK


def _verified_test_set(models: Path, data: Path, key: str):
    sp = models / f"{key}_split.json"
    if not sp.exists():
        raise InputArtifactError(f"split record not found: {sp}")
    rec = json.loads(sp.read_text(encoding="utf-8"))
    dp = data / rec["dataset"]
    if not dp.exists():
        raise InputArtifactError(f"dataset not found: {dp}")
    if file_sha256(dp) != rec["dataset_sha256"]:
        raise InputArtifactError(f"{dp} does not match the dataset recorded at training time")
    _, _, te = _split_record(dp, read_dataset(dp), rec["seed"], rec["ratio"])
    if te.sha256() != rec["test_sha256"]:
        raise InputArtifactError(f"test split of {dp} does not match the recorded split")
    return te, rec


def cmd_eval(a):
    models = Path(a.models)
    data = Path(a.data)
    out = Path(a.out)
    _check_writable(out, a.force)
    rows = []
    prov = {"datasets": {}, "splits": {}}
    for s in ALL_SETS:
        present = [m for m in METHODS if (models / model_filename(s.key, m)).exists()]
        if not present:
            continue
        te, rec = _verified_test_set(models, data, s.key)
        prov["datasets"][s.key] = rec["dataset_sha256"]
        prov["splits"][s.key] = {"seed": rec["seed"], "test_sha256": rec["test_sha256"]}
        for m in present:
            model = TrainedModel.load(models / model_filename(s.key, m))
            rows.append(evaluate_model(model, te.X, te.y, sector=s.key, repeats=a.repeats))
    if not rows:
        raise InputArtifactError(f"no models found in {models}")
    report = build_report(rows, prov)
    _write_text(out, report.to_csv(), a.force)
    table = report.render()
    _write_text(out.with_suffix(".txt"), table + "\n", True)
    _write_text(out.with_name(out.stem + ".meta.json"),
                json.dumps(prov, indent=2, sort_keys=True) + "\n", True)
    sys.stdout.write(table + "\n")
    return EXIT_OK


def _read_report(path) -> Report:
    p = Path(path)
    if not p.exists():
        raise InputArtifactError(f"report not found: {p}")
    return parse_report(p.read_text(encoding="utf-8"))


def cmd_compose(a):
    report = _read_report(a.report)
    if a.policy == "accuracy":
        plan = compose_accuracy(report, a.eps_rmse, a.eps_mape)
    else:
        plan = compose_speed(report, a.rmse_cap)
    out = Path(a.out)
    models = Path(a.models) if a.models else Path(a.report).parent
    missing = [str(models / x.model) for x in plan.assignments if not (models / x.model).exists()]
    if missing:
        raise InputArtifactError(f"model files not found: {missing}")
    # manifest stores model paths relative to its own directory
    base = out.parent.resolve()
    plan.assignments = [Assignment(x.sector, x.method,
                                   Path(os.path.relpath((models / x.model).resolve(), base))
                                   .as_posix())
                        for x in plan.assignments]
    _write_text(out, plan.dumps(), a.force)
    _emit({"kind": plan.kind, "assignments": plan.summary(), "manifest": str(out)})
    return EXIT_OK


def _load_predictor(a):
    if a.manifest:
        return load_multimodel(a.manifest)
    return TrainedModel.load(a.model)


def _read_queries(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise InputArtifactError(f"input not found: {p}")
    rows = list(csv.reader(io.StringIO(p.read_text(encoding="utf-8"))))
    if not rows or [h.strip() for h in rows[0][:3]] != list(PRED_HEADER[:3]):
        raise InputArtifactError(f"{p}: expected header {','.join(PRED_HEADER[:3])}")
    try:
        return np.array([[float(v) for v in r[:3]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputArtifactError(f"{p}: {exc}") from None


def cmd_predict(a):
    pred = _load_predictor(a)
    if a.input:
        X = _read_queries(a.input)
    else:
        if None in (a.alt_ft, a.speed_kt, a.aspect_deg):
            raise QueryValidationError(["give --input or all of --alt-ft/--speed-kt/--aspect-deg"])
        X = np.array([[a.alt_ft, a.speed_kt, a.aspect_deg]])
    if isinstance(pred, TrainedModel):
        bad = np.flatnonzero(pred.outside_domain(X))
    else:
        bad = [i for i, x in enumerate(X) if not EngagementQuery(*x).in_box()]
    if len(bad):
        log.warning("%d queries outside the training domain; extrapolating", len(bad))
    if np.any((X[:, 2] < 0) | (X[:, 2] > 180)):
        raise QueryValidationError(["aspect_deg must lie in [0, 180] for routing"])
    t0 = time.perf_counter()
    y = pred.predict(X)
    pt = time.perf_counter() - t0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PRED_HEADER)
    for x, v in zip(X, y):
        w.writerow([repr(float(x[0])), repr(float(x[1])), repr(float(x[2])), repr(float(v))])
    timing = {"n": len(X), "pt_s": pt, "per_shot_s": pt / len(X), "extrapolated": len(bad)}
    if a.out:
        _write_text(Path(a.out), buf.getvalue(), a.force)
        _emit(timing)
    else:
        sys.stdout.write(buf.getvalue())
        sys.stderr.write(json.dumps(timing, sort_keys=True) + "\n")
    return EXIT_OK


def aspect_sweep(step_deg: float) -> list[float]:
    if not step_deg > 0:
        raise QueryValidationError([f"step_deg={step_deg} must be > 0"])
    k = int(math.floor(180.0 / step_deg + 1e-9))
    pts = [round(i * step_deg, 10) for i in range(k + 1)]
    if pts[-1] < 180.0:
        pts.append(180.0)
    return pts


def cmd_plotdata(a):
    if not (a.manifest or a.model or a.sam):
        raise QueryValidationError(["give --manifest/--model (surrogate) and/or --sam (sim)"])
    aspects = aspect_sweep(a.step_deg)
    for x in aspects:
        EngagementQuery(a.alt_ft, a.speed_kt, x).validate()
    rows = []
    if a.manifest or a.model:
        pred = _load_predictor(a)
        X = np.array([[a.alt_ft, a.speed_kt, x] for x in aspects])
        rows += [(x, float(v), "surrogate") for x, v in zip(aspects, pred.predict(X))]
    if a.sam:
        params = resolve_params(a.sam)
        cfg = _solver_cfg(a)
        for x in aspects:
            r = solve_max_range(EngagementQuery(a.alt_ft, a.speed_kt, x), params, cfg)
            rows.append((x, r.max_range_nm, "sim"))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_HEADER)
    for x, v, src in rows:
        w.writerow([repr(float(x)), repr(float(v)), src])
    if a.out:
        _write_text(Path(a.out), buf.getvalue(), a.force)
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_query(p, required=True):
    p.add_argument("--alt-ft", type=float, required=required,
                   help="target elevation above the launch site (ft)")
    p.add_argument("--speed-kt", type=float, required=required, help="target speed (kt)")
    p.add_argument("--aspect-deg", type=float, required=required,
                   help="aspect angle, 180 = head-on (deg)")


def _add_solver(p, dt=0.01):
    p.add_argument("--dt", type=float, default=dt, help="integration step (s)")
    p.add_argument("--tolerance-nm", type=float, default=0.05)
    p.add_argument("--scan-step-nm", type=float, default=2.0)
    p.add_argument("--scan-max-nm", type=float, default=None,
                   help="outermost scan range; default from the archetype")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="samez", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--verbose", "-v", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="fly one engagement and print the outcome")
    p.add_argument("--sam", required=True, help="preset name (sam_a, sam_b) or params file")
    _add_query(p)
    p.add_argument("--range-nm", type=float, required=True, help="launch ground range (nm)")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--trace", help="write the per-step trajectory CSV here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_sim)

    p = sub.add_parser("envelope", help="solve the maximum launch range for one query")
    p.add_argument("--sam", required=True)
    _add_query(p)
    _add_solver(p)
    p.set_defaults(fn=cmd_envelope)

    p = sub.add_parser("dataset", help="generate LHS datasets per sector")
    p.add_argument("--sam", required=True)
    p.add_argument("--sector", default="all", help="s0..s4, whole, a comma list, or all")
    p.add_argument("--n", type=int, default=5000, help="samples per set")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-retries", type=int, default=5)
    p.add_argument("--whole-mode", choices=("lhs", "union"), default="lhs",
                   help="whole set: its own LHS over [0,180] or the union of the sectors")
    p.add_argument("--force", action="store_true")
    _add_solver(p)
    p.set_defaults(fn=cmd_dataset)

    p = sub.add_parser("train", help="split, grid-search and fit surrogates")
    p.add_argument("--sam", required=True)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="model directory")
    p.add_argument("--sector", default="all")
    p.add_argument("--methods", default="PR,ANN,RFR")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score models on their held-out split")
    p.add_argument("--models", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--repeats", type=int, default=3, help="timing repeats (median)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("compose", help="build a multimodel manifest from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--policy", choices=("accuracy", "speed"), default="accuracy")
    p.add_argument("--eps-rmse", type=float, default=0.2)
    p.add_argument("--eps-mape", type=float, default=0.2)
    p.add_argument("--rmse-cap", type=float, default=1.0)
    p.add_argument("--models", help="model directory (default: the report's directory)")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_compose)

    p = sub.add_parser("predict", help="predict max range with a model or multimodel")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--manifest")
    g.add_argument("--model")
    p.add_argument("--input", help="CSV with alt_ft,speed_kt,aspect_deg")
    _add_query(p, required=False)
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("plotdata", help="max range versus aspect at fixed altitude and speed")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--manifest")
    g.add_argument("--model")
    p.add_argument("--sam", help="also (or only) sweep the simulator")
    p.add_argument("--alt-ft", type=float, required=True)
    p.add_argument("--speed-kt", type=float, required=True)
    p.add_argument("--step-deg", type=float, default=5.0)
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    _add_solver(p)
    p.set_defaults(fn=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(a.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.fn(a)
    except InfeasibleComposition as exc:
        code, msg = EXIT_INFEASIBLE, exc
    except (SimulationDiverged, TrainingDiverged) as exc:
        code, msg = EXIT_DIVERGED, exc
    except (InputArtifactError, FileNotFoundError, DatasetFormatError, ModelFormatError,
            ManifestError, ReportError, IncompleteReportError, json.JSONDecodeError) as exc:
        code, msg = EXIT_INPUT, exc
    except (QueryValidationError, ParamsError, FileExistsError, GenerationError,
            ValueError) as exc:
        code, msg = EXIT_USAGE, exc
    sys.stderr.write(f"samez {a.command}: error: {msg}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
