"""Experiment commands: train, sweep, knee search and multi-gradient comparison.

Every command writes its artifacts into an output directory and returns a
manifest dict (also saved as ``manifest.json``). CSV floats use 17
significant digits so reruns compare byte for byte.
"""
import csv
import datetime
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import net
from .config import ExperimentConfig
from .errors import ConfigurationError, ParetoPruneError, ProbeError
from .mo_optim import MULTI_OBJECTIVE
from .objectives import ObjectivePoint, penalty_to_weight
from .pareto import (
    SearchBudget,
    bisection_search,
    dichotomic_search,
    filter_nondominated,
    find_knee,
    stochastic_dichotomic_search,
)
from .training import derive_seed, train

FRONT_COLUMNS = ["lam", "seed", "epochs", "e_train", "e_test", "omega_l1", "omega_l0",
                 "acc_train", "acc_test", "is_nondominated", "is_knee"]


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return "" if value is None else str(value)


class CsvSink:
    """Append-only CSV writer; each row is flushed as soon as it arrives."""

    def __init__(self, path, columns):
        self.path = path
        self.columns = list(columns)
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(self.columns)
        self._fh.flush()

    def write(self, row):
        self._w.writerow([fmt(row.get(c)) for c in self.columns])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, rows, columns=None):
    columns = columns or (list(rows[0]) if rows else [])
    with CsvSink(path, columns) as sink:
        for row in rows:
            sink.write(row)


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="milliseconds")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


# -- per-process data cache so pool workers load each dataset once ---------

_DATA = {}


def _datasets(cfg):
    key = json.dumps(cfg["dataset"], sort_keys=True)
    if key not in _DATA:
        _DATA[key] = cfg.load_datasets()
    return _DATA[key]


def _prepare(cfg):
    train_set, test_set = _datasets(cfg)
    spec = cfg.network_spec(train_set)
    cfg.check_against(spec, train_set, test_set)
    return spec, train_set, test_set


def summary_row(spec, tc, result):
    """Table-2-style row for a finished run."""
    s = result.summary
    l0 = [s[f"l0_layer{i + 1}"] for i in range(spec.n_layers)]
    mask = tc.regularizer.mask(spec)
    row = {
        "lam": tc.lam,
        "form": tc.form,
        "optimizer": tc.optimizer,
        "strategy": tc.pruning.strategy.value,
        "seed": tc.seed,
        "epochs": tc.epochs,
        "e_train": s["e_train"],
        "e_test": s["e_test"],
        "omega_l1": s["omega_l1"],
    }
    row.update({f"l0_layer{i + 1}": n for i, n in enumerate(l0)})
    row["omega_l0"] = int(sum(l0))
    row["acc_train"] = s["acc_train"]
    row["acc_test"] = s["acc_test"]
    row["collapsed"] = not np.any(result.weights[mask])
    if result.lambda_history:
        row["mean_lambda"] = float(np.mean(result.lambda_history))
    return row


def objective_point(row, view):
    if view == "acc_l0":
        return ObjectivePoint(1.0 - row["acc_test"], row["omega_l0"], dict(row))
    e = row["e_test"] if math.isfinite(row["e_test"]) else row["e_train"]
    return ObjectivePoint(e, row["omega_l1"], dict(row))


def front_rows(points, knee):
    front = filter_nondominated(points)
    rows = []
    for p in points:
        row = {c: p.meta.get(c) for c in FRONT_COLUMNS}
        row["is_nondominated"] = any(p is q for q in front)
        row["is_knee"] = p is knee
        rows.append(row)
    return rows


def _manifest(out, command, cfg, started, artifacts, status, **extra):
    m = {
        "command": command,
        "config": cfg.data,
        "config_hash": cfg.hash(),
        "started": started,
        "finished": _now(),
        "artifacts": sorted(set(artifacts) | {"manifest.json"}),
        "status": status,
    }
    m.update(extra)
    path = os.path.join(out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(_jsonable(m), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    m["self_check"] = verify_manifest(path)
    if m["self_check"]:
        m["status"] = "failed"
        with open(path, "w") as fh:
            json.dump(_jsonable(m), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    return m


def verify_manifest(path):
    """Problems with a written manifest; empty when every check passes."""
    with open(path) as fh:
        m = json.load(fh)
    problems = []
    out = os.path.dirname(path)
    for name in m["artifacts"]:
        if not os.path.exists(os.path.join(out, name)):
            problems.append(f"missing artifact {name}")
    try:
        rehash = ExperimentConfig(m["config"]).hash()
    except ConfigurationError as exc:
        problems.append(f"embedded config no longer validates: {exc}")
    else:
        if rehash != m["config_hash"]:
            problems.append("config hash does not match embedded config")
    return problems


# -- train -----------------------------------------------------------------


def cmd_train(cfg, out):
    started = _now()
    os.makedirs(out, exist_ok=True)
    spec, train_set, test_set = _prepare(cfg)
    tc = cfg.train_config(spec)
    tc.validate()
    artifacts = ["metrics.csv", "summary.csv", "checkpoint.bin"]
    sink = None

    def on_epoch(row):
        nonlocal sink
        if sink is None:
            sink = CsvSink(os.path.join(out, "metrics.csv"), row)
        sink.write(row)

    try:
        result = train(tc, train_set, test_set, on_epoch=on_epoch)
    finally:
        if sink is not None:
            sink.close()
    net.save_checkpoint(os.path.join(out, "checkpoint.bin"), spec, result.weights)
    row = summary_row(spec, tc, result)
    write_csv(os.path.join(out, "summary.csv"), [row])
    if tc.multi_objective:
        write_csv(os.path.join(out, "lambda_history.csv"),
                  [{"iteration": i + 1, "lam": lam} for i, lam in enumerate(result.lambda_history)],
                  ["iteration", "lam"])
        artifacts.append("lambda_history.csv")
    return _manifest(out, "train", cfg, started, artifacts, "ok", final_point=row, knee=None)


# -- sweep -----------------------------------------------------------------


def _sweep_job(job):
    data, lam, seed = job
    cfg = ExperimentConfig(data)
    try:
        spec, train_set, test_set = _prepare(cfg)
        tc = cfg.train_config(spec, lam=lam, seed=seed)
        result = train(tc, train_set, test_set)
    except (ParetoPruneError, ArithmeticError, ValueError) as exc:
        return {"lam": lam, "seed": seed, "status": "failed", "error": str(exc)}, []
    row = summary_row(spec, tc, result)
    row["status"] = "ok"
    return row, result.metrics


def _pool(jobs):
    return ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None


def cmd_sweep(cfg, out, jobs=1):
    started = _now()
    lams = cfg["lams"] if cfg["lams"] is not None else [cfg["lam"]]
    os.makedirs(out, exist_ok=True)
    spec, _, _ = _prepare(cfg)  # fail fast on a config that cannot fit the data
    master = cfg["seed"]
    work = [(cfg.data, float(lam), derive_seed(master, "sweep", float(lam))) for lam in lams]

    layer_cols = [f"l0_layer{i + 1}" for i in range(spec.n_layers)]
    summary_cols = (["lam", "form", "optimizer", "strategy", "seed", "epochs", "e_train", "e_test",
                     "omega_l1"] + layer_cols + ["omega_l0", "acc_train", "acc_test", "collapsed"])
    if cfg["optimizer"]["kind"] in MULTI_OBJECTIVE:
        summary_cols.append("mean_lambda")
    summary_cols += ["status", "error"]
    rows, failures = [], 0
    pool = _pool(jobs)
    metrics_sink = None
    try:
        results = pool.map(_sweep_job, work) if pool else map(_sweep_job, work)
        with CsvSink(os.path.join(out, "summary.csv"), summary_cols) as sink:
            for (_, lam, seed), (row, metrics) in zip(work, results):
                sink.write(row)
                if row["status"] != "ok":
                    failures += 1
                    continue
                rows.append(row)
                for m in metrics:
                    if metrics_sink is None:
                        metrics_sink = CsvSink(os.path.join(out, "metrics.csv"), ["lam", "seed"] + list(m))
                    metrics_sink.write(dict(m, lam=lam, seed=seed))
    finally:
        if pool:
            pool.shutdown()
        if metrics_sink is not None:
            metrics_sink.close()

    points = [objective_point(r, cfg["objectives"]) for r in rows]
    front = filter_nondominated(points)
    knee = find_knee(front) if len(front) > 1 else None
    write_csv(os.path.join(out, "front.csv"), front_rows(points, knee), FRONT_COLUMNS)
    artifacts = ["summary.csv", "front.csv"] + (["metrics.csv"] if metrics_sink else [])
    status = "ok" if failures == 0 else "failed"
    return _manifest(out, "sweep", cfg, started, artifacts, status,
                     runs=len(work), failures=failures,
                     knee=knee.meta if knee is not None else None)


# -- knee search -----------------------------------------------------------


class ConfigTrainer:
    """Trainer callable for the searches; picklable for worker pools."""

    def __init__(self, data, form, view):
        self.data = data
        self.form = form
        self.view = view

    def __call__(self, lam, seed, epochs):
        cfg = ExperimentConfig(self.data)
        spec, train_set, test_set = _prepare(cfg)
        tc = cfg.train_config(spec, lam=lam, seed=seed, epochs=epochs, form=self.form)
        result = train(tc, train_set, test_set)
        return objective_point(summary_row(spec, tc, result), self.view)


class _LoggingMap:
    """``map`` replacement that writes every finished probe to the probe log."""

    def __init__(self, sink, pool):
        self.sink = sink
        self.pool = pool

    def __call__(self, fn, jobs):
        jobs = list(jobs)
        results = self.pool.map(fn, jobs) if self.pool else map(fn, jobs)
        for (level, index, lam, seed), point in zip(jobs, results):
            row = dict(point.meta)
            row.update(level=level, index=index, lam=lam, seed=seed,
                       e_value=point.e_value, omega_value=point.omega_value)
            self.sink.write(row)
            yield point


def cmd_knee(cfg, out, jobs=1):
    started = _now()
    s = cfg["search"]
    if s is None:
        raise ConfigurationError("knee search needs a 'search' section")
    os.makedirs(out, exist_ok=True)
    spec, _, _ = _prepare(cfg)
    trainer = ConfigTrainer(cfg.data, s["form"], cfg["objectives"])
    layer_cols = [f"l0_layer{i + 1}" for i in range(spec.n_layers)]
    probe_cols = (["level", "index", "lam", "seed", "epochs", "e_value", "omega_value", "e_train",
                   "e_test", "omega_l1"] + layer_cols + ["omega_l0", "acc_train", "acc_test"])
    pool = _pool(jobs)
    error = None
    result = None
    try:
        with CsvSink(os.path.join(out, "probes.csv"), probe_cols) as sink:
            map_fn = _LoggingMap(sink, pool)
            budget = SearchBudget(s["levels"], s["epochs_per_probe"], cfg["seed"])
            if s["kind"] == "bisection":
                result = bisection_search(trainer, s["lam_lo"], s["lam_hi"], s["iterations"], budget, map_fn)
            elif s["kind"] == "dichotomic":
                result = dichotomic_search(trainer, s["lam_lo"], s["lam_hi"], budget, map_fn)
            else:
                result = stochastic_dichotomic_search(trainer, s["lam_lo"], s["lam_hi"], budget, map_fn)
    except ProbeError as exc:
        error = str(exc)
    finally:
        if pool:
            pool.shutdown()
    artifacts = ["probes.csv"]
    knee_meta = None
    interval = None
    if result is not None:
        points = [p["point"] for p in result.probes]
        write_csv(os.path.join(out, "front.csv"), front_rows(points, result.knee), FRONT_COLUMNS)
        artifacts.append("front.csv")
        if result.knee is not None:
            knee_meta = dict(result.knee.meta)
            write_csv(os.path.join(out, "knee.csv"), [result.knee.meta], FRONT_COLUMNS[:-2])
            artifacts.append("knee.csv")
        interval = list(result.interval) if result.interval else None
    return _manifest(out, "knee", cfg, started, artifacts, "ok" if error is None else "failed",
                     knee=knee_meta, interval=interval, error=error,
                     probes=len(result.probes) if result else None)


# -- multi-gradient comparison ---------------------------------------------


def cmd_smgd_compare(cfg, out):
    """Fixed-weight baseline vs a multi-gradient optimizer on matched settings.

    With ``compare.ablate`` the multi-gradient arm ignores the regularizer
    gradient and the baseline runs unregularized, so both arms should agree.
    """
    started = _now()
    c = cfg["compare"]
    if c is None:
        raise ConfigurationError("smgd-compare needs a 'compare' section")
    os.makedirs(out, exist_ok=True)
    spec, train_set, test_set = _prepare(cfg)
    epochs = c["epochs"] or cfg["epochs"]
    lam_star = 0.0 if c["ablate"] else c["lam_star"]
    base_tc = cfg.train_config(spec, lam=lam_star, epochs=epochs)
    mo_opt = dict(cfg["optimizer"], kind=c["optimizer"])
    mo_tc = cfg.train_config(spec, lam=lam_star, epochs=epochs, optimizer=mo_opt, ablate=c["ablate"])
    base = train(base_tc, train_set, test_set)
    mo = train(mo_tc, train_set, test_set)

    base_name, mo_name = base_tc.optimizer, mo_tc.optimizer
    write_csv(os.path.join(out, f"metrics_{base_name}.csv"), base.metrics)
    write_csv(os.path.join(out, f"metrics_{mo_name}.csv"), mo.metrics)
    paired = []
    for rb, rm in zip(base.metrics, mo.metrics):
        paired.append({
            "epoch": rb["epoch"],
            f"acc_train_{base_name}": rb["acc_train"], f"acc_train_{mo_name}": rm["acc_train"],
            f"acc_test_{base_name}": rb["acc_test"], f"acc_test_{mo_name}": rm["acc_test"],
            f"omega_l1_{base_name}": rb["omega_l1"], f"omega_l1_{mo_name}": rm["omega_l1"],
            "mean_lambda": rm["mean_lambda"],
        })
    write_csv(os.path.join(out, "compare.csv"), paired)
    # the history holds weighted-sum weights; put the reference on that scale too
    ref = lam_star if cfg["form"] == "weighted" else penalty_to_weight(lam_star)
    write_csv(os.path.join(out, "lambda_history.csv"),
              [{"iteration": i + 1, "lam": lam, "lam_star": ref} for i, lam in enumerate(mo.lambda_history)],
              ["iteration", "lam", "lam_star"])
    arms = {base_name: summary_row(spec, base_tc, base), mo_name: summary_row(spec, mo_tc, mo)}
    mean_lam = float(np.mean(mo.lambda_history)) if mo.lambda_history else None
    artifacts = [f"metrics_{base_name}.csv", f"metrics_{mo_name}.csv", "compare.csv", "lambda_history.csv"]
    return _manifest(out, "smgd-compare", cfg, started, artifacts, "ok",
                     arms=arms, mean_lambda=mean_lam, lam_star=lam_star, lam_star_weighted=ref,
                     knee=None)


COMMANDS = {
    "train": cmd_train,
    "sweep": cmd_sweep,
    "knee": cmd_knee,
    "smgd-compare": cmd_smgd_compare,
}
