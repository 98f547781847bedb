"""Experiment configuration: JSON loading, validation and canonical hashing."""
import copy
import hashlib
import inspect
import json
import math
import os

from .data import desk_subset, load_idx, synthetic_gaussian_blobs
from .errors import ConfigurationError
from .mo_optim import MULTI_OBJECTIVE
from .net import NetworkSpec
from .objectives import Regularizer
from .optim import SINGLE_OBJECTIVE
from .pruning import PruningPolicy, Strategy
from .training import TrainConfig

OPTIMIZERS = dict(SINGLE_OBJECTIVE, **MULTI_OBJECTIVE)
SCHEDULES = {
    "constant": set(),
    "time_decay": {"decay"},
    "sigmoid_drop": {"t_start", "t_end"},
}
SEARCH_KINDS = ("dichotomic", "stochastic-dichotomic", "bisection")
OBJECTIVE_VIEWS = ("e_l1", "acc_l0")  # (E_test, Omega_l1) or (1 - acc_test, Omega_l0)

DEFAULTS = {
    "dataset": {"kind": "synthetic", "n_classes": 3, "n_per_class": 40, "dim": 4,
                "separation": 3.0, "test_per_class": 20, "seed": 0},
    "network": {"layers": None},
    "optimizer": {"kind": "adam", "lr": 1e-3},
    "schedule": {"kind": "constant"},
    "regularizer": {"kind": "l1", "layers": None},
    "lam": 0.0,
    "lams": None,
    "form": "penalty",
    "pruning": {"strategy": "off", "tau": 1e-3, "layers": None, "prune_at_init": None},
    "epochs": 10,
    "batch_size": 32,
    "seed": 0,
    "objectives": "e_l1",
    "search": None,
    "compare": None,
}
SEARCH_DEFAULTS = {"kind": "bisection", "lam_lo": 1e-5, "lam_hi": 0.1, "iterations": 5,
                   "levels": 3, "epochs_per_probe": 2, "form": "weighted"}
# the baseline arm is the config's own (single-objective) optimizer
COMPARE_DEFAULTS = {"optimizer": "madam", "lam_star": 3e-4,
                    "epochs": None, "baseline_epochs": None, "ablate": False}
IDX_KEYS = ("train_images", "train_labels", "test_images", "test_labels")


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(out.get(key), dict) and isinstance(value, dict):
            out[key] = dict(out[key], **value)
        else:
            out[key] = value
    return out


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


class ExperimentConfig:
    """A fully specified experiment, validated on construction.

    Build one from a plain dict (``ExperimentConfig(d)``) or a JSON file
    (:meth:`load`). Missing keys take the values in ``DEFAULTS``.
    """

    def __init__(self, data, base_dir=None):
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        self.data = _merge(DEFAULTS, data)
        given_ds = data.get("dataset")
        if isinstance(given_ds, dict) and given_ds.get("kind", "synthetic") != "synthetic":
            # synthetic defaults do not apply to file-backed datasets
            self.data["dataset"] = dict(given_ds)
        if isinstance(self.data.get("search"), dict):
            self.data["search"] = dict(SEARCH_DEFAULTS, **self.data["search"])
        if isinstance(self.data.get("compare"), dict):
            self.data["compare"] = dict(COMPARE_DEFAULTS, **self.data["compare"])
        ds = self.data["dataset"]
        if isinstance(ds, dict) and ds.get("kind") == "idx" and base_dir is not None:
            for key in IDX_KEYS:
                if isinstance(ds.get(key), str):
                    ds[key] = os.path.normpath(os.path.join(base_dir, ds[key]))
        self.validate()

    @classmethod
    def load(cls, path, overrides=None):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
        if overrides:
            data = dict(data, **overrides)
        return cls(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def __getitem__(self, key):
        return self.data[key]

    # -- canonical form -------------------------------------------------

    def canonical(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"), allow_nan=False)

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_seed(self, seed):
        return ExperimentConfig(dict(self.data, seed=seed))

    # -- validation -----------------------------------------------------

    def validate(self):
        d = self.data
        problems = []
        unknown = sorted(set(d) - set(DEFAULTS))
        problems += [f"{k}: unknown key" for k in unknown]
        problems += self._check_dataset(d["dataset"])
        problems += self._check_network(d["network"])
        problems += self._check_optimizer(d["optimizer"], "optimizer")

        sch = d["schedule"]
        if not isinstance(sch, dict) or sch.get("kind") not in SCHEDULES:
            problems.append(f"schedule.kind: must be one of {sorted(SCHEDULES)}")
        else:
            extra = set(sch) - {"kind"} - SCHEDULES[sch["kind"]]
            problems += [f"schedule.{k}: not used by {sch['kind']}" for k in sorted(extra)]
            for k in SCHEDULES[sch["kind"]]:
                if k in sch and not (_is_num(sch[k]) and sch[k] >= 0):
                    problems.append(f"schedule.{k}: must be a number >= 0")
            if sch["kind"] == "sigmoid_drop" and "t_end" not in sch:
                problems.append("schedule.t_end: required for sigmoid_drop")

        reg = d["regularizer"]
        if not isinstance(reg, dict) or reg.get("kind") not in ("l1", "l2"):
            problems.append("regularizer.kind: must be 'l1' or 'l2'")
        elif reg.get("layers") is not None and not self._int_list(reg["layers"]):
            problems.append("regularizer.layers: must be a nonempty list of integers or null")

        if d["form"] not in ("penalty", "weighted"):
            problems.append("form: must be 'penalty' or 'weighted'")
        if not (_is_num(d["lam"]) and d["lam"] >= 0):
            problems.append("lam: must be a number >= 0")
        elif d["form"] == "weighted" and d["lam"] > 1:
            problems.append("lam: weighted form needs lam <= 1")
        if d["lams"] is not None:
            lams = d["lams"]
            if not isinstance(lams, list) or not lams:
                problems.append("lams: must be a nonempty list")
            elif not all(_is_num(x) and x >= 0 for x in lams):
                problems.append("lams: every entry must be a number >= 0")
            elif d["form"] == "weighted" and any(x > 1 for x in lams):
                problems.append("lams: weighted form needs entries <= 1")

        pr = d["pruning"]
        if not isinstance(pr, dict):
            problems.append("pruning: must be an object")
        else:
            if pr.get("strategy") not in [s.value for s in Strategy]:
                problems.append(f"pruning.strategy: must be one of {[s.value for s in Strategy]}")
            if not (_is_num(pr.get("tau")) and 0 < pr["tau"] < 1):
                problems.append("pruning.tau: must lie in (0, 1)")
            if pr.get("layers") is not None and not self._int_list(pr["layers"]):
                problems.append("pruning.layers: must be a nonempty list of integers or null")
            if pr.get("prune_at_init") not in (None, True, False):
                problems.append("pruning.prune_at_init: must be true, false or null")

        for key in ("epochs", "batch_size"):
            if not (_is_int(d[key]) and d[key] >= 1):
                problems.append(f"{key}: must be an integer >= 1")
        if not (_is_int(d["seed"]) and d["seed"] >= 0):
            problems.append("seed: must be an integer >= 0")
        if d["objectives"] not in OBJECTIVE_VIEWS:
            problems.append(f"objectives: must be one of {list(OBJECTIVE_VIEWS)}")
        if d["search"] is not None:
            problems += self._check_search(d["search"])
        if d["compare"] is not None:
            problems += self._check_compare(d["compare"], d["epochs"])
            if isinstance(d["optimizer"], dict) and d["optimizer"].get("kind") in MULTI_OBJECTIVE:
                problems.append("optimizer.kind: compare baseline must be single-objective")
        if problems:
            raise ConfigurationError("invalid experiment configuration", problems)

    @staticmethod
    def _int_list(x):
        return isinstance(x, list) and x and all(_is_int(i) and i >= 0 for i in x)

    @staticmethod
    def _check_dataset(ds):
        if not isinstance(ds, dict):
            return ["dataset: must be an object"]
        kind = ds.get("kind")
        problems = []
        if kind == "synthetic":
            for k in ("n_classes", "n_per_class", "dim", "test_per_class"):
                if not (_is_int(ds.get(k)) and ds[k] >= 1):
                    problems.append(f"dataset.{k}: must be an integer >= 1")
            if not (_is_num(ds.get("separation")) and ds["separation"] >= 0):
                problems.append("dataset.separation: must be a number >= 0")
            if not (_is_int(ds.get("seed")) and ds["seed"] >= 0):
                problems.append("dataset.seed: must be an integer >= 0")
            allowed = set(DEFAULTS["dataset"])
        elif kind == "idx":
            for k in IDX_KEYS:
                if not isinstance(ds.get(k), str):
                    problems.append(f"dataset.{k}: path required")
                elif not os.path.exists(ds[k]):
                    problems.append(f"dataset.{k}: {ds[k]} does not exist")
            for k in ("train_size", "test_size"):
                if ds.get(k) is not None and not (_is_int(ds[k]) and ds[k] >= 1):
                    problems.append(f"dataset.{k}: must be an integer >= 1 or null")
            for k in ("train_skip", "test_skip"):
                if ds.get(k) is not None and not (_is_int(ds[k]) and ds[k] >= 0):
                    problems.append(f"dataset.{k}: must be an integer >= 0")
            allowed = {"kind", *IDX_KEYS, "train_size", "test_size", "train_skip", "test_skip"}
        else:
            return ["dataset.kind: must be 'synthetic' or 'idx'"]
        problems += [f"dataset.{k}: unknown key" for k in sorted(set(ds) - allowed)]
        return problems

    @staticmethod
    def _check_network(nw):
        if not isinstance(nw, dict):
            return ["network: must be an object"]
        layers = nw.get("layers")
        if layers is None:
            return []
        if not (isinstance(layers, list) and len(layers) >= 2 and all(_is_int(n) and n >= 1 for n in layers)):
            return ["network.layers: must list >= 2 positive integers"]
        if layers[-1] < 2:
            return ["network.layers: need at least 2 output classes"]
        return []

    @staticmethod
    def _check_optimizer(opt, where):
        if not isinstance(opt, dict) or opt.get("kind") not in OPTIMIZERS:
            return [f"{where}.kind: must be one of {sorted(OPTIMIZERS)}"]
        problems = []
        accepted = set(inspect.signature(OPTIMIZERS[opt["kind"]]).parameters) - {"n"}
        for k, v in opt.items():
            if k == "kind":
                continue
            if k != "lr" and k not in accepted:
                problems.append(f"{where}.{k}: not a parameter of {opt['kind']}")
            elif not _is_num(v):
                problems.append(f"{where}.{k}: must be a finite number")
        lr = opt.get("lr", 1e-3)
        if _is_num(lr) and lr <= 0:
            problems.append(f"{where}.lr: must be > 0")
        for k in ("beta", "beta1", "beta2", "momentum"):
            if k in opt and _is_num(opt[k]) and not 0 <= opt[k] < 1:
                problems.append(f"{where}.{k}: must lie in [0, 1)")
        if "eps" in opt and _is_num(opt["eps"]) and opt["eps"] <= 0:
            problems.append(f"{where}.eps: must be > 0")
        return problems

    @staticmethod
    def _check_search(s):
        if not isinstance(s, dict):
            return ["search: must be an object or null"]
        problems = [f"search.{k}: unknown key" for k in sorted(set(s) - set(SEARCH_DEFAULTS))]
        if s["kind"] not in SEARCH_KINDS:
            problems.append(f"search.kind: must be one of {list(SEARCH_KINDS)}")
        lo, hi = s["lam_lo"], s["lam_hi"]
        if not (_is_num(lo) and _is_num(hi)):
            problems.append("search.lam_lo/lam_hi: must be numbers")
        elif not 0 <= lo < hi < 1:
            problems.append(f"search.lam_lo/lam_hi: need 0 <= lam_lo < lam_hi < 1, got {lo}, {hi}")
        for k in ("iterations", "levels", "epochs_per_probe"):
            if not (_is_int(s[k]) and s[k] >= 1):
                problems.append(f"search.{k}: must be an integer >= 1")
        if s["form"] not in ("penalty", "weighted"):
            problems.append("search.form: must be 'penalty' or 'weighted'")
        return problems

    @staticmethod
    def _check_compare(c, epochs):
        if not isinstance(c, dict):
            return ["compare: must be an object or null"]
        problems = [f"compare.{k}: unknown key" for k in sorted(set(c) - set(COMPARE_DEFAULTS))]
        if c["optimizer"] not in MULTI_OBJECTIVE:
            problems.append(f"compare.optimizer: must be one of {sorted(MULTI_OBJECTIVE)}")
        if not (_is_num(c["lam_star"]) and c["lam_star"] >= 0):
            problems.append("compare.lam_star: must be a number >= 0")
        arms = [c["epochs"] if c["epochs"] is not None else epochs,
                c["baseline_epochs"] if c["baseline_epochs"] is not None else epochs]
        if not all(_is_int(e) and e >= 1 for e in arms):
            problems.append("compare.epochs/baseline_epochs: must be integers >= 1")
        elif arms[0] != arms[1]:
            problems.append(f"compare.epochs: arms must match, got {arms[0]} vs {arms[1]}")
        if c["ablate"] not in (True, False):
            problems.append("compare.ablate: must be true or false")
        return problems

    # -- builders -------------------------------------------------------

    def load_datasets(self):
        """Return ``(train, test)``; may raise FormatError for bad files."""
        ds = self.data["dataset"]
        if ds["kind"] == "synthetic":
            train = synthetic_gaussian_blobs(ds["n_classes"], ds["n_per_class"], ds["dim"],
                                             ds["seed"], ds["separation"], name="blobs-train")
            # same class centres, independent noise
            test = synthetic_gaussian_blobs(ds["n_classes"], ds["test_per_class"], ds["dim"],
                                            ds["seed"] + 1_000_003, ds["separation"], name="blobs-test")
            return train, test
        train = load_idx(ds["train_images"], ds["train_labels"], name="train")
        test = load_idx(ds["test_images"], ds["test_labels"], name="test")
        if ds.get("train_size") is not None or ds.get("train_skip"):
            n = ds.get("train_size") or len(train) - (ds.get("train_skip") or 0)
            train = desk_subset(train, n, ds.get("train_skip") or 0)
        if ds.get("test_size") is not None or ds.get("test_skip"):
            n = ds.get("test_size") or len(test) - (ds.get("test_skip") or 0)
            test = desk_subset(test, n, ds.get("test_skip") or 0)
        return train, test

    def network_spec(self, train=None):
        layers = self.data["network"]["layers"]
        if layers is None:
            if train is None:
                raise ConfigurationError("network.layers: required when no dataset is given")
            layers = [train.inputs.shape[1], train.n_classes]
        return NetworkSpec(tuple(layers))

    def pruning_policy(self):
        pr = self.data["pruning"]
        at_init = pr["prune_at_init"]
        if at_init is None:
            at_init = pr["strategy"] != "off"
        return PruningPolicy(pr["strategy"], pr["tau"], pr["layers"], at_init)

    def train_config(self, spec, lam=None, seed=None, epochs=None, optimizer=None,
                     form=None, ablate=False):
        d = self.data
        opt = dict(optimizer or d["optimizer"])
        kind = opt.pop("kind")
        sch = dict(d["schedule"])
        reg = d["regularizer"]
        return TrainConfig(
            spec=spec,
            optimizer=kind,
            hyper=opt,
            schedule=sch.pop("kind"),
            schedule_params=sch,
            regularizer=Regularizer(reg["kind"], reg["layers"]),
            lam=float(d["lam"] if lam is None else lam),
            form=form or d["form"],
            pruning=self.pruning_policy(),
            epochs=int(epochs or d["epochs"]),
            batch_size=d["batch_size"],
            seed=int(d["seed"] if seed is None else seed),
            ablate_regularizer=ablate,
        )

    def check_against(self, spec, train, test):
        problems = []
        if spec.n_inputs != train.inputs.shape[1]:
            problems.append(f"network.layers: {spec.n_inputs} inputs but data has {train.inputs.shape[1]}")
        if spec.n_classes != train.n_classes:
            problems.append(f"network.layers: {spec.n_classes} outputs but data has {train.n_classes} classes")
        if test.inputs.shape[1] != train.inputs.shape[1]:
            problems.append("dataset: train and test feature counts differ")
        if self.data["batch_size"] > len(train):
            problems.append(f"batch_size: {self.data['batch_size']} exceeds {len(train)} training samples")
        for key in ("regularizer", "pruning"):
            layers = self.data[key]["layers"]
            if layers is not None and any(i >= spec.n_layers for i in layers):
                problems.append(f"{key}.layers: indices must be < {spec.n_layers}")
        if problems:
            raise ConfigurationError("configuration does not fit the data", problems)
