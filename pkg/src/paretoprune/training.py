"""Mini-batch training loop with scalarized or multi-gradient steps."""
import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import net
from .data import batches
from .errors import ConfigurationError
from .mo_optim import MULTI_OBJECTIVE
from .objectives import Regularizer, RegularizerKind, accuracy, omega, omega_gradient
from .optim import make_optimizer, make_schedule
from .pruning import Hook, Pruner, PruningPolicy, Strategy

FORMS = ("penalty", "weighted")


def derive_seed(master, *parts):
    """Reproducible 32-bit seed from a master seed and labels."""
    text = ":".join([str(int(master))] + [repr(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "little")


@dataclass
class TrainConfig:
    spec: net.NetworkSpec
    optimizer: str = "adam"
    hyper: dict = field(default_factory=dict)  # lr, beta, beta1, beta2, eps, momentum
    schedule: str = "constant"
    schedule_params: dict = field(default_factory=dict)  # decay, t_start, t_end
    regularizer: Regularizer = field(default_factory=Regularizer)
    lam: float = 0.0
    form: str = "penalty"  # "penalty": E + lam*Omega, "weighted": (1-lam)E + lam*Omega
    pruning: PruningPolicy = field(
        default_factory=lambda: PruningPolicy(Strategy.OFF, prune_at_init=False)
    )
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    ablate_regularizer: bool = False

    @property
    def multi_objective(self):
        return self.optimizer in MULTI_OBJECTIVE

    def validate(self):
        problems = []
        if self.form not in FORMS:
            problems.append(f"form: {self.form!r} not in {FORMS}")
        if self.lam < 0:
            problems.append("lam: must be >= 0")
        if self.form == "weighted" and self.lam > 1:
            problems.append("lam: weighted form needs lam in [0, 1]")
        if self.epochs < 1:
            problems.append("epochs: must be >= 1")
        if self.batch_size < 1:
            problems.append("batch_size: must be >= 1")
        if self.hyper.get("lr", 1e-3) <= 0:
            problems.append("lr: must be > 0")
        if self.regularizer.kind is RegularizerKind.L0:
            problems.append("regularizer: L0 cannot drive gradient training")
        if problems:
            raise ConfigurationError("invalid training configuration", problems)


@dataclass
class TrainResult:
    weights: np.ndarray
    metrics: list
    lambda_history: list
    summary: dict


def evaluate(spec, w, dataset):
    probs = net.forward(spec, w, dataset.inputs)
    return {
        "e": net.cross_entropy(probs, dataset.labels),
        "acc": accuracy(probs, dataset.labels),
    }


def _row(cfg, epoch, lr, w, train_set, test_set, reg_mask, prune_stats, mo=None):
    spec = cfg.spec
    tr = evaluate(spec, w, train_set)
    if test_set is not None:
        te = evaluate(spec, w, test_set)
    else:
        te = {"e": float("nan"), "acc": float("nan")}
    row = {
        "epoch": epoch,
        "t_k": lr,
        "e_train": tr["e"],
        "e_test": te["e"],
        "omega_l1": omega(RegularizerKind.L1, w, reg_mask),
    }
    for i, (ws, _, _) in enumerate(spec.layer_slices()):
        row[f"l0_layer{i + 1}"] = int(np.count_nonzero(w[ws]))
    row["acc_train"] = tr["acc"]
    row["acc_test"] = te["acc"]
    row["pruned_count"] = prune_stats[0]
    row["regrown_since_last"] = prune_stats[1]
    if mo is not None:
        row["mean_lambda"] = mo[0]
        row["stationary_steps"] = mo[1]
    return row


def train(cfg, train_set, test_set=None, w0=None, on_epoch=None):
    """Run ``cfg.epochs`` epochs and return weights plus per-epoch metrics.

    ``on_epoch`` receives each metrics row as soon as it is computed.
    """
    cfg.validate()
    spec = cfg.spec
    if train_set.inputs.shape[1] != spec.n_inputs or train_set.n_classes != spec.n_classes:
        raise ConfigurationError(
            "dataset does not match network",
            [f"inputs {train_set.inputs.shape[1]} vs {spec.n_inputs}",
             f"classes {train_set.n_classes} vs {spec.n_classes}"],
        )
    if cfg.batch_size > len(train_set):
        raise ConfigurationError(f"batch size {cfg.batch_size} exceeds {len(train_set)} samples")

    w = net.init_weights(spec, derive_seed(cfg.seed, "init")) if w0 is None else np.array(w0, dtype=np.float64)
    reg_mask = cfg.regularizer.mask(spec)
    reg_kind = cfg.regularizer.kind
    hyper = dict(cfg.hyper)
    lr0 = hyper.pop("lr", 1e-3)
    opt = make_optimizer(cfg.optimizer, spec.n_params, **hyper)
    if cfg.multi_objective and cfg.ablate_regularizer:
        opt.fixed_lambda = 0.0
    schedule = make_schedule(cfg.schedule, lr0, cfg.epochs, **cfg.schedule_params)
    pruner = Pruner(spec, cfg.pruning)

    if cfg.form == "penalty":
        c_loss, c_reg = 1.0, cfg.lam
    else:
        c_loss, c_reg = 1.0 - cfg.lam, cfg.lam

    metrics = []

    def emit(row):
        metrics.append(row)
        if on_epoch is not None:
            on_epoch(row)

    stats = [0, 0]

    def do_prune():
        rep = pruner.apply(w)
        stats[0] += rep.pruned_count
        stats[1] += rep.regrown_since_last

    if pruner.wants(Hook.AFTER_INIT):
        do_prune()
    mo0 = (float("nan"), 0) if cfg.multi_objective else None
    emit(_row(cfg, 0, schedule(0, 1), w, train_set, test_set, reg_mask, stats, mo0))

    for epoch in range(1, cfg.epochs + 1):
        stats = [0, 0]
        n_hist = len(opt.lambda_history) if cfg.multi_objective else 0
        stationary0 = opt.stationary_steps if cfg.multi_objective else 0
        epoch_seed = derive_seed(cfg.seed, "epoch", epoch)
        lr = schedule(opt.k, epoch)
        for X, Y in batches(train_set, cfg.batch_size, epoch_seed):
            _, g_loss = net.loss_and_grad(spec, w, X, Y)
            g_reg = omega_gradient(reg_kind, w, reg_mask)
            lr = schedule(opt.k, epoch)
            if cfg.multi_objective:
                if cfg.ablate_regularizer:
                    g_reg[:] = 0.0
                opt.step(w, g_loss, g_reg, lr)
            else:
                g = g_loss if c_loss == 1.0 else c_loss * g_loss
                if c_reg:
                    g = g + c_reg * g_reg
                opt.step(w, g, lr)
            if pruner.wants(Hook.AFTER_BATCH):
                do_prune()
        if pruner.wants(Hook.AFTER_EPOCH):
            do_prune()
        if epoch == cfg.epochs and pruner.wants(Hook.AFTER_TRAINING):
            do_prune()
        mo = None
        if cfg.multi_objective:
            hist = opt.lambda_history[n_hist:]
            mo = (float(np.mean(hist)) if hist else float("nan"), opt.stationary_steps - stationary0)
        emit(_row(cfg, epoch, lr, w, train_set, test_set, reg_mask, stats, mo))

    history = list(opt.lambda_history) if cfg.multi_objective else []
    return TrainResult(w, metrics, history, dict(metrics[-1]))

