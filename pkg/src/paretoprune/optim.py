"""Single-objective stochastic optimizers and learning-rate schedules.

Optimizers own their accumulators and update the weight vector in place.
The per-coordinate arithmetic lives in :mod:`paretoprune.kernels`.
"""
import inspect
import math

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericError


def lr_time_decay(t0, decay, k):
    return t0 / (1.0 + decay * k)


def _sigmoid(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (e + 1.0)


def lr_sigmoid_drop(kappa, kappa_max, t_start, t_end):
    """Smooth drop from ``t_start`` to ``t_end`` centred at 75% of the epochs."""
    z = (kappa - 0.75 * kappa_max) / (0.075 * kappa_max)
    return -(t_start - t_end) * _sigmoid(z) + t_start


class ConstantLR:
    def __init__(self, t0):
        self.t0 = t0

    def __call__(self, k, epoch):
        return self.t0


class TimeDecayLR:
    """Decays per optimizer iteration ``k``."""

    def __init__(self, t0, decay):
        self.t0 = t0
        self.decay = decay

    def __call__(self, k, epoch):
        return lr_time_decay(self.t0, self.decay, k)


class SigmoidDropLR:
    """Evaluated per epoch (``epoch`` is 1-based)."""

    def __init__(self, t_start, t_end, kappa_max):
        if t_end > t_start:
            raise ConfigurationError("sigmoid schedule needs t_end <= t_start")
        self.t_start = t_start
        self.t_end = t_end
        self.kappa_max = kappa_max

    def __call__(self, k, epoch):
        return lr_sigmoid_drop(max(epoch, 1), self.kappa_max, self.t_start, self.t_end)


def make_schedule(kind, t0, kappa_max, decay=0.0, t_start=None, t_end=None):
    if kind == "constant":
        return ConstantLR(t0)
    if kind == "time_decay":
        return TimeDecayLR(t0, decay)
    if kind == "sigmoid_drop":
        return SigmoidDropLR(t0 if t_start is None else t_start, t_end, kappa_max)
    raise ConfigurationError(f"unknown learning-rate schedule {kind!r}")


def _finite(*arrays):
    for a in arrays:
        if not np.isfinite(a).all():
            raise NumericError("non-finite gradient")


class SGD:
    """Plain SGD, or SGD with momentum when ``momentum > 0``."""

    kind = "sgd"

    def __init__(self, n, momentum=0.0):
        self.momentum = momentum
        self.k = 0
        self.velocity = np.zeros(n) if momentum > 0 else None

    def step(self, w, g, lr):
        _finite(g)
        if self.velocity is None:
            kernels.sgd_update(w, g, lr)
        else:
            kernels.momentum_update(w, self.velocity, g, lr, self.momentum)
        self.k += 1
        return w


class RMSProp:
    kind = "rmsprop"

    def __init__(self, n, beta=0.9, eps=1e-7):
        self.beta = beta
        self.eps = eps
        self.k = 0
        self.mov = np.zeros(n)

    def step(self, w, g, lr):
        _finite(g)
        kernels.rmsprop_update(w, self.mov, g, lr, self.beta, self.eps)
        self.k += 1
        return w


class Adam:
    """Adam with bias correction on the post-increment iteration counter."""

    kind = "adam"

    def __init__(self, n, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.k = 0
        self.m = np.zeros(n)
        self.v = np.zeros(n)

    def step(self, w, g, lr):
        _finite(g)
        k = self.k + 1
        bc1 = 1.0 - self.beta1**k
        bc2 = 1.0 - self.beta2**k
        kernels.adam_update(w, self.m, self.v, g, lr, self.beta1, self.beta2, bc1, bc2, self.eps)
        self.k = k
        return w


SINGLE_OBJECTIVE = {"sgd": SGD, "rmsprop": RMSProp, "adam": Adam}


def make_optimizer(kind, n, **hyper):
    """Build any single- or multi-objective optimizer by name."""
    from .mo_optim import MULTI_OBJECTIVE

    table = dict(SINGLE_OBJECTIVE, **MULTI_OBJECTIVE)
    if kind not in table:
        raise ConfigurationError(f"unknown optimizer {kind!r}")
    cls = table[kind]
    accepted = inspect.signature(cls).parameters
    return cls(n, **{k: v for k, v in hyper.items() if k in accepted and k != "n"})
