"""Stochastic multi-gradient descent for two objectives.

Each step solves the min-norm problem over the segment between the loss
gradient ``g1`` and the regularizer gradient ``g2``; the resulting weight
``lam`` sits on ``g2``. MRMSProp and MAdam keep one accumulator bank per
objective and blend the two normalized steps with ``lam``.
"""
import numpy as np

from . import kernels
from .errors import NumericError

COINCIDE_TOL = 1e-24


def solve_subproblem(g1, g2):
    """Return ``(lam, g)`` minimizing ``|(1 - lam) g1 + lam g2|^2`` on [0, 1]."""
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    if not (np.isfinite(g1).all() and np.isfinite(g2).all()):
        raise NumericError("non-finite gradient")
    d = g1 - g2
    dd = float(np.dot(d, d))
    if dd < COINCIDE_TOL:
        lam = 0.5
    else:
        lam = min(max(float(np.dot(d, g1)) / dd, 0.0), 1.0)
    return lam, (1.0 - lam) * g1 + lam * g2


class _MultiObjective:
    def __init__(self):
        self.k = 0
        self.lambda_history = []
        self.stationary_steps = 0
        # forces lam = 0 (loss gradient only); used as an ablation switch
        self.fixed_lambda = None

    def _weight(self, g1, g2):
        if not (np.isfinite(g1).all() and np.isfinite(g2).all()):
            raise NumericError("non-finite gradient")
        if self.fixed_lambda is not None:
            lam = float(self.fixed_lambda)
            return lam, (1.0 - lam) * g1 + lam * g2
        lam, g = solve_subproblem(g1, g2)
        if not g.any():
            self.stationary_steps += 1
        return lam, g


class SMGD(_MultiObjective):
    kind = "smgd"

    def __init__(self, n, momentum=0.0):
        super().__init__()
        self.momentum = momentum
        self.velocity = np.zeros(n) if momentum > 0 else None

    def step(self, w, g1, g2, lr):
        lam, g = self._weight(g1, g2)
        if self.velocity is None:
            kernels.sgd_update(w, g, lr)
        else:
            kernels.momentum_update(w, self.velocity, g, lr, self.momentum)
        self.lambda_history.append(lam)
        self.k += 1
        return w


class MRMSProp(_MultiObjective):
    kind = "mrmsprop"

    def __init__(self, n, beta=0.9, eps=1e-7):
        super().__init__()
        self.beta = beta
        self.eps = eps
        self.mov = [np.zeros(n), np.zeros(n)]

    def step(self, w, g1, g2, lr):
        lam, _ = self._weight(g1, g2)
        kernels.mrmsprop_update(w, self.mov[0], self.mov[1], g1, g2, lam, lr, self.beta, self.eps)
        self.lambda_history.append(lam)
        self.k += 1
        return w


class MAdam(_MultiObjective):
    """Both moment banks share one bias-correction counter."""

    kind = "madam"

    def __init__(self, n, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__()
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros(n), np.zeros(n)]
        self.v = [np.zeros(n), np.zeros(n)]

    def step(self, w, g1, g2, lr):
        lam, _ = self._weight(g1, g2)
        k = self.k + 1
        bc1 = 1.0 - self.beta1**k
        bc2 = 1.0 - self.beta2**k
        kernels.madam_update(
            w, self.m[0], self.v[0], self.m[1], self.v[1], g1, g2, lam, lr,
            self.beta1, self.beta2, bc1, bc2, self.eps,
        )
        self.lambda_history.append(lam)
        self.k = k
        return w


MULTI_OBJECTIVE = {"smgd": SMGD, "mrmsprop": MRMSProp, "madam": MAdam}
