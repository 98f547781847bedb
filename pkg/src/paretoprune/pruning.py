"""Soft threshold pruning of dense-layer weights.

Pruned weights are written as exact zeros but nothing freezes them: a later
optimizer step may push a weight back above the threshold.
"""
import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError


class Strategy(enum.Enum):
    BATCHWISE = "batchwise"
    EPOCHWISE = "epochwise"
    AFTER_TRAINING = "after_training"
    OFF = "off"


class Hook(enum.Enum):
    AFTER_INIT = "after_init"
    AFTER_BATCH = "after_batch"
    AFTER_EPOCH = "after_epoch"
    AFTER_TRAINING = "after_training"


@dataclass(frozen=True)
class PruningPolicy:
    strategy: Strategy = Strategy.BATCHWISE
    tau: float = 1e-3
    layers: tuple = None
    prune_at_init: bool = True

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not 0.0 < self.tau < 1.0:
            raise ConfigurationError(f"pruning threshold {self.tau} outside (0, 1)")
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(int(i) for i in self.layers))


@dataclass
class PruneReport:
    pruned_count: int
    regrown_since_last: int
    nonzero_per_layer: tuple


def hook_points(policy):
    s = policy.strategy
    if s is Strategy.BATCHWISE:
        hooks = {Hook.AFTER_BATCH, Hook.AFTER_EPOCH, Hook.AFTER_TRAINING}
    elif s is Strategy.EPOCHWISE:
        hooks = {Hook.AFTER_EPOCH, Hook.AFTER_TRAINING}
    elif s is Strategy.AFTER_TRAINING:
        hooks = {Hook.AFTER_TRAINING}
    else:
        hooks = set()
    if policy.prune_at_init:
        hooks.add(Hook.AFTER_INIT)
    return hooks


def nonzero_per_layer(spec, w):
    return tuple(int(np.count_nonzero(w[ws])) for ws, _, _ in spec.layer_slices())


class Pruner:
    """Applies a policy in place and tracks regrowth between prune events."""

    def __init__(self, spec, policy):
        self.spec = spec
        self.policy = policy
        self.hooks = hook_points(policy)
        slices = spec.layer_slices()
        idx = range(len(slices)) if policy.layers is None else policy.layers
        bad = [i for i in idx if not 0 <= i < len(slices)]
        if bad:
            raise ConfigurationError(f"pruning layer indices out of range: {bad}")
        self.segments = [slices[i][0] for i in idx]
        self.was_zero = [np.zeros(s.stop - s.start, dtype=np.uint8) for s in self.segments]

    def wants(self, hook):
        return hook in self.hooks

    def apply(self, w):
        pruned = regrown = 0
        for seg, mask in zip(self.segments, self.was_zero):
            p, r = kernels.prune_segment(w[seg], self.policy.tau, mask)
            pruned += p
            regrown += r
        return PruneReport(pruned, regrown, nonzero_per_layer(self.spec, w))


def prune(w, policy, spec):
    """Pure variant: return a pruned copy of ``w`` and its report."""
    if policy.strategy is Strategy.OFF:
        raise ConfigurationError("prune called with strategy 'off'")
    out = np.array(w, dtype=np.float64, copy=True)
    report = Pruner(spec, policy).apply(out)
    return out, report
