"""Complexity measures, scalarizations and accuracy."""
import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, UnsupportedKindError


class RegularizerKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    L0 = "l0"


@dataclass(frozen=True)
class Regularizer:
    """A complexity measure restricted to the weight matrices of ``layers``.

    ``layers=None`` means every dense layer. Biases are never included.
    """

    kind: RegularizerKind = RegularizerKind.L1
    layers: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "kind", RegularizerKind(self.kind))
        if self.layers is not None:
            layers = tuple(int(i) for i in self.layers)
            if not layers:
                raise ConfigurationError("regularizer layers must be nonempty")
            object.__setattr__(self, "layers", layers)

    def mask(self, spec):
        if self.layers is not None:
            bad = [i for i in self.layers if not 0 <= i < spec.n_layers]
            if bad:
                raise ConfigurationError(f"regularizer layer indices out of range: {bad}")
        return spec.weight_mask(self.layers)


def omega(kind, w, mask=None):
    """Value of the complexity measure on ``w`` (optionally masked)."""
    kind = RegularizerKind(kind)
    w = np.asarray(w, dtype=np.float64)
    if mask is not None:
        w = w[mask]
    if kind is RegularizerKind.L1:
        return float(np.abs(w).sum())
    if kind is RegularizerKind.L2:
        return float(0.5 * np.dot(w, w))
    return int(np.count_nonzero(w))


def omega_gradient(kind, w, mask=None):
    """Gradient of L2, or the L1 subgradient with value 0 at 0."""
    kind = RegularizerKind(kind)
    w = np.asarray(w, dtype=np.float64)
    if kind is RegularizerKind.L1:
        g = np.sign(w)
    elif kind is RegularizerKind.L2:
        g = w.copy()
    else:
        raise UnsupportedKindError("L0 has no usable gradient")
    if mask is not None:
        g[~mask] = 0.0
    return g


def weighted_sum(e, om, lam):
    """``(1 - lam) * e + lam * om`` for ``lam`` in [0, 1]."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"weight {lam} outside [0, 1]")
    return (1.0 - lam) * e + lam * om


def penalty_to_weight(lam_reg):
    """Regularization coefficient of ``E + c * Omega`` -> equivalent weight."""
    if lam_reg < 0:
        raise DomainError(f"regularization coefficient {lam_reg} is negative")
    return lam_reg / (1.0 + lam_reg)


def weight_to_penalty(lam_ws):
    """Inverse of :func:`penalty_to_weight`; undefined at weight 1."""
    if not 0.0 <= lam_ws < 1.0:
        raise DomainError(f"weight {lam_ws} outside [0, 1)")
    return lam_ws / (1.0 - lam_ws)


def accuracy(probs, labels):
    """Fraction of rows whose argmax matches; ties go to the lowest index."""
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    if probs.shape != labels.shape:
        raise ValueError(f"shape mismatch {probs.shape} vs {labels.shape}")
    return float(np.mean(np.argmax(probs, axis=1) == np.argmax(labels, axis=1)))


@dataclass
class ObjectivePoint:
    """A point ``(e_value, omega_value)`` in objective space plus provenance."""

    e_value: float
    omega_value: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.e_value = float(self.e_value)
        self.omega_value = float(self.omega_value)

    @property
    def values(self):
        return (self.e_value, self.omega_value)

    @property
    def lam(self):
        return self.meta.get("lam")
