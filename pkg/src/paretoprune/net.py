"""Dense ReLU/softmax networks stored as a single flat weight vector.

Layout of the flat vector: for each layer a row-major ``(n_out, n_in)``
weight block (one row per output neuron), followed by that layer's
``n_out`` biases when ``include_bias`` is set.
"""
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, NumericError, FormatError

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class NetworkSpec:
    layer_sizes: tuple
    include_bias: bool = True

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        problems = []
        if len(sizes) < 2:
            problems.append("layer_sizes: need at least input and output size")
        if any(s < 1 for s in sizes):
            problems.append("layer_sizes: every entry must be >= 1")
        if problems:
            raise ConfigurationError("invalid network spec", problems)

    @property
    def n_layers(self):
        return len(self.layer_sizes) - 1

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_classes(self):
        return self.layer_sizes[-1]

    def layer_slices(self):
        """``(weight_slice, bias_slice_or_None, (n_out, n_in))`` per layer."""
        out = []
        pos = 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            ws = slice(pos, pos + n_in * n_out)
            pos = ws.stop
            bs = None
            if self.include_bias:
                bs = slice(pos, pos + n_out)
                pos = bs.stop
            out.append((ws, bs, (n_out, n_in)))
        return out

    @property
    def n_params(self):
        return sum(
            n_in * n_out + (n_out if self.include_bias else 0)
            for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:])
        )

    def weight_mask(self, layers=None):
        """Boolean mask of weight-matrix entries (biases excluded).

        ``layers`` restricts the mask to the given layer indices.
        """
        mask = np.zeros(self.n_params, dtype=bool)
        for i, (ws, _, _) in enumerate(self.layer_slices()):
            if layers is None or i in layers:
                mask[ws] = True
        return mask

    def unpack(self, w):
        """Views ``[(W, b), ...]`` into ``w``; ``b`` is None without biases."""
        w = np.asarray(w)
        if w.ndim != 1 or w.shape[0] != self.n_params:
            raise DimensionError(
                f"weight vector has shape {w.shape}, expected ({self.n_params},)"
            )
        layers = []
        for ws, bs, shape in self.layer_slices():
            W = w[ws].reshape(shape)
            b = w[bs] if bs is not None else None
            layers.append((W, b))
        return layers

    def to_dict(self):
        return {"layer_sizes": list(self.layer_sizes), "include_bias": self.include_bias}


def init_weights(spec, seed):
    """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
    if not isinstance(spec, NetworkSpec):
        raise ConfigurationError("init_weights expects a NetworkSpec")
    rng = np.random.default_rng(seed)
    w = np.zeros(spec.n_params)
    for ws, _, (n_out, n_in) in spec.layer_slices():
        limit = np.sqrt(6.0 / (n_in + n_out))
        w[ws] = rng.uniform(-limit, limit, size=n_in * n_out)
    return w


def _check_inputs(spec, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.n_inputs:
        raise DimensionError(
            f"inputs have shape {X.shape}, expected (M, {spec.n_inputs})"
        )
    return X


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cache(spec, w, X):
    acts = [X]
    pre = []
    a = X
    layers = spec.unpack(w)
    # overflow is reported below as NumericError
    with np.errstate(over="ignore", invalid="ignore"):
        for i, (W, b) in enumerate(layers):
            z = a @ W.T
            if b is not None:
                z += b
            pre.append(z)
            if i < len(layers) - 1:
                a = np.maximum(z, 0.0)
            else:
                a = softmax(z)
            acts.append(a)
    if not np.isfinite(a).all():
        raise NumericError("non-finite value in forward pass")
    return layers, acts, pre


def forward(spec, w, X):
    """Class probabilities, one row per sample."""
    X = _check_inputs(spec, X)
    return _forward_cache(spec, w, X)[1][-1]


def cross_entropy(probs, Y):
    p = np.maximum(probs, PROB_FLOOR)
    return float(-np.sum(Y * np.log(p)) / Y.shape[0])


def loss_and_grad(spec, w, X, Y):
    """Mean multiclass cross entropy of the batch and its exact gradient."""
    X = _check_inputs(spec, X)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape != (X.shape[0], spec.n_classes):
        raise DimensionError(
            f"labels have shape {Y.shape}, expected ({X.shape[0]}, {spec.n_classes})"
        )
    if X.shape[0] == 0:
        raise DimensionError("empty batch")
    layers, acts, pre = _forward_cache(spec, w, X)
    probs = acts[-1]
    loss = cross_entropy(probs, Y)

    grad = np.empty(spec.n_params)
    slices = spec.layer_slices()
    delta = (probs - Y) / X.shape[0]
    for i in range(len(layers) - 1, -1, -1):
        W, b = layers[i]
        ws, bs, shape = slices[i]
        grad[ws] = (delta.T @ acts[i]).ravel()
        if bs is not None:
            grad[bs] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ W) * (pre[i - 1] > 0.0)
    if not np.isfinite(grad).all():
        raise NumericError("non-finite gradient")
    return loss, grad


def save_checkpoint(path, spec, w):
    """JSON header line, then the raw little-endian float64 weights."""
    w = np.asarray(w, dtype="<f8")
    if w.shape != (spec.n_params,):
        raise DimensionError("weight vector does not match spec")
    header = dict(spec.to_dict(), N=spec.n_params)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        fh.write(w.tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line)
        except ValueError as exc:
            raise FormatError("header", f"not a JSON line ({exc})") from None
        payload = fh.read()
    spec = NetworkSpec(tuple(header["layer_sizes"]), bool(header["include_bias"]))
    if header.get("N") != spec.n_params:
        raise FormatError("N", f"header N={header.get('N')} but spec has {spec.n_params}")
    if len(payload) != 8 * spec.n_params:
        raise FormatError("payload", f"expected {8 * spec.n_params} bytes, got {len(payload)}")
    w = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return spec, w
