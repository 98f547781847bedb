"""Pure numpy implementations of the in-place update kernels.

Every function mirrors ``_ckernels.pyx`` operation for operation so that
both backends round identically. All arrays are contiguous float64 and
modified in place.
"""
import numpy as np

NAME = "python"


def sgd_update(w, g, lr):
    w -= lr * g


def momentum_update(w, vel, g, lr, momentum):
    vel *= momentum
    vel -= lr * g
    w += vel


def rmsprop_update(w, mov, g, lr, beta, eps):
    mov *= beta
    mov += (1.0 - beta) * np.square(g)
    w -= lr * (g / (np.sqrt(mov) + eps))


def adam_update(w, m, v, g, lr, beta1, beta2, bc1, bc2, eps):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * np.square(g)
    w -= lr * ((m / bc1) / (np.sqrt(v / bc2) + eps))


def mrmsprop_update(w, mov1, mov2, g1, g2, lam, lr, beta, eps):
    c = 1.0 - beta
    mov1 *= beta
    mov1 += c * np.square(g1)
    mov2 *= beta
    mov2 += c * np.square(g2)
    u1 = g1 / (np.sqrt(mov1) + eps)
    u2 = g2 / (np.sqrt(mov2) + eps)
    w -= lr * ((1.0 - lam) * u1 + lam * u2)


def madam_update(w, m1, v1, m2, v2, g1, g2, lam, lr, beta1, beta2, bc1, bc2, eps):
    c1 = 1.0 - beta1
    c2 = 1.0 - beta2
    m1 *= beta1
    m1 += c1 * g1
    v1 *= beta2
    v1 += c2 * np.square(g1)
    m2 *= beta1
    m2 += c1 * g2
    v2 *= beta2
    v2 += c2 * np.square(g2)
    u1 = (m1 / bc1) / (np.sqrt(v1 / bc2) + eps)
    u2 = (m2 / bc1) / (np.sqrt(v2 / bc2) + eps)
    w -= lr * ((1.0 - lam) * u1 + lam * u2)


def prune_segment(w, tau, was_zero):
    """Zero entries with ``|w| < tau``; return ``(pruned, regrown)``.

    ``was_zero`` (uint8) holds the zero pattern of the previous prune event
    and is overwritten with the new one.
    """
    small = np.abs(w) < tau
    regrown = int(np.count_nonzero(was_zero.view(bool) & ~small))
    pruned = int(np.count_nonzero(small & (w != 0.0)))
    w[small] = 0.0
    was_zero[:] = small
    return pruned, regrown
