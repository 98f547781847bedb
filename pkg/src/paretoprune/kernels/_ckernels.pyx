# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled in-place update kernels (see ``_pykernels`` for the reference)."""
from libc.math cimport sqrt, fabs

NAME = "cython"


def sgd_update(double[::1] w, const double[::1] g, double lr):
    cdef Py_ssize_t i, n = w.shape[0]
    for i in range(n):
        w[i] = w[i] - lr * g[i]


def momentum_update(double[::1] w, double[::1] vel, const double[::1] g,
                    double lr, double momentum):
    cdef Py_ssize_t i, n = w.shape[0]
    for i in range(n):
        vel[i] = vel[i] * momentum - lr * g[i]
        w[i] = w[i] + vel[i]


def rmsprop_update(double[::1] w, double[::1] mov, const double[::1] g,
                   double lr, double beta, double eps):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double c = 1.0 - beta
    for i in range(n):
        mov[i] = mov[i] * beta + c * (g[i] * g[i])
        w[i] = w[i] - lr * (g[i] / (sqrt(mov[i]) + eps))


def adam_update(double[::1] w, double[::1] m, double[::1] v, const double[::1] g,
                double lr, double beta1, double beta2, double bc1, double bc2,
                double eps):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double c1 = 1.0 - beta1
    cdef double c2 = 1.0 - beta2
    for i in range(n):
        m[i] = m[i] * beta1 + c1 * g[i]
        v[i] = v[i] * beta2 + c2 * (g[i] * g[i])
        w[i] = w[i] - lr * ((m[i] / bc1) / (sqrt(v[i] / bc2) + eps))


def mrmsprop_update(double[::1] w, double[::1] mov1, double[::1] mov2,
                    const double[::1] g1, const double[::1] g2, double lam,
                    double lr, double beta, double eps):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double c = 1.0 - beta
    cdef double l1 = 1.0 - lam
    cdef double u1, u2
    for i in range(n):
        mov1[i] = mov1[i] * beta + c * (g1[i] * g1[i])
        mov2[i] = mov2[i] * beta + c * (g2[i] * g2[i])
        u1 = g1[i] / (sqrt(mov1[i]) + eps)
        u2 = g2[i] / (sqrt(mov2[i]) + eps)
        w[i] = w[i] - lr * (l1 * u1 + lam * u2)


def madam_update(double[::1] w, double[::1] m1, double[::1] v1, double[::1] m2,
                 double[::1] v2, const double[::1] g1, const double[::1] g2,
                 double lam, double lr, double beta1, double beta2, double bc1,
                 double bc2, double eps):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double c1 = 1.0 - beta1
    cdef double c2 = 1.0 - beta2
    cdef double l1 = 1.0 - lam
    cdef double u1, u2
    for i in range(n):
        m1[i] = m1[i] * beta1 + c1 * g1[i]
        v1[i] = v1[i] * beta2 + c2 * (g1[i] * g1[i])
        m2[i] = m2[i] * beta1 + c1 * g2[i]
        v2[i] = v2[i] * beta2 + c2 * (g2[i] * g2[i])
        u1 = (m1[i] / bc1) / (sqrt(v1[i] / bc2) + eps)
        u2 = (m2[i] / bc1) / (sqrt(v2[i] / bc2) + eps)
        w[i] = w[i] - lr * (l1 * u1 + lam * u2)


def prune_segment(double[::1] w, double tau, unsigned char[::1] was_zero):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef Py_ssize_t pruned = 0, regrown = 0
    cdef double a
    for i in range(n):
        a = fabs(w[i])
        if a < tau:
            if w[i] != 0.0:
                pruned += 1
            w[i] = 0.0
            was_zero[i] = 1
        else:
            if was_zero[i]:
                regrown += 1
            was_zero[i] = 0
    return int(pruned), int(regrown)
