# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels; same contracts as ``_pykernels``."""

from libc.math cimport sqrt, pow


def bias_relu(double[:, ::1] z, const double[::1] b):
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            s = z[i, j] + b[j]
            z[i, j] = s if s > 0.0 else 0.0


def bias_add(double[:, ::1] z, const double[::1] b):
    cdef Py_ssize_t i, j
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            z[i, j] = z[i, j] + b[j]


def relu_mask_grad(double[:, ::1] g, const double[:, ::1] a):
    cdef Py_ssize_t i, j
    for i in range(g.shape[0]):
        for j in range(g.shape[1]):
            if a[i, j] <= 0.0:
                g[i, j] = 0.0


def td_residual(const double[:, ::1] q, const long[::1] actions,
                const double[::1] targets, double[:, ::1] grad_out):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n = q.shape[0]
    cdef double diff, total = 0.0
    for i in range(n):
        for j in range(q.shape[1]):
            grad_out[i, j] = 0.0
    for i in range(n):
        diff = q[i, actions[i]] - targets[i]
        grad_out[i, actions[i]] = 2.0 * diff / n
        total += diff * diff
    return total / n


def adam_step(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
              double lr, double beta1, double beta2, double eps, long step):
    cdef Py_ssize_t i
    cdef double bc1 = 1.0 - pow(beta1, <double>step)
    cdef double bc2 = 1.0 - pow(beta2, <double>step)
    cdef double c1 = 1.0 - beta1
    cdef double c2 = 1.0 - beta2
    for i in range(p.shape[0]):
        m[i] = m[i] * beta1 + c1 * g[i]
        v[i] = v[i] * beta2 + c2 * g[i] * g[i]
        p[i] = p[i] - lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)


def observe_window(const double[:, :, ::1] values, Py_ssize_t x, Py_ssize_t y, double[::1] out):
    cdef Py_ssize_t n = values.shape[0], height = values.shape[1], width = values.shape[2]
    cdef Py_ssize_t i, r, c, yy, xx, k = 0
    for i in range(n):
        for r in range(3):
            yy = y + 1 - r
            for c in range(3):
                xx = x - 1 + c
                if 0 <= yy < height and 0 <= xx < width:
                    out[k] = values[i, yy, xx]
                else:
                    out[k] = 0.0
                k += 1
