# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loop kernels. Signatures mirror ``blowlab._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def convection_bruteforce(const double complex[:, :, :, ::1] u, int cutoff):
    """Direct triad sum of (u.grad)u over a centred coefficient cube."""
    cdef Py_ssize_t M = 2 * cutoff + 1
    if u.shape[0] != 3 or u.shape[1] != M or u.shape[2] != M or u.shape[3] != M:
        raise ValueError("coefficient cube has the wrong shape")
    out_arr = np.zeros((3, M, M, M), dtype=np.complex128)
    cdef double complex[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t a, b, c, d, e, f, i, j, k
    cdef Py_ssize_t d0, d1, e0, e1, f0, f1
    cdef double complex p0, p1, p2, s
    cdef double qx, qy, qz
    for a in range(M):
        d0 = max(0, cutoff - a)
        d1 = min(M, M + cutoff - a)
        for b in range(M):
            e0 = max(0, cutoff - b)
            e1 = min(M, M + cutoff - b)
            for c in range(M):
                p0 = u[0, a, b, c]
                p1 = u[1, a, b, c]
                p2 = u[2, a, b, c]
                if p0 == 0 and p1 == 0 and p2 == 0:
                    continue
                f0 = max(0, cutoff - c)
                f1 = min(M, M + cutoff - c)
                for d in range(d0, d1):
                    qx = d - cutoff
                    i = a + d - cutoff
                    for e in range(e0, e1):
                        qy = e - cutoff
                        j = b + e - cutoff
                        for f in range(f0, f1):
                            qz = f - cutoff
                            k = c + f - cutoff
                            s = 1j * (p0 * qx + p1 * qy + p2 * qz)
                            out[0, i, j, k] += s * u[0, d, e, f]
                            out[1, i, j, k] += s * u[1, d, e, f]
                            out[2, i, j, k] += s * u[2, d, e, f]
    return out_arr


def rk4_log_bernoulli(const double[::1] c, const double[::1] p, const double[::1] w0,
                      const double[::1] dt, Py_ssize_t nsteps, Py_ssize_t stride):
    """Classical RK4 for w = log y with w' = c exp((p-1) w), one row per problem."""
    cdef Py_ssize_t n = c.shape[0]
    if p.shape[0] != n or w0.shape[0] != n or dt.shape[0] != n:
        raise ValueError("parameter arrays must have equal length")
    if stride < 1 or nsteps < 0:
        raise ValueError("need nsteps >= 0 and stride >= 1")
    out_arr = np.empty((n, nsteps // stride + 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, s
    cdef double w, a, cc, h, k1, k2, k3, k4
    for j in range(n):
        w = w0[j]
        a = p[j] - 1.0
        cc = c[j]
        h = dt[j]
        out[j, 0] = w
        for s in range(1, nsteps + 1):
            k1 = cc * exp(a * w)
            k2 = cc * exp(a * (w + 0.5 * h * k1))
            k3 = cc * exp(a * (w + 0.5 * h * k2))
            k4 = cc * exp(a * (w + h * k3))
            w = w + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            if s % stride == 0:
                out[j, s // stride] = w
    return out_arr
