"""Numpy implementations of the loop kernels.

Used when the compiled extension is unavailable or when
``BLOWLAB_PURE_PYTHON=1`` is set. Results agree with the compiled
versions to rounding.
"""
import numpy as np


def convection_bruteforce(u, cutoff):
    """Direct triad sum of (u.grad)u over a centred coefficient cube.

    For every retained wavevector xi the result is
    ``sum_{p+q=xi} (u_p . i q) u_q`` with both p and q in the cube.
    """
    u = np.ascontiguousarray(u, dtype=np.complex128)
    M = 2 * cutoff + 1
    if u.shape != (3, M, M, M):
        raise ValueError("coefficient cube has the wrong shape")
    out = np.zeros_like(u)
    q = np.arange(M) - cutoff
    for a, b, c in zip(*np.nonzero(np.any(u != 0, axis=0))):
        up = u[:, a, b, c]
        # q indices whose sum with p stays inside the cube
        sd = slice(max(0, cutoff - a), min(M, M + cutoff - a))
        se = slice(max(0, cutoff - b), min(M, M + cutoff - b))
        sf = slice(max(0, cutoff - c), min(M, M + cutoff - c))
        dot = 1j * (
            up[0] * q[sd][:, None, None]
            + up[1] * q[se][None, :, None]
            + up[2] * q[sf][None, None, :]
        )
        ti = slice(sd.start + a - cutoff, sd.stop + a - cutoff)
        tj = slice(se.start + b - cutoff, se.stop + b - cutoff)
        tk = slice(sf.start + c - cutoff, sf.stop + c - cutoff)
        out[:, ti, tj, tk] += dot * u[:, sd, se, sf]
    return out


def rk4_log_bernoulli(c, p, w0, dt, nsteps, stride):
    """Classical RK4 for w = log y with w' = c exp((p-1) w), one row per problem."""
    c = np.asarray(c, dtype=np.float64)
    a = np.asarray(p, dtype=np.float64) - 1.0
    w = np.array(w0, dtype=np.float64)
    h = np.asarray(dt, dtype=np.float64)
    if not (c.shape == a.shape == w.shape == h.shape) or c.ndim != 1:
        raise ValueError("parameter arrays must have equal length")
    if stride < 1 or nsteps < 0:
        raise ValueError("need nsteps >= 0 and stride >= 1")
    out = np.empty((c.size, nsteps // stride + 1))
    out[:, 0] = w
    for s in range(1, nsteps + 1):
        k1 = c * np.exp(a * w)
        k2 = c * np.exp(a * (w + 0.5 * h * k1))
        k3 = c * np.exp(a * (w + 0.5 * h * k2))
        k4 = c * np.exp(a * (w + h * k3))
        w = w + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if s % stride == 0:
            out[:, s // stride] = w
    return out
