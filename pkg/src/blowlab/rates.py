"""Power-law blow-up fits and comparison against catalogued lower bounds.

A fit models ``y(t) = A (T* - t)^(-alpha)``. For a trial ``T*`` the
remaining parameters follow from linear least squares in log space, so only
``T*`` is searched, by golden-section search.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "PowerLawFit",
    "BoundComparison",
    "BOUND_CATALOG",
    "fit_power_law",
    "compare_bounds",
    "bound_values",
]

GOLDEN = (math.sqrt(5) - 1) / 2
FIT_TOL = 1e-12
SCAN_POINTS = 200


@dataclass(frozen=True)
class PowerLawFit:
    t_blowup: float
    alpha: float
    amplitude: float
    residual: float  # RMS misfit of log y
    t_last: float

    def __post_init__(self):
        if not self.t_blowup > self.t_last:
            raise ValueError("fitted blow-up time must exceed the last sample time")
        if not self.residual >= 0:
            raise ValueError("residual must be non-negative")

    def __call__(self, t):
        return self.amplitude * (self.t_blowup - np.asarray(t, dtype=np.float64)) ** (-self.alpha)


def _regress(x, ly):
    """Least squares ly = a + b x; returns (a, b, sum of squared residuals)."""
    xm = x.mean()
    ym = ly.mean()
    xc = x - xm
    yc = ly - ym
    sxx = np.dot(xc, xc)
    b = np.dot(xc, yc) / sxx
    r = yc - b * xc
    return ym - b * xm, b, float(np.dot(r, r))


def fit_power_law(series) -> PowerLawFit:
    """Fit ``y = A (T* - t)^(-alpha)`` to ``[(t, y), ...]``.

    ``T*`` is searched in ``(t_last, t_last + 10 * (t_last - t_first)]``:
    a log-spaced scan of the offset ``T* - t_last`` brackets the minimum,
    then golden-section search refines it to 1e-12 relative.
    """
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be a sequence of (t, y) pairs")
    t, y = arr[:, 0], arr[:, 1]
    if t.size < 8:
        raise ValueError(f"need at least 8 samples, got {t.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series contains non-finite values")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if np.any(y <= 0):
        raise ValueError("all y values must be positive")

    ly = np.log(y)
    t_last = t[-1]
    span = t_last - t[0]

    def sse(log_off):
        return _regress(np.log(t_last + math.exp(log_off) - t), ly)[2]

    lo = math.log(span * 1e-9)
    hi = math.log(10 * span)
    grid = np.linspace(lo, hi, SCAN_POINTS)
    vals = np.array([sse(g) for g in grid])
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, SCAN_POINTS - 1)]

    # golden section on log(T* - t_last)
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = sse(x1), sse(x2)
    while (b - a) > FIT_TOL:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = sse(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = sse(x2)
    best = 0.5 * (a + b)
    T = t_last + math.exp(best)
    la, slope, s = _regress(np.log(T - t), ly)
    return PowerLawFit(t_blowup=float(T), alpha=float(-slope), amplitude=float(math.exp(la)),
                       residual=math.sqrt(s / t.size), t_last=float(t_last))


# -- bound catalog -----------------------------------------------------------

def _const(p):
    return float(p.get("const", 1.0))


def _eta(p):
    if "eta" not in p:
        raise ValueError("this bound needs the parameter 'eta'")
    return float(p["eta"])


def _n(p):
    n = p.get("n", 1)
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    return int(n)


def _s(p, lower=None):
    if "s" not in p:
        raise ValueError("this bound needs the Sobolev order 's'")
    s = float(p["s"])
    if lower is not None and not s > lower:
        raise ValueError(f"s must exceed {lower}")
    return s


def _h32_eps(d, p):
    eps = float(p.get("eps", 0.0))
    gamma = float(p.get("gamma", 0.0))
    return (_const(p) * d ** (-(0.5 - eps))) ** (1.0 / (4.0 + gamma / 3.0))


# Each entry maps (T* - t, params) to a lower bound on the norm itself.
# "log" entries use |ln(T* - t)| and are undefined where T* - t = 1.
BOUND_CATALOG = {
    "enstrophy_quarter": dict(
        doc="||grad u|| >= (C / (T*-t))^(1/4)",
        fn=lambda d, p: (_const(p) / d) ** 0.25),
    "hs_third": dict(
        doc="||u||_{H^s} >= C (T*-t)^(-s/3), s > 5/2",
        fn=lambda d, p: _const(p) * d ** (-_s(p, 2.5) / 3)),
    "hs_two_thirds": dict(
        doc="||u||_{H^s} >= C (T*-t)^(-2s/3)",
        fn=lambda d, p: _const(p) * d ** (-2 * _s(p) / 3)),
    "h52_log": dict(
        doc="||u||_{H^{5/2}} >= C / ((T*-t) |ln(T*-t)|)", log=True,
        fn=lambda d, p: _const(p) / (d * np.abs(np.log(d)))),
    "h32_eps": dict(
        doc="||u||_{H^{3/2}}^(4+gamma/3) >= C / (T*-t)^(1/2-eps)",
        fn=_h32_eps),
    "h32_log": dict(
        doc="||u||_{H^{3/2}} >= C / sqrt((T*-t) |ln(T*-t)|)", log=True,
        fn=lambda d, p: _const(p) / np.sqrt(d * np.abs(np.log(d)))),
    "trig_h52": dict(
        doc="||u||_{H^{5/2}} >= eta (T*-t)^(-(n+1)/2)",
        fn=lambda d, p: _eta(p) * d ** (-(_n(p) + 1) / 2)),
    "trig_h32": dict(
        doc="||u||_{H^{3/2}} >= eta (T*-t)^(-(n+1)/4)",
        fn=lambda d, p: _eta(p) * d ** (-(_n(p) + 1) / 4)),
    "trig_h1": dict(
        doc="||u||_{H^1} >= eta (T*-t)^(-(n+1)/4)",
        fn=lambda d, p: _eta(p) * d ** (-(_n(p) + 1) / 4)),
    "trig_h52_n1": dict(
        doc="||u||_{H^{5/2}} >= eta / (T*-t)",
        fn=lambda d, p: _eta(p) / d),
    "trig_h32_n1": dict(
        doc="||u||_{H^{3/2}} >= eta / (T*-t)^(1/2)",
        fn=lambda d, p: _eta(p) / np.sqrt(d)),
}


def bound_values(bound_id: str, params: dict, t_blowup: float, times) -> np.ndarray:
    """Evaluate catalog entry ``bound_id`` on ``times`` for blow-up time ``t_blowup``."""
    if bound_id not in BOUND_CATALOG:
        raise ValueError(f"unknown bound {bound_id!r}; choose from {', '.join(BOUND_CATALOG)}")
    entry = BOUND_CATALOG[bound_id]
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    d = t_blowup - times
    if np.any(d <= 0):
        raise ValueError("evaluation grid reaches the blow-up time")
    if entry.get("log") and np.any(np.abs(d - 1.0) <= 1e-12):
        raise ValueError("log-corrected bound is undefined where T* - t = 1")
    return np.asarray(entry["fn"](d, params), dtype=np.float64)


@dataclass
class BoundComparison:
    bound_id: str
    params: dict
    holds: bool
    worst_margin: float  # min over the grid of log(fit) - power*log(bound)
    t_of_worst_margin: float
    power: float = 1.0
    log_base: str = field(default="")

    def to_dict(self) -> dict:
        return asdict(self)


def compare_bounds(fit: PowerLawFit, bound_id: str, params: dict, times, power: float = 1.0) -> BoundComparison:
    """Is the fitted curve above the catalogued bound at every grid time?

    The fitted series is taken to be ``||u||^power`` (``power = 2`` for a
    series of ``z = ||u||^2``), so the bound is raised to ``power`` before
    comparing. Margins are in log form.
    """
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if times.size == 0:
        raise ValueError("comparison grid is empty")
    bound = bound_values(bound_id, params, fit.t_blowup, times)
    fitted = np.log(fit.amplitude) - fit.alpha * np.log(fit.t_blowup - times)
    with np.errstate(divide="ignore"):
        margin = fitted - power * np.log(bound)
    i = int(np.argmin(margin))
    return BoundComparison(
        bound_id=bound_id,
        params=dict(params),
        holds=bool(margin[i] >= -1e-12),
        worst_margin=float(margin[i]),
        t_of_worst_margin=float(times[i]),
        power=float(power),
        log_base="natural" if BOUND_CATALOG[bound_id].get("log") else "",
    )
