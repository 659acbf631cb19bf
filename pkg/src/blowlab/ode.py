"""Bernoulli blow-up solutions and trigonometric lower-bound certificates.

The model problem is ``y' = c y^p`` with ``p > 1``, whose solution

    y(t) = (y0^(1-p) - c (p-1) t)^(-1/(p-1))

blows up at ``T* = y0^(1-p) / (c (p-1))``. A certificate packages the
constants of a lower bound of the form ``||u|| >= eta (T* - t)^(-exponent)``
valid for ``t <= T* - 1/m``, where ``z = ||u||^2`` obeys ``z' <= c z^p``.

Two flavors exist:

``sine``
    alpha = beta sin(1/(beta+1)), eta = sqrt(alpha / (c m^n)),
    exponent = (n+1)/2. Bounds ``z`` itself.
``halfangle``
    alpha = (beta sin(1/(2 beta+2)))^2 (variant ``h32``) or
    (beta sin(1/(beta+1)))^2 (variant ``h1``),
    eta = (alpha / (c m^n))^(1/4), exponent = (n+1)/4. Bounds ``z^2``.

The two half-angle variants differ in the sine argument. Both are kept as
given; reports carry a note saying so.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "BernoulliProblem",
    "BlowupCertificate",
    "CertificateReport",
    "LemmaCheck",
    "BlowupReached",
    "bernoulli_exact",
    "bernoulli_log",
    "lemma_bound_check",
    "lemma_property_run",
    "trig_certificate_sine",
    "trig_certificate_halfangle",
    "certificate_for",
    "verify_certificate",
    "classical_lower_bound",
    "sine_weight",
    "h52_exponent",
    "LEMMA_ATOL",
]

LEMMA_ATOL = 1e-12
MARGIN_RTOL = 1e-12

HALFANGLE_NOTE = ("h32 uses sin(1/(2*beta+2)) and h1 uses sin(1/(beta+1)); "
                  "both half-angle forms are evaluated as stated, not reconciled")


class BlowupReached(ValueError):
    """Requested time is at or past the blow-up time."""


@dataclass(frozen=True)
class BernoulliProblem:
    """``y' = c y^p`` with ``y(0) = y0``.

    Fields may be floats or ``mpmath.mpf`` values; all formulas use plain
    arithmetic operators so extended precision carries through.
    """

    c: float
    p: float
    y0: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not 1 < self.p <= 3:
            raise ValueError(f"p must lie in (1, 3], got {self.p}")
        if not self.y0 > 0:
            raise ValueError(f"y0 must be positive, got {self.y0}")
        T = self.blowup_time
        if not (T > 0 and math.isfinite(float(T))):
            raise ValueError("blow-up time is not finite and positive")

    @property
    def blowup_time(self):
        return self.y0 ** (1 - self.p) / (self.c * (self.p - 1))


def _check_time(prob, t):
    ta = np.asarray(t)
    if np.any(ta < 0):
        raise ValueError("t must be non-negative")
    if np.any(ta >= prob.blowup_time):
        raise BlowupReached(f"t reaches the blow-up time T* = {float(prob.blowup_time):.17g}")


def bernoulli_exact(prob: BernoulliProblem, t):
    """Closed-form solution; accepts scalars, arrays or mpmath numbers."""
    _check_time(prob, t)
    return (prob.y0 ** (1 - prob.p) - prob.c * (prob.p - 1) * t) ** (-1 / (prob.p - 1))


def bernoulli_log(prob: BernoulliProblem, t):
    """log y(t); finite even where y itself overflows a double."""
    _check_time(prob, t)
    p, y0 = float(prob.p), float(prob.y0)
    t = np.asarray(t, dtype=np.float64)
    # base = y0^(1-p) * (1 - t/T*), kept in log form
    frac = t / float(prob.blowup_time)
    return -((1 - p) * math.log(y0) + np.log1p(-frac)) / (p - 1)


class LemmaCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def lemma_bound_check(T_star_time, m, n, t, atol: float = LEMMA_ATOL) -> LemmaCheck:
    """Evaluate (T* - t) <= m^n (T* - t)^(n+1) on its window t in [0, T* - 1/m].

    Works elementwise on arrays. The window end is allowed an absolute
    slack of ``atol`` for rounding in ``T* - 1/m``.
    """
    T = np.asarray(T_star_time, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    n = np.asarray(n)
    t = np.asarray(t, dtype=np.float64)
    if np.any(~(T > 0)):
        raise ValueError("T* must be positive")
    if np.any(n < 1) or np.any(n != np.floor(n)):
        raise ValueError("n must be an integer >= 1")
    if np.any(m * T < 1 - atol):
        raise ValueError("m must satisfy m >= 1/T*")
    if np.any(t < 0) or np.any(t > T - 1 / m + atol):
        raise ValueError("t must lie in [0, T* - 1/m]")
    d = T - t
    lhs = d
    rhs = m**n * d ** (n + 1)
    holds = lhs <= rhs + atol
    if lhs.ndim == 0:
        return LemmaCheck(float(lhs), float(rhs), bool(holds))
    return LemmaCheck(lhs, rhs, holds)


def lemma_property_run(trials: int, seed: int, atol: float = LEMMA_ATOL) -> dict:
    """Randomised check of the lemma inequality and its equality case.

    Draws T* in (0, 10], real m >= 1/T*, integer n in 1..10 and t uniform
    in [0, T* - 1/m]. A trial fails if the inequality is violated at t or if
    the two sides differ by more than ``atol`` at t = T* - 1/m.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    T = 10.0 * (1.0 - rng.random(trials))
    m = 1.0 / T + 100.0 * rng.random(trials)
    n = rng.integers(1, 11, size=trials)
    t_end = np.maximum(T - 1.0 / m, 0.0)
    inner = lemma_bound_check(T, m, n, rng.random(trials) * t_end, atol)
    edge = lemma_bound_check(T, m, n, t_end, atol)
    equal = np.abs(edge.lhs - edge.rhs) <= atol
    failures = int(np.count_nonzero(~inner.holds | ~equal))
    return {"trials": trials, "failures": failures}


def sine_weight(theta):
    """theta * sin(1/(theta+1)); increasing on theta >= 0."""
    theta = np.asarray(theta, dtype=np.float64)
    return theta * np.sin(1.0 / (theta + 1.0))


def h52_exponent(eps: float) -> float:
    """Exponent p = (3 + xi)/2 with xi = eps/(5(4 - eps)) for the H^{5/2} chain."""
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    return (3 + eps / (5 * (4 - eps))) / 2


@dataclass(frozen=True)
class BlowupCertificate:
    flavor: str  # "sine" or "halfangle"
    variant: str  # "h52", "h32" or "h1"
    c: float
    m: float
    n: int
    beta: float
    alpha: float
    eta: float
    t_blowup: float
    t_star: float
    exponent: float

    @property
    def power(self) -> int:
        """Which power of z = ||u||^2 the certificate bounds (1 or 2)."""
        return 1 if self.flavor == "sine" else 2

    def norm_bound(self, t):
        """Lower bound on ||u(t)||: eta (T* - t)^(-exponent)."""
        return self.eta * (self.t_blowup - np.asarray(t, dtype=np.float64)) ** (-self.exponent)

    def z_bound(self, t):
        """Lower bound on z(t) = ||u(t)||^2."""
        d = self.t_blowup - np.asarray(t, dtype=np.float64)
        q = self.alpha / (self.c * self.m**self.n * d ** (self.n + 1))
        return q if self.power == 1 else np.sqrt(q)


def _check_cert_args(c, m, n, beta, t_blowup):
    if not c > 0:
        raise ValueError("c must be positive")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not m >= 1:
        raise ValueError("m must be >= 1")
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    if not (math.isfinite(t_blowup) and m * t_blowup >= 1):
        raise ValueError("need m * t_blowup >= 1 so that T_* = T* - 1/m >= 0")


def trig_certificate_sine(c, m, n, beta, t_blowup) -> BlowupCertificate:
    _check_cert_args(c, m, n, beta, t_blowup)
    alpha = beta * math.sin(1.0 / (beta + 1.0))
    eta = math.sqrt(alpha / (c * m**n))
    return BlowupCertificate("sine", "h52", float(c), float(m), int(n), float(beta), alpha, eta,
                             float(t_blowup), t_blowup - 1.0 / m, (n + 1) / 2)


def trig_certificate_halfangle(c, m, n, beta, t_blowup, variant: str = "h32") -> BlowupCertificate:
    _check_cert_args(c, m, n, beta, t_blowup)
    if variant == "h32":
        alpha = (beta * math.sin(1.0 / (2.0 * beta + 2.0))) ** 2
    elif variant == "h1":
        alpha = (beta * math.sin(1.0 / (beta + 1.0))) ** 2
    else:
        raise ValueError(f"variant must be 'h32' or 'h1', got {variant!r}")
    eta = (alpha / (c * m**n)) ** 0.25
    return BlowupCertificate("halfangle", variant, float(c), float(m), int(n), float(beta), alpha,
                             eta, float(t_blowup), t_blowup - 1.0 / m, (n + 1) / 4)


def certificate_for(flavor: str, c, m, n, beta, t_blowup) -> BlowupCertificate:
    """Dispatch on the CLI-style flavor name: ``sine``, ``h32`` or ``h1``."""
    if flavor == "sine":
        return trig_certificate_sine(c, m, n, beta, t_blowup)
    if flavor in ("h32", "h1"):
        return trig_certificate_halfangle(c, m, n, beta, t_blowup, variant=flavor)
    raise ValueError(f"unknown flavor {flavor!r}")


@dataclass
class CertificateReport:
    """Worst relative margins (rhs - lhs) / max(|lhs|, |rhs|) of each check.

    ``eq17`` is the integrated inequality, ``eq18`` its lemma-amplified
    form, and ``eq22`` the final lower bound (compared in log form so it
    survives overflow of z). A check passes when its worst margin is
    ``>= -1e-12``.
    """

    flavor: str
    variant: str
    m: float
    n: int
    beta: float
    alpha: float
    eta: float
    t_star: float
    exponent: float
    samples: int
    worst_margin_eq17: float
    worst_margin_eq18: float
    worst_margin_eq22: float
    t_worst_eq22: float
    holds_eq17: bool
    holds_eq18: bool
    holds_eq22: bool
    holds: bool
    preconditions: dict
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _rel_margin(lhs, rhs):
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    scale = np.where(scale > 0, scale, 1.0)
    return (rhs - lhs) / scale


def verify_certificate(cert: BlowupCertificate, prob: BernoulliProblem, samples: int = 10_000) -> CertificateReport:
    """Check a certificate against the exact solution on ``samples`` points of [0, t_star].

    Violations are reported, never raised. ``preconditions`` records whether
    the certificate was built within its derivation window for ``prob``.
    """
    samples = int(samples)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    T = float(prob.blowup_time)
    t = np.linspace(0.0, cert.t_star, samples) if samples > 1 else np.array([0.0])
    t = t[t < T]
    logz = bernoulli_log(prob, t)
    with np.errstate(over="ignore"):
        z = np.exp(logz)
    d = cert.t_blowup - t
    c, m, n = cert.c, cert.m, cert.n
    amp = c * m**n * d ** (n + 1)

    if cert.flavor == "sine":
        lhs17 = np.sin(1.0 / (z + 1.0))
        lhs18 = lhs17
    else:
        lhs17 = 1.0 - np.cos(1.0 / (z + 1.0))
        arg = 1.0 / (2.0 * z + 2.0) if cert.variant == "h32" else 1.0 / (z + 1.0)
        lhs18 = np.sin(arg) ** 2
    m17 = _rel_margin(lhs17, c * d)
    m18 = _rel_margin(lhs18, amp)
    # power * log z >= log alpha - log(c m^n d^(n+1))
    m22 = cert.power * logz - (math.log(cert.alpha) - np.log(amp))

    p = float(prob.p)
    window = 2.0 if cert.variant in ("h52", "h1") else 3.0
    zmin = float(np.exp(logz.min())) if logz.size else float("nan")
    pre = {
        "c_dominates": bool(cert.c >= float(prob.c)),
        "t_blowup_matches": bool(abs(cert.t_blowup - T) <= 1e-12 * max(1.0, T)),
        "beta_floors_z": bool(cert.beta <= zmin * (1 + 1e-12)),
        "p_in_window": bool(p <= window),
    }
    w17, w18, w22 = (float(x.min()) for x in (m17, m18, m22))
    h17, h18, h22 = (w >= -MARGIN_RTOL for w in (w17, w18, w22))
    return CertificateReport(
        flavor=cert.flavor, variant=cert.variant, m=cert.m, n=cert.n, beta=cert.beta,
        alpha=cert.alpha, eta=cert.eta, t_star=cert.t_star, exponent=cert.exponent,
        samples=int(t.size),
        worst_margin_eq17=w17, worst_margin_eq18=w18, worst_margin_eq22=w22,
        t_worst_eq22=float(t[int(np.argmin(m22))]),
        holds_eq17=h17, holds_eq18=h18, holds_eq22=h22, holds=h17 and h18 and h22,
        preconditions=pre,
        note=HALFANGLE_NOTE if cert.flavor == "halfangle" else "",
    )


def classical_lower_bound(c, p, t_blowup, t):
    """((p-1) c (T* - t))^(-1/(p-1)): the bound forced by y' <= c y^p."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t >= t_blowup):
        raise BlowupReached("t must be below the blow-up time")
    out = ((p - 1) * c * (t_blowup - t)) ** (-1.0 / (p - 1))
    return float(out) if out.ndim == 0 else out
