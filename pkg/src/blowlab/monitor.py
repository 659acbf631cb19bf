"""Measure the constants in the differential inequalities along a trajectory.

Each check evaluates the left side and the right side with unit constant at
every usable snapshot and reports the smallest constant that makes the
inequality hold on those samples. Norms follow the lattice convention of
:mod:`blowlab.norms` (no (2 pi)^3 volume factor); constants measured under
another convention differ by fixed powers of (2 pi)^3.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .solver import Trajectory, centered_difference

__all__ = [
    "InequalityReport",
    "check_h52_ineq",
    "check_h32_ineq",
    "check_h1_ineq",
    "check_trilinear",
    "young_h1_constant",
    "RHS_FLOOR",
]

RHS_FLOOR = 1e-30
CONVENTION = "lattice sum over xi, no (2 pi)^3 factor"


@dataclass
class InequalityReport:
    name: str
    samples: list  # (t, lhs, rhs_unit)
    empirical_constant: float
    parameters: dict = field(default_factory=dict)

    @property
    def retained(self) -> list:
        return [s for s in self.samples if s[2] >= RHS_FLOOR]

    def self_consistent(self) -> bool:
        c = self.empirical_constant
        return all(lhs <= c * rhs for _, lhs, rhs in self.retained)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "empirical_constant": self.empirical_constant,
            "n_samples": len(self.retained),
            "parameters": self.parameters,
        }

    def write(self, csv_path, json_path) -> None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "t", "lhs", "rhs_unit", "ratio"])
            for t, lhs, rhs in self.samples:
                ratio = lhs / rhs if rhs >= RHS_FLOOR else float("nan")
                w.writerow([self.name, f"{t:.17g}", f"{lhs:.17g}", f"{rhs:.17g}", f"{ratio:.17g}"])
        with open(json_path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _report(name, t, lhs, rhs, params) -> InequalityReport:
    t, lhs, rhs = (np.asarray(a, dtype=np.float64) for a in (t, lhs, rhs))
    keep = rhs >= RHS_FLOOR
    c = 0.0
    if np.any(keep):
        c = max(0.0, float(np.max(lhs[keep] / rhs[keep])))
        # the division can round down by an ulp; nudge until lhs <= c * rhs exactly
        while np.any(lhs[keep] > c * rhs[keep]):
            c = float(np.nextafter(c, np.inf))
    if not np.isfinite(c):
        raise FloatingPointError(f"{name}: empirical constant is not finite")
    params = dict(params)
    params.setdefault("norm_convention", CONVENTION)
    samples = [(float(a), float(b), float(d)) for a, b, d in zip(t, lhs, rhs)]
    return InequalityReport(name, samples, c, params)


def check_h52_ineq(traj: Trajectory, eps: float = 1.0) -> InequalityReport:
    """d/dt ||u||_{H^{5/2}}^2 <= c ||u||_{L2}^(4 xi) ||u||_{H^{5/2}}^(3+xi), xi = eps/(5(4-eps))."""
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    xi = eps / (5 * (4 - eps))
    h52 = traj.norms(2.5)
    t, lhs = centered_difference(traj.times, h52**2)
    rhs = traj.norms(0)[1:-1] ** (4 * xi) * h52[1:-1] ** (3 + xi)
    return _report("h52", t, lhs, rhs, {"eps": eps, "xi": xi})


def check_h32_ineq(traj: Trajectory, delta: float = 0.1) -> InequalityReport:
    """d/dt ||u||_{H^{3/2}}^2 <= c ||u||_{L2}^(2 gamma) ||u||_{H^{3/2}}^(4+gamma/3), gamma = 2 delta/(2-delta).

    ``delta = 0`` gives the limiting form with gamma = 0.
    """
    if not 0 <= delta < 2:
        raise ValueError("delta must lie in [0, 2)")
    gamma = 2 * delta / (2 - delta)
    h32 = traj.norms(1.5)
    t, lhs = centered_difference(traj.times, h32**2)
    rhs = traj.norms(0)[1:-1] ** (2 * gamma) * h32[1:-1] ** (4 + gamma / 3)
    return _report("h32", t, lhs, rhs, {"delta": delta, "gamma": gamma})


def check_h1_ineq(traj: Trajectory) -> InequalityReport:
    """d/dt ||grad u||^2 <= c ||grad u||^6."""
    h1 = traj.norms(1)
    t, lhs = centered_difference(traj.times, h1**2)
    return _report("h1", t, lhs, h1[1:-1] ** 6, {})


def check_trilinear(traj: Trajectory) -> InequalityReport:
    """|((u.grad)u, Lap u)| <= c ||grad u||^(3/2) ||Lap u||^(3/2), per snapshot."""
    if len(traj) < 1:
        raise ValueError("trajectory has no snapshots")
    lhs = np.abs(traj.trilinear_terms())
    rhs = traj.norms(1) ** 1.5 * traj.norms(2) ** 1.5
    return _report("trilinear", traj.times, lhs, rhs, {})


def young_h1_constant(c5: float, nu: float) -> float:
    """Constant c6 implied by c5 through Young's inequality.

    With Z = ||grad u||^2, dZ/dt = 2 T - 2 nu ||Lap u||^2 and
    |T| <= c5 ||grad u||^(3/2) ||Lap u||^(3/2). Maximising
    2 c5 A^(3/2) B^(3/2) - 2 nu B^2 over B gives 27 c5^4 A^6 / (128 nu^3).
    """
    return 27.0 * c5**4 / (128.0 * nu**3)
