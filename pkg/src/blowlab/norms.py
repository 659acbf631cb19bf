"""Homogeneous Sobolev norms on the periodic lattice.

``||u||_{H^s}^2 = sum_xi |xi|^{2s} |u_xi|^2`` with no volume factor, so
``s = 0`` is the lattice L2 norm (the integral over the box is
``(2 pi)^3`` times larger).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField

__all__ = ["NormSample", "hs_norm", "norm_series", "write_norm_csv"]


@dataclass(frozen=True)
class NormSample:
    t: float
    s: float
    value: float


def _check_order(s):
    s = float(s)
    if not math.isfinite(s):
        raise ValueError(f"Sobolev order must be finite, got {s}")
    if not 0 <= s <= 4:
        raise ValueError(f"Sobolev order must lie in [0, 4], got {s}")
    return s


def hs_norm(u: SpectralField, s: float) -> float:
    s = _check_order(s)
    kx, ky, kz = u.grid.wavevectors()
    k2 = kx**2 + ky**2 + kz**2
    amp = (np.abs(u.coeffs) ** 2).sum(axis=0)
    weight = np.ones_like(k2) if s == 0 else k2**s
    return math.sqrt(float((weight * amp).sum()))


def norm_series(traj, s: float) -> list[NormSample]:
    """One sample per snapshot of ``traj``."""
    s = _check_order(s)
    values = traj.norms(s)
    return [NormSample(float(t), s, float(v)) for t, v in zip(traj.times, values)]


def write_norm_csv(path, samples) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "s", "value"])
        for smp in samples:
            w.writerow([f"{smp.t:.17g}", f"{smp.s:.17g}", f"{smp.value:.17g}"])
