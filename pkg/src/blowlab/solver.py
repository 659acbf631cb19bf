"""Pseudo-spectral integration of the incompressible Navier-Stokes equations.

Time stepping is integrating-factor RK4 (Lawson): the viscous decay
``exp(-nu |xi|^2 dt)`` is applied exactly per mode and only the projected
convection term is treated explicitly. Pressure never appears; the Leray
projection removes it.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import checkpoint
from .norms import hs_norm
from .spectral import (
    Grid,
    SpectralField,
    random_smooth,
    taylor_green,
    workspace,
)

__all__ = [
    "TaylorGreenIC",
    "RandomSmoothIC",
    "CheckpointIC",
    "SolverConfig",
    "BalanceRecord",
    "Trajectory",
    "InstabilityError",
    "CFLError",
    "step",
    "simulate",
    "energy_balance_residual",
    "enstrophy_balance",
    "centered_difference",
    "write_trajectory",
    "read_trajectory",
    "STANDARD_ORDERS",
]

# Sobolev orders tabulated at every snapshot, with their CSV column names.
STANDARD_ORDERS = {0.0: "l2", 1.0: "h1", 1.5: "h32", 2.0: "h2", 2.5: "h52"}
CFL_NUMBER = 0.5


class InstabilityError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.17g}")
        self.t = t


class CFLError(InstabilityError):
    pass


@dataclass(frozen=True)
class TaylorGreenIC:
    amplitude: float = 1.0
    kind = "taylor_green"

    def build(self, grid: Grid) -> SpectralField:
        return taylor_green(grid, self.amplitude)


@dataclass(frozen=True)
class RandomSmoothIC:
    seed: int
    decay_rate: float
    kind = "random_smooth"

    def build(self, grid: Grid) -> SpectralField:
        return random_smooth(grid, self.seed, self.decay_rate)


@dataclass(frozen=True)
class CheckpointIC:
    path: str
    kind = "from_checkpoint"

    def build(self, grid: Grid) -> SpectralField:
        f = checkpoint.read_checkpoint(self.path)
        if f.grid != grid:
            raise ValueError(f"checkpoint {self.path} has n_modes={f.grid.n_modes}, "
                             f"config expects {grid.n_modes}")
        return f


InitialCondition = Union[TaylorGreenIC, RandomSmoothIC, CheckpointIC]

_IC_FIELDS = {
    "taylor_green": (TaylorGreenIC, {"amplitude"}),
    "random_smooth": (RandomSmoothIC, {"seed", "decay_rate"}),
    "from_checkpoint": (CheckpointIC, {"path"}),
}


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    viscosity: float
    dt: float
    t_end: float
    snapshot_stride: int = 1
    initial_condition: InitialCondition = field(default_factory=TaylorGreenIC)

    def __post_init__(self):
        for name in ("viscosity", "dt"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be finite and >= 0, got {self.t_end!r}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be an integer >= 1, got {self.snapshot_stride!r}")
        self.n_steps  # validates t_end / dt

    @property
    def n_steps(self) -> int:
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(self.t_end, self.dt):
            raise ValueError(f"t_end={self.t_end!r} is not a whole number of steps dt={self.dt!r}")
        return n

    def to_dict(self) -> dict:
        ic = self.initial_condition
        ic_dict = {"type": ic.kind}
        ic_dict.update({k: getattr(ic, k) for k in sorted(_IC_FIELDS[ic.kind][1])})
        return {
            "grid": {"n_modes": self.grid.n_modes},
            "viscosity": self.viscosity,
            "dt": self.dt,
            "t_end": self.t_end,
            "snapshot_stride": self.snapshot_stride,
            "initial_condition": ic_dict,
        }

    @classmethod
    def from_dict(cls, d: dict, extra_keys=()) -> "SolverConfig":
        """Strict parser: unknown or missing keys raise ``ValueError``."""
        allowed = {"grid", "viscosity", "dt", "t_end", "snapshot_stride", "initial_condition"}
        unknown = set(d) - allowed - set(extra_keys)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        missing = {"grid", "viscosity", "dt", "t_end", "initial_condition"} - set(d)
        if missing:
            raise ValueError(f"missing config key(s): {', '.join(sorted(missing))}")
        g = d["grid"]
        if not isinstance(g, dict) or set(g) - {"n_modes", "domain_length"} or "n_modes" not in g:
            raise ValueError("grid must be an object with n_modes")
        if "domain_length" in g and not math.isclose(g["domain_length"], 2 * math.pi):
            raise ValueError("only domain_length = 2*pi is supported")
        ic = d["initial_condition"]
        if not isinstance(ic, dict) or ic.get("type") not in _IC_FIELDS:
            raise ValueError(f"initial_condition.type must be one of {sorted(_IC_FIELDS)}")
        ic_cls, ic_keys = _IC_FIELDS[ic["type"]]
        args = {k: v for k, v in ic.items() if k != "type"}
        if set(args) != ic_keys:
            raise ValueError(f"initial_condition {ic['type']} takes exactly {sorted(ic_keys)}")
        for name in ("viscosity", "dt", "t_end"):
            if not isinstance(d[name], (int, float)) or isinstance(d[name], bool):
                raise ValueError(f"{name} must be a number")
        return cls(
            grid=Grid(int(g["n_modes"])),
            viscosity=float(d["viscosity"]),
            dt=float(d["dt"]),
            t_end=float(d["t_end"]),
            snapshot_stride=int(d.get("snapshot_stride", 1)),
            initial_condition=ic_cls(**args),
        )


@dataclass(frozen=True)
class BalanceRecord:
    """Energy budget after a step: E = ||u||^2 / 2 and D = nu ||u||_{H^1}^2."""

    t: float
    energy: float
    dissipation: float


@dataclass
class Trajectory:
    """Snapshots of a run plus per-snapshot norm table and per-step balances.

    ``fields`` may be empty for trajectories read back without checkpoints;
    ``norm_table`` still holds the orders in :data:`STANDARD_ORDERS`.
    """

    config: SolverConfig
    times: np.ndarray
    fields: list = field(default_factory=list)
    norm_table: dict = field(default_factory=dict)
    trilinear: np.ndarray | None = None
    balances: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if self.fields and len(self.fields) != self.times.size:
            raise ValueError("one field per snapshot time is required")

    def __len__(self):
        return self.times.size

    @property
    def viscosity(self) -> float:
        return self.config.viscosity

    def norms(self, s: float) -> np.ndarray:
        s = float(s)
        if s in self.norm_table:
            return self.norm_table[s]
        if not self.fields:
            raise ValueError(f"order {s} not tabulated and the trajectory has no fields")
        return np.array([hs_norm(f, s) for f in self.fields])

    def trilinear_terms(self) -> np.ndarray:
        """((u.grad)u, Laplacian u) at each snapshot."""
        if self.trilinear is None:
            if not self.fields:
                raise ValueError("trilinear term needs field snapshots (checkpoints)")
            self.trilinear = np.array([_trilinear(f) for f in self.fields])
        return self.trilinear

    def subsample(self, every: int) -> "Trajectory":
        """Every ``every``-th snapshot, starting with the first."""
        sl = slice(None, None, every)
        return Trajectory(
            config=self.config,
            times=self.times[sl],
            fields=self.fields[sl],
            norm_table={k: v[sl] for k, v in self.norm_table.items()},
            trilinear=None if self.trilinear is None else self.trilinear[sl],
            balances=self.balances,
        )

    def scaled(self, factor: float) -> "Trajectory":
        """The same snapshots with every field multiplied by ``factor``.

        This is not a solution of the equations; it exists for checking the
        scaling behaviour of diagnostics.
        """
        if not self.fields:
            raise ValueError("scaling needs field snapshots")
        fields = [f * factor for f in self.fields]
        return Trajectory(self.config, self.times.copy(), fields,
                          {k: abs(factor) * v for k, v in self.norm_table.items()})


def _trilinear(f: SpectralField) -> float:
    ws = workspace(f.grid)
    uh = ws.from_field(f)
    return ws.pairing(ws.convection(uh), -ws.k2 * uh)


def _check_cfl(grid: Grid, dt: float, speed: float, t: float) -> None:
    if speed > 0 and dt > CFL_NUMBER / (grid.n_modes * speed):
        raise CFLError(f"dt={dt:.3g} exceeds the CFL limit {CFL_NUMBER / (grid.n_modes * speed):.3g}", t)


class _Stepper:
    def __init__(self, grid: Grid, nu: float, dt: float):
        self.ws = workspace(grid)
        self.nu = nu
        self.dt = dt
        self.E = np.exp(-nu * self.ws.k2 * dt)
        self.E2 = np.exp(-nu * self.ws.k2 * dt / 2)

    def rhs(self, uh):
        return -self.ws.convection(uh)

    def advance(self, uh, k1=None):
        dt, E, E2 = self.dt, self.E, self.E2
        if k1 is None:
            k1 = self.rhs(uh)
        k2 = self.rhs(E2 * (uh + 0.5 * dt * k1))
        k3 = self.rhs(E2 * uh + 0.5 * dt * k2)
        k4 = self.rhs(E * uh + dt * E2 * k3)
        out = E * uh + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
        out *= self.ws.mask
        return out


def step(u: SpectralField, nu: float, dt: float, t: float = 0.0) -> SpectralField:
    """One integrating-factor RK4 step of size ``dt``."""
    if not (nu > 0 and dt > 0):
        raise ValueError("nu and dt must be positive")
    st = _Stepper(u.grid, nu, dt)
    uh = st.ws.from_field(u)
    conv, speed = st.ws.convection_and_speed(uh)
    _check_cfl(u.grid, dt, speed, t)
    out = st.advance(uh, -conv)
    if not np.all(np.isfinite(out)):
        raise InstabilityError("non-finite coefficients", t + dt)
    return st.ws.to_field(out)


def simulate(config: SolverConfig, on_snapshot=None) -> Trajectory:
    """Integrate from the configured initial condition up to ``t_end``.

    Snapshots are taken every ``snapshot_stride`` steps starting at t = 0.
    ``on_snapshot(t, field)`` is called for each one if given.
    """
    grid = config.grid
    nu, dt = config.viscosity, config.dt
    st = _Stepper(grid, nu, dt)
    ws = st.ws
    u0 = config.initial_condition.build(grid)
    u0.check_invariants()
    uh = ws.from_field(u0)

    times, fields, tri = [], [], []
    table = {s: [] for s in STANDARD_ORDERS}
    balances = [BalanceRecord(0.0, 0.5 * ws.hs_norm_sq(uh, 0), nu * ws.hs_norm_sq(uh, 1))]
    n_steps = config.n_steps
    for k in range(n_steps + 1):
        t = k * dt
        conv, speed = ws.convection_and_speed(uh)
        if k % config.snapshot_stride == 0:
            f = ws.to_field(uh)
            times.append(t)
            fields.append(f)
            for s in STANDARD_ORDERS:
                table[s].append(np.sqrt(ws.hs_norm_sq(uh, s)))
            tri.append(ws.pairing(conv, -ws.k2 * uh))
            if on_snapshot is not None:
                on_snapshot(t, f)
        if k == n_steps:
            break
        _check_cfl(grid, dt, speed, t)
        uh = st.advance(uh, -conv)
        if not np.all(np.isfinite(uh)):
            raise InstabilityError("non-finite coefficients", (k + 1) * dt)
        balances.append(BalanceRecord((k + 1) * dt, 0.5 * ws.hs_norm_sq(uh, 0),
                                      nu * ws.hs_norm_sq(uh, 1)))
    return Trajectory(
        config=config,
        times=np.array(times),
        fields=fields,
        norm_table={s: np.array(v) for s, v in table.items()},
        trilinear=np.array(tri),
        balances=balances,
    )


def centered_difference(times, values):
    """Second-order centred derivative at interior points of a uniform series.

    Returns ``(interior_times, derivative)``.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if times.size < 3:
        raise ValueError("need at least 3 snapshots for a centred difference")
    h = np.diff(times)
    if np.any(np.abs(h - h[0]) > 1e-9 * h[0]):
        raise ValueError("snapshot spacing must be uniform")
    return times[1:-1], (values[2:] - values[:-2]) / (times[2:] - times[:-2])


def energy_balance_residual(traj: Trajectory) -> list[float]:
    """|d/dt (||u||^2 / 2) + nu ||u||_{H^1}^2| at interior snapshots."""
    _, dE = centered_difference(traj.times, 0.5 * traj.norms(0) ** 2)
    diss = traj.viscosity * traj.norms(1)[1:-1] ** 2
    return list(np.abs(dE + diss))


def enstrophy_balance(traj: Trajectory) -> list[tuple[float, float, float]]:
    """Both sides of d/dt ||grad u||^2 / 2 + nu ||Lap u||^2 = ((u.grad)u, Lap u)."""
    t, dZ = centered_difference(traj.times, traj.norms(1) ** 2)
    lhs = 0.5 * dZ + traj.viscosity * traj.norms(2)[1:-1] ** 2
    tri = traj.trilinear_terms()[1:-1]
    return [(float(a), float(b), float(c)) for a, b, c in zip(t, lhs, tri)]


# -- on-disk trajectories -----------------------------------------------------

TRAJECTORY_CSV = "trajectory.csv"
CONFIG_JSON = "config.json"
CHECKPOINT_DIR = "checkpoints"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory(traj: Trajectory, outdir, checkpoints: bool = True) -> list[Path]:
    """Write ``trajectory.csv``, ``config.json`` and optional checkpoints."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    cfg = outdir / CONFIG_JSON
    cfg.write_text(json.dumps(traj.config.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(cfg)

    n = len(traj)
    resid = np.full(n, np.nan)
    if n >= 3:
        resid[1:-1] = energy_balance_residual(traj)
    cols = [traj.norms(s) for s in STANDARD_ORDERS]
    path = outdir / TRAJECTORY_CSV
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *STANDARD_ORDERS.values(), "energy_residual"])
        for i in range(n):
            w.writerow([_fmt(traj.times[i]), *(_fmt(c[i]) for c in cols), _fmt(resid[i])])
    written.append(path)

    if checkpoints and traj.fields:
        cdir = outdir / CHECKPOINT_DIR
        cdir.mkdir(exist_ok=True)
        for i, f in enumerate(traj.fields):
            p = cdir / f"snap_{i:06d}.bin"
            checkpoint.write_checkpoint(p, f)
            written.append(p)
    return written


def read_trajectory(rundir) -> Trajectory:
    rundir = Path(rundir)
    csv_path = rundir / TRAJECTORY_CSV
    if not csv_path.is_file():
        raise FileNotFoundError(f"{csv_path} not found")
    cfg_path = rundir / CONFIG_JSON
    if not cfg_path.is_file():
        raise FileNotFoundError(f"{cfg_path} not found")
    config = SolverConfig.from_dict(json.loads(cfg_path.read_text()))
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    times = np.array([float(r["t"]) for r in rows])
    table = {s: np.array([float(r[name]) for r in rows]) for s, name in STANDARD_ORDERS.items()}
    cdir = rundir / CHECKPOINT_DIR
    fields = []
    if cdir.is_dir():
        paths = sorted(cdir.glob("snap_*.bin"))
        if len(paths) != len(times):
            raise ValueError(f"{cdir} holds {len(paths)} checkpoints for {len(times)} snapshots")
        fields = [checkpoint.read_checkpoint(p) for p in paths]
    return Trajectory(config=config, times=times, fields=fields, norm_table=table)
