"""Command-line entry point: ``blowlab <subcommand> ...``.

Exit codes: 0 success, 1 input error, 2 a check or property failed.
Numeric outputs are deterministic; the only run-dependent value, the
timestamp, lives in a separate manifest field.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .monitor import check_h1_ineq, check_h32_ineq, check_h52_ineq, check_trilinear
from .norms import norm_series, write_norm_csv
from .ode import (BernoulliProblem, bernoulli_exact, certificate_for, lemma_property_run,
                  verify_certificate)
from .rates import BOUND_CATALOG, compare_bounds, fit_power_law
from .solver import (STANDARD_ORDERS, InstabilityError, SolverConfig, enstrophy_balance,
                     energy_balance_residual, read_trajectory, simulate, write_trajectory)
from .spectral import fft_workers

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2
INVARIANT_TOL = 1e-12
MANIFEST = "manifest.json"


class InputError(Exception):
    """Bad arguments, config or files; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


@dataclass
class RunManifest:
    command: str
    config_digest: str
    tool_version: str
    outputs: list
    provenance: dict = field(default_factory=dict)  # timestamp only

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _args_digest(args: dict) -> str:
    return _digest(json.dumps(args, sort_keys=True).encode())


def _write_manifest(outdir: Path, name: str, command: str, digest: str, outputs) -> Path:
    rel = sorted(str(Path(p).resolve().relative_to(outdir.resolve())) for p in outputs)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    path = outdir / name
    RunManifest(command, digest, __version__, rel, {"timestamp": stamp}).write(path)
    return path


def _dump_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _emit(obj, out_dir, command, digest, name="result.json") -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        p = _dump_json(out / name, obj)
        _write_manifest(out, MANIFEST, command, digest, [p])


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise InputError(f"config file {path} not found")
    raw = path.read_bytes()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path} must hold a JSON object")
    if "outputs_dir" not in data:
        raise InputError(f"{path} needs an 'outputs_dir' entry")
    try:
        config = SolverConfig.from_dict(data, extra_keys=("outputs_dir",))
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    outdir = Path(data["outputs_dir"])
    try:
        traj = simulate(config)
    except InstabilityError as exc:
        print(f"blowlab: simulation failed at t={exc.t:.6g}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    outputs = write_trajectory(traj, outdir)
    _write_manifest(outdir, MANIFEST, "simulate", _digest(raw), outputs)
    return EXIT_OK


# -- monitor / report ---------------------------------------------------------

def _load_run(rundir: str):
    d = Path(rundir)
    if not d.is_dir():
        raise InputError(f"run directory {d} not found")
    try:
        traj = read_trajectory(d)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read run in {d}: {exc}") from None
    return d, traj, _digest((d / "config.json").read_bytes())


def _run_monitor(traj, ineq, eps, delta):
    if ineq == "h52":
        return check_h52_ineq(traj, eps)
    if ineq == "h32":
        return check_h32_ineq(traj, delta)
    if ineq == "h1":
        return check_h1_ineq(traj)
    return check_trilinear(traj)


def cmd_monitor(args) -> int:
    d, traj, digest = _load_run(args.rundir)
    if args.ineq == "trilinear" and not traj.fields:
        raise InputError(f"{d} has no checkpoints; the trilinear check needs fields")
    try:
        rep = _run_monitor(traj, args.ineq, args.eps, args.delta)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    csv_path = d / f"monitor_{args.ineq}.csv"
    json_path = d / f"monitor_{args.ineq}.json"
    rep.write(csv_path, json_path)
    _write_manifest(d, f"monitor_{args.ineq}.manifest.json", "monitor",
                    _args_digest({"config": digest, "ineq": args.ineq, "eps": args.eps,
                                  "delta": args.delta}),
                    [csv_path, json_path])
    print(json.dumps(rep.summary(), sort_keys=True))
    ok = math.isfinite(rep.empirical_constant) and rep.self_consistent()
    return EXIT_OK if ok else EXIT_CHECK


def cmd_report(args) -> int:
    d, traj, digest = _load_run(args.rundir)
    out = d / "report"
    out.mkdir(exist_ok=True)
    outputs = []
    for s, name in STANDARD_ORDERS.items():
        p = out / f"norm_{name}.csv"
        write_norm_csv(p, norm_series(traj, s))
        outputs.append(p)

    summary = {"config": traj.config.to_dict(), "n_snapshots": len(traj)}
    ok = True
    if len(traj) >= 3:
        resid = energy_balance_residual(traj)
        summary["energy_residual_max"] = float(np.max(np.abs(resid)))
    checks = ["h52", "h32", "h1"] if len(traj) >= 3 else []
    if traj.fields:
        checks.append("trilinear")
        ens = enstrophy_balance(traj) if len(traj) >= 3 else []
        p = out / "enstrophy_balance.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "lhs", "trilinear"])
            for row in ens:
                w.writerow([f"{x:.17g}" for x in row])
        outputs.append(p)
        div = max(f.divergence_residual() for f in traj.fields)
        real = max(f.reality_residual() for f in traj.fields)
        summary["invariants"] = {"divergence_max": div, "reality_max": real}
        ok &= div <= INVARIANT_TOL and real <= INVARIANT_TOL

    summary["inequalities"] = {}
    for name in checks:
        rep = _run_monitor(traj, name, 1.0, 0.1)
        cp, jp = out / f"monitor_{name}.csv", out / f"monitor_{name}.json"
        rep.write(cp, jp)
        outputs += [cp, jp]
        summary["inequalities"][name] = rep.summary()
        ok &= math.isfinite(rep.empirical_constant) and rep.self_consistent()
    summary["checks_passed"] = bool(ok)
    outputs.append(_dump_json(out / "report.json", summary))
    _write_manifest(out, MANIFEST, "report", digest, outputs)
    print(json.dumps({"report": str(out / "report.json"), "checks_passed": bool(ok)}))
    return EXIT_OK if ok else EXIT_CHECK


# -- ode-verify / lemma-test ---------------------------------------------------

def cmd_ode_verify(args) -> int:
    try:
        prob = BernoulliProblem(args.c, args.p, args.y0)
        T = float(prob.blowup_time)
        if args.beta is None:
            # smallest z on [0, T* - 1/m]; z is increasing so it is y0
            beta = float(bernoulli_exact(prob, 0.0))
        else:
            beta = args.beta
        cert = certificate_for(args.flavor, args.c, args.m, args.n, beta, T)
        rep = verify_certificate(cert, prob, args.samples)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = rep.to_dict()
    out["problem"] = {"c": args.c, "p": args.p, "y0": args.y0, "t_blowup": T}
    _emit(out, args.out_dir, "ode-verify", _args_digest(vars_for_digest(args)))
    return EXIT_OK if rep.holds else EXIT_CHECK


def cmd_lemma_test(args) -> int:
    try:
        res = lemma_property_run(args.trials, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(res, args.out_dir, "lemma-test", _args_digest(vars_for_digest(args)))
    return EXIT_OK if res["failures"] == 0 else EXIT_CHECK


# -- fit ----------------------------------------------------------------------

def _read_series(path: Path, column):
    if not path.is_file():
        raise InputError(f"series file {path} not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"{path} has no data rows")
    header = [h.strip() for h in rows[0]]
    if "t" not in header:
        raise InputError(f"{path} needs a 't' column")
    if column is None:
        for cand in ("value", "y"):
            if cand in header:
                column = cand
                break
        else:
            if len(header) != 2:
                raise InputError(f"{path}: choose the value column with --column")
            column = header[1 - header.index("t")]
    if column not in header:
        raise InputError(f"{path} has no column {column!r}")
    it, iy = header.index("t"), header.index(column)
    try:
        data = [(float(r[it]), float(r[iy])) for r in rows[1:] if r]
    except (ValueError, IndexError):
        raise InputError(f"{path} holds a non-numeric or short row") from None
    return data


def _parse_params(items):
    params = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            params[key] = float(val)
        except ValueError:
            raise InputError(f"--param {key} needs a number, got {val!r}") from None
    return params


def cmd_fit(args) -> int:
    path = Path(args.series)
    data = _read_series(path, args.column)
    try:
        fit = fit_power_law(data)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    params = _parse_params(args.param)
    times = np.array([t for t, _ in data])
    if args.t_star is not None:
        times = times[times <= args.t_star]
    comps = []
    for bid in args.compare:
        if bid not in BOUND_CATALOG:
            raise InputError(f"unknown bound {bid!r}; choose from {', '.join(BOUND_CATALOG)}")
        try:
            comps.append(compare_bounds(fit, bid, params, times, args.power).to_dict())
        except ValueError as exc:
            raise InputError(f"{bid}: {exc}") from None
    out = {"fit": asdict(fit), "comparisons": comps}
    digest = _digest(path.read_bytes() + json.dumps(vars_for_digest(args), sort_keys=True).encode())
    _emit(out, args.out_dir, "fit", digest)
    return EXIT_OK if all(c["holds"] for c in comps) else EXIT_CHECK


def vars_for_digest(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out_dir")}


# -- parser -------------------------------------------------------------------

def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="blowlab", description="Blow-up rate experiments for 3D Navier-Stokes.")
    ap.add_argument("--version", action="version", version=f"blowlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the spectral solver from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monitor", help="measure an inequality constant on a run")
    p.add_argument("rundir")
    p.add_argument("--ineq", required=True, choices=["h52", "h32", "h1", "trilinear"])
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.1)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("ode-verify", help="build and check a certificate on a Bernoulli ODE")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--y0", type=float, required=True)
    p.add_argument("--flavor", required=True, choices=["sine", "h32", "h1"])
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--samples", type=_positive_int, default=10_000)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_ode_verify)

    p = sub.add_parser("lemma-test", help="randomised lemma property run")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_lemma_test)

    p = sub.add_parser("fit", help="fit a power law and compare with catalogued bounds")
    p.add_argument("series")
    p.add_argument("--column", default=None, help="value column (default: value, y, or the only other column)")
    p.add_argument("--compare", nargs="*", default=[], metavar="BOUND_ID")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--power", type=float, default=1.0, help="series is ||u||^power")
    p.add_argument("--t-star", type=float, default=None, help="compare only at t <= T_STAR")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="aggregate a run into report files")
    p.add_argument("rundir")
    p.set_defaults(func=cmd_report)
    return ap


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        fft_workers()  # workspaces are cached, so check the setting up front
        return args.func(args)
    except InputError as exc:
        print(f"blowlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"blowlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"blowlab: error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
