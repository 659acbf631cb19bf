import csv
import json
import math

import numpy as np
import pytest

from blowlab.checkpoint import write_checkpoint
from blowlab.monitor import (InequalityReport, check_h1_ineq, check_h32_ineq, check_h52_ineq,
                             check_trilinear, young_h1_constant)
from blowlab.solver import CheckpointIC, RandomSmoothIC, SolverConfig, TaylorGreenIC, simulate
from blowlab.spectral import Grid, SpectralField, random_smooth

ALL_CHECKS = [check_h52_ineq, check_h32_ineq, check_h1_ineq, check_trilinear]


def run_from(field, nu, dt, t_end, tmp_path):
    write_checkpoint(tmp_path / "ic.bin", field)
    return simulate(SolverConfig(field.grid, nu, dt, t_end, 1, CheckpointIC(str(tmp_path / "ic.bin"))))


@pytest.fixture
def stokes_run(tmp_path):
    f = SpectralField.from_modes(Grid(8), {(1, 1, 0): (1, -1, 0.5)})
    return run_from(f, 0.1, 0.01, 0.1, tmp_path)


@pytest.fixture
def zero_run(tmp_path):
    return run_from(SpectralField.zeros(Grid(8)), 0.1, 0.01, 0.05, tmp_path)


class TestTrivialCases:
    @pytest.mark.parametrize("check", [check_h52_ineq, check_h32_ineq, check_h1_ineq])
    def test_stokes_mode_decays(self, stokes_run, check):
        rep = check(stokes_run)
        assert all(lhs < 0 for _, lhs, _ in rep.samples)
        assert rep.empirical_constant == 0.0

    def test_trilinear_single_mode(self, stokes_run):
        rep = check_trilinear(stokes_run)
        assert all(abs(lhs) <= 1e-15 for _, lhs, _ in rep.samples)

    @pytest.mark.parametrize("check", ALL_CHECKS)
    def test_zero_field(self, zero_run, check):
        rep = check(zero_run)
        assert rep.retained == []
        assert rep.empirical_constant == 0.0
        assert rep.summary()["n_samples"] == 0

    def test_h32_limit(self, stokes_run):
        rep = check_h32_ineq(stokes_run, 0.0)
        assert rep.parameters["gamma"] == 0.0

    @pytest.mark.parametrize("delta", [2.0, 3.0, -0.1])
    def test_h32_rejects_delta(self, stokes_run, delta):
        with pytest.raises(ValueError):
            check_h32_ineq(stokes_run, delta)

    @pytest.mark.parametrize("eps", [-0.1, 1.1])
    def test_h52_rejects_eps(self, stokes_run, eps):
        with pytest.raises(ValueError):
            check_h52_ineq(stokes_run, eps)

    def test_too_few_snapshots(self):
        traj = simulate(SolverConfig(Grid(8), 0.1, 0.01, 0.01, 1, TaylorGreenIC(1.0)))
        with pytest.raises(ValueError):
            check_h1_ineq(traj)
        check_trilinear(traj)  # one snapshot is enough


class TestFormulas:
    def test_rhs_units(self, random_run):
        l2, h32, h52, h1, h2 = (random_run.norms(s) for s in (0, 1.5, 2.5, 1, 2))
        eps, delta = 0.6, 0.3
        xi = eps / (5 * (4 - eps))
        gamma = 2 * delta / (2 - delta)
        r = check_h52_ineq(random_run, eps)
        np.testing.assert_allclose([s[2] for s in r.samples], l2[1:-1] ** (4 * xi) * h52[1:-1] ** (3 + xi), rtol=1e-14)
        r = check_h32_ineq(random_run, delta)
        np.testing.assert_allclose([s[2] for s in r.samples], l2[1:-1] ** (2 * gamma) * h32[1:-1] ** (4 + gamma / 3),
                                   rtol=1e-14)
        r = check_h1_ineq(random_run)
        np.testing.assert_allclose([s[2] for s in r.samples], h1[1:-1] ** 6, rtol=1e-14)
        r = check_trilinear(random_run)
        np.testing.assert_allclose([s[2] for s in r.samples], h1**1.5 * h2**1.5, rtol=1e-14)

    def test_lhs_is_centered_derivative(self, random_run):
        h1 = random_run.norms(1) ** 2
        t = random_run.times
        r = check_h1_ineq(random_run)
        np.testing.assert_allclose([s[1] for s in r.samples], (h1[2:] - h1[:-2]) / (t[2:] - t[:-2]), rtol=1e-14)


class TestReport:
    @pytest.mark.parametrize("check", ALL_CHECKS)
    def test_self_consistent(self, random_run, check):
        rep = check(random_run)
        assert math.isfinite(rep.empirical_constant)
        assert rep.self_consistent()
        assert all(lhs <= rep.empirical_constant * rhs for _, lhs, rhs in rep.retained)

    def test_constant_is_tight(self, random_run):
        rep = check_trilinear(random_run)
        c = rep.empirical_constant
        below = np.nextafter(np.nextafter(c, 0), 0)
        assert any(lhs > below * rhs for _, lhs, rhs in rep.retained)

    def test_files(self, random_run, tmp_path):
        rep = check_h52_ineq(random_run, 1.0)
        rep.write(tmp_path / "r.csv", tmp_path / "r.json")
        rows = list(csv.reader(open(tmp_path / "r.csv")))
        assert rows[0] == ["name", "t", "lhs", "rhs_unit", "ratio"]
        assert len(rows) == len(rep.samples) + 1
        summary = json.loads((tmp_path / "r.json").read_text())
        assert summary["name"] == "h52"
        assert summary["empirical_constant"] == rep.empirical_constant
        assert summary["parameters"]["eps"] == 1.0
        assert "no (2 pi)^3" in summary["parameters"]["norm_convention"]

    def test_floor(self):
        rep = InequalityReport("h1", [(0.0, 1.0, 1e-31), (0.1, 1.0, 2.0)], 0.5)
        assert rep.retained == [(0.1, 1.0, 2.0)]


class TestScaling:
    @pytest.mark.parametrize("lam", [2.0, 10.0])
    def test_trilinear_invariant(self, random_run, lam):
        base = check_trilinear(random_run)
        scaled = check_trilinear(random_run.scaled(lam))
        for (_, a, ra), (_, b, rb) in zip(base.samples, scaled.samples):
            assert b == pytest.approx(lam**3 * a, rel=1e-12)
            assert rb == pytest.approx(lam**3 * ra, rel=1e-12)
        assert scaled.empirical_constant == pytest.approx(base.empirical_constant, rel=1e-9)


class TestYoung:
    def test_formula(self):
        assert young_h1_constant(1.0, 1.0) == 27 / 128

    def test_is_the_maximum(self):
        # max over B of 2 c5 A^1.5 B^1.5 - 2 nu B^2 equals the constant times A^6
        c5, nu, A = 0.7, 0.05, 1.3
        B = np.linspace(0, 1000, 2_000_001)  # maximiser near B = 242
        peak = np.max(2 * c5 * A**1.5 * B**1.5 - 2 * nu * B**2)
        assert peak == pytest.approx(young_h1_constant(c5, nu) * A**6, rel=1e-8)

    def test_h1_chain_implied(self, random_run):
        # the measured H^1 constant respects the bound derived from the trilinear one
        c5 = check_trilinear(random_run).empirical_constant
        c6 = check_h1_ineq(random_run).empirical_constant
        assert c6 <= young_h1_constant(c5, random_run.viscosity) * (1 + 1e-6)


@pytest.mark.slow
class TestSeedSweep:
    def test_trilinear_constant_stable(self):
        # sup over a short evolution; a single snapshot depends on the random phases
        cs = []
        for seed in range(42, 52):
            traj = simulate(SolverConfig(Grid(32), 0.1, 0.002, 0.1, 5, RandomSmoothIC(seed, 0.5)))
            np.testing.assert_array_equal(traj.fields[0].coeffs, random_smooth(Grid(32), seed, 0.5).coeffs)
            cs.append(check_trilinear(traj).empirical_constant)
        assert max(cs) / min(cs) <= 3


@pytest.mark.slow
class TestRefinement:
    def test_h52_constant_under_grid_doubling(self, tg_refinement):
        consts = [check_h52_ineq(traj, 1.0).empirical_constant for traj in tg_refinement]
        assert consts[0] > 0
        assert abs(consts[1] / consts[0] - 1) <= 0.2
