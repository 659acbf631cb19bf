import json
import os
import subprocess
import sys

import numpy as np
import pytest

from blowlab import __version__
from blowlab.cli import run
from blowlab.ode import BernoulliProblem, bernoulli_exact

CONFIG = {"grid": {"n_modes": 16}, "viscosity": 0.1, "dt": 0.01, "t_end": 0.05, "snapshot_stride": 1,
          "initial_condition": {"type": "taylor_green", "amplitude": 1.0}, "outputs_dir": "run"}


def write_config(path, **changes):
    cfg = dict(CONFIG, **changes)
    path.write_text(json.dumps(cfg))
    return path


def one_line_error(capsys):
    err = capsys.readouterr().err.strip()
    assert err.count("\n") == 0 and err.startswith("blowlab: error:")
    return err


@pytest.fixture
def sim_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    write_config(tmp_path / "cfg.json")
    assert run(["simulate", "cfg.json"]) == 0
    return tmp_path / "run"


class TestPropertyCommands:
    def test_lemma_test(self, capsys):
        assert run(["lemma-test", "--trials", "10000", "--seed", "7"]) == 0
        assert json.loads(capsys.readouterr().out) == {"trials": 10000, "failures": 0}

    def test_ode_verify_holds(self, capsys):
        assert run(["ode-verify", "--c", "1", "--p", "1.5", "--y0", "1", "--flavor", "sine", "--m", "1", "--n", "1"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["holds"] is True
        assert {"flavor", "m", "n", "beta", "alpha", "eta", "t_star", "exponent", "worst_margin_eq17",
                "worst_margin_eq18", "worst_margin_eq22", "holds"} <= set(out)

    def test_ode_verify_failure_exit_code(self, capsys):
        code = run(["ode-verify", "--c", "10", "--p", "1.5", "--y0", "0.01", "--flavor", "sine",
                    "--m", "1", "--n", "1", "--beta", "10"])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["holds"] is False

    def test_ode_verify_bad_input(self, capsys):
        assert run(["ode-verify", "--c", "1", "--p", "0.5", "--y0", "1", "--flavor", "sine", "--m", "1", "--n", "1"]) == 1
        assert "p must lie" in one_line_error(capsys)

    def test_out_dir_manifest(self, tmp_path, capsys):
        assert run(["lemma-test", "--trials", "100", "--out-dir", str(tmp_path / "o")]) == 0
        man = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert man["outputs"] == ["result.json"]
        assert man["command"] == "lemma-test" and man["tool_version"] == __version__


class TestErrors:
    def test_fit_missing_file(self, capsys, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert run(["fit", "missing.csv"]) == 1
        assert "missing.csv" in one_line_error(capsys)

    def test_unknown_flag(self, capsys):
        assert run(["lemma-test", "--trails", "5"]) == 1
        one_line_error(capsys)

    def test_unknown_subcommand(self, capsys):
        assert run(["explode"]) == 1
        one_line_error(capsys)

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", viscosty=0.1)
        assert run(["simulate", str(cfg)]) == 1
        assert "viscosty" in one_line_error(capsys)

    def test_malformed_json(self, tmp_path, capsys):
        (tmp_path / "c.json").write_text("{nope")
        assert run(["simulate", str(tmp_path / "c.json")]) == 1
        assert "not valid JSON" in one_line_error(capsys)

    def test_missing_outputs_dir(self, tmp_path, capsys):
        cfg = dict(CONFIG)
        del cfg["outputs_dir"]
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert run(["simulate", str(tmp_path / "c.json")]) == 1
        assert "outputs_dir" in one_line_error(capsys)

    def test_missing_run_dir(self, tmp_path, capsys):
        assert run(["monitor", str(tmp_path / "none"), "--ineq", "h1"]) == 1
        one_line_error(capsys)

    def test_bad_thread_setting(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("BLOWLAB_THREADS", "zero")
        cfg = write_config(tmp_path / "c.json", outputs_dir=str(tmp_path / "r"), t_end=0.0)
        assert run(["simulate", str(cfg)]) == 1
        assert "BLOWLAB_THREADS" in one_line_error(capsys)

    def test_unstable_run(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", outputs_dir=str(tmp_path / "r"), dt=0.05, viscosity=0.01)
        assert run(["simulate", str(cfg)]) == 2


class TestSimulate:
    def test_outputs_and_manifest(self, sim_dir):
        man = json.loads((sim_dir / "manifest.json").read_text())
        files = sorted(str(p.relative_to(sim_dir)) for p in sim_dir.rglob("*") if p.is_file())
        files.remove("manifest.json")
        assert man["outputs"] == files
        assert len(set(man["outputs"])) == len(man["outputs"])
        assert man["config_digest"] == __import__("hashlib").sha256(
            (sim_dir.parent / "cfg.json").read_bytes()).hexdigest()
        assert set(man) == {"command", "config_digest", "tool_version", "outputs", "provenance"}

    def test_deterministic(self, sim_dir, tmp_path):
        write_config(tmp_path / "cfg2.json", outputs_dir="run2")
        assert run(["simulate", "cfg2.json"]) == 0
        other = tmp_path / "run2"
        for p in sim_dir.rglob("*"):
            if p.is_file() and p.name != "manifest.json":
                assert p.read_bytes() == (other / p.relative_to(sim_dir)).read_bytes(), p
        a = json.loads((sim_dir / "manifest.json").read_text())
        b = json.loads((other / "manifest.json").read_text())
        a.pop("provenance"), b.pop("provenance"), a.pop("config_digest"), b.pop("config_digest")
        assert a == b

    def test_restart_from_checkpoint(self, sim_dir, tmp_path):
        ic = {"type": "from_checkpoint", "path": str(sim_dir / "checkpoints" / "snap_000005.bin")}
        write_config(tmp_path / "c3.json", outputs_dir="run3", initial_condition=ic, t_end=0.0)
        assert run(["simulate", "c3.json"]) == 0
        assert (tmp_path / "run3" / "checkpoints" / "snap_000000.bin").read_bytes() == \
            (sim_dir / "checkpoints" / "snap_000005.bin").read_bytes()


class TestAnalysisCommands:
    @pytest.mark.parametrize("ineq", ["h52", "h32", "h1", "trilinear"])
    def test_monitor(self, sim_dir, ineq, capsys):
        capsys.readouterr()
        assert run(["monitor", str(sim_dir), "--ineq", ineq]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["name"] == ineq
        assert (sim_dir / f"monitor_{ineq}.csv").is_file()
        man = json.loads((sim_dir / f"monitor_{ineq}.manifest.json").read_text())
        assert sorted(man["outputs"]) == [f"monitor_{ineq}.csv", f"monitor_{ineq}.json"]

    def test_monitor_bad_delta(self, sim_dir, capsys):
        assert run(["monitor", str(sim_dir), "--ineq", "h32", "--delta", "2"]) == 1
        one_line_error(capsys)

    def test_report(self, sim_dir, capsys):
        assert run(["report", str(sim_dir)]) == 0
        rep = json.loads((sim_dir / "report" / "report.json").read_text())
        assert rep["checks_passed"] and set(rep["inequalities"]) == {"h52", "h32", "h1", "trilinear"}
        assert rep["invariants"]["divergence_max"] <= 1e-12
        man = json.loads((sim_dir / "report" / "manifest.json").read_text())
        files = sorted(p.name for p in (sim_dir / "report").iterdir() if p.name != "manifest.json")
        assert sorted(man["outputs"]) == files

    def test_fit_and_compare(self, tmp_path, capsys):
        prob = BernoulliProblem(1, 1.5, 1)
        t = np.linspace(0, 1.0, 50)
        rows = "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(t, bernoulli_exact(prob, t)))
        (tmp_path / "z.csv").write_text("t,y\n" + rows + "\n")
        code = run(["fit", str(tmp_path / "z.csv"), "--compare", "trig_h52", "--param", "eta=0.6924056171090779",
                    "--param", "n=1", "--power", "2"])
        out = json.loads(capsys.readouterr().out)
        assert code == 0
        assert out["fit"]["alpha"] == pytest.approx(2.0, rel=1e-6)
        assert out["comparisons"][0]["holds"] is True

    def test_fit_failing_comparison(self, tmp_path, capsys):
        t = np.linspace(0, 0.45, 20)
        rows = "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(t, (0.5 - t) ** -0.5))
        (tmp_path / "s.csv").write_text("t,value\n" + rows + "\n")
        assert run(["fit", str(tmp_path / "s.csv"), "--compare", "trig_h52_n1", "--param", "eta=5"]) == 2

    def test_fit_trajectory_column(self, sim_dir, capsys):
        # six snapshots are too few for a fit; the error names the file and the count
        assert run(["fit", str(sim_dir / "trajectory.csv"), "--column", "l2"]) == 1
        err = one_line_error(capsys)
        assert "trajectory.csv" in err and "at least 8" in err

    def test_fit_bad_param(self, tmp_path, capsys):
        (tmp_path / "s.csv").write_text("t,y\n" + "\n".join(f"{i / 10},{1 + i}" for i in range(9)))
        assert run(["fit", str(tmp_path / "s.csv"), "--compare", "trig_h52", "--param", "eta"]) == 1
        one_line_error(capsys)
        assert run(["fit", str(tmp_path / "s.csv"), "--compare", "bogus"]) == 1
        one_line_error(capsys)


def test_console_script_module():
    out = subprocess.run([sys.executable, "-m", "blowlab.cli", "lemma-test", "--trials", "50"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["failures"] == 0


def test_thread_count_does_not_change_results(tmp_path):
    outputs = []
    for threads in ("1", "2"):
        write_config(tmp_path / f"c{threads}.json", outputs_dir=str(tmp_path / f"r{threads}"),
                     initial_condition={"type": "random_smooth", "seed": 3, "decay_rate": 0.5}, dt=0.002, t_end=0.01)
        env = dict(os.environ, BLOWLAB_THREADS=threads)
        subprocess.run([sys.executable, "-m", "blowlab.cli", "simulate", str(tmp_path / f"c{threads}.json")],
                       env=env, check=True)
        outputs.append(tmp_path / f"r{threads}")
    for p in outputs[0].rglob("*"):
        if p.is_file() and p.name != "manifest.json":
            assert p.read_bytes() == (outputs[1] / p.relative_to(outputs[0])).read_bytes(), p
