import json

import numpy as np
import pytest

from swym import cli, fileio, verify
from swym.evolution import EvolutionConfig


def run(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def station_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("station")
    assert run("stationary", "--n", "1", "--out-dir", str(d), "--plot") == 0
    return d


@pytest.fixture(scope="module")
def vacuum_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("vac")
    assert run("stationary", "--vacuum", "1", "--out-dir", str(d)) == 0
    return d / "solution_vacuum.json"


@pytest.fixture(scope="module")
def spectrum_dir(tmp_path_factory, solution_file_n1):
    d = tmp_path_factory.mktemp("spec")
    code = run("spectrum", str(solution_file_n1), "--cross-check",
               "--eigenfunctions", "--out-dir", str(d))
    assert code == 0
    return d


class TestTopLevel:
    def test_version(self, capsys):
        assert run("--version") == 0
        assert "swym" in capsys.readouterr().out

    def test_no_subcommand_is_usage_error(self):
        assert run() == 64

    def test_unknown_subcommand(self):
        assert run("frobnicate") == 64


class TestStationary:
    def test_solution_artifact(self, station_dir):
        data = fileio.read_json(station_dir / "solution_n1.json")
        assert data["n"] == 1
        assert data["a"] == pytest.approx(0.2679491924, abs=1e-8)
        assert len(data["zeros"]) == 1
        assert data["limit_sign"] == -1

    def test_stdout_reports_the_parameter(self, tmp_path, capsys):
        assert run("stationary", "--n", "1", "--out-dir", str(tmp_path)) == 0
        out = capsys.readouterr().out
        assert "0.2679491924" in out
        assert "zeros = 1" in out

    def test_reruns_are_byte_identical(self, station_dir, tmp_path):
        assert run("stationary", "--n", "1", "--out-dir", str(tmp_path),
                   "--plot") == 0
        for name in ("solution_n1.json", "profile_n1.svg"):
            assert (tmp_path / name).read_bytes() \
                == (station_dir / name).read_bytes()

    def test_plot_written(self, station_dir):
        svg = (station_dir / "profile_n1.svg").read_bytes()
        assert svg.startswith(b"<?xml")

    def test_vacuum(self, vacuum_file):
        data = fileio.read_json(vacuum_file)
        assert data["n"] == 0
        assert data["a"] == 1.0

    def test_n_zero_rejected(self, capsys):
        assert run("stationary", "--n", "0") == 64

    def test_n_required(self):
        assert run("stationary") == 64

    def test_bad_tolerance_rejected(self):
        assert run("stationary", "--n", "1", "--rel-tol", "-1e-3") == 64

    def test_quiet_suppresses_chatter(self, tmp_path, capsys):
        assert run("stationary", "--vacuum", "1", "--quiet",
                   "--out-dir", str(tmp_path)) == 0
        assert capsys.readouterr().out == ""


class TestSpectrum:
    def test_artifact(self, spectrum_dir):
        data = fileio.read_json(spectrum_dir / "spectrum_n1.json")
        assert data["method"] == "fd"
        assert data["counts"] == {"negative": 1, "expected": 1}
        assert data["eigenvalues"][0] == pytest.approx(-0.054024228142,
                                                       rel=1e-8)
        assert data["growth_rates"][0] == pytest.approx(0.2324311256,
                                                        rel=1e-8)
        assert data["method_deltas"]["fd_vs_shooting"] <= 1e-6

    def test_eigenfunctions_csv(self, spectrum_dir):
        header, cols = fileio.read_csv(
            spectrum_dir / "eigenfunctions_n1.csv")
        assert header == ["x", "phi_0"]
        assert np.max(cols["phi_0"]) > 0.0

    def test_reruns_are_byte_identical(self, spectrum_dir, tmp_path,
                                       solution_file_n1):
        assert run("spectrum", str(solution_file_n1), "--cross-check",
                   "--eigenfunctions", "--out-dir", str(tmp_path)) == 0
        for name in ("spectrum_n1.json", "eigenfunctions_n1.csv"):
            assert (tmp_path / name).read_bytes() \
                == (spectrum_dir / name).read_bytes()

    def test_vacuum_spectrum_is_empty(self, vacuum_file, tmp_path, capsys):
        assert run("spectrum", str(vacuum_file),
                   "--out-dir", str(tmp_path)) == 0
        data = fileio.read_json(tmp_path / "spectrum_vacuum.json")
        assert data["counts"]["negative"] == 0
        assert data["eigenvalues"] == []
        assert data["integral_V"] == pytest.approx(2.0, abs=1e-9)

    def test_missing_file(self, tmp_path):
        assert run("spectrum", str(tmp_path / "nope.json")) == 64

    def test_corrupt_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("spectrum", str(bad)) == 3

    def test_future_format_version(self, tmp_path, solution_file_n1):
        data = json.loads(solution_file_n1.read_text())
        data["format_version"] = "99.0"
        newer = tmp_path / "newer.json"
        newer.write_text(json.dumps(data))
        assert run("spectrum", str(newer)) == 3

    def test_bad_window_syntax(self, solution_file_n1):
        assert run("spectrum", str(solution_file_n1), "--window", "5") == 64

    def test_reversed_window(self, solution_file_n1):
        assert run("spectrum", str(solution_file_n1),
                   "--window", "10,-10") == 64


class TestEvolve:
    def test_zero_amplitude_fixed_point(self, solution_file_n1, tmp_path,
                                        capsys):
        assert run("evolve", str(solution_file_n1), "--amplitude", "0",
                   "--t-max", "10", "--out-dir", str(tmp_path)) == 0
        header, cols = fileio.read_csv(tmp_path / "series_zero.csv")
        assert np.max(cols["max_abs_u"]) == 0.0

    def test_pulse_with_snapshots(self, tmp_path):
        assert run("evolve", "--background", "vacuum",
                   "--pulse", "gauss:100,5,1e-3,1",
                   "--t-max", "5", "--snapshot", "2.5",
                   "--out-dir", str(tmp_path)) == 0
        assert (tmp_path / "series_pulse.csv").exists()
        header, cols = fileio.read_csv(tmp_path / "snapshot_pulse_t2.5.csv")
        assert header == ["x", "u", "pi"]
        assert len(cols["x"]) == EvolutionConfig().n_points

    def test_mode_growth_run(self, solution_file_n1, spectrum_dir,
                             tmp_path, capsys):
        code = run("evolve", str(solution_file_n1),
                   "--amplitude", "1e-5",
                   "--spectrum", str(spectrum_dir / "spectrum_n1.json"),
                   "--out-dir", str(tmp_path))
        assert code == 0
        fit = fileio.read_json(tmp_path / "growth_mode0.json")
        assert fit["status"] == "ok"
        assert fit["lambda_predicted"] == pytest.approx(0.2324311256,
                                                        rel=1e-6)
        assert fit["lambda_measured"] == pytest.approx(
            fit["lambda_predicted"], rel=0.02)
        assert fit["r_squared"] >= 0.999
        out = capsys.readouterr().out
        assert "saturation" in out

    def test_vacuum_has_no_mode_to_perturb(self, tmp_path):
        assert run("evolve", "--background", "vacuum",
                   "--amplitude", "1e-5", "--t-max", "5",
                   "--out-dir", str(tmp_path)) == 2

    def test_needs_a_background(self):
        assert run("evolve") == 64

    def test_cfl_violation(self, solution_file_n1, tmp_path):
        assert run("evolve", str(solution_file_n1), "--amplitude", "0",
                   "--dt", "1.0", "--t-max", "5",
                   "--out-dir", str(tmp_path)) == 64

    def test_bad_pulse_specs(self):
        assert run("evolve", "--background", "vacuum",
                   "--pulse", "gauss:1,2") == 64
        assert run("evolve", "--background", "vacuum",
                   "--pulse", "gauss:0,-5,1e-3") == 64
        assert run("evolve", "--background", "vacuum",
                   "--pulse", "gauss:0,5,1e-3,2") == 64
        assert run("evolve", "--background", "vacuum",
                   "--pulse", "top:0,5,1e-3") == 64


class TestVerifyCommand:
    def test_filtered_run(self, tmp_path, capsys):
        assert run("verify", "--filter", "geometry",
                   "--out-dir", str(tmp_path)) == 0
        report = fileio.read_json(tmp_path / "verify_report.json")
        assert report["all_passed"]
        assert report["counts"]["total"] == 1
        assert "geometry-roundtrip" in capsys.readouterr().out

    def test_no_matching_checks(self, tmp_path):
        assert run("verify", "--filter", "zzz",
                   "--out-dir", str(tmp_path)) == 64

    def test_failures_exit_one(self, tmp_path, monkeypatch, capsys):
        def boom(ctx):
            raise RuntimeError("broken fixture")

        monkeypatch.setattr(verify, "_REGISTRY", [(boom, ("boom-check",))])
        assert run("verify", "--out-dir", str(tmp_path)) == 1
        assert "boom-check" in capsys.readouterr().err
        report = fileio.read_json(tmp_path / "verify_report.json")
        assert report["counts"]["failed"] == 1


class TestConfigAndEnv:
    def test_out_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
        assert run("stationary", "--vacuum", "1") == 0
        assert (tmp_path / "solution_vacuum.json").exists()

    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"verify": {"filter": "geometry"}}))
        assert run("verify", "--config", str(cfg),
                   "--out-dir", str(tmp_path)) == 0
        report = fileio.read_json(tmp_path / "verify_report.json")
        assert report["counts"]["total"] == 1

    def test_unknown_config_section(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"mystery": {}}))
        assert run("verify", "--config", str(cfg)) == 64

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"verify": {"bogus": 1}}))
        assert run("verify", "--config", str(cfg)) == 64

    def test_negative_tolerance_in_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"stationary": {"rel_tol": -1.0}}))
        assert run("stationary", "--n", "1", "--config", str(cfg)) == 64

    def test_config_file_missing(self):
        assert run("verify", "--config", "/nonexistent/cfg.json") == 64
