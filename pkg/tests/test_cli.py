import json
import math

import pytest

from latticeball.cli import main

# exit codes under test
OK, USAGE, CONFIG, CALIBRATION, RESOLUTION = 0, 2, 3, 4, 5


def run(tmp_path, command, cfg, out=None, seed=None, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    argv = [command, "--config", str(path)]
    if out is not None:
        argv += ["--out", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    return main(argv)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class TestCount:
    def test_identity_unit_ball(self, tmp_path, capsys):
        code = run(tmp_path, "count", {"basis": "identity", "n": 3, "t": 1})
        assert code == OK
        out = json.loads(capsys.readouterr().out)
        assert out["counts"] == [7]

    def test_zero_radius_grid(self, tmp_path, capsys):
        code = run(tmp_path, "count",
                   {"basis": "identity", "n": 2, "t_grid": [0]})
        assert code == OK
        out = json.loads(capsys.readouterr().out)
        assert out["counts"] == [1]

    def test_output_files(self, tmp_path):
        out = tmp_path / "run"
        code = run(tmp_path, "count",
                   {"basis": "identity", "n": 3, "t_grid": [1, 2]}, out=out)
        assert code == OK
        lines = (out / "data.csv").read_text().strip().splitlines()
        assert lines[0] == "t,count,volume,remainder"
        assert len(lines) == 3
        manifest = read_json(out / "manifest.json")
        assert manifest["command"] == "count"
        assert "wall_time_s" in manifest
        assert sorted(manifest["outputs"]) == ["data.csv", "result.json"]

    def test_rerun_byte_identical(self, tmp_path):
        cfg = {"basis": {"n": 2, "columns": [[1.0, 0.0], [0.7, 1.1]]},
               "t_grid": [1, 3, 5]}
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(tmp_path, "count", cfg, out=a) == OK
        assert run(tmp_path, "count", cfg, out=b) == OK
        assert (a / "data.csv").read_bytes() == (b / "data.csv").read_bytes()
        assert ((a / "result.json").read_bytes()
                == (b / "result.json").read_bytes())

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["count", "--config",
                     str(tmp_path / "absent.json")]) == USAGE
        assert "cannot read" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["count", "--config", str(path)]) == USAGE

    def test_malformed_basis(self, tmp_path, capsys):
        code = run(tmp_path, "count",
                   {"basis": {"n": 2, "columns": [[1.0], [0.0, 1.0]]},
                    "t": 2})
        assert code == USAGE
        assert "malformed basis" in capsys.readouterr().err

    def test_missing_radius(self, tmp_path, capsys):
        assert run(tmp_path, "count",
                   {"basis": "identity", "n": 2}) == CONFIG


class TestTheorem1:
    def test_smoke_run_schema(self, tmp_path):
        out = tmp_path / "run"
        cfg = {"n": 3, "t_grid": [4, 6, 9], "samples": 2, "seed": 5,
               "family": {"delta": 0.05, "det_floor": 0.3}}
        assert run(tmp_path, "theorem1", cfg, out=out) == OK
        lines = (out / "data.csv").read_text().strip().splitlines()
        assert lines[0] == "t,rms_E,mean_E,var_E,samples"
        assert len(lines) == 4
        result = read_json(out / "result.json")
        assert {"fit", "per_t", "band", "verdict"} <= set(result)

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = {"n": 2, "t_grid": [4, 6, 9], "samples": 3, "seed": 5,
               "family": {"delta": 0.05, "det_floor": 0.3}}
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert run(tmp_path, "theorem1", cfg, out=a) == OK
        assert run(tmp_path, "theorem1", cfg, out=b, seed=5) == OK
        assert run(tmp_path, "theorem1", cfg, out=c, seed=6) == OK
        assert ((a / "data.csv").read_bytes()
                == (b / "data.csv").read_bytes())
        assert ((a / "data.csv").read_bytes()
                != (c / "data.csv").read_bytes())

    def test_bad_family_rejected(self, tmp_path):
        cfg = {"n": 3, "t_grid": [4, 6, 9], "samples": 2,
               "family": {"delta": -0.05, "det_floor": 0.3}}
        assert run(tmp_path, "theorem1", cfg) == CONFIG


class TestTheorem2:
    def test_small_run_keys(self, tmp_path, capsys):
        cfg = {"n": 3, "t": 3.0, "samples": 400, "seed": 12}
        assert run(tmp_path, "theorem2", cfg) == OK
        out = json.loads(capsys.readouterr().out)
        assert {"var_E", "predicted_var", "var_ratio", "cn",
                "siegel_residual", "verdict"} <= set(out)
        assert out["cn"] == pytest.approx(4.140299545385922, abs=1e-9)

    def test_radius_floor(self, tmp_path):
        assert run(tmp_path, "theorem2",
                   {"n": 3, "t": 1.0, "samples": 10}) == CONFIG

    def test_dimension_must_be_three(self, tmp_path):
        assert run(tmp_path, "theorem2",
                   {"n": 2, "t": 5.0, "samples": 10}) == CONFIG

    def test_biased_sampler_fails_calibration(self, tmp_path, capsys):
        # shrinking the ratio bound inflates the Siegel set, and the
        # resulting coverage bias trips the mean-count gate
        cfg = {"n": 3, "t": 4.0, "samples": 2000, "seed": 99,
               "ratio_bound": 0.2}
        assert run(tmp_path, "theorem2", cfg) == CALIBRATION
        assert "CALIBRATION-FAIL" in capsys.readouterr().err


class TestCn:
    def test_flag_interface(self, capsys):
        assert main(["cn", "--n", "3"]) == OK
        out = json.loads(capsys.readouterr().out)
        assert out["value"] == pytest.approx(4.140299545385922, abs=1e-9)
        assert out["tail_bound"] < 1e-10

    def test_missing_dimension(self, capsys):
        assert main(["cn"]) == CONFIG


class TestFourier:
    def test_zero_frequency_value(self, tmp_path, capsys):
        assert run(tmp_path, "fourier", {"n": 3, "s_grid": [0.0]}) == OK
        out = json.loads(capsys.readouterr().out)
        assert out["max_abs"] == pytest.approx(4.0 * math.pi / 3.0)

    def test_grid_csv(self, tmp_path):
        out = tmp_path / "run"
        assert run(tmp_path, "fourier",
                   {"n": 2, "s_max": 2.0, "points": 5}, out=out) == OK
        lines = (out / "data.csv").read_text().strip().splitlines()
        assert lines[0] == "s,hat_chi"
        assert len(lines) == 6


class TestSandwich:
    def test_identity_case(self, tmp_path, capsys):
        cfg = {"basis": "identity", "n": 3, "t": 3.001, "epsilon": 0.1}
        assert run(tmp_path, "sandwich", cfg) == OK
        out = json.loads(capsys.readouterr().out)
        assert out["status"] == "holds"

    def test_oversized_epsilon(self, tmp_path):
        cfg = {"basis": "identity", "n": 3, "t": 1.0, "epsilon": 0.9}
        assert run(tmp_path, "sandwich", cfg) == CONFIG


OSC_BASE = {
    "n": 3, "k": [1, 2, 1], "l": [2, -1, 1], "signs": [1, -1],
    "eta": [0.3, -0.2, 0.5],
    "psi_intervals": [[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]],
    "points_per_period": 10,
}


class TestOscint:
    def test_values_csv(self, tmp_path):
        out = tmp_path / "run"
        cfg = dict(OSC_BASE, t_grid=[1.0, 2.0])
        assert run(tmp_path, "oscint", cfg, out=out) == OK
        lines = (out / "data.csv").read_text().strip().splitlines()
        assert lines[0] == "t,real,imag,abs"
        assert len(lines) == 3

    def test_hessian_report_bound_monotone(self, tmp_path, capsys):
        cfg = dict(OSC_BASE, t_grid=[8.0, 32.0], hessian=True)
        assert run(tmp_path, "oscint", cfg) == OK
        out = json.loads(capsys.readouterr().out)
        assert out["bound"][1] < out["bound"][0]

    def test_resolution_exhaustion(self, tmp_path, capsys):
        cfg = dict(OSC_BASE, t_grid=[1e6])
        assert run(tmp_path, "oscint", cfg) == RESOLUTION

    def test_malformed_spec(self, tmp_path):
        cfg = dict(OSC_BASE, k=[0, 0, 0], t_grid=[1.0])
        assert run(tmp_path, "oscint", cfg) == USAGE


class TestVdc:
    def test_polynomial_preset(self, tmp_path, capsys):
        cfg = {"phi": [0.0, 1.0], "psi0": [1.0], "a": 0.0, "b": 1.0,
               "t_grid": [5.0, 50.0]}
        assert run(tmp_path, "vdc", cfg) == OK
        out = json.loads(capsys.readouterr().out)
        assert out["max_ratio"] <= 2.0 + 1e-9
        assert out["c0"] == pytest.approx(1.0)

    def test_non_monotone_rejected(self, tmp_path):
        cfg = {"phi": [0.0, 0.0, 0.0, 1.0, -1.0], "psi0": [1.0],
               "a": 0.0, "b": 2.0, "t_grid": [5.0]}
        assert run(tmp_path, "vdc", cfg) == CONFIG


class TestBundledConfigs:
    def test_every_bundled_config_parses(self):
        import pathlib
        root = pathlib.Path(__file__).resolve().parents[1] / "configs"
        files = sorted(root.glob("*.json"))
        assert len(files) >= 10
        for f in files:
            json.loads(f.read_text())
