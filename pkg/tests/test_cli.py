import json
import os

import pytest

from servoest.cli import build_parser, main

TINY = """\
input:
  kind: sinusoid
  f: 4.0
  amplitude: 0.02
  duration: 0.75
  fs: 512.0
pf:
  particles: [8, 16]
run:
  realizations: 2
  base_seed: 777
"""

TIMESERIES_FULL = ("t,truth_disp,truth_vel,truth_acc,truth_force,"
                   "meas_disp,meas_force,kf_disp,kf_vel,kf_acc,"
                   "pf_disp,pf_vel,pf_acc,pf_force")
TIMESERIES_SIM = ("t,truth_disp,truth_vel,truth_acc,truth_force,"
                  "meas_disp,meas_force")
SUMMARY = ("estimator,quantity,noise_level,particles,interval_start,"
           "interval_end,nrmse_mean,nrmse_std,n")
COMPARISON = "frequency_hz,model,quantity,nrmse"


def write_config(tmp_path, text=TINY):
    path = tmp_path / "config.yaml"
    path.write_text(text)
    return str(path)


def header_of(path):
    with open(path) as f:
        return f.readline().rstrip("\n")


class TestParser:
    def test_subcommands_share_common_flags(self):
        parser = build_parser()
        for cmd in ("simulate", "compare-models", "estimate", "sweep"):
            args = parser.parse_args([cmd, "--out", "x", "--seed", "5",
                                      "--threads", "2"])
            assert args.command == cmd
            assert (args.out, args.seed, args.threads) == ("x", 5, 2)

    def test_out_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["sweep"])


@pytest.fixture(scope="module")
def out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweep")
    cfg = write_config(tmp)
    out = tmp / "run"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    return out


class TestSweep:
    def test_file_set(self, out):
        names = sorted(os.listdir(out))
        assert "summary.csv" in names
        assert "manifest.json" in names
        assert "timeseries_000.csv" in names and "timeseries_001.csv" in names
        assert "summary.png" in names and "timeseries_000.png" in names

    def test_timeseries_header(self, out):
        assert header_of(out / "timeseries_000.csv") == TIMESERIES_FULL

    def test_summary_header_and_rows(self, out):
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == SUMMARY
        # kf: 3 quantities x 3 intervals; pf: 2 counts x 4 quantities x 3
        assert len(lines) - 1 == 9 + 24
        # every ensemble row aggregates both realizations
        assert all(line.endswith(",2") for line in lines[1:])

    def test_manifest_contents(self, out):
        m = json.loads((out / "manifest.json").read_text())
        assert m["command"] == "sweep"
        assert m["base_seed"] == 777
        assert m["realization_seeds"] == [777, 778]
        assert m["failed_realizations"] == []
        assert m["timeseries_pf_particles"] == 16
        assert m["config"]["pf"]["particles"] == [8, 16]
        assert m["config"]["plant"]["lambda"] == 250.0

    def test_threads_do_not_change_outputs(self, out, tmp_path):
        cfg = write_config(tmp_path)
        out2 = tmp_path / "run2"
        assert main(["sweep", "--config", cfg, "--out", str(out2),
                     "--threads", "2"]) == 0
        for name in ("summary.csv", "timeseries_000.csv",
                     "timeseries_001.csv"):
            assert (out / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_flag_overrides_config(self, out, tmp_path):
        cfg = write_config(tmp_path)
        out2 = tmp_path / "reseeded"
        assert main(["sweep", "--config", cfg, "--out", str(out2),
                     "--seed", "9001"]) == 0
        m = json.loads((out2 / "manifest.json").read_text())
        assert m["base_seed"] == 9001
        assert (out2 / "summary.csv").read_bytes() != \
            (out / "summary.csv").read_bytes()


class TestEstimate:
    def test_single_realization_kf_only(self, tmp_path):
        cfg = write_config(tmp_path, TINY + "estimators: [kf]\n")
        out = tmp_path / "est"
        assert main(["estimate", "--config", cfg, "--out", str(out)]) == 0
        names = os.listdir(out)
        assert "timeseries_000.csv" in names
        assert "timeseries_001.csv" not in names
        # pf columns are omitted entirely when the estimator is off
        assert header_of(out / "timeseries_000.csv") == \
            TIMESERIES_SIM + ",kf_disp,kf_vel,kf_acc"
        m = json.loads((out / "manifest.json").read_text())
        assert m["command"] == "estimate"
        assert m["timeseries_pf_particles"] is None


class TestSimulate:
    def test_truth_and_measurements_only(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "sim"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        assert header_of(out / "timeseries_000.csv") == TIMESERIES_SIM
        assert (out / "response.png").exists()
        assert json.loads((out / "manifest.json").read_text())["command"] \
            == "simulate"


class TestCompareModels:
    def test_outputs(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "cmp"
        assert main(["compare-models", "--config", cfg,
                     "--out", str(out)]) == 0
        lines = (out / "model_comparison.csv").read_text().splitlines()
        assert lines[0] == COMPARISON
        # 4 frequencies x 2 models x 3 quantities
        assert len(lines) - 1 == 24
        assert (out / "model_comparison.png").exists()
        m = json.loads((out / "manifest.json").read_text())
        assert m["frequencies_hz"] == [1.0, 8.0, 14.0, 19.0]


class TestFailures:
    def test_bad_config_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "plant: {m: -1}\n")
        assert main(["sweep", "--config", cfg,
                     "--out", str(tmp_path / "x")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        assert main(["sweep", "--config", str(tmp_path / "nope.yaml"),
                     "--out", str(tmp_path / "x")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_threads_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "x"),
                     "--threads", "0"]) == 2
        assert "error:" in capsys.readouterr().err
