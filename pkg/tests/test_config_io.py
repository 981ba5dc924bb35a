import numpy as np
import pytest

from okpca.config import (
    PRESETS,
    ExperimentConfig,
    SystemKind,
    header_lines,
    load_config,
    load_preset,
    parse_config,
    to_ini,
)
from okpca.errors import ConfigError, DatasetError
from okpca.io import (
    MANIFEST,
    read_comment_header,
    read_dataset,
    read_trajectory_csv,
    write_dataset,
    write_trajectory_csv,
)
from okpca.simulators import MINOR_FAULT_GAINS, InitialKind
from okpca.trajectory import Trajectory


class TestPresets:
    @pytest.mark.parametrize("name", PRESETS)
    def test_round_trip_through_ini(self, name):
        cfg = load_preset(name)
        assert parse_config(to_ini(cfg)) == cfg

    def test_exp1_values(self):
        cfg = load_preset("exp1")
        assert (cfg.M, cfg.mu, cfg.N, cfg.threshold_multiplier, cfg.noise_sigma) == (100, 0.6, 20, 2.0, 0.0)
        assert (cfg.num_test_normal, cfg.num_test_faulty, cfg.trials) == (20, 20, 100)
        assert (cfg.sim.dt_sample, cfg.sim.duration, cfg.sim.num_intervals) == (0.01, 2.0, 200)
        assert cfg.initial is InitialKind.UNIT_CIRCLE

    def test_noisy_and_sweep(self):
        noisy = load_preset("exp1-noisy")
        assert (noisy.M, noisy.mu, noisy.noise_sigma) == (150, 0.4, 0.01)
        assert (noisy.kpca.mu, noisy.kpca.N, noisy.kpca.p_max) == (5.0, 20, 2000)
        sweep = load_preset("table2-sweep")
        assert sweep.sweep_M == (50, 100, 150, 300) and sweep.trials == 20

    def test_quadrotor_presets(self):
        major, minor = load_preset("exp2-major"), load_preset("exp2-minor")
        for cfg in (major, minor):
            assert (cfg.M, cfg.mu, cfg.N, cfg.noise_sigma) == (100, 1000.0, 50, 0.01)
            assert (cfg.sim.dt_sample, cfg.sim.duration) == (0.2, 15.2)
            assert cfg.initial is InitialKind.BOX and cfg.box_side == 2.0
            assert (cfg.nominal_gains.kp, cfg.nominal_gains.ki, cfg.nominal_gains.kd) == (5, 2, 8)
        assert (major.fault_gains.kp, major.fault_gains.ki, major.fault_gains.kd) == (15, 12, 2)
        assert minor.fault_gains == MINOR_FAULT_GAINS
        assert (major.threshold_multiplier, minor.threshold_multiplier) == (10.0, 3.0)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            load_preset("exp3")


class TestParsing:
    def test_minor_system_defaults_fault_gains(self):
        cfg = parse_config("[experiment]\nsystem = quadrotor-minor\n")
        assert cfg.system is SystemKind.QUADROTOR_MINOR and cfg.fault_gains == MINOR_FAULT_GAINS

    @pytest.mark.parametrize(
        "text, match",
        [
            ("[experiment]\nM = many\n", "M = 'many'"),
            ("[experiment]\nmu = -1\n", "mu must be positive"),
            ("[experiment]\nN = 0\n", "N must be"),
            ("[bogus]\nx = 1\n", "unknown section"),
            ("[simulation]\ndt_sample = 0.3\nduration = 1\n", "whole number"),
            ("[quadrotor]\nfault_gains = 1, 2\n", "three gains"),
            ("no section header\n", "no section"),
        ],
    )
    def test_errors_name_the_source(self, text, match):
        with pytest.raises(ConfigError, match=match) as info:
            parse_config(text, source="cfg.ini")
        assert "cfg.ini" in str(info.value)

    def test_validation_on_construction(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(num_test_normal=0, num_test_faulty=0)
        assert ExperimentConfig(num_test_faulty=0).num_test_faulty == 0

    def test_overrides_propagate_to_sim(self):
        cfg = load_preset("exp1").with_overrides(seed=9, noise_sigma=0.02)
        assert (cfg.sim.seed, cfg.sim.noise_sigma) == (9, 0.02)

    def test_echo_reloads(self, tmp_path):
        cfg = load_preset("exp2-minor").with_overrides(seed=77, trials=2)
        path = tmp_path / "out.csv"
        path.write_text("".join(f"# {line}\n" for line in header_lines(cfg, {"command": "x"})) + "a,b\n1,2\n")
        assert load_config(path) == cfg

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "none.ini")


class TestTrajectoryCsv:
    def test_round_trip_exact(self, tmp_path, rng):
        t = np.cumsum(rng.uniform(0.01, 0.1, 30))
        tr = Trajectory(t, rng.normal(size=(30, 3)), id="abc")
        write_trajectory_csv(tr, tmp_path / "abc.csv")
        back = read_trajectory_csv(tmp_path / "abc.csv")
        assert back.id == "abc"
        np.testing.assert_array_equal(back.times, tr.times)
        np.testing.assert_array_equal(back.states, tr.states)

    def test_header(self, tmp_path):
        write_trajectory_csv(Trajectory.constant([1, 2, 3], 1.0), tmp_path / "h.csv")
        assert (tmp_path / "h.csv").read_text().splitlines()[0] == "t,x1,x2,x3"

    @pytest.mark.parametrize(
        "body, where",
        [
            ("t,x1\n0,1\n0.1,abc\n", ":3:"),
            ("t,x1\n0,1\n0.1,2,3\n", ":3:"),
            ("time,x1\n0,1\n", ":1:"),
            ("t,x1\n0,1\n0.2,1\n0.1,1\n", ":4:"),
            ("t,x1\n0,1\n", "at least two"),
        ],
    )
    def test_malformed_reports_line(self, tmp_path, body, where):
        path = tmp_path / "bad.csv"
        path.write_text(body)
        with pytest.raises(DatasetError, match=where) as info:
            read_trajectory_csv(path)
        assert "bad.csv" in str(info.value)


class TestDataset:
    def test_round_trip(self, tmp_path, academic_test):
        normal, faulty = academic_test
        trajs = normal[:2] + faulty[:2]
        labels = ["normal", "normal", "faulty", "unknown"]
        write_dataset(tmp_path / "ds", trajs, labels, header_lines=["[experiment]", "M = 5"])
        ds = read_dataset(tmp_path / "ds")
        assert ds.labels == labels and len(ds) == 4
        assert [t.id for t in ds.trajectories] == [t.id for t in trajs]
        assert read_comment_header(tmp_path / "ds" / MANIFEST) == ["[experiment]", "M = 5"]
        assert len(ds.with_label("normal")) == 2

    def test_bad_label_and_missing(self, tmp_path, academic_test):
        with pytest.raises(DatasetError, match="manifest not found"):
            read_dataset(tmp_path)
        d = tmp_path / "ds"
        write_dataset(d, academic_test[0][:1], ["normal"])
        (d / MANIFEST).write_text("file,label\nnormal000.csv,weird\n")
        with pytest.raises(DatasetError, match=r"manifest.csv:2: label"):
            read_dataset(d)
        (d / MANIFEST).write_text("file,label\nmissing.csv,normal\n")
        with pytest.raises(DatasetError, match="missing.csv"):
            read_dataset(d)

    def test_mixed_dimensions(self, tmp_path):
        trajs = [Trajectory.constant([0, 0], 1.0, id="a"), Trajectory.constant([0], 1.0, id="b")]
        write_dataset(tmp_path / "ds", trajs, ["normal", "normal"])
        with pytest.raises(DatasetError, match="mixed dimensions"):
            read_dataset(tmp_path / "ds")
