"""
Tests for environment settings and experiment configuration.
"""

from pathlib import Path

import pytest

from src.config import (
    Config,
    ExperimentConfig,
    build_experiment_config,
    load_config_file,
)
from src.dichotomizers import LearnerKind
from src.encoder import EncoderName, ExchangeRule
from src.feature_selection import FilterMethod

TEST_FILES = Path(__file__).parent / "test_files"


class TestConfig:
    """Environment-driven settings."""

    def test_valid_settings(self, monkeypatch):
        monkeypatch.setattr(Config, "LOG_LEVEL", "debug")
        monkeypatch.setattr(Config, "DEFAULT_SEED", "3")
        assert Config.validate() == []
        assert Config.default_seed() == 3

    def test_invalid_settings(self, monkeypatch):
        monkeypatch.setattr(Config, "LOG_LEVEL", "LOUD")
        monkeypatch.setattr(Config, "DEFAULT_SEED", "-4")
        problems = Config.validate()
        assert len(problems) == 2
        assert problems[0].startswith("LOG_LEVEL")
        assert Config.default_seed() == 0

    def test_logging_directory(self, monkeypatch, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        monkeypatch.setattr(Config, "LOG_FILE", str(log_file))
        Config.setup_logging_directory()
        assert log_file.parent.is_dir()


class TestExperimentConfig:
    """Validation of experiment settings."""

    def test_defaults(self, monkeypatch):
        monkeypatch.setattr(Config, "DEFAULT_SEED", "7")
        cfg = ExperimentConfig()
        assert cfg.encoders == (EncoderName.ECOCECS_N2,)
        assert cfg.learner is LearnerKind.GAUSSIAN_NB
        assert cfg.fs_method is FilterMethod.WILCOXON
        assert cfg.k == 80
        assert cfg.exchange_rule is ExchangeRule.PROSE
        assert cfg.seed == 7
        assert cfg.dataset_name == "synthetic"

    def test_comma_separated_lists(self):
        cfg = ExperimentConfig(encoders="ova, ovo,ecocecs-n3", k_list="10,20,40", k=5, g1="a,b", g2="c")
        assert cfg.encoders == (EncoderName.OVA, EncoderName.OVO, EncoderName.ECOCECS_N3)
        assert cfg.k_list == (10, 20, 40)
        assert cfg.g1 == ("a", "b")

    def test_sweep_checks_largest_k_instead_of_k(self):
        cfg = ExperimentConfig(features=20, informative=4, k_list="5,10")
        assert cfg.k == 80
        assert cfg.k_list == (5, 10)

    def test_fs_none(self):
        assert ExperimentConfig(fs_method="none").fs_method is None

    def test_hyperparameters(self):
        hyper = ExperimentConfig(lam=0.01, epochs=3).hyper
        assert (hyper.lam, hyper.epochs) == (0.01, 3)

    @pytest.mark.parametrize(
        "fields, message",
        [
            ({"k_list": "20,10"}, "ascending"),
            ({"k": 500}, "cannot exceed"),
            ({"k_list": "10,500", "k": 5}, "cannot exceed"),
            ({"informative": 300}, "cannot exceed"),
            ({"encoders": "ova,ova"}, "twice"),
            ({"encoders": "svm"}, "encoders"),
            ({"learner": "tree"}, "learner"),
            ({"split": 1.0}, "split"),
            ({"per_column_selection": True, "fs_method": "none"}, "per_column_selection"),
            ({"csv": "missing/data.csv"}, "not found"),
            ({"unknown_key": 1}, "unknown_key"),
        ],
    )
    def test_invalid(self, fields, message):
        with pytest.raises(ValueError, match=message):
            ExperimentConfig(**fields)

    def test_test_csv_needs_training_csv(self):
        with pytest.raises(ValueError, match="training csv"):
            ExperimentConfig(test_csv=TEST_FILES / "three_rows.csv")

    def test_csv_dataset_name(self):
        cfg = ExperimentConfig(csv=TEST_FILES / "three_rows.csv", k=1000)
        assert cfg.dataset_name == "three_rows"

    def test_echo_is_sorted_and_excludes_output(self, tmp_path):
        cfg = ExperimentConfig(encoders="ova,ovo", fs_method="none", seed=2, out=tmp_path)
        lines = cfg.echo().splitlines()
        assert lines == sorted(lines)
        assert "ENCODERS=ova,ovo" in lines
        assert "FS_METHOD=none" in lines
        assert "SEED=2" in lines
        assert not any(line.startswith("OUT=") for line in lines)


class TestConfigFile:
    """Flat KEY=value files merged with flag overrides."""

    @pytest.fixture
    def config_file(self, tmp_path):
        path = tmp_path / "experiment.env"
        path.write_text(
            "# sweep over a small synthetic set\n"
            "ENCODER=ova,ecocecs-n2\n"
            "per-class=12\n"
            "K=15\n"
            "FS=ttest\n"
            "SEED=4\n",
            encoding="utf-8",
        )
        return path

    def test_keys_are_normalized(self, config_file):
        values = load_config_file(config_file)
        assert values == {
            "encoders": "ova,ecocecs-n2",
            "per_class": "12",
            "k": "15",
            "fs_method": "ttest",
            "seed": "4",
        }

    def test_flags_override_file(self, config_file):
        cfg = build_experiment_config(load_config_file(config_file), {"seed": 9, "k": None})
        assert cfg.seed == 9
        assert cfg.k == 15
        assert cfg.per_class == 12
        assert cfg.fs_method is FilterMethod.TTEST
        assert cfg.encoders == (EncoderName.OVA, EncoderName.ECOCECS_N2)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config_file(tmp_path / "nope.env")
