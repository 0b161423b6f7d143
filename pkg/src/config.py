"""
Configuration module for the ECOC toolkit.

Process-wide settings (logging, output location, default seed) are read
from environment variables, optionally loaded from a .env file. Experiment
settings live in ExperimentConfig, built from a flat KEY=value file and/or
command-line flags.
"""

import logging
import os
from pathlib import Path
from typing import Any, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.dichotomizers import LearnerHyperparameters, LearnerKind
from src.encoder import EncoderName, ExchangeRule
from src.feature_selection import FilterMethod

# Load environment variables from .env file
load_dotenv()


class Config:
    """Configuration class that loads settings from environment variables."""

    # Logging Configuration
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: str = os.getenv("LOG_FILE", "")

    # Run Configuration
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "./runs")
    DEFAULT_SEED: str = os.getenv("DEFAULT_SEED", "0")

    @classmethod
    def validate(cls) -> list[str]:
        """
        Validate the environment-driven settings.

        Returns:
            List of problems. Empty list if everything is usable.
        """
        problems = []
        if not isinstance(logging.getLevelName(cls.LOG_LEVEL.upper()), int):
            problems.append(f"LOG_LEVEL: unknown level {cls.LOG_LEVEL!r}")
        if not cls.DEFAULT_SEED.isdigit():
            problems.append(f"DEFAULT_SEED: expected a non-negative integer, got {cls.DEFAULT_SEED!r}")
        return problems

    @classmethod
    def default_seed(cls) -> int:
        return int(cls.DEFAULT_SEED) if cls.DEFAULT_SEED.isdigit() else 0

    @classmethod
    def setup_logging_directory(cls) -> None:
        """Create the logging directory if it doesn't exist."""
        if cls.LOG_FILE:
            Path(cls.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)


# Create a global config instance
config = Config()


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


class ExperimentConfig(BaseModel):
    """
    Every setting of an encode / eval / sweep / complexity run.

    The dataset comes from `csv` (optionally with an explicit `test_csv`) or,
    when no file is given, from the synthetic blob generator.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    # dataset source
    csv: Optional[Path] = None
    test_csv: Optional[Path] = None
    label_column: Optional[str] = None
    classes: int = Field(5, ge=2)
    per_class: int = Field(40, ge=2)
    features: int = Field(200, ge=1)
    informative: int = Field(10, ge=0)
    spread: float = Field(0.3, gt=0)

    # method
    encoders: tuple[EncoderName, ...] = (EncoderName.ECOCECS_N2,)
    learner: LearnerKind = LearnerKind.GAUSSIAN_NB
    fs_method: Optional[FilterMethod] = FilterMethod.WILCOXON
    k: int = Field(80, ge=1)
    k_list: tuple[int, ...] = ()
    per_column_selection: bool = False
    exchange_rule: ExchangeRule = ExchangeRule.PROSE
    restarts: int = Field(1, ge=1)
    lam: float = Field(1e-4, gt=0)
    epochs: int = Field(50, ge=1)

    # evaluation
    seed: int = Field(default_factory=Config.default_seed, ge=0)
    beta: float = Field(1.0, gt=0)
    split: float = Field(0.7, gt=0, lt=1)
    zscore: bool = False
    unnormalized_decoding: bool = False

    # complexity command
    g1: tuple[str, ...] = ()
    g2: tuple[str, ...] = ()

    out: Optional[Path] = None

    @field_validator("encoders", "g1", "g2", mode="before")
    @classmethod
    def _parse_names(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("k_list", mode="before")
    @classmethod
    def _parse_k_list(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("fs_method", mode="before")
    @classmethod
    def _parse_fs(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() == "none":
            return None
        return value

    @field_validator("encoders")
    @classmethod
    def _check_encoders(cls, value: tuple) -> tuple:
        if not value:
            raise ValueError("at least one encoder is required")
        if len(set(value)) != len(value):
            raise ValueError(f"encoders listed twice: {[e.value for e in value]}")
        return value

    @field_validator("k_list")
    @classmethod
    def _check_k_list(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if any(k < 1 for k in value):
            raise ValueError("every k in k_list must be >= 1")
        if any(later <= earlier for earlier, later in zip(value, value[1:])):
            raise ValueError(f"k_list must be strictly ascending, got {list(value)}")
        return value

    @field_validator("csv", "test_csv")
    @classmethod
    def _check_file(cls, value: Optional[Path]) -> Optional[Path]:
        if value is not None and not value.is_file():
            raise ValueError(f"dataset file not found: {value}")
        return value

    @model_validator(mode="after")
    def _check_combinations(self) -> "ExperimentConfig":
        if self.test_csv is not None and self.csv is None:
            raise ValueError("test_csv needs a training csv as well")
        if self.csv is None:
            if self.informative > self.features:
                raise ValueError(
                    f"informative ({self.informative}) cannot exceed features ({self.features})")
            needed = max(self.k_list) if self.k_list else self.k
            if self.fs_method is not None and needed > self.features:
                raise ValueError(f"k ({needed}) cannot exceed the {self.features} features")
        if self.per_column_selection and self.fs_method is None:
            raise ValueError("per_column_selection needs fs_method other than none")
        return self

    @property
    def hyper(self) -> LearnerHyperparameters:
        return LearnerHyperparameters(lam=self.lam, epochs=self.epochs)

    @property
    def dataset_name(self) -> str:
        return self.csv.stem if self.csv is not None else "synthetic"

    def echo(self) -> str:
        """Sorted KEY=value lines describing the run (output path excluded)."""
        lines = []
        for key, value in sorted(self.model_dump(mode="json", exclude={"out"}).items()):
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key.upper()}={'none' if value is None else value}")
        return "\n".join(sorted(lines)) + "\n"


# flag spellings accepted as config-file keys
_KEY_ALIASES = {"encoder": "encoders", "fs": "fs_method"}


def _normalize_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return _KEY_ALIASES.get(key, key)


def load_config_file(path: str | Path) -> dict[str, str]:
    """
    Read a flat KEY=value experiment file.

    Keys are case-insensitive and may use dashes or underscores; keys without
    a value are ignored.

    Raises:
        FileNotFoundError: If the file does not exist.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {_normalize_key(key): value for key, value in values.items() if value is not None}


def build_experiment_config(
    file_values: Optional[dict[str, Any]] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merge config-file values with flag overrides (flags win) and validate.

    Raises:
        ValueError: With the failing field named (pydantic ValidationError
            is a ValueError).
    """
    merged = {_normalize_key(k): v for k, v in (file_values or {}).items()}
    merged |= {_normalize_key(k): v for k, v in (overrides or {}).items() if v is not None}
    return ExperimentConfig(**merged)
