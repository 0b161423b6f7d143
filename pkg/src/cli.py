"""
Command-line front end.

Subcommands:
    encode      build coding matrices and per-node complexity traces
    eval        train, decode and score one or more encoders
    sweep       repeat eval over a list of feature counts
    complexity  print N2 / N3 of a dataset under a given bipartition

Every run writes UTF-8 CSV files into one output directory; identical
configurations produce identical files.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from src.complexity import n2_index, n3_index
from src.config import (
    Config,
    ExperimentConfig,
    build_experiment_config,
    config,
    load_config_file,
)
from src.data_model import (
    Dataset,
    DatasetError,
    binary_view,
    generate_blobs,
    load_csv,
    split_stratified,
    standardize,
)
from src.ecoc_pipeline import fit, predict_batch, write_models, write_predictions_csv
from src.encoder import (
    CodingMatrix,
    EncoderName,
    build_matrix,
    write_column_meta_csv,
    write_matrix_csv,
    write_trace_csv,
)
from src.feature_selection import FeatureScore, rank_features, write_selection_csv
from src.metrics import EvalReport, evaluate, report_table, write_report_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


class ValidationFailure(Exception):
    """A configuration or input problem found before any output is written."""


@dataclass(frozen=True)
class PreparedData:
    train: Dataset
    test: Optional[Dataset]
    ranking: Optional[list[FeatureScore]]


def setup_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.LOG_FILE:
        Config.setup_logging_directory()
        handlers.append(logging.FileHandler(config.LOG_FILE, encoding="utf-8"))
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


def _align_classes(test: Dataset, class_names: tuple[str, ...]) -> Dataset:
    unknown = sorted(set(test.class_names) - set(class_names))
    if unknown:
        raise DatasetError(f"test classes not seen in training: {unknown}")
    return Dataset(
        samples=test.samples,
        labels=test.labels,
        class_names=class_names,
        feature_names=test.feature_names,
        label_name=test.label_name,
    )


def load_dataset(cfg: ExperimentConfig) -> tuple[Dataset, Optional[Dataset]]:
    """The configured dataset, plus the explicit test file when one is given."""
    if cfg.csv is None:
        data = generate_blobs(cfg.classes, cfg.per_class, cfg.features, cfg.informative, cfg.spread, cfg.seed)
        return data, None
    data = load_csv(cfg.csv, cfg.label_column)
    if cfg.test_csv is None:
        return data, None
    test = load_csv(cfg.test_csv, cfg.label_column)
    if test.feature_names != data.feature_names:
        raise DatasetError(f"{cfg.test_csv}: feature columns differ from {cfg.csv}")
    return data, _align_classes(test, data.class_names)


def prepare(cfg: ExperimentConfig, needs_test: bool, k_max: Optional[int] = None) -> PreparedData:
    """
    Load, split, optionally standardize, and rank features on the training
    side. Raises ValidationFailure for anything the user can fix.
    """
    try:
        data, test = load_dataset(cfg)
    except (DatasetError, FileNotFoundError) as e:
        raise ValidationFailure(str(e)) from e

    if needs_test and test is None:
        try:
            train, test = split_stratified(data, cfg.split, cfg.seed)
        except ValueError as e:
            raise ValidationFailure(str(e)) from e
    else:
        train = data
    try:
        train.check_complete()
    except DatasetError as e:
        raise ValidationFailure(f"training data: {e}") from e

    k_max = k_max or cfg.k
    if cfg.fs_method is not None and k_max > train.n_features:
        raise ValidationFailure(f"k={k_max} exceeds the {train.n_features} available features")

    if cfg.zscore:
        train, *rest = standardize(train, *([test] if test is not None else []))
        test = rest[0] if rest else None

    ranking = None
    if cfg.fs_method is not None and not cfg.per_column_selection:
        ranking = rank_features(train, cfg.fs_method)
    return PreparedData(train=train, test=test, ranking=ranking)


def _output_dir(cfg: ExperimentConfig, command: str) -> Path:
    out = cfg.out if cfg.out is not None else Path(config.OUTPUT_DIR) / command
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.echo(), encoding="utf-8")
    return out


def _selected(prepared: PreparedData, k: int) -> Optional[list[int]]:
    if prepared.ranking is None:
        return None
    return [score.feature for score in prepared.ranking[:k]]


def _write_matrix_files(matrix: CodingMatrix, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(matrix, directory / "matrix.csv")
    write_column_meta_csv(matrix, directory / "matrix_meta.csv")
    write_trace_csv(matrix, directory / "trace.csv")


def cmd_encode(cfg: ExperimentConfig) -> Path:
    """Write matrix, column metadata and node traces for every encoder."""
    prepared = prepare(cfg, needs_test=False)
    selected = _selected(prepared, cfg.k)
    data = prepared.train.select_features(selected) if selected is not None else prepared.train

    out = _output_dir(cfg, "encode")
    if prepared.ranking is not None:
        write_selection_csv(prepared.ranking[:cfg.k], prepared.train, out / "features.csv")
    for encoder in cfg.encoders:
        matrix = build_matrix(encoder, data, cfg.seed, cfg.exchange_rule, cfg.restarts)
        _write_matrix_files(matrix, out / encoder.value)
    logger.info(f"Encoding results written to {out}")
    return out


def _evaluate_encoder(
    cfg: ExperimentConfig,
    prepared: PreparedData,
    encoder: EncoderName,
    k: int,
    directory: Optional[Path],
) -> EvalReport:
    train, test = prepared.train, prepared.test
    selected = _selected(prepared, k)
    encode_on = train.select_features(selected) if selected is not None else train
    matrix = build_matrix(encoder, encode_on, cfg.seed, cfg.exchange_rule, cfg.restarts)
    model = fit(
        train,
        matrix,
        cfg.learner,
        cfg.hyper,
        cfg.seed,
        feature_subset=selected,
        per_column_k=k if cfg.per_column_selection else None,
        fs_method=cfg.fs_method if cfg.per_column_selection else None,
    )
    normalized = not cfg.unnormalized_decoding
    if directory is not None:
        _write_matrix_files(matrix, directory)
        write_models(model, directory / "models.txt")
        predicted = write_predictions_csv(model, test, directory / "predictions.csv", normalized)
    else:
        predicted = predict_batch(model, test, normalized)
    return evaluate(test.labels, predicted, train.class_names, cfg.beta)


def cmd_eval(cfg: ExperimentConfig) -> Path:
    """Evaluate every configured encoder under the same data, learner and features."""
    prepared = prepare(cfg, needs_test=True)
    out = _output_dir(cfg, "eval")
    if prepared.ranking is not None:
        write_selection_csv(prepared.ranking[:cfg.k], prepared.train, out / "features.csv")

    rows = []
    for encoder in cfg.encoders:
        report = _evaluate_encoder(cfg, prepared, encoder, cfg.k, out / encoder.value)
        rows.append((encoder.value, cfg.dataset_name, report))
    write_report_csv(report_table(rows), out / "report.csv")
    logger.info(f"Evaluation report written to {out / 'report.csv'}")
    return out


def cmd_sweep(cfg: ExperimentConfig) -> Path:
    """One (k, encoder, accuracy, fscore) row per feature count and encoder."""
    if not cfg.k_list:
        raise ValidationFailure("sweep needs a non-empty k_list")
    if cfg.fs_method is None:
        raise ValidationFailure("sweep needs fs_method other than none")
    prepared = prepare(cfg, needs_test=True, k_max=max(cfg.k_list))
    out = _output_dir(cfg, "sweep")

    rows = []
    for k in cfg.k_list:
        for encoder in cfg.encoders:
            report = _evaluate_encoder(cfg, prepared, encoder, k, None)
            rows.append({
                "k": k,
                "encoder": encoder.value,
                "accuracy": report.accuracy,
                "fscore": report.fscore,
            })
            logger.info(f"k={k} {encoder.value}: accuracy {report.accuracy:.4f}")

    pd.DataFrame(rows, columns=["k", "encoder", "accuracy", "fscore"]).to_csv(
        out / "sweep.csv", index=False, encoding="utf-8", lineterminator="\n", float_format="%.6f")
    return out


def cmd_complexity(cfg: ExperimentConfig) -> dict[str, float]:
    """N2 and N3 of the dataset under the bipartition g1 / g2."""
    if not cfg.g1 or not cfg.g2:
        raise ValidationFailure("complexity needs both --g1 and --g2 class lists")
    prepared = prepare(cfg, needs_test=False)
    selected = _selected(prepared, cfg.k)
    data = prepared.train.select_features(selected) if selected is not None else prepared.train
    try:
        view = binary_view(data, cfg.g1, cfg.g2)
    except ValueError as e:
        raise ValidationFailure(str(e)) from e
    values = {"N2": n2_index(view).value, "N3": n3_index(view).value}
    print(f"groups: {'|'.join(cfg.g1)} vs {'|'.join(cfg.g2)} ({len(view)} samples)")
    for name, value in values.items():
        print(f"{name}={value:.6f}")
    return values


COMMANDS = {
    "encode": cmd_encode,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "complexity": cmd_complexity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecocecs",
        description="Complexity-driven ECOC encoding, evaluation and sweeps",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="Flat KEY=value experiment file; flags override it")
    common.add_argument("--csv", help="Training (or full) dataset CSV")
    common.add_argument("--test-csv", help="Explicit labelled test CSV")
    common.add_argument("--label-column", help="Label column name (default: last column)")
    common.add_argument("--classes", type=int, help="Synthetic data: number of classes")
    common.add_argument("--per-class", type=int, help="Synthetic data: samples per class")
    common.add_argument("--features", type=int, help="Synthetic data: number of features")
    common.add_argument("--informative", type=int, help="Synthetic data: planted features")
    common.add_argument("--spread", type=float, help="Synthetic data: class standard deviation")
    common.add_argument("--encoder", dest="encoders",
                        help="Comma-separated: ecocecs-n2, ecocecs-n3, ova, ovo, ordinal")
    common.add_argument("--learner", help="gaussian_nb, linear_hinge or one_nn")
    common.add_argument("--fs", dest="fs_method", help="roc, ttest, wilcoxon or none")
    common.add_argument("-k", type=int, help="Number of selected features")
    common.add_argument("--per-column-selection", action="store_true",
                        help="Select features per dichotomy instead of globally")
    common.add_argument("--exchange-rule", help="prose or pseudocode")
    common.add_argument("--restarts", type=int, help="Local-search restarts per node")
    common.add_argument("--lam", type=float, help="Hinge learner L2 strength")
    common.add_argument("--epochs", type=int, help="Hinge learner epochs")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--beta", type=float, help="F-score beta")
    common.add_argument("--split", type=float, help="Training fraction when no test CSV is given")
    common.add_argument("--zscore", action="store_true", help="Standardize with training statistics")
    common.add_argument("--unnormalized-decoding", action="store_true",
                        help="Do not divide decoding distances by active-column counts")
    common.add_argument("--out", help="Output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")

    subparsers.add_parser("encode", parents=[common], help="Build coding matrices and traces")
    subparsers.add_parser("eval", parents=[common], help="Train, decode and score")
    sweep = subparsers.add_parser("sweep", parents=[common], help="Evaluate over feature counts")
    sweep.add_argument("--k-list", dest="k_list", default=argparse.SUPPRESS,
                       help="Ascending comma-separated feature counts")
    complexity = subparsers.add_parser("complexity", parents=[common], help="Print N2 and N3")
    complexity.add_argument("--g1", default=argparse.SUPPRESS, help="Comma-separated classes labelled +1")
    complexity.add_argument("--g2", default=argparse.SUPPRESS, help="Comma-separated classes labelled -1")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    setup_logging(args.pop("verbose", False))

    problems = Config.validate()
    if problems:
        for problem in problems:
            logger.warning(problem)

    try:
        file_values = load_config_file(args.pop("config")) if "config" in args else {}
        cfg = build_experiment_config(file_values, args)
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        COMMANDS[command](cfg)
    except ValidationFailure as e:
        logger.error(f"Invalid input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, OSError) as e:
        logger.error(f"{command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
