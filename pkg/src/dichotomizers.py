"""
Binary base learners for coding-matrix columns.

Three dichotomizers, all producing hard +1/-1 outputs: Gaussian naive
Bayes, a linear soft-margin classifier trained with stochastic hinge-loss
sub-gradients, and the 1-nearest-neighbour rule.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from src.data_model import BinaryView

logger = logging.getLogger(__name__)


class LearnerKind(str, Enum):
    GAUSSIAN_NB = "gaussian_nb"
    LINEAR_HINGE = "linear_hinge"
    ONE_NN = "one_nn"


class LearnerHyperparameters(BaseModel):
    """Settings shared by the learners; each kind reads the ones it needs."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(1e-4, gt=0, description="L2 strength of the hinge learner")
    epochs: int = Field(50, ge=1, description="Passes over the data for the hinge learner")
    var_smoothing: float = Field(
        1e-9, ge=0, description="NB variance floor, relative to the largest feature variance")
    var_floor: float = Field(1e-12, gt=0, description="Absolute NB variance floor")


def _as_row(x: np.ndarray, n_features: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n_features:
        raise ValueError(f"expected a vector of {n_features} features, got shape {x.shape}")
    return x


def _as_matrix(X: np.ndarray, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1 and X.size == 0:
        X = X.reshape(0, n_features)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(f"expected an (n, {n_features}) matrix, got shape {X.shape}")
    return X


@dataclass(frozen=True, eq=False)
class GaussianNBModel:
    """Per-polarity feature means, smoothed variances and log priors."""

    means: np.ndarray  # (2, F): row 0 is +1, row 1 is -1
    variances: np.ndarray
    log_priors: np.ndarray
    kind: LearnerKind = LearnerKind.GAUSSIAN_NB

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def log_posteriors(self, X: np.ndarray) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        log_norm = -0.5 * np.log(2.0 * np.pi * self.variances).sum(axis=1)
        squared = (X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]
        return self.log_priors + log_norm - 0.5 * squared.sum(axis=2)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        scores = self.log_posteriors(X)
        return np.where(scores[:, 0] >= scores[:, 1], 1, -1).astype(np.int8)

    def to_record(self) -> dict[str, str]:
        return {
            "log_priors": _join(self.log_priors),
            "mean_pos": _join(self.means[0]),
            "mean_neg": _join(self.means[1]),
            "var_pos": _join(self.variances[0]),
            "var_neg": _join(self.variances[1]),
        }


@dataclass(frozen=True, eq=False)
class LinearHingeModel:
    """Linear separator sign(w.x + b) on raw features."""

    weights: np.ndarray
    bias: float
    kind: LearnerKind = LearnerKind.LINEAR_HINGE

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return _as_matrix(X, self.n_features) @ self.weights + self.bias

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1, -1).astype(np.int8)

    def to_record(self) -> dict[str, str]:
        return {"weights": _join(self.weights), "bias": repr(float(self.bias))}


@dataclass(frozen=True, eq=False)
class OneNNModel:
    """Stored training samples; ties go to the lowest-index neighbour."""

    samples: np.ndarray
    targets: np.ndarray
    kind: LearnerKind = LearnerKind.ONE_NN

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        if X.shape[0] == 0:
            return np.zeros(0, dtype=np.int8)
        nearest = cdist(X, self.samples).argmin(axis=1)
        return self.targets[nearest].astype(np.int8)

    def to_record(self) -> dict[str, str]:
        return {
            "n_samples": str(self.samples.shape[0]),
            "samples": _join(self.samples),
            "targets": " ".join(str(int(t)) for t in self.targets),
        }


DichotomizerModel = Union[GaussianNBModel, LinearHingeModel, OneNNModel]


def _join(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def _check_polarities(targets: np.ndarray) -> None:
    if set(np.unique(targets).tolist()) != {-1, 1}:
        raise ValueError("training view must contain both polarities")


def train_gaussian_nb(
    X: np.ndarray, y: np.ndarray, hyper: LearnerHyperparameters
) -> GaussianNBModel:
    """
    Fit per-polarity Gaussians with variance smoothing.

    The smoothing term is var_smoothing times the largest feature variance of
    the training data, never below var_floor.
    """
    _check_polarities(y)
    epsilon = max(hyper.var_smoothing * float(X.var(axis=0).max()), hyper.var_floor)
    groups = [X[y == 1], X[y == -1]]
    means = np.vstack([g.mean(axis=0) for g in groups])
    variances = np.vstack([g.var(axis=0) for g in groups]) + epsilon
    priors = np.array([g.shape[0] for g in groups], dtype=np.float64) / X.shape[0]
    return GaussianNBModel(means=means, variances=variances, log_priors=np.log(priors))


def hinge_objective(X: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, lam: float) -> float:
    """Regularized average hinge loss, the quantity the linear learner minimises."""
    margins = y * (X @ weights + bias)
    return float(0.5 * lam * (weights @ weights + bias ** 2) + np.maximum(0.0, 1.0 - margins).mean())


def train_linear_hinge(
    X: np.ndarray, y: np.ndarray, hyper: LearnerHyperparameters, seed: int
) -> LinearHingeModel:
    """
    Soft-margin linear classifier by stochastic hinge-loss sub-gradients.

    Features are standardized with the training statistics and a constant
    feature carries the bias. Step size 1/(lam * t), iterates projected onto
    the ball of radius 1/sqrt(lam), sample order reshuffled every epoch from
    `seed`. The running average of all iterates is mapped back to
    raw-feature weights.
    """
    _check_polarities(y)
    y = y.astype(np.float64)
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Z = np.hstack([(X - center) / scale, np.ones((X.shape[0], 1))])

    rng = np.random.default_rng(seed)
    w = np.zeros(Z.shape[1])
    w_bar = np.zeros(Z.shape[1])
    radius = 1.0 / np.sqrt(hyper.lam)
    t = 0
    for _ in range(hyper.epochs):
        for i in rng.permutation(Z.shape[0]):
            t += 1
            eta = 1.0 / (hyper.lam * t)
            violated = y[i] * (Z[i] @ w) < 1.0
            w *= 1.0 - eta * hyper.lam
            if violated:
                w += eta * y[i] * Z[i]
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            w_bar += (w - w_bar) / t

    weights = w_bar[:-1] / scale
    bias = float(w_bar[-1] - center @ weights)
    logger.debug(
        f"Hinge learner: {t} steps, objective "
        f"{hinge_objective(Z[:, :-1], y, w_bar[:-1], w_bar[-1], hyper.lam):.4g}")
    return LinearHingeModel(weights=weights, bias=bias)


def train(
    kind: LearnerKind,
    view: BinaryView,
    hyper: Optional[LearnerHyperparameters] = None,
    seed: int = 0,
    features: Optional[np.ndarray] = None,
) -> DichotomizerModel:
    """
    Fit a dichotomizer on a binary view.

    Args:
        kind: Learner to fit.
        view: Samples relabelled +1 / -1.
        hyper: Hyperparameters (defaults when None).
        seed: Seed for learners with randomness.
        features: Optional feature indices to train on.

    Returns:
        The fitted model.

    Raises:
        ValueError: If the view has a single polarity.
    """
    kind = LearnerKind(kind)
    hyper = hyper or LearnerHyperparameters()
    X, y = view.samples, view.targets
    if features is not None:
        X = X[:, features]
    if kind is LearnerKind.GAUSSIAN_NB:
        model = train_gaussian_nb(X, y, hyper)
    elif kind is LearnerKind.LINEAR_HINGE:
        model = train_linear_hinge(X, y, hyper, seed)
    else:
        _check_polarities(y)
        model = OneNNModel(samples=np.array(X), targets=np.array(y, dtype=np.int8))
    logger.debug(f"Trained {kind.value} on {X.shape[0]} samples x {X.shape[1]} features")
    return model


def predict(m: DichotomizerModel, x: np.ndarray) -> int:
    """
    Hard label of one feature vector.

    Raises:
        ValueError: If x does not have the training feature count.
    """
    x = _as_row(x, m.n_features)
    return int(m.predict_many(x[None, :])[0])


def predict_many(m: DichotomizerModel, X: np.ndarray) -> np.ndarray:
    """Hard labels of every row of X."""
    return m.predict_many(X)


def model_record(m: DichotomizerModel, hyper: LearnerHyperparameters) -> dict[str, str]:
    """Flat key/value description of a model and the settings it was fit with."""
    record = {"kind": m.kind.value, "n_features": str(m.n_features)}
    if m.kind is LearnerKind.LINEAR_HINGE:
        record |= {"lam": repr(hyper.lam), "epochs": str(hyper.epochs)}
    elif m.kind is LearnerKind.GAUSSIAN_NB:
        record |= {"var_smoothing": repr(hyper.var_smoothing), "var_floor": repr(hyper.var_floor)}
    return record | m.to_record()
