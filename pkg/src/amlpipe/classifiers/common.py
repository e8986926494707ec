"""Model kinds, training configuration, and the train/predict dispatch."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..data_model import LabelValue
from ..errors import SchemaMismatch, SingleClassTraining
from ..preprocess import FeatureSchema


class ModelKind(str, enum.Enum):
    LOGISTIC_REGRESSION = "logreg"
    NEAREST_NEIGHBOURS = "knn"
    GAUSSIAN_NB = "gaussian_nb"
    MULTINOMIAL_NB = "multinomial_nb"
    RANDOM_FOREST = "random_forest"
    NEURAL_NETWORK = "neural_net"


ALL_KINDS = tuple(ModelKind)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for all six classifiers (one config object keeps the
    CLI surface small; unused entries are ignored per kind)."""

    seed: int = 0
    logreg_learning_rate: float = 0.1
    logreg_iterations: int = 500
    logreg_l2: float = 1e-4
    knn_k: int = 5
    rf_trees: int = 100
    rf_max_depth: int = 12
    rf_min_leaf: int = 2
    rf_bootstrap: bool = True
    nn_hidden: tuple[int, ...] = (32, 16)
    nn_learning_rate: float = 0.01
    nn_epochs: int = 200
    nn_batch: int = 64
    nb_var_floor: float = 1e-9
    mnb_alpha: float = 1.0
    mnb_bins: int = 16

    def validate(self):
        positives = {
            "logreg_learning_rate": self.logreg_learning_rate,
            "logreg_iterations": self.logreg_iterations,
            "knn_k": self.knn_k,
            "rf_trees": self.rf_trees,
            "rf_max_depth": self.rf_max_depth,
            "rf_min_leaf": self.rf_min_leaf,
            "nn_learning_rate": self.nn_learning_rate,
            "nn_epochs": self.nn_epochs,
            "nn_batch": self.nn_batch,
            "nb_var_floor": self.nb_var_floor,
            "mnb_alpha": self.mnb_alpha,
            "mnb_bins": self.mnb_bins,
        }
        for name, value in positives.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive")
        if self.logreg_l2 < 0:
            raise ValueError("logreg_l2 must be non-negative")
        if any(h <= 0 for h in self.nn_hidden):
            raise ValueError("nn_hidden sizes must be positive")


@dataclass(frozen=True)
class TrainedModel:
    """A fitted classifier: kind, learned parameters, the feature schema it
    was fit with (when known), and the training seed."""

    kind: ModelKind
    params: object
    n_features: int
    seed: int
    schema: FeatureSchema | None = None

    def with_schema(self, schema: FeatureSchema) -> "TrainedModel":
        return replace(self, schema=schema)


def _validate_training_inputs(X: np.ndarray, y: np.ndarray):
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if len(X) != len(y):
        raise ValueError("X and y differ in length")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0, 1))):
        raise ValueError(f"labels must be 0/1, got {classes.tolist()}")
    if len(classes) < 2:
        raise SingleClassTraining("training labels contain a single class")


def train(kind: ModelKind, X, y, cfg: TrainConfig | None = None) -> TrainedModel:
    """Fit one classifier; the result is reproducible from (kind, X, y, cfg)."""
    from . import forest, knn, logistic, naive_bayes, neural

    cfg = cfg or TrainConfig()
    cfg.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray([int(v) for v in y], dtype=np.int64)
    _validate_training_inputs(X, y)

    if kind is ModelKind.LOGISTIC_REGRESSION:
        params = logistic.fit(
            X, y, cfg.logreg_learning_rate, cfg.logreg_iterations, cfg.logreg_l2
        )
    elif kind is ModelKind.NEAREST_NEIGHBOURS:
        params = knn.fit(X, y, cfg.knn_k)
    elif kind is ModelKind.GAUSSIAN_NB:
        params = naive_bayes.fit_gaussian(X, y, cfg.nb_var_floor)
    elif kind is ModelKind.MULTINOMIAL_NB:
        params = naive_bayes.fit_multinomial(X, y, cfg.mnb_alpha, cfg.mnb_bins)
    elif kind is ModelKind.RANDOM_FOREST:
        params = forest.fit(
            X,
            y,
            n_trees=cfg.rf_trees,
            max_depth=cfg.rf_max_depth,
            min_leaf=cfg.rf_min_leaf,
            bootstrap=cfg.rf_bootstrap,
            seed=cfg.seed,
        )
    elif kind is ModelKind.NEURAL_NETWORK:
        params = neural.fit(
            X,
            y,
            hidden=cfg.nn_hidden,
            learning_rate=cfg.nn_learning_rate,
            epochs=cfg.nn_epochs,
            batch=cfg.nn_batch,
            seed=cfg.seed,
        )
    else:  # pragma: no cover
        raise ValueError(f"unknown model kind {kind!r}")
    return TrainedModel(kind=kind, params=params, n_features=X.shape[1], seed=cfg.seed)


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """Suspicion probability per row, in [0, 1]."""
    from . import forest, knn, logistic, naive_bayes, neural

    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if X.shape[1] != model.n_features:
        raise SchemaMismatch(
            f"model was fit with {model.n_features} features, got {X.shape[1]}"
        )
    if model.schema is not None and X.shape[1] != len(model.schema):
        raise SchemaMismatch("feature matrix does not match the recorded schema")

    if model.kind is ModelKind.LOGISTIC_REGRESSION:
        proba = logistic.predict_proba(model.params, X)
    elif model.kind is ModelKind.NEAREST_NEIGHBOURS:
        proba = knn.predict_proba(model.params, X)
    elif model.kind is ModelKind.GAUSSIAN_NB:
        proba = naive_bayes.predict_proba_gaussian(model.params, X)
    elif model.kind is ModelKind.MULTINOMIAL_NB:
        proba = naive_bayes.predict_proba_multinomial(model.params, X)
    elif model.kind is ModelKind.RANDOM_FOREST:
        proba = forest.predict_proba(model.params, X)
    elif model.kind is ModelKind.NEURAL_NETWORK:
        proba = neural.predict_proba(model.params, X)
    else:  # pragma: no cover
        raise ValueError(f"unknown model kind {model.kind!r}")
    return np.clip(proba, 0.0, 1.0)


def predict(model: TrainedModel, X, threshold: float = 0.5) -> list[LabelValue]:
    """Suspicious iff probability strictly exceeds the threshold."""
    proba = predict_proba(model, X)
    return [
        LabelValue.SUSPICIOUS if p > threshold else LabelValue.NORMAL for p in proba
    ]


def gradient_check(kind: ModelKind, X_small, y_small, cfg: TrainConfig | None = None) -> float:
    """Max relative error between analytic gradients and central finite
    differences (step 1e-5) at a seeded random parameter point.

    Only meaningful for the two gradient-trained kinds; inputs are capped at
    20 rows and 10 features to keep the finite-difference sweep cheap.
    """
    from . import logistic, neural

    cfg = cfg or TrainConfig()
    X = np.asarray(X_small, dtype=np.float64)
    y = np.asarray([int(v) for v in y_small], dtype=np.float64)
    if len(X) > 20 or X.shape[1] > 10:
        raise ValueError("gradient_check expects at most 20 rows and 10 features")

    if kind is ModelKind.LOGISTIC_REGRESSION:
        rng = np.random.default_rng(cfg.seed)
        theta = rng.normal(0.0, 0.5, size=X.shape[1] + 1)

        def loss_of(t):
            return logistic.loss_and_grad(t[:-1], t[-1], X, y, cfg.logreg_l2)[0]

        _, grad_w, grad_b = logistic.loss_and_grad(theta[:-1], theta[-1], X, y, cfg.logreg_l2)
        analytic = np.concatenate([grad_w, [grad_b]])
        numeric = _central_differences(loss_of, theta)
    elif kind is ModelKind.NEURAL_NETWORK:
        params = neural.init_params(X.shape[1], cfg.nn_hidden, cfg.seed)
        flat, unflatten = neural.flatten_params(params)

        def loss_of(t):
            return neural.loss_and_grad(unflatten(t), X, y)[0]

        _, grads = neural.loss_and_grad(params, X, y)
        analytic, _ = neural.flatten_params(grads)
        numeric = _central_differences(loss_of, flat)
    else:
        raise ValueError("gradient_check supports logreg and neural_net only")

    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-12)
    return float(np.max(np.abs(analytic - numeric) / scale))


def _central_differences(loss_of, theta: np.ndarray, step: float = 1e-5) -> np.ndarray:
    grad = np.empty_like(theta)
    for i in range(len(theta)):
        bumped = theta.copy()
        bumped[i] = theta[i] + step
        up = loss_of(bumped)
        bumped[i] = theta[i] - step
        down = loss_of(bumped)
        grad[i] = (up - down) / (2.0 * step)
    return grad


def kinds_from_text(text: str) -> tuple[ModelKind, ...]:
    """Parse a CLI/config classifier list ('all' or comma-separated kinds)."""
    text = text.strip().lower()
    if text in ("all", "*", ""):
        return ALL_KINDS
    kinds = []
    for part in text.split(","):
        part = part.strip()
        try:
            kinds.append(ModelKind(part))
        except ValueError:
            valid = ", ".join(k.value for k in ModelKind)
            raise ValueError(f"unknown model kind '{part}' (valid: {valid})") from None
    return tuple(kinds)


def proba_to_labels(proba: Sequence[float], threshold: float = 0.5) -> list[LabelValue]:
    return [
        LabelValue.SUSPICIOUS if p > threshold else LabelValue.NORMAL for p in proba
    ]
