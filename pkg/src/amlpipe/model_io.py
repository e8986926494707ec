"""Versioned, self-describing JSON artifacts for fitted models.

Layout: ``{"format": "amlpipe-artifact", "version": 1, "type": ...,
"payload": ...}`` with numpy arrays as nested lists. Covers classifiers,
both detectors, and the preprocessing state (encoder/standardizer/schema)
needed to score new data.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .anomaly import GaussianModel, IsolationForestModel, IsolationTree
from .classifiers.common import ModelKind, TrainedModel
from .classifiers.forest import ForestParams, Tree
from .classifiers.knn import KnnParams
from .classifiers.logistic import LogisticParams
from .classifiers.naive_bayes import GaussianNBParams, MultinomialNBParams
from .classifiers.neural import NeuralParams
from .errors import DataError
from .preprocess import CategoryEncoder, FeatureColumn, FeatureSchema, Standardizer

FORMAT_NAME = "amlpipe-artifact"
FORMAT_VERSION = 1


def _arr(x) -> list:
    return np.asarray(x).tolist()


def schema_to_dict(schema: FeatureSchema) -> list:
    return [[c.name, c.kind] for c in schema.columns]


def schema_from_dict(data: list) -> FeatureSchema:
    return FeatureSchema(tuple(FeatureColumn(name, kind) for name, kind in data))


def encoder_to_dict(encoder: CategoryEncoder) -> dict:
    return {field: dict(mapping) for field, mapping in encoder.mappings.items()}


def encoder_from_dict(data: dict) -> CategoryEncoder:
    return CategoryEncoder({f: {k: int(v) for k, v in m.items()} for f, m in data.items()})


def standardizer_to_dict(s: Standardizer) -> dict:
    return {"mean": _arr(s.mean), "std": _arr(s.std)}


def standardizer_from_dict(data: dict) -> Standardizer:
    return Standardizer(mean=np.array(data["mean"]), std=np.array(data["std"]))


def _params_to_dict(kind: ModelKind, params) -> dict:
    if kind is ModelKind.LOGISTIC_REGRESSION:
        return {
            "weights": _arr(params.weights),
            "bias": params.bias,
            "loss_history": list(params.loss_history),
        }
    if kind is ModelKind.NEAREST_NEIGHBOURS:
        return {"X_train": _arr(params.X_train), "y_train": _arr(params.y_train), "k": params.k}
    if kind is ModelKind.GAUSSIAN_NB:
        return {
            "class_log_prior": _arr(params.class_log_prior),
            "means": _arr(params.means),
            "variances": _arr(params.variances),
        }
    if kind is ModelKind.MULTINOMIAL_NB:
        return {
            "class_log_prior": _arr(params.class_log_prior),
            "feature_log_prob": _arr(params.feature_log_prob),
            "bin_mins": _arr(params.bin_mins),
            "bin_widths": _arr(params.bin_widths),
            "n_bins": params.n_bins,
        }
    if kind is ModelKind.RANDOM_FOREST:
        return {
            "n_features": params.n_features,
            "seed": params.seed,
            "trees": [
                {
                    "feature": _arr(t.feature),
                    "threshold": _arr(t.threshold),
                    "left": _arr(t.left),
                    "right": _arr(t.right),
                    "value": _arr(t.value),
                }
                for t in params.trees
            ],
        }
    if kind is ModelKind.NEURAL_NETWORK:
        return {
            "weights": [_arr(w) for w in params.weights],
            "biases": [_arr(b) for b in params.biases],
            "loss_history": list(params.loss_history),
        }
    raise ValueError(f"unknown model kind {kind!r}")  # pragma: no cover


def _params_from_dict(kind: ModelKind, data: dict):
    if kind is ModelKind.LOGISTIC_REGRESSION:
        return LogisticParams(
            weights=np.array(data["weights"]),
            bias=float(data["bias"]),
            loss_history=tuple(data["loss_history"]),
        )
    if kind is ModelKind.NEAREST_NEIGHBOURS:
        return KnnParams(
            X_train=np.array(data["X_train"]),
            y_train=np.array(data["y_train"]),
            k=int(data["k"]),
        )
    if kind is ModelKind.GAUSSIAN_NB:
        return GaussianNBParams(
            class_log_prior=np.array(data["class_log_prior"]),
            means=np.array(data["means"]),
            variances=np.array(data["variances"]),
        )
    if kind is ModelKind.MULTINOMIAL_NB:
        return MultinomialNBParams(
            class_log_prior=np.array(data["class_log_prior"]),
            feature_log_prob=np.array(data["feature_log_prob"]),
            bin_mins=np.array(data["bin_mins"]),
            bin_widths=np.array(data["bin_widths"]),
            n_bins=int(data["n_bins"]),
        )
    if kind is ModelKind.RANDOM_FOREST:
        trees = tuple(
            Tree(
                feature=np.array(t["feature"], dtype=np.int32),
                threshold=np.array(t["threshold"], dtype=np.float64),
                left=np.array(t["left"], dtype=np.int32),
                right=np.array(t["right"], dtype=np.int32),
                value=np.array(t["value"], dtype=np.float64),
            )
            for t in data["trees"]
        )
        return ForestParams(trees=trees, n_features=int(data["n_features"]), seed=int(data["seed"]))
    if kind is ModelKind.NEURAL_NETWORK:
        return NeuralParams(
            weights=tuple(np.array(w) for w in data["weights"]),
            biases=tuple(np.array(b) for b in data["biases"]),
            loss_history=tuple(data["loss_history"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")  # pragma: no cover


def classifier_to_dict(model: TrainedModel) -> dict:
    return {
        "kind": model.kind.value,
        "n_features": model.n_features,
        "seed": model.seed,
        "schema": None if model.schema is None else schema_to_dict(model.schema),
        "params": _params_to_dict(model.kind, model.params),
    }


def classifier_from_dict(data: dict) -> TrainedModel:
    kind = ModelKind(data["kind"])
    schema = None if data["schema"] is None else schema_from_dict(data["schema"])
    return TrainedModel(
        kind=kind,
        params=_params_from_dict(kind, data["params"]),
        n_features=int(data["n_features"]),
        seed=int(data["seed"]),
        schema=schema,
    )


def detector_to_dict(model) -> dict:
    if isinstance(model, GaussianModel):
        return {
            "kind": "gaussian",
            "mean": _arr(model.mean),
            "variance": _arr(model.variance),
            "epsilon_log": model.epsilon_log,
        }
    if isinstance(model, IsolationForestModel):
        return {
            "kind": "iforest",
            "psi": model.psi,
            "n_features": model.n_features,
            "seed": model.seed,
            "threshold": model.threshold,
            "trees": [
                {
                    "feature": _arr(t.feature),
                    "split": _arr(t.split),
                    "left": _arr(t.left),
                    "right": _arr(t.right),
                    "leaf_adjust": _arr(t.leaf_adjust),
                    "depth": _arr(t.depth),
                }
                for t in model.trees
            ],
        }
    raise TypeError(f"unknown detector {type(model)!r}")


def detector_from_dict(data: dict):
    if data["kind"] == "gaussian":
        eps = data["epsilon_log"]
        return GaussianModel(
            mean=np.array(data["mean"]),
            variance=np.array(data["variance"]),
            epsilon_log=None if eps is None else float(eps),
        )
    if data["kind"] == "iforest":
        trees = tuple(
            IsolationTree(
                feature=np.array(t["feature"], dtype=np.int32),
                split=np.array(t["split"], dtype=np.float64),
                left=np.array(t["left"], dtype=np.int32),
                right=np.array(t["right"], dtype=np.int32),
                leaf_adjust=np.array(t["leaf_adjust"], dtype=np.float64),
                depth=np.array(t["depth"], dtype=np.int32),
            )
            for t in data["trees"]
        )
        return IsolationForestModel(
            trees=trees,
            psi=int(data["psi"]),
            n_features=int(data["n_features"]),
            seed=int(data["seed"]),
            threshold=float(data["threshold"]),
        )
    raise DataError(f"unknown detector kind {data.get('kind')!r}")


def save_artifact(path: str | Path, artifact_type: str, payload: dict):
    document = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "type": artifact_type,
        "payload": payload,
    }
    Path(path).write_text(json.dumps(document, indent=1, sort_keys=True), encoding="utf-8")


def load_artifact(path: str | Path, expected_type: str | None = None) -> dict:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if document.get("format") != FORMAT_NAME:
        raise DataError(f"{path} is not an {FORMAT_NAME} file")
    if document.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported artifact version {document.get('version')!r}")
    if expected_type is not None and document.get("type") != expected_type:
        raise DataError(f"expected a {expected_type} artifact, got {document.get('type')!r}")
    return document["payload"]
