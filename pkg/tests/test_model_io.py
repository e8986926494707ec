"""Artifact serialization round trips for every model family."""

import numpy as np
import pytest

from amlpipe import anomaly
from amlpipe.classifiers import ModelKind, TrainConfig, predict_proba, train
from amlpipe.errors import DataError
from amlpipe.model_io import (
    classifier_from_dict,
    classifier_to_dict,
    detector_from_dict,
    detector_to_dict,
    encoder_from_dict,
    encoder_to_dict,
    load_artifact,
    save_artifact,
    schema_from_dict,
    schema_to_dict,
    standardizer_from_dict,
    standardizer_to_dict,
)
from amlpipe.preprocess import Standardizer, default_schema, fit_encoder
from amlpipe.synth_gen import GeneratorConfig, generate


def blobs(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-2, 0.6, (30, 3)), rng.normal(2, 0.6, (30, 3))])
    y = np.array([0] * 30 + [1] * 30)
    return X, y


@pytest.mark.parametrize("kind", list(ModelKind))
def test_classifier_round_trip(kind, tmp_path):
    X, y = blobs()
    cfg = TrainConfig(seed=4, rf_trees=5, rf_max_depth=4, nn_epochs=15)
    model = train(kind, X, y, cfg)
    path = tmp_path / "model.json"
    save_artifact(path, "classifier", classifier_to_dict(model))
    loaded = classifier_from_dict(load_artifact(path, "classifier"))
    assert loaded.kind is kind
    assert np.allclose(predict_proba(loaded, X), predict_proba(model, X))


def test_detector_round_trips(tmp_path):
    X, _ = blobs(1)
    iforest = anomaly.with_threshold(anomaly.fit_iforest(X, t=8, psi=32, seed=2), 0.55)
    path = tmp_path / "iforest.json"
    save_artifact(path, "detector", detector_to_dict(iforest))
    loaded = detector_from_dict(load_artifact(path, "detector"))
    assert np.allclose(anomaly.anomaly_score(loaded, X), anomaly.anomaly_score(iforest, X))
    assert loaded.threshold == 0.55

    gaussian = anomaly.with_threshold(anomaly.fit_gaussian(X), -12.5)
    path = tmp_path / "gaussian.json"
    save_artifact(path, "detector", detector_to_dict(gaussian))
    loaded = detector_from_dict(load_artifact(path, "detector"))
    assert np.allclose(anomaly.log_density(loaded, X), anomaly.log_density(gaussian, X))
    assert loaded.epsilon_log == -12.5


def test_preprocessing_round_trips(tmp_path):
    dataset, _, _ = generate(GeneratorConfig(n_rows=200, seed=3))
    encoder = fit_encoder(dataset)
    assert encoder_from_dict(encoder_to_dict(encoder)).mappings == encoder.mappings

    standardizer = Standardizer(mean=np.array([1.0, 2.0]), std=np.array([0.5, 0.0]))
    loaded = standardizer_from_dict(standardizer_to_dict(standardizer))
    assert np.array_equal(loaded.mean, standardizer.mean)
    assert np.array_equal(loaded.std, standardizer.std)

    schema = default_schema()
    assert schema_from_dict(schema_to_dict(schema)) == schema


def test_artifact_envelope_checks(tmp_path):
    path = tmp_path / "artifact.json"
    save_artifact(path, "detector", {"kind": "gaussian", "mean": [0], "variance": [1],
                                     "epsilon_log": None})
    with pytest.raises(DataError):
        load_artifact(path, "classifier")
    path.write_text('{"format": "other", "version": 1}')
    with pytest.raises(DataError):
        load_artifact(path)
