import json

import numpy as np
import pytest

from lexent.learners import (
    decision_function, load_model, model_from_dict, model_to_dict, predict, save_model,
    train_logistic_regression, train_mlp, train_svm,
)


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 6))
    y = ["a" if v > 0.3 else "b" if v > -0.3 else "c" for v in X[:, 0]]
    return X, y


def models(X, y):
    yield train_logistic_regression(X, y, 2.0, seed=4)
    yield train_svm(X, y, 1.0)
    yield train_svm(X, y, 8.0, kernel=("rbf", 0.125))
    yield train_svm(X, y, 2.0, kernel=("ksim", 0.4))
    yield train_mlp(X, y, 50, seed=2, val_features=X[:10], val_labels=y[:10])


def test_roundtrip_is_bit_exact(tmp_path, data):
    X, y = data
    for i, m in enumerate(models(X, y)):
        path = tmp_path / f"m{i}.json"
        save_model(m, path)
        back = load_model(path)
        assert back.family == m.family and back.classes == m.classes
        assert back.hyperparameters == m.hyperparameters and back.kernel == m.kernel
        assert back.training_seed == m.training_seed
        for k, v in m.parameters.items():
            assert back.parameters[k].dtype == v.dtype
            assert back.parameters[k].tobytes() == v.tobytes()
        assert decision_function(back, X).tobytes() == decision_function(m, X).tobytes()
        assert predict(back, X) == predict(m, X)


def test_dict_is_plain_json(data):
    X, y = data
    d = model_to_dict(train_logistic_regression(X, y, 2.0))
    text = json.dumps(d)
    assert model_from_dict(json.loads(text)).family == "LR"


def test_parameter_count(data):
    X, y = data
    m = train_logistic_regression(X, y, 2.0)
    assert m.feature_dim == 6 and m.parameter_count == 3 * 6 + 3


def test_dimension_mismatch(data):
    from lexent.errors import DimensionError

    X, y = data
    m = train_logistic_regression(X, y, 2.0)
    with pytest.raises(DimensionError):
        predict(m, np.zeros((2, 5)))
