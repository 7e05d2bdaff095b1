import numpy as np
import pytest
from sklearn.base import clone

from focalzone.agent import FocalZoneSelector
from focalzone.classifier import WASLSTMClassifier
from focalzone.data import SyntheticSpec, generate_synthetic
from focalzone.exceptions import StageError, ValidationError
from focalzone.model import FocalZoneClassifier
from focalzone.rs import ReplicateShuffle


def small_model(seed=0):
    return FocalZoneClassifier(
        expander=ReplicateShuffle(40),
        selector=FocalZoneSelector(n_episodes=2, n_steps=10, warmup=8, subsample=30),
        classifier=WASLSTMClassifier(hidden=4, fc_width=4, n_iter=10),
        random_state=seed,
    )


@pytest.fixture(scope="module")
def data():
    ds = generate_synthetic(SyntheticSpec(K=20, band=(2, 18), samples_per_class=15), seed=0)
    return ds.X, ds.y


def test_fit_predict_and_round_trip(data):
    X, y = data
    m = small_model().fit(X, y)
    assert m.predict(X).shape == (45,)
    assert m.selector_.random_state == 0 and m.classifier_.zone == tuple(m.zone_)
    back = FocalZoneClassifier.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.predict_proba(X), m.predict_proba(X))
    with pytest.raises(ValidationError):
        m.predict(X[:, :5])


def test_clone_leaves_templates_unfitted(data):
    X, y = data
    m = small_model()
    m.fit(X, y)
    assert not hasattr(m.selector, "zone_")
    assert clone(m).get_params()["random_state"] == 0


def test_stage_errors_are_tagged(data):
    X, y = data
    m = FocalZoneClassifier(expander=ReplicateShuffle(10))
    with pytest.raises(StageError, match=r"^\[rs\]"):
        m.fit(X, y)
    m = FocalZoneClassifier(expander=ReplicateShuffle(40), selector=FocalZoneSelector(min_length=4))
    with pytest.raises(StageError, match=r"^\[agent\]"):
        m.fit(X, y)
