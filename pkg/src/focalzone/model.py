"""End-to-end estimator: expand, select a focal zone, classify.

:class:`FocalZoneClassifier` composes :class:`ReplicateShuffle`,
:class:`FocalZoneSelector` and :class:`WASLSTMClassifier`. The fitted
model serialises to a self-contained JSON-compatible dict.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .agent import FocalZoneSelector
from .classifier import WASLSTMClassifier
from .env import FocalState
from .exceptions import StageError, ValidationError
from .rs import ReplicateShuffle, RSMap

FORMAT_NAME = "focalzone-model"
FORMAT_VERSION = 1


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


class FocalZoneClassifier(ClassifierMixin, BaseEstimator):
    """Replicate-and-shuffle, DQN focal-zone search, then WAS-LSTM.

    Parameters
    ----------
    expander : ReplicateShuffle, optional
    selector : FocalZoneSelector, optional
    classifier : WASLSTMClassifier, optional
        Unfitted templates; they are cloned in ``fit``. The classifier's
        ``zone`` is overwritten with the learned zone.
    random_state : int or None, default=0
        When not None, overrides ``random_state`` of all three parts.

    Attributes
    ----------
    expander_, selector_, classifier_ : fitted parts
    zone_ : FocalState
    classes_ : ndarray
    """

    def __init__(self, expander=None, selector=None, classifier=None, random_state=0):
        self.expander = expander
        self.selector = selector
        self.classifier = classifier
        self.random_state = random_state

    def _part(self, template, default):
        part = clone(template) if template is not None else default
        if self.random_state is not None:
            part.set_params(random_state=self.random_state)
        return part

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.expander_ = _stage("rs", self._part(self.expander, ReplicateShuffle()).fit, X)
        Xe = self.expander_.transform(X)
        self.selector_ = _stage("agent", self._part(self.selector, FocalZoneSelector()).fit, Xe, y)
        self.zone_ = self.selector_.zone_
        clf = self._part(self.classifier, WASLSTMClassifier())
        clf.set_params(zone=tuple(self.zone_))
        self.classifier_ = _stage("classifier", clf.fit, Xe, y)
        self.classes_ = self.classifier_.classes_
        self.n_features_in_ = X.shape[1]
        return self

    def _expand(self, X):
        check_is_fitted(self, "classifier_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"X has {X.shape[1]} features, model expects K={self.n_features_in_}")
        return self.expander_.transform(X)

    def predict_proba(self, X):
        return self.classifier_.predict_proba(self._expand(X))

    def predict(self, X):
        return self.classifier_.predict(self._expand(X))

    def to_dict(self) -> dict:
        check_is_fitted(self, "classifier_")
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "K": int(self.n_features_in_),
            "rs_map": self.expander_.rs_map_.to_dict(),
            "zone": list(self.zone_),
            "best_reward": float(self.selector_.best_reward_),
            "reward_evaluations": int(self.selector_.reward_calls_),
            "selector_params": self.selector_.get_params(),
            "classifier": self.classifier_.to_dict(),
            "random_state": self.random_state,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FocalZoneClassifier":
        if d.get("format") != FORMAT_NAME:
            raise ValidationError(f"not a {FORMAT_NAME} artifact")
        if d.get("version") != FORMAT_VERSION:
            raise ValidationError(f"artifact version {d.get('version')!r} is not supported (expected {FORMAT_VERSION})")
        est = cls(random_state=d.get("random_state"))
        est.expander_ = ReplicateShuffle.from_map(RSMap.from_dict(d["rs_map"]))
        est.classifier_ = WASLSTMClassifier.from_dict(d["classifier"])
        est.zone_ = FocalState(*d["zone"])
        est.best_reward_ = float(d["best_reward"])
        est.classes_ = est.classifier_.classes_
        est.n_features_in_ = int(d["K"])
        return est
