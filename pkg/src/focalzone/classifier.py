"""Weighted-average spatial LSTM (WAS-LSTM) classifier.

A sample's focal-zone slice is z-scored per dimension and read as a sequence
of ``length`` scalar inputs, i.e. the LSTM steps across dimensions rather
than time. The top LSTM layer's outputs at the last two positions are
averaged, passed through sigmoid fully connected layers and a linear output
layer, and trained with softmax cross-entropy plus an l2 penalty on all
weight matrices using Adam.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .env import FocalState
from .exceptions import ValidationError
from .nn import Adam, DenseLayer, LSTMCell, softmax, softmax_cross_entropy

STD_FLOOR = 1e-6


@dataclass(frozen=True)
class ClassifierConfig:
    lstm_layers: int = 2
    hidden: int = 164
    fc_layers: int = 3
    fc_width: int = 164
    lr: float = 0.001
    l2: float = 0.001
    forget_bias: float = 0.3
    batch_size: int = 9
    n_iter: int = 1000

    def validate(self):
        for name in ("lstm_layers", "hidden", "fc_width", "batch_size", "n_iter"):
            if getattr(self, name) < 1:
                raise ValidationError(f"classifier {name} must be >= 1")
        if self.fc_layers < 0 or self.lr <= 0 or self.l2 < 0:
            raise ValidationError("classifier needs fc_layers >= 0, lr > 0, l2 >= 0")

    def replace(self, **kw) -> "ClassifierConfig":
        return ClassifierConfig(**{**asdict(self), **kw})


class WASLSTMNet:
    """Parameter container plus loss/gradient for the stacked network."""

    def __init__(self, lstms, fcs, out):
        self.lstms = list(lstms)
        self.fcs = list(fcs)
        self.out = out

    @classmethod
    def init(cls, n_classes, cfg: ClassifierConfig, rng):
        lstms, n_in = [], 1
        for _ in range(cfg.lstm_layers):
            lstms.append(LSTMCell.init(n_in, cfg.hidden, cfg.forget_bias, rng))
            n_in = cfg.hidden
        fcs = []
        for _ in range(cfg.fc_layers):
            fcs.append(DenseLayer.init(n_in, cfg.fc_width, "sigmoid", rng))
            n_in = cfg.fc_width
        return cls(lstms, fcs, DenseLayer.init(n_in, n_classes, "identity", rng))

    def named_layers(self):
        for i, cell in enumerate(self.lstms):
            yield f"lstm{i}", cell
        for i, fc in enumerate(self.fcs):
            yield f"fc{i}", fc
        yield "out", self.out

    def params(self) -> dict:
        return {f"{name}.{k}": v for name, layer in self.named_layers() for k, v in layer.params().items()}

    def weight_keys(self):
        return [k for k in self.params() if k.endswith(".W")]

    def top_outputs(self, Z):
        """Top-layer hidden states for ``Z`` of shape ``(n, length)``."""
        H = Z[:, :, None]
        caches = []
        for cell in self.lstms:
            H, cache = cell.forward_sequence(H)
            caches.append(cache)
        return H, caches

    def logits(self, Z):
        H, _ = self.top_outputs(Z)
        a = average_last_two(H)
        for fc in self.fcs:
            a = fc.forward(a)[0]
        return self.out.forward(a)[0]

    def loss_and_grad(self, Z, y, l2):
        if Z.shape[1] < 2:
            raise ValidationError("focal zone must have at least two positions")
        H, lstm_caches = self.top_outputs(Z)
        a = average_last_two(H)
        fc_caches = []
        for fc in self.fcs:
            a, cache = fc.forward(a)
            fc_caches.append(cache)
        logits, out_cache = self.out.forward(a)
        loss, dlogits = softmax_cross_entropy(logits, y)
        # cross-entropy is summed over the minibatch, not averaged
        n = Z.shape[0]
        loss *= n
        dlogits = dlogits * n

        grads = {}
        da, g = self.out.backward(dlogits, out_cache)
        grads.update({f"out.{k}": v for k, v in g.items()})
        for i in range(len(self.fcs) - 1, -1, -1):
            da, g = self.fcs[i].backward(da, fc_caches[i])
            grads.update({f"fc{i}.{k}": v for k, v in g.items()})
        # the averaging node sends half the gradient to each of the two positions
        dH = np.zeros_like(H)
        dH[:, -2] = 0.5 * da
        dH[:, -1] = 0.5 * da
        for i in range(len(self.lstms) - 1, -1, -1):
            dH, g = self.lstms[i].backward_sequence(dH, lstm_caches[i])
            grads.update({f"lstm{i}.{k}": v for k, v in g.items()})

        params = self.params()
        for k in self.weight_keys():
            W = params[k]
            loss += l2 * float(np.sum(W * W))
            grads[k] = grads[k] + 2.0 * l2 * W
        return loss, grads

    def to_dict(self) -> dict:
        return {
            "lstm": [{"W": c.W.tolist(), "b": c.b.tolist(), "forget_bias": c.forget_bias} for c in self.lstms],
            "fc": [{"W": f.W.tolist(), "b": f.b.tolist(), "activation": f.activation} for f in self.fcs],
            "out": {"W": self.out.W.tolist(), "b": self.out.b.tolist(), "activation": self.out.activation},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            [LSTMCell(c["W"], c["b"], c["forget_bias"]) for c in d["lstm"]],
            [DenseLayer(f["W"], f["b"], f["activation"]) for f in d["fc"]],
            DenseLayer(d["out"]["W"], d["out"]["b"], d["out"]["activation"]),
        )


def average_last_two(H):
    return 0.5 * (H[:, -2] + H[:, -1])


def _minibatches(n, batch_size, n_iter, rng):
    """Yield ``n_iter`` index batches from reshuffled passes over ``range(n)``."""
    order, pos = rng.permutation(n), 0
    for _ in range(n_iter):
        idx = []
        while len(idx) < batch_size:
            if pos == n:
                order, pos = rng.permutation(n), 0
            take = min(batch_size - len(idx), n - pos)
            idx.extend(order[pos:pos + take])
            pos += take
        yield np.asarray(idx)


class WASLSTMClassifier(ClassifierMixin, BaseEstimator):
    """WAS-LSTM classifier over a contiguous window of the input columns.

    Parameters
    ----------
    zone : tuple (start, end), optional
        Half-open column window to classify on. ``None`` uses all columns.
    hidden, lstm_layers, fc_layers, fc_width, lr, l2, forget_bias, batch_size, n_iter
        See :class:`ClassifierConfig`.
    random_state : int, default=0

    Attributes
    ----------
    classes_ : ndarray of shape (n_classes,)
    zone_ : FocalState
    mean_, scale_ : ndarray of shape (length,)
        Per-dimension normalisation statistics of the training slice.
    net_ : WASLSTMNet
    loss_curve_ : list of float
        Minibatch objective (summed cross-entropy + l2) per iteration.
    """

    def __init__(self, zone=None, hidden=164, lstm_layers=2, fc_layers=3, fc_width=164,
                 lr=0.001, l2=0.001, forget_bias=0.3, batch_size=9, n_iter=1000, random_state=0):
        self.zone = zone
        self.hidden = hidden
        self.lstm_layers = lstm_layers
        self.fc_layers = fc_layers
        self.fc_width = fc_width
        self.lr = lr
        self.l2 = l2
        self.forget_bias = forget_bias
        self.batch_size = batch_size
        self.n_iter = n_iter
        self.random_state = random_state

    @classmethod
    def from_config(cls, cfg: ClassifierConfig, zone=None, random_state=0):
        return cls(zone=zone, random_state=random_state, **asdict(cfg))

    def config(self) -> ClassifierConfig:
        return ClassifierConfig(
            lstm_layers=self.lstm_layers, hidden=self.hidden, fc_layers=self.fc_layers,
            fc_width=self.fc_width, lr=self.lr, l2=self.l2, forget_bias=self.forget_bias,
            batch_size=self.batch_size, n_iter=self.n_iter,
        )

    def _resolve_zone(self, n_features):
        if self.zone is None:
            return FocalState(0, n_features)
        start, end = (int(v) for v in self.zone)
        if not 0 <= start < end <= n_features:
            raise ValidationError(f"zone {(start, end)} does not fit inside {n_features} features")
        if end - start < 2:
            raise ValidationError(f"zone {(start, end)} is shorter than two positions")
        return FocalState(start, end)

    def _normalise(self, X):
        start, end = self.zone_
        return (X[:, start:end] - self.mean_) / self.scale_

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        cfg = self.config()
        cfg.validate()
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValidationError("training data contains a single class")
        self.n_features_in_ = X.shape[1]
        self.zone_ = self._resolve_zone(X.shape[1])
        start, end = self.zone_
        sl = X[:, start:end]
        self.mean_ = sl.mean(axis=0)
        self.scale_ = np.maximum(sl.std(axis=0), STD_FLOOR)
        Z = self._normalise(X)

        rng = np.random.default_rng(self.random_state)
        self.net_ = WASLSTMNet.init(self.classes_.size, cfg, rng)
        params = self.net_.params()
        opt = Adam(lr=cfg.lr)
        self.loss_curve_ = []
        for idx in _minibatches(Z.shape[0], cfg.batch_size, cfg.n_iter, rng):
            loss, grads = self.net_.loss_and_grad(Z[idx], y_idx[idx], cfg.l2)
            opt.step(params, grads)
            self.loss_curve_.append(loss)
        return self

    def _check(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"X has {X.shape[1]} features, model was fitted on {self.n_features_in_}")
        return X

    def decision_function(self, X):
        return self.net_.logits(self._normalise(self._check(X)))

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        # argmax returns the lowest index on exact ties
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def objective(self, X, y):
        """Training objective (summed cross-entropy + l2) on ``(X, y)``."""
        X = self._check(X)
        y_idx = np.searchsorted(self.classes_, y)
        return self.net_.loss_and_grad(self._normalise(X), y_idx, self.l2)[0]

    def to_dict(self) -> dict:
        check_is_fitted(self, "net_")
        return {
            "params": self.get_params(),
            "zone": list(self.zone_),
            "n_features_in": int(self.n_features_in_),
            "classes": self.classes_.tolist(),
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
            "net": self.net_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "WASLSTMClassifier":
        params = dict(d["params"])
        if params.get("zone") is not None:
            params["zone"] = tuple(params["zone"])
        est = cls(**params)
        est.zone_ = FocalState(*d["zone"])
        est.n_features_in_ = int(d["n_features_in"])
        est.classes_ = np.asarray(d["classes"])
        est.mean_ = np.asarray(d["mean"], dtype=np.float64)
        est.scale_ = np.asarray(d["scale"], dtype=np.float64)
        est.net_ = WASLSTMNet.from_dict(d["net"])
        return est


def train_classifier(X, y, zone, cfg: ClassifierConfig = ClassifierConfig(), seed: int = 0) -> WASLSTMClassifier:
    """Fit a WAS-LSTM on the ``zone`` slice of expanded samples ``X``."""
    return WASLSTMClassifier.from_config(cfg, zone=tuple(zone), random_state=seed).fit(X, y)


def predict(model: WASLSTMClassifier, sample):
    """Class index and probability vector for one expanded sample."""
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("predict expects a single 1-D sample")
    proba = model.predict_proba(x[None, :])[0]
    return int(np.argmax(proba)), proba


def evaluate_zone_accuracy(X_train, y_train, X_test, y_test, zone, cfg: ClassifierConfig, seed: int = 0) -> float:
    """Test accuracy of a classifier trained on ``zone`` (the expensive reward)."""
    model = train_classifier(X_train, y_train, zone, cfg, seed)
    return float(np.mean(model.predict(X_test) == np.asarray(y_test)))
