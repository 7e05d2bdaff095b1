"""Run configuration and the commands behind the CLI.

Each ``cmd_*`` function computes everything in memory first and only then
writes its files (each one atomically), so a failing run leaves no partial
output behind.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import _io
from .agent import AgentConfig, FocalZoneSelector, default_initial_length
from .classifier import ClassifierConfig, WASLSTMClassifier, evaluate_zone_accuracy
from .data import (Dataset, SyntheticSpec, dataset_to_csv, format_csv, generate_synthetic,
                   load_csv, parse_matrix, read_rows, split_indices)
from .env import EnvParams, FocalState
from .exceptions import StageError, ValidationError
from .metrics import classification_report, pearson, roc_auc
from .model import FocalZoneClassifier
from .plots import confusion_svg, roc_svg
from .reward import RewardConfig, SurrogateReward
from .rs import ReplicateShuffle

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvConfig:
    L_min: int = 10
    shift_step: int = 4
    resize_step: int = 4


@dataclass(frozen=True)
class RewardSettings:
    p: int = 3
    beta: float = 0.1
    subsample: int = 128


def _build(cls, d):
    if d is None:
        return cls()
    if isinstance(d, cls):
        return d
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ValidationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**d)


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs. ``dataset`` is ``{"csv": path}`` or
    ``{"synthetic": {...SyntheticSpec fields...}}``."""

    dataset: dict = field(default_factory=lambda: {"synthetic": {}})
    seed: int = 0
    K_prime: int | None = None
    shuffle: bool = True
    initial_length: int | None = None
    train_fraction: float = 0.9
    probe_iterations: int = 300
    env: EnvConfig = field(default_factory=EnvConfig)
    reward: RewardSettings = field(default_factory=RewardSettings)
    agent: AgentConfig = field(default_factory=AgentConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d.pop("out", None)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(
            **{k: v for k, v in d.items() if k not in ("env", "reward", "agent", "classifier")},
            env=_build(EnvConfig, d.get("env")),
            reward=_build(RewardSettings, d.get("reward")),
            agent=_build(AgentConfig, d.get("agent")),
            classifier=_build(ClassifierConfig, d.get("classifier")),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed) -> "RunConfig":
        d = self.to_dict()
        d["seed"] = int(seed)
        return RunConfig.from_dict(d)

    def validate(self, K: int | None = None):
        ds = self.dataset
        if not isinstance(ds, dict) or len(set(ds) & {"csv", "synthetic"}) != 1:
            raise ValidationError('dataset must contain exactly one of "csv" or "synthetic"')
        if "synthetic" in ds:
            SyntheticSpec.from_dict(ds["synthetic"]).validate()
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must be in (0, 1)")
        if self.probe_iterations < 1:
            raise ValidationError("probe_iterations must be >= 1")
        if self.reward.p < 1 or self.reward.beta < 0 or self.reward.subsample < 2:
            raise ValidationError("reward needs p >= 1, beta >= 0, subsample >= 2")
        self.agent.validate()
        self.classifier.validate()
        if K is None and "synthetic" in ds:
            K = SyntheticSpec.from_dict(ds["synthetic"]).K
        if K is not None:
            Kp = self.resolved_K_prime(K)
            if Kp <= K:
                raise ValidationError(f"K_prime={Kp} must exceed K={K}")
            self.env_params(K).validate(self.reward.p)
            length = self.resolved_initial_length(K)
            if not self.env.L_min <= length <= Kp:
                raise ValidationError(f"initial_length={length} must lie in [L_min={self.env.L_min}, K'={Kp}]")
        elif self.env.L_min < 2 * self.reward.p + 2:
            raise ValidationError(f"L_min={self.env.L_min} is below 2p+2={2 * self.reward.p + 2}")

    def resolved_K_prime(self, K: int) -> int:
        return 4 * K if self.K_prime is None else int(self.K_prime)

    def resolved_initial_length(self, K: int) -> int:
        if self.initial_length is not None:
            return int(self.initial_length)
        return default_initial_length(self.resolved_K_prime(K))

    def env_params(self, K: int) -> EnvParams:
        return EnvParams(self.resolved_K_prime(K), self.env.L_min, self.env.shift_step, self.env.resize_step)

    def reward_config(self, K: int) -> RewardConfig:
        return RewardConfig(self.reward.p, self.reward.beta, self.resolved_K_prime(K),
                            self.reward.subsample, self.seed)

    def expander(self, K: int) -> ReplicateShuffle:
        return ReplicateShuffle(self.resolved_K_prime(K), self.shuffle, self.seed)

    def selector(self, K: int) -> FocalZoneSelector:
        a = self.agent
        return FocalZoneSelector(
            initial_length=self.resolved_initial_length(K), min_length=self.env.L_min,
            shift_step=self.env.shift_step, resize_step=self.env.resize_step,
            ar_order=self.reward.p, beta=self.reward.beta, subsample=self.reward.subsample,
            gamma=a.gamma, epsilon=a.epsilon, lr=a.lr, n_episodes=a.n_episodes, n_steps=a.n_steps,
            batch_size=a.batch_size, memory_size=a.memory_size, target_sync_every=a.target_sync_every,
            warmup=a.warmup, random_state=self.seed,
        )

    def estimator(self, K: int) -> FocalZoneClassifier:
        return FocalZoneClassifier(
            expander=self.expander(K), selector=self.selector(K),
            classifier=WASLSTMClassifier.from_config(self.classifier, random_state=self.seed),
            random_state=self.seed,
        )


def load_dataset(cfg: RunConfig) -> Dataset:
    try:
        if "csv" in cfg.dataset:
            return load_csv(cfg.dataset["csv"])
        return generate_synthetic(SyntheticSpec.from_dict(cfg.dataset["synthetic"]), cfg.seed)
    except (ValueError, OSError) as exc:
        raise StageError("data", exc) from exc


@dataclass
class PreparedData:
    dataset: Dataset
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def train(self):
        return self.dataset.subset(self.train_idx)

    @property
    def test(self):
        return self.dataset.subset(self.test_idx)


def prepare(cfg: RunConfig) -> PreparedData:
    ds = load_dataset(cfg)
    try:
        cfg.validate(ds.K)
    except ValidationError as exc:
        raise StageError("config", exc) from exc
    try:
        tr, te = split_indices(ds, cfg.train_fraction, cfg.seed)
    except ValidationError as exc:
        raise StageError("split", exc) from exc
    return PreparedData(ds, tr, te)


def history_csv(history) -> str:
    return _io.csv_text(["step", "start", "end", "ss", "reward"],
                        [(h.step, h.start, h.end, float(h.silhouette), float(h.reward)) for h in history])


@dataclass
class TrainResult:
    model: FocalZoneClassifier
    artifact: dict
    summary: dict
    history: list

    def files(self, out) -> dict:
        out = Path(out)
        return {
            out / "model.json": _io.dumps_json(self.artifact),
            out / "history.csv": history_csv(self.history),
            out / "summary.json": _io.dumps_json(self.summary),
        }


def _report_dict(rep) -> dict:
    return {"accuracy": rep.accuracy, "precision_macro": rep.precision_macro,
            "recall_macro": rep.recall_macro, "f1_macro": rep.f1_macro}


def train(cfg: RunConfig) -> TrainResult:
    """Split, expand, search the focal zone and fit the classifier."""
    data = prepare(cfg)
    train_ds, test_ds = data.train, data.test
    model = cfg.estimator(data.dataset.K).fit(train_ds.X, train_ds.y)
    selector = model.selector_
    artifact = model.to_dict()
    artifact["config"] = cfg.to_dict()
    artifact["label_values"] = list(data.dataset.label_values)
    artifact["seeds"] = {"data": cfg.seed, "split": cfg.seed, "rs": cfg.seed, "reward_subsample": cfg.seed,
                         "agent": cfg.seed, "classifier": cfg.seed}
    summary = {
        "zone": list(model.zone_),
        "best_reward": float(selector.best_reward_),
        "reward_evaluations": int(selector.reward_calls_),
        "environment_steps": len(selector.history_),
        "K": data.dataset.K,
        "K_prime": int(model.expander_.rs_map_.K_prime),
        "train_indices": data.train_idx.tolist(),
        "test_indices": data.test_idx.tolist(),
        "train": _report_dict(classification_report(y_true=train_ds.y, y_pred=model.predict(train_ds.X),
                                                    n_classes=data.dataset.num_classes)),
        "test": _report_dict(classification_report(y_true=test_ds.y, y_pred=model.predict(test_ds.X),
                                                   n_classes=data.dataset.num_classes)),
    }
    summary["train_accuracy"] = summary["train"]["accuracy"]
    summary["test_accuracy"] = summary["test"]["accuracy"]
    log.info("zone %s reward %.6f test accuracy %.4f", tuple(model.zone_), selector.best_reward_,
             summary["test_accuracy"])
    return TrainResult(model, artifact, summary, selector.history_)


def cmd_train(cfg: RunConfig, out) -> TrainResult:
    res = train(cfg)
    _io.write_all_atomic(res.files(out))
    return res


def cmd_gen_data(spec: SyntheticSpec, seed: int, out_path) -> Path:
    ds = generate_synthetic(spec, seed)
    _io.write_text_atomic(out_path, dataset_to_csv(ds))
    return Path(out_path)


def load_artifact(path) -> tuple[FocalZoneClassifier, dict]:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return FocalZoneClassifier.from_dict(d), d


def read_labelled_csv(path, K: int, label_values, require_labels=True):
    """Parse rows for an existing model: ``K`` features plus an optional label."""
    rows = read_rows(path)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    width = len(rows[0])
    if width not in (K, K + 1) or (require_labels and width != K + 1):
        expected = f"{K + 1}" if require_labels else f"{K} or {K + 1}"
        raise ValidationError(f"K: {path} has {width} columns, model expects {expected} (K={K} features + label)")
    M = parse_matrix(rows, width)
    if width == K:
        return M, None, None
    raw = M[:, -1].astype(np.int64)
    lookup = {v: i for i, v in enumerate(label_values)}
    unknown = sorted(set(raw.tolist()) - set(lookup))
    if unknown:
        raise ValidationError(f"label: values {unknown} are not in the model's label mapping {list(label_values)}")
    return M[:, :-1], np.array([lookup[v] for v in raw.tolist()]), raw


def cmd_eval(model_path, csv_path, out, plots=False) -> dict:
    model, art = load_artifact(model_path)
    labels = art.get("label_values") or list(range(len(model.classes_)))
    X, y, _ = read_labelled_csv(csv_path, model.n_features_in_, labels)
    proba = model.predict_proba(X)
    pred = model.classes_[np.argmax(proba, axis=1)]
    C = len(labels)
    rep = classification_report(y_true=y, y_pred=pred, n_classes=C)
    roc = roc_auc(proba, y)
    per_class = [{
        "label": labels[c], "precision": float(rep.precision[c]), "recall": float(rep.recall[c]),
        "f1": float(rep.f1[c]), "support": int(rep.support[c]),
        "auc": roc.auc.get(c),
    } for c in range(C)]
    metrics = {**_report_dict(rep), "auc_macro": roc.auc_macro if roc.auc else None, "per_class": per_class}
    out = Path(out)
    conf_rows = [[labels[i], *rep.confusion[i].tolist()] for i in range(C)]
    conf_csv = _io.csv_text(["true_label", *[str(v) for v in labels]], conf_rows)
    roc_rows = [(labels[c], float(f), float(t)) for c, (fpr, tpr) in roc.curves.items() for f, t in zip(fpr, tpr)]
    roc_csv = _io.csv_text(["class", "fpr", "tpr"], roc_rows)
    files = {out / "metrics.json": _io.dumps_json(metrics), out / "confusion.csv": conf_csv, out / "roc.csv": roc_csv}
    if plots:
        files[out / "confusion.svg"] = confusion_svg(_rows_of(conf_csv))
        files[out / "roc.svg"] = roc_svg(_rows_of(roc_csv))
    _io.write_all_atomic(files)
    return metrics


def _rows_of(text):
    import csv
    import io
    return list(csv.DictReader(io.StringIO(text)))


def cmd_predict(model_path, csv_path, out) -> Path:
    model, art = load_artifact(model_path)
    labels = art.get("label_values") or list(range(len(model.classes_)))
    X, _, raw = read_labelled_csv(csv_path, model.n_features_in_, labels, require_labels=False)
    proba = model.predict_proba(X)
    pred = np.argmax(proba, axis=1)
    header = ["sample_index", "true_label", "predicted_label", *[f"p_{v}" for v in labels]]
    rows = [[i, "" if raw is None else int(raw[i]), labels[pred[i]], *[float(p) for p in proba[i]]]
            for i in range(X.shape[0])]
    path = Path(out) / "predictions.csv"
    _io.write_text_atomic(path, _io.csv_text(header, rows))
    return path


def study_states(K_prime: int, L_min: int, n_states: int, seed: int) -> list[FocalState]:
    """Latin-hypercube style sample of windows over lengths and positions."""
    rng = np.random.default_rng(seed)
    len_strata = rng.permutation(n_states)
    pos_strata = rng.permutation(n_states)
    states = []
    span = K_prime - L_min + 1
    for i in range(n_states):
        length = L_min + min(int((len_strata[i] + rng.random()) / n_states * span), span - 1)
        room = K_prime - length + 1
        start = min(int((pos_strata[i] + rng.random()) / n_states * room), room - 1)
        states.append(FocalState(start, start + length))
    return states


@dataclass
class StudyResult:
    rows: list
    correlation: object
    speedup: float

    def summary(self) -> dict:
        c = self.correlation
        return {
            "states": len(self.rows),
            "correlation": None if c is None else asdict(c),
            "sum_time_G": float(sum(r["time_G"] for r in self.rows)),
            "sum_time_F": float(sum(r["time_F"] for r in self.rows)),
            "speedup": self.speedup,
        }

    def files(self, out) -> dict:
        out = Path(out)
        header = ["start", "end", "reward", "accuracy", "time_G", "time_F"]
        return {
            out / "study.csv": _io.csv_text(header, [[r[h] for h in header] for r in self.rows]),
            out / "study.json": _io.dumps_json(self.summary()),
        }


def reward_study(cfg: RunConfig, n_states: int = 8) -> StudyResult:
    """Pair the surrogate reward with probe-classifier accuracy on sampled zones."""
    if n_states < 3:
        raise ValidationError("reward study needs at least 3 states")
    data = prepare(cfg)
    train_ds, test_ds = data.train, data.test
    K = data.dataset.K
    rs = cfg.expander(K).fit(train_ds.X)
    Xtr, Xte = rs.transform(train_ds.X), rs.transform(test_ds.X)
    reward = SurrogateReward(Xtr, train_ds.y, cfg.reward_config(K))
    probe = cfg.classifier.replace(n_iter=cfg.probe_iterations)
    rows = []
    for state in study_states(rs.rs_map_.K_prime, cfg.env.L_min, n_states, cfg.seed):
        t0 = time.perf_counter()
        g = reward(state)
        t1 = time.perf_counter()
        acc = evaluate_zone_accuracy(Xtr, train_ds.y, Xte, test_ds.y, state, probe, cfg.seed)
        t2 = time.perf_counter()
        rows.append({"start": state.start, "end": state.end, "reward": g.reward, "accuracy": acc,
                     "time_G": t1 - t0, "time_F": t2 - t1})
        log.info("state %s reward %.4f accuracy %.4f", tuple(state), g.reward, acc)
    try:
        corr = pearson([r["reward"] for r in rows], [r["accuracy"] for r in rows])
    except ValidationError as exc:
        log.warning("correlation undefined: %s", exc)
        corr = None
    speedup = sum(r["time_F"] for r in rows) / sum(r["time_G"] for r in rows)
    return StudyResult(rows, corr, speedup)


def cmd_reward_study(cfg: RunConfig, n_states: int, out) -> StudyResult:
    res = reward_study(cfg, n_states)
    _io.write_all_atomic(res.files(out))
    return res
