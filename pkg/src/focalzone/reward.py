"""Surrogate reward: AR coefficients per sample, silhouette over classes.

For a window ``[start, end)`` each (sub-sampled) training sample's slice is
fitted with an order-``p`` autoregression across dimensions. The coefficient
vectors are scored with the silhouette against the class labels and the
score is mapped to a reward with a length penalty::

    r = exp(ss + 1) / (e^2 - 1) - beta * length / K'
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .env import FocalState
from .exceptions import ValidationError

RIDGE = 1e-8
_RANK_TOL = 1e-10
_EXP_NORM = math.e ** 2 - 1.0


class ARModel(NamedTuple):
    order: int
    coefficients: np.ndarray
    intercept: float
    residual_variance: float


class RewardBreakdown(NamedTuple):
    silhouette: float
    length_penalty: float
    reward: float


@dataclass(frozen=True)
class RewardConfig:
    p: int = 3
    beta: float = 0.1
    K_prime: int = 512
    subsample: int = 128
    seed: int = 0

    def validate(self):
        if self.p < 1:
            raise ValidationError(f"AR order must be >= 1, got {self.p}")
        if self.beta < 0:
            raise ValidationError("beta must be >= 0")
        if self.subsample < 2:
            raise ValidationError("subsample must be >= 2")


def lagged_design(series: np.ndarray, p: int):
    """Design tensor ``(n, T-p, p+1)`` with columns ``x_{t-1}..x_{t-p}, 1``."""
    S = np.atleast_2d(np.asarray(series, dtype=np.float64))
    n, T = S.shape
    rows = T - p
    X = np.empty((n, rows, p + 1))
    for m in range(1, p + 1):
        X[:, :, m - 1] = S[:, p - m:T - m]
    X[:, :, p] = 1.0
    return X, S[:, p:]


def fit_ar_batch(series: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """OLS AR(p) fits for each row of ``series``.

    Returns ``(params, residual_variance)`` where ``params[:, :p]`` are the
    lag coefficients and ``params[:, p]`` the intercept. Rows whose design is
    rank deficient are refitted with a ``1e-8`` ridge on the normal equations.
    """
    S = np.atleast_2d(np.asarray(series, dtype=np.float64))
    if S.shape[1] < 2 * p + 2:
        raise ValidationError(f"series of length {S.shape[1]} is too short for AR({p}); need {2 * p + 2}")
    X, target = lagged_design(S, p)
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
    scale = np.maximum(diag.max(axis=1), np.finfo(float).tiny)
    ok = diag.min(axis=1) > _RANK_TOL * scale
    params = np.empty((S.shape[0], p + 1))
    if ok.any():
        qty = np.einsum("nrk,nr->nk", Q[ok], target[ok])
        params[ok] = np.linalg.solve(R[ok], qty[..., None])[..., 0]
    if not ok.all():
        Xb, yb = X[~ok], target[~ok]
        A = np.einsum("nri,nrj->nij", Xb, Xb) + RIDGE * np.eye(p + 1)
        params[~ok] = np.linalg.solve(A, np.einsum("nri,nr->ni", Xb, yb)[..., None])[..., 0]
    resid = target - np.einsum("nrk,nk->nr", X, params)
    return params, np.mean(resid ** 2, axis=1)


def fit_ar(series, p: int = 3) -> ARModel:
    """Least-squares fit of ``x_t = sum_j phi_j x_{t-j} + C + eps``."""
    params, var = fit_ar_batch(np.asarray(series, dtype=np.float64)[None, :], p)
    return ARModel(p, params[0, :p].copy(), float(params[0, p]), float(var[0]))


def silhouette(points, labels) -> float:
    """Mean silhouette coefficient with Euclidean distances.

    Points in singleton clusters, or with ``max(a, b) == 0``, score 0.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    lab = np.asarray(labels)
    n = P.shape[0]
    if n < 2 or lab.shape != (n,):
        raise ValidationError("need at least 2 points and one label per point")
    classes, inv = np.unique(lab, return_inverse=True)
    if classes.size < 2:
        raise ValidationError("silhouette needs at least two distinct labels")
    diff = P[:, None, :] - P[None, :, :]
    D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    onehot = np.zeros((n, classes.size))
    onehot[np.arange(n), inv] = 1.0
    counts = onehot.sum(axis=0)
    sums = D @ onehot  # (n, C): total distance to each cluster
    own = counts[inv]
    a = sums[np.arange(n), inv] / np.maximum(own - 1, 1)
    mean_other = sums / counts
    mean_other[np.arange(n), inv] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.zeros(n)
    live = (own > 1) & (denom > 0)
    s[live] = (b[live] - a[live]) / denom[live]
    return float(np.mean(s))


def exp_reward(ss: float, beta: float, length: int, K_prime: int) -> RewardBreakdown:
    penalty = beta * length / K_prime
    return RewardBreakdown(float(ss), float(penalty), math.exp(ss + 1.0) / _EXP_NORM - penalty)


def stratified_subsample(y, size: int, seed: int) -> np.ndarray:
    """Seeded class-stratified subsample of indices, returned sorted.

    Per-class quotas are proportional to class counts (largest remainder),
    with at least one sample per class when ``size`` allows.
    """
    y = np.asarray(y)
    n = y.size
    if size >= n:
        return np.arange(n)
    classes, counts = np.unique(y, return_counts=True)
    exact = counts * size / n
    quota = np.floor(exact).astype(np.int64)
    if size >= classes.size:
        quota = np.maximum(quota, 1)
    order = np.argsort(-(exact - np.floor(exact)), kind="stable")
    i = 0
    while quota.sum() < size:
        c = order[i % classes.size]
        if quota[c] < counts[c]:
            quota[c] += 1
        i += 1
    while quota.sum() > size:
        quota[np.argmax(quota)] -= 1
    rng = np.random.default_rng(seed)
    picked = [rng.choice(np.flatnonzero(y == c), size=quota[k], replace=False)
              for k, c in enumerate(classes)]
    return np.sort(np.concatenate(picked))


class SurrogateReward:
    """Callable ``state -> RewardBreakdown`` over a fixed training subsample.

    The subsample is drawn once from ``cfg.seed`` so every state is scored on
    the same samples. ``calls`` counts evaluations.
    """

    def __init__(self, X, y, cfg: RewardConfig):
        cfg.validate()
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.shape[1] != cfg.K_prime:
            raise ValidationError(f"samples have {X.shape[1]} dims, reward config says K'={cfg.K_prime}")
        self.cfg = cfg
        self.indices = stratified_subsample(y, cfg.subsample, cfg.seed)
        self.X = X[self.indices]
        self.y = y[self.indices]
        if np.unique(self.y).size < 2:
            raise ValidationError("reward subsample must contain at least two classes")
        self.calls = 0

    def coefficients(self, state: FocalState) -> np.ndarray:
        start, end = state
        if not 0 <= start < end <= self.cfg.K_prime:
            raise ValidationError(f"state {tuple(state)} lies outside [0, {self.cfg.K_prime}]")
        params, _ = fit_ar_batch(self.X[:, start:end], self.cfg.p)
        return params[:, : self.cfg.p]

    def __call__(self, state: FocalState) -> RewardBreakdown:
        self.calls += 1
        ss = silhouette(self.coefficients(state), self.y)
        return exp_reward(ss, self.cfg.beta, state[1] - state[0], self.cfg.K_prime)


def state_reward(expanded, state: FocalState, cfg: RewardConfig) -> RewardBreakdown:
    """One-shot surrogate reward of ``state``.

    ``expanded`` is either an ``(X, y)`` pair or a sequence of
    :class:`~focalzone.rs.ExpandedSample`.
    """
    if isinstance(expanded, tuple) and len(expanded) == 2 and np.ndim(expanded[1]) == 1:
        X, y = expanded
    else:
        X = np.array([s.features for s in expanded])
        y = np.array([s.label for s in expanded])
    return SurrogateReward(X, y, cfg)(FocalState(*state))
