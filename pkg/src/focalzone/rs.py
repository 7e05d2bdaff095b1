"""Replicate-and-shuffle feature expansion.

``x`` in R^K is mapped to R^K' by gathering through a fixed index map: the
source indices ``0..K-1`` are tiled ``h = ceil(K'/K)`` times, permuted once
with a seeded generator and cut to the first ``K'`` entries. The same map is
used for every sample, train and test alike, so dimension positions stay
comparable across samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import Sample
from .exceptions import ValidationError


class ExpandedSample(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class RSMap:
    K: int
    K_prime: int
    map: np.ndarray
    seed: int

    def __post_init__(self):
        m = np.array(self.map, dtype=np.int64)
        if m.shape != (self.K_prime,):
            raise ValidationError(f"map has shape {m.shape}, expected ({self.K_prime},)")
        if m.size and (m.min() < 0 or m.max() >= self.K):
            raise ValidationError(f"map entries must lie in [0, {self.K})")
        m.flags.writeable = False
        object.__setattr__(self, "map", m)

    @property
    def h(self) -> int:
        return replication_factor(self.K, self.K_prime)

    def to_dict(self) -> dict:
        return {"K": self.K, "K_prime": self.K_prime, "seed": self.seed, "map": self.map.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RSMap":
        return cls(int(d["K"]), int(d["K_prime"]), np.asarray(d["map"]), int(d["seed"]))


def replication_factor(K: int, K_prime: int) -> int:
    # smallest h with h*K >= K'
    return math.ceil(K_prime / K)


def make_rs_map(K: int, K_prime: int, seed: int = 0, shuffle: bool = True) -> RSMap:
    """Build the index map. ``shuffle=False`` keeps the tiled layout (test hook)."""
    if K < 2:
        raise ValidationError(f"K must be >= 2, got {K}")
    if K_prime <= K:
        raise ValidationError(f"K' must exceed K (K={K}, K'={K_prime})")
    tiled = np.tile(np.arange(K, dtype=np.int64), replication_factor(K, K_prime))
    if shuffle:
        tiled = np.random.default_rng(seed).permutation(tiled)
    return RSMap(K, K_prime, tiled[:K_prime], seed)


def apply_rs(sample, m: RSMap):
    """Gather one sample through the map.

    Accepts a :class:`Sample` (returns an :class:`ExpandedSample`) or a plain
    vector / ``(n, K)`` matrix (returns the gathered array).
    """
    if isinstance(sample, Sample):
        return ExpandedSample(apply_rs(sample.features, m), sample.label)
    x = np.asarray(sample, dtype=np.float64)
    if x.shape[-1] != m.K:
        raise ValidationError(f"sample has {x.shape[-1]} features, map expects K={m.K}")
    return x[..., m.map]


class ReplicateShuffle(TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`make_rs_map` / :func:`apply_rs`.

    Parameters
    ----------
    n_features_out : int, optional
        Target width K'. Defaults to ``4 * K``.
    shuffle : bool, default=True
        ``False`` keeps the unshuffled tiled layout.
    random_state : int, default=0
    """

    def __init__(self, n_features_out=None, shuffle=True, random_state=0):
        self.n_features_out = n_features_out
        self.shuffle = shuffle
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        K = X.shape[1]
        K_prime = 4 * K if self.n_features_out is None else int(self.n_features_out)
        self.rs_map_ = make_rs_map(K, K_prime, self.random_state, shuffle=self.shuffle)
        self.n_features_in_ = K
        return self

    def transform(self, X):
        check_is_fitted(self, "rs_map_")
        X = check_array(X, dtype=np.float64)
        return apply_rs(X, self.rs_map_)

    @classmethod
    def from_map(cls, rs_map: RSMap) -> "ReplicateShuffle":
        est = cls(n_features_out=rs_map.K_prime, random_state=rs_map.seed)
        est.rs_map_ = rs_map
        est.n_features_in_ = rs_map.K
        return est
