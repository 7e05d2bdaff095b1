"""Dueling DQN that searches for the focal zone with the highest reward.

The network sees the normalised window ``(start/K', end/K')`` and outputs
four action values ``Q = V + A - mean(A)``. Training uses a replay memory,
epsilon-greedy exploration and a periodically synced target network. The
returned zone is the best state visited during training.
"""

from __future__ import annotations

import copy
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .env import Action, EnvParams, FocalState, initial_state, is_valid, step
from .exceptions import ValidationError
from .nn import Adam, DenseLayer
from .reward import RewardBreakdown, RewardConfig, SurrogateReward

log = logging.getLogger(__name__)

N_ACTIONS = len(Action)


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.8
    epsilon: float = 0.2
    lr: float = 0.01
    n_episodes: int = 50
    n_steps: int = 50
    batch_size: int = 32
    memory_size: int = 2000
    target_sync_every: int = 100
    warmup: int = 64
    hidden: int = 32

    @property
    def total_steps(self) -> int:
        return self.n_episodes * self.n_steps

    def validate(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must be in [0, 1], got {self.epsilon}")
        for name in ("n_episodes", "n_steps", "batch_size", "memory_size", "target_sync_every", "hidden"):
            if getattr(self, name) < 1:
                raise ValidationError(f"agent {name} must be >= 1")
        if self.warmup < 0 or self.lr <= 0:
            raise ValidationError("agent needs warmup >= 0 and lr > 0")


class Transition(NamedTuple):
    s: FocalState
    a: int
    r: float
    s_next: FocalState


class ReplayMemory:
    """Fixed-capacity FIFO buffer of transitions."""

    def __init__(self, capacity=2000):
        if capacity < 1:
            raise ValidationError("replay capacity must be >= 1")
        self.capacity = capacity
        self._buf = deque(maxlen=capacity)

    def __len__(self):
        return len(self._buf)

    def __iter__(self):
        return iter(self._buf)

    def push(self, t: Transition):
        self._buf.append(t)

    def sample(self, n, rng):
        idx = rng.choice(len(self._buf), size=min(n, len(self._buf)), replace=False)
        return [self._buf[i] for i in idx]


class DuelingQNet:
    """Shared ReLU trunk with a scalar value head and a per-action advantage head."""

    def __init__(self, trunk: DenseLayer, value: DenseLayer, advantage: DenseLayer):
        if value.n_out != 1 or advantage.n_out != N_ACTIONS:
            raise ValidationError("value head must have 1 output and advantage head 4")
        self.trunk = trunk
        self.value = value
        self.advantage = advantage

    @classmethod
    def init(cls, hidden=32, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        return cls(
            DenseLayer.init(2, hidden, "relu", rng),
            DenseLayer.init(hidden, 1, "identity", rng),
            DenseLayer.init(hidden, N_ACTIONS, "identity", rng),
        )

    def params(self):
        out = {}
        for name, layer in (("trunk", self.trunk), ("value", self.value), ("advantage", self.advantage)):
            out.update({f"{name}.{k}": v for k, v in layer.params().items()})
        return out

    def copy(self) -> "DuelingQNet":
        return copy.deepcopy(self)

    def load(self, other: "DuelingQNet"):
        for k, v in other.params().items():
            self.params()[k][...] = v

    def forward(self, S):
        h, c_trunk = self.trunk.forward(S)
        V, c_val = self.value.forward(h)
        A, c_adv = self.advantage.forward(h)
        Q = V + A - A.mean(axis=-1, keepdims=True)
        return Q, (c_trunk, c_val, c_adv)

    def backward(self, dQ, cache):
        c_trunk, c_val, c_adv = cache
        dV = dQ.sum(axis=-1, keepdims=True)
        dA = dQ - dQ.mean(axis=-1, keepdims=True)
        dh_v, g_val = self.value.backward(dV, c_val)
        dh_a, g_adv = self.advantage.backward(dA, c_adv)
        _, g_trunk = self.trunk.backward(dh_v + dh_a, c_trunk)
        grads = {}
        for name, g in (("trunk", g_trunk), ("value", g_val), ("advantage", g_adv)):
            grads.update({f"{name}.{k}": v for k, v in g.items()})
        return grads

    def to_dict(self):
        return {k: v.tolist() for k, v in self.params().items()}


def encode_state(s, K_prime):
    return np.asarray(s, dtype=np.float64) / K_prime


def q_values(net: DuelingQNet, s: FocalState, K_prime: int) -> np.ndarray:
    return net.forward(encode_state(s, K_prime)[None, :])[0][0]


def select_action(q, epsilon: float, rng) -> Action:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    q = np.asarray(q)
    if q.shape != (N_ACTIONS,):
        raise ValidationError(f"expected {N_ACTIONS} action values, got shape {q.shape}")
    if rng.random() < epsilon:
        return Action(int(rng.integers(N_ACTIONS)))
    return Action(int(np.argmax(q)))


def td_targets(target_net: DuelingQNet, batch, gamma: float, K_prime: int) -> np.ndarray:
    r = np.array([t.r for t in batch])
    if gamma == 0.0:
        return r
    S_next = encode_state([t.s_next for t in batch], K_prime)
    Q_next, _ = target_net.forward(S_next)
    return r + gamma * Q_next.max(axis=1)


def td_update(net: DuelingQNet, target_net: DuelingQNet, batch, opt: Adam, gamma: float, K_prime: int) -> float:
    """One Adam step on the squared TD error of the taken actions."""
    if not batch:
        raise ValidationError("td_update needs a non-empty batch")
    y = td_targets(target_net, batch, gamma, K_prime)
    S = encode_state([t.s for t in batch], K_prime)
    a = np.array([int(t.a) for t in batch])
    Q, cache = net.forward(S)
    rows = np.arange(len(batch))
    err = Q[rows, a] - y
    dQ = np.zeros_like(Q)
    dQ[rows, a] = 2.0 * err / len(batch)
    opt.step(net.params(), net.backward(dQ, cache))
    return float(np.mean(err ** 2))


class HistoryRow(NamedTuple):
    step: int
    episode: int
    action: int
    start: int
    end: int
    silhouette: float
    reward: float


@dataclass
class AgentResult:
    best_state: FocalState
    best_reward: float
    history: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    memory: ReplayMemory | None = None
    net: DuelingQNet | None = None


def _better(reward, state, best_reward, best_state):
    # higher reward, then shorter zone, then smaller start
    if best_state is None:
        return True
    return (reward, -(state[1] - state[0]), -state[0]) > (
        best_reward, -(best_state[1] - best_state[0]), -best_state[0])


def default_initial_length(K_prime: int) -> int:
    return min(128, K_prime // 2)


def train_agent(env_params: EnvParams, reward_fn: Callable[[FocalState], RewardBreakdown],
                cfg: AgentConfig = AgentConfig(), seed: int = 0, initial_length: int | None = None) -> AgentResult:
    """Run ``n_episodes * n_steps`` environment steps and keep the best zone."""
    cfg.validate()
    K = env_params.K_prime
    length = default_initial_length(K) if initial_length is None else initial_length
    s0 = initial_state(K, length, env_params.L_min)
    rng = np.random.default_rng(seed)
    net = DuelingQNet.init(cfg.hidden, rng)
    target = net.copy()
    opt = Adam(lr=cfg.lr)
    memory = ReplayMemory(cfg.memory_size)
    result = AgentResult(None, -np.inf, memory=memory, net=net)
    updates = 0
    for episode in range(cfg.n_episodes):
        s = s0
        for _ in range(cfg.n_steps):
            a = select_action(q_values(net, s, K), cfg.epsilon, rng)
            s_next = step(s, a, env_params)
            rb = reward_fn(s_next)
            memory.push(Transition(s, int(a), rb.reward, s_next))
            result.history.append(HistoryRow(len(result.history), episode, int(a), s_next.start,
                                             s_next.end, rb.silhouette, rb.reward))
            if _better(rb.reward, s_next, result.best_reward, result.best_state):
                result.best_reward, result.best_state = rb.reward, s_next
            if len(memory) >= max(cfg.warmup, 1):
                batch = memory.sample(cfg.batch_size, rng)
                result.losses.append(td_update(net, target, batch, opt, cfg.gamma, K))
                updates += 1
                if updates % cfg.target_sync_every == 0:
                    target.load(net)
            s = s_next
        log.debug("episode %d: best %s reward %.6f", episode, tuple(result.best_state), result.best_reward)
    return result


class FocalZoneSelector(TransformerMixin, BaseEstimator):
    """Learn a focal zone on expanded samples and slice it out.

    ``fit`` trains the dueling DQN against the surrogate reward computed on
    ``(X, y)``; ``transform`` returns ``X[:, start:end]`` for the best zone.

    Attributes
    ----------
    zone_ : FocalState
    best_reward_ : float
    history_ : list of HistoryRow
    reward_calls_ : int
    """

    def __init__(self, initial_length=None, min_length=10, shift_step=4, resize_step=4,
                 ar_order=3, beta=0.1, subsample=128, gamma=0.8, epsilon=0.2, lr=0.01,
                 n_episodes=50, n_steps=50, batch_size=32, memory_size=2000,
                 target_sync_every=100, warmup=64, random_state=0):
        self.initial_length = initial_length
        self.min_length = min_length
        self.shift_step = shift_step
        self.resize_step = resize_step
        self.ar_order = ar_order
        self.beta = beta
        self.subsample = subsample
        self.gamma = gamma
        self.epsilon = epsilon
        self.lr = lr
        self.n_episodes = n_episodes
        self.n_steps = n_steps
        self.batch_size = batch_size
        self.memory_size = memory_size
        self.target_sync_every = target_sync_every
        self.warmup = warmup
        self.random_state = random_state

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            gamma=self.gamma, epsilon=self.epsilon, lr=self.lr, n_episodes=self.n_episodes,
            n_steps=self.n_steps, batch_size=self.batch_size, memory_size=self.memory_size,
            target_sync_every=self.target_sync_every, warmup=self.warmup,
        )

    def env_params(self, K_prime) -> EnvParams:
        return EnvParams(K_prime, self.min_length, self.shift_step, self.resize_step)

    def reward_config(self, K_prime) -> RewardConfig:
        return RewardConfig(self.ar_order, self.beta, K_prime, self.subsample, self.random_state)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        K = X.shape[1]
        env = self.env_params(K)
        env.validate(self.ar_order)
        reward = SurrogateReward(X, y, self.reward_config(K))
        res = train_agent(env, reward, self.agent_config(), self.random_state, self.initial_length)
        self.n_features_in_ = K
        self.zone_ = res.best_state
        self.best_reward_ = res.best_reward
        self.history_ = res.history
        self.reward_calls_ = reward.calls
        self.reward_indices_ = reward.indices
        self.result_ = res
        return self

    def transform(self, X):
        check_is_fitted(self, "zone_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"X has {X.shape[1]} features, selector was fitted on {self.n_features_in_}")
        return X[:, self.zone_.start:self.zone_.end]


def visited_states_valid(history, env_params: EnvParams) -> bool:
    return all(is_valid(FocalState(h.start, h.end), env_params) for h in history)
