"""Small float64 neural-network toolkit with hand-written gradients.

Layers own their parameters as a dict of named arrays. Gradients come back
as dicts with the same keys, which is also the format :class:`Adam` and
:func:`grad_check` work on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import FocalZoneError, ValidationError


def sigmoid(x):
    # tanh form avoids overflow warnings for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _act(name, z):
    if name == "sigmoid":
        return sigmoid(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "identity":
        return z
    raise ValidationError(f"unknown activation {name!r}")


def _act_grad(name, z, out):
    if name == "sigmoid":
        return out * (1.0 - out)
    if name == "relu":
        return (z > 0).astype(np.float64)
    return np.ones_like(z)


def glorot(rng, shape, fan_in, fan_out, gain=1.0):
    limit = gain * math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class DenseLayer:
    """Affine map followed by an activation. ``W`` has shape ``(out, in)``."""

    def __init__(self, W, b, activation="identity"):
        self.W = np.array(W, dtype=np.float64)
        self.b = np.array(b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValidationError(f"inconsistent shapes W{self.W.shape}, b{self.b.shape}")
        _act(activation, np.zeros(1))
        self.activation = activation

    @classmethod
    def init(cls, n_in, n_out, activation="identity", rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        # logistic units need a 4x wider range to keep gradients alive through a stack
        gain = 4.0 if activation == "sigmoid" else 1.0
        return cls(glorot(rng, (n_out, n_in), n_in, n_out, gain), np.zeros(n_out), activation)

    @property
    def n_in(self):
        return self.W.shape[1]

    @property
    def n_out(self):
        return self.W.shape[0]

    def params(self):
        return {"W": self.W, "b": self.b}

    def forward(self, x):
        z = x @ self.W.T + self.b
        out = _act(self.activation, z)
        return out, (x, z, out)

    def backward(self, dout, cache):
        x, z, out = cache
        dz = dout * _act_grad(self.activation, z, out)
        if x.ndim == 1:
            grads = {"W": np.outer(dz, x), "b": dz.copy()}
        else:
            grads = {"W": dz.T @ x, "b": dz.sum(axis=0)}
        return dz @ self.W, grads


def dense_forward(layer: DenseLayer, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.n_in:
        raise ValidationError(f"input has {x.shape[-1]} features, layer expects {layer.n_in}")
    return layer.forward(x)[0]


class LSTMCell:
    """Standard LSTM cell.

    ``W`` has shape ``(4H, in + H)`` acting on ``[x, h]``; gate rows are
    ordered input, forget, output, candidate. ``forget_bias`` is added to the
    forget pre-activation at run time and is not a trainable parameter.
    """

    def __init__(self, W, b, forget_bias=0.3):
        self.W = np.array(W, dtype=np.float64)
        self.b = np.array(b, dtype=np.float64)
        four_h = self.W.shape[0]
        if self.W.ndim != 2 or four_h % 4 or self.b.shape != (four_h,):
            raise ValidationError(f"inconsistent LSTM shapes W{self.W.shape}, b{self.b.shape}")
        self.hidden_size = four_h // 4
        if self.W.shape[1] <= self.hidden_size:
            raise ValidationError("W must have more columns than hidden_size")
        self.forget_bias = float(forget_bias)

    @classmethod
    def init(cls, n_in, hidden, forget_bias=0.3, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        W = glorot(rng, (4 * hidden, n_in + hidden), n_in + hidden, hidden)
        return cls(W, np.zeros(4 * hidden), forget_bias)

    @property
    def input_size(self):
        return self.W.shape[1] - self.hidden_size

    def params(self):
        return {"W": self.W, "b": self.b}

    def _gates(self, z):
        H = self.hidden_size
        i = sigmoid(z[..., :H])
        f = sigmoid(z[..., H:2 * H] + self.forget_bias)
        o = sigmoid(z[..., 2 * H:3 * H])
        g = np.tanh(z[..., 3 * H:])
        return i, f, o, g

    def step(self, x, h_prev, c_prev):
        """One time step; returns ``(h, c, cache)``."""
        xh = np.concatenate([x, h_prev], axis=-1)
        i, f, o, g = self._gates(xh @ self.W.T + self.b)
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        return h, c, (xh, c_prev, i, f, o, g, tc)

    def step_backward(self, dh, dc, cache):
        """Backprop one step; returns ``(dx, dh_prev, dc_prev, grads)``."""
        xh, c_prev, i, f, o, g, tc = cache
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [dc * g * i * (1.0 - i), dc * c_prev * f * (1.0 - f),
             dh * tc * o * (1.0 - o), dc * i * (1.0 - g * g)],
            axis=-1,
        )
        if xh.ndim == 1:
            grads = {"W": np.outer(dz, xh), "b": dz.copy()}
        else:
            grads = {"W": dz.T @ xh, "b": dz.sum(axis=0)}
        dxh = dz @ self.W
        n_in = self.input_size
        return dxh[..., :n_in], dxh[..., n_in:], dc * f, grads

    def forward_sequence(self, X):
        """Run over ``X`` of shape ``(n, T, in)`` from zero state.

        Returns hidden states ``(n, T, H)`` and a cache for
        :meth:`backward_sequence`.
        """
        n, T, _ = X.shape
        H = self.hidden_size
        n_in = self.input_size
        # time-major buffers keep per-step slices contiguous
        Xt = np.ascontiguousarray(X.transpose(1, 0, 2))
        WhT = np.ascontiguousarray(self.W[:, n_in:].T)
        Z = Xt @ np.ascontiguousarray(self.W[:, :n_in].T) + self.b
        Z[:, :, H:2 * H] += self.forget_bias
        hs = np.zeros((T + 1, n, H))
        cs = np.zeros((T + 1, n, H))
        tcs = np.empty((T, n, H))
        for t in range(T):
            z = Z[t]
            z += hs[t] @ WhT
            # sigmoid on the i, f, o block in one call
            z[:, :3 * H] = 0.5 * (1.0 + np.tanh(0.5 * z[:, :3 * H]))
            np.tanh(z[:, 3 * H:], out=z[:, 3 * H:])
            c = cs[t + 1]
            np.multiply(z[:, H:2 * H], cs[t], out=c)
            c += z[:, :H] * z[:, 3 * H:]
            tc = tcs[t]
            np.tanh(c, out=tc)
            np.multiply(z[:, 2 * H:3 * H], tc, out=hs[t + 1])
        # Z now holds the activated gates
        return hs[1:].transpose(1, 0, 2), (Xt, hs, cs, Z, tcs)

    def backward_sequence(self, dH, cache):
        """Backprop through time given ``dLoss/dh_t`` for every step."""
        Xt, hs, cs, gates, tcs = cache
        T, n, _ = Xt.shape
        H = self.hidden_size
        n_in = self.input_size
        Wh = np.ascontiguousarray(self.W[:, n_in:])
        dHt = dH.transpose(1, 0, 2)
        dZ = np.empty((T, n, 4 * H))
        dh = np.zeros((n, H))
        dc = np.zeros((n, H))
        for t in range(T - 1, -1, -1):
            g_t = gates[t]
            i = g_t[:, :H]
            f = g_t[:, H:2 * H]
            o = g_t[:, 2 * H:3 * H]
            g = g_t[:, 3 * H:]
            tc = tcs[t]
            dh += dHt[t]
            dc += dh * o * (1.0 - tc * tc)
            dz = dZ[t]
            dz[:, :H] = dc * g * i * (1.0 - i)
            dz[:, H:2 * H] = dc * cs[t] * f * (1.0 - f)
            dz[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
            dz[:, 3 * H:] = dc * i * (1.0 - g * g)
            dh = dz @ Wh
            dc *= f
        flat_dz = dZ.reshape(T * n, 4 * H)
        dW = np.empty_like(self.W)
        dW[:, :n_in] = flat_dz.T @ Xt.reshape(T * n, n_in)
        dW[:, n_in:] = flat_dz.T @ hs[:-1].reshape(T * n, H)
        dX = (dZ @ np.ascontiguousarray(self.W[:, :n_in])).transpose(1, 0, 2)
        return dX, {"W": dW, "b": flat_dz.sum(axis=0)}


def lstm_step(cell: LSTMCell, x_t, h_prev, c_prev):
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    H = cell.hidden_size
    if x_t.shape[-1] != cell.input_size or h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ValidationError(
            f"lstm_step shapes x{x_t.shape}, h{h_prev.shape}, c{c_prev.shape} do not match "
            f"input_size={cell.input_size}, hidden_size={H}"
        )
    h, c, _ = cell.step(x_t, h_prev, c_prev)
    return h, c


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, label):
    """Loss and gradient for one logit vector, or batch means for a matrix."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - log_norm
    probs = np.exp(logp)
    if z.ndim == 1:
        if not 0 <= label < z.size:
            raise ValidationError(f"label {label} out of range for {z.size} logits")
        d = probs.copy()
        d[label] -= 1.0
        return float(-logp[label]), d
    labels = np.asarray(label, dtype=np.int64)
    n = z.shape[0]
    rows = np.arange(n)
    d = probs.copy()
    d[rows, labels] -= 1.0
    return float(-logp[rows, labels].mean()), d / n


def l2_penalty(weights, lam):
    """``lam * sum(W**2)`` over the given weight arrays, plus per-array grads."""
    loss = lam * sum(float(np.sum(W * W)) for W in weights)
    return loss, [2.0 * lam * W for W in weights]


@dataclass
class Adam:
    """Bias-corrected Adam over dicts of named arrays (updated in place)."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict):
        if set(grads) != set(params):
            raise ValidationError(f"gradient keys {sorted(grads)} differ from parameter keys {sorted(params)}")
        for k, g in grads.items():
            if np.shape(g) != np.shape(params[k]):
                raise ValidationError(f"gradient for {k!r} has shape {np.shape(g)}, parameter {np.shape(params[k])}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k in sorted(params):
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return params


def adam_update(state: Adam, params: dict, grads: dict):
    return state.step(params, grads), state


@dataclass
class GradCheckReport:
    max_rel_error: float
    n_checked: int
    tolerance: float
    worst: tuple | None = None
    errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def grad_check(fn, params: dict, batch=None, tolerance=1e-4, step=1e-5, max_coords=200,
               seed=0, floor=1e-6) -> GradCheckReport:
    """Compare analytic gradients with central differences.

    ``fn(params, batch)`` must return ``(loss, grads)``. At most
    ``max_coords`` coordinates are sampled. The relative error of a
    coordinate is ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    vanishing gradients from turning round-off into large ratios.
    """
    loss, grads = fn(params, batch)
    if not np.isfinite(loss):
        raise FocalZoneError(f"loss is not finite at the given parameters ({loss})")
    coords = [(k, j) for k in sorted(params) for j in range(np.size(params[k]))]
    if not coords:
        return GradCheckReport(0.0, 0, tolerance)
    if len(coords) > max_coords:
        rng = np.random.default_rng(seed)
        coords = [coords[i] for i in sorted(rng.choice(len(coords), max_coords, replace=False))]
    worst, worst_err, errors = None, 0.0, []
    for k, j in coords:
        flat = params[k].reshape(-1)
        orig = flat[j]
        flat[j] = orig + step
        lp, _ = fn(params, batch)
        flat[j] = orig - step
        lm, _ = fn(params, batch)
        flat[j] = orig
        if not (np.isfinite(lp) and np.isfinite(lm)):
            raise FocalZoneError(f"loss became non-finite when perturbing {k}[{j}]")
        numeric = (lp - lm) / (2.0 * step)
        analytic = float(np.reshape(grads[k], -1)[j])
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
        errors.append((k, j, analytic, numeric, err))
        if err >= worst_err:
            worst_err, worst = err, (k, j)
    return GradCheckReport(worst_err, len(coords), tolerance, worst, errors)
