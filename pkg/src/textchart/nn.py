"""Numpy building blocks shared by the tagger and the chart-type classifier.

Sequences are batched time-major as ``(T, B, D)`` arrays together with their
true lengths. Padding always sits after the last real step, and the backward
direction of a bidirectional layer reverses every sequence inside its own
length, so padded steps never influence real ones and results equal
per-sequence processing at natural length.
"""
from __future__ import annotations

import numpy as np

Params = dict[str, np.ndarray]


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_lstm(rng: np.random.Generator, params: Params, prefix: str, n_in: int, n_hidden: int) -> None:
    params[f"{prefix}.Wx"] = glorot(rng, n_in, 4 * n_hidden)
    params[f"{prefix}.Wh"] = glorot(rng, n_hidden, 4 * n_hidden)
    b = np.zeros(4 * n_hidden)
    b[n_hidden : 2 * n_hidden] = 1.0  # forget gate
    params[f"{prefix}.b"] = b


def init_dense(rng: np.random.Generator, params: Params, prefix: str, n_in: int, n_out: int) -> None:
    params[f"{prefix}.W"] = glorot(rng, n_in, n_out)
    params[f"{prefix}.b"] = np.zeros(n_out)


def pad_batch(seqs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Stack ``(L_i, D)`` arrays into a zero-padded ``(T, B, D)`` batch."""
    lengths = np.array([len(s) for s in seqs], dtype=int)
    T, B, D = int(lengths.max()), len(seqs), seqs[0].shape[1]
    X = np.zeros((T, B, D))
    for b, s in enumerate(seqs):
        X[: len(s), b] = s
    return X, lengths


def length_mask(lengths: np.ndarray, T: int) -> np.ndarray:
    return (np.arange(T)[:, None] < lengths[None, :]).astype(np.float64)


def reverse_index(lengths: np.ndarray, T: int) -> np.ndarray:
    """Time indices that reverse each column within its length (an involution)."""
    t = np.arange(T)[:, None]
    L = lengths[None, :]
    return np.where(t < L, L - 1 - t, t)


def reverse_time(X: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return X[idx, np.arange(X.shape[1])[None, :]]


def lstm_forward(X: np.ndarray, Wx: np.ndarray, Wh: np.ndarray, b: np.ndarray):
    T, B, _ = X.shape
    H = Wh.shape[0]
    Zx = (X.reshape(T * B, -1) @ Wx).reshape(T, B, 4 * H) + b
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((T, B, H))
    gates = np.empty((T, B, 4 * H))
    cs = np.empty((T, B, H))
    tanh_cs = np.empty((T, B, H))
    for t in range(T):
        z = Zx[t] + h @ Wh
        a = np.empty_like(z)
        a[:, : 3 * H] = sigmoid(z[:, : 3 * H])
        a[:, 3 * H :] = np.tanh(z[:, 3 * H :])
        i, f, o, g = a[:, :H], a[:, H : 2 * H], a[:, 2 * H : 3 * H], a[:, 3 * H :]
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[t], gates[t], cs[t], tanh_cs[t] = h, a, c, tc
    return hs, (X, Wx, Wh, hs, gates, cs, tanh_cs)


def lstm_backward(dhs: np.ndarray, cache):
    X, Wx, Wh, hs, gates, cs, tanh_cs = cache
    T, B, H = hs.shape
    dZ = np.empty((T, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        a = gates[t]
        i, f, o, g = a[:, :H], a[:, H : 2 * H], a[:, 2 * H : 3 * H], a[:, 3 * H :]
        dh = dhs[t] + dh_next
        tc = tanh_cs[t]
        dc = dc_next + dh * o * (1.0 - tc * tc)
        c_prev = cs[t - 1] if t > 0 else np.zeros((B, H))
        dz = dZ[t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dh * tc * o * (1.0 - o)
        dz[:, 3 * H :] = dc * i * (1.0 - g * g)
        dh_next = dz @ Wh.T
        dc_next = dc * f
    flat = dZ.reshape(T * B, 4 * H)
    dWx = X.reshape(T * B, -1).T @ flat
    h_prev = np.concatenate([np.zeros((1, B, H)), hs[:-1]], axis=0).reshape(T * B, H)
    dWh = h_prev.T @ flat
    db = flat.sum(axis=0)
    dX = (flat @ Wx.T).reshape(X.shape)
    return dX, dWx, dWh, db


def lstm_layer_forward(params: Params, prefix: str, X: np.ndarray):
    return lstm_forward(X, params[f"{prefix}.Wx"], params[f"{prefix}.Wh"], params[f"{prefix}.b"])


def lstm_layer_backward(grads: Params, prefix: str, dH: np.ndarray, cache) -> np.ndarray:
    dX, dWx, dWh, db = lstm_backward(dH, cache)
    grads[f"{prefix}.Wx"] = grads.get(f"{prefix}.Wx", 0) + dWx
    grads[f"{prefix}.Wh"] = grads.get(f"{prefix}.Wh", 0) + dWh
    grads[f"{prefix}.b"] = grads.get(f"{prefix}.b", 0) + db
    return dX


def bilstm_forward(params: Params, prefix: str, X: np.ndarray, lengths: np.ndarray):
    """Forward and backward passes concatenated as ``[fwd, bwd]`` on the last axis."""
    idx = reverse_index(lengths, X.shape[0])
    Hf, cache_f = lstm_layer_forward(params, f"{prefix}f", X)
    Hb_rev, cache_b = lstm_layer_forward(params, f"{prefix}b", reverse_time(X, idx))
    Hb = reverse_time(Hb_rev, idx)
    return np.concatenate([Hf, Hb], axis=-1), (idx, cache_f, cache_b, Hf.shape[-1])


def bilstm_backward(grads: Params, prefix: str, dOut: np.ndarray, cache) -> np.ndarray:
    idx, cache_f, cache_b, H = cache
    dXf = lstm_layer_backward(grads, f"{prefix}f", dOut[..., :H], cache_f)
    dXb_rev = lstm_layer_backward(grads, f"{prefix}b", reverse_time(dOut[..., H:], idx), cache_b)
    return dXf + reverse_time(dXb_rev, idx)


def dense_tanh_forward(params: Params, prefix: str, X: np.ndarray):
    out = np.tanh(X @ params[f"{prefix}.W"] + params[f"{prefix}.b"])
    return out, (X, out)


def dense_tanh_backward(grads: Params, params: Params, prefix: str, dOut: np.ndarray, cache):
    X, out = cache
    dz = dOut * (1.0 - out * out)
    X2 = X.reshape(-1, X.shape[-1])
    dz2 = dz.reshape(-1, dz.shape[-1])
    grads[f"{prefix}.W"] = X2.T @ dz2
    grads[f"{prefix}.b"] = dz2.sum(axis=0)
    return dz @ params[f"{prefix}.W"].T


def clip_by_global_norm(grads: Params, max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


class RMSprop:
    """RMSprop: running mean of squared gradients scales each step."""

    def __init__(self, learning_rate: float, decay: float = 0.9, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.decay = decay
        self.epsilon = epsilon
        self.cache: Params = {}

    def step(self, params: Params, grads: Params) -> None:
        for name, g in grads.items():
            sq = self.cache.get(name)
            if sq is None:
                sq = np.zeros_like(g)
            sq = self.decay * sq + (1.0 - self.decay) * g * g
            self.cache[name] = sq
            params[name] -= self.learning_rate * g / (np.sqrt(sq) + self.epsilon)


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]
