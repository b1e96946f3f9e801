"""Minimal neural toolkit: MLP, Adam, replay memory, flat binary weights.

Everything is plain numpy in float64. Networks are ReLU-hidden,
identity-output perceptrons; gradients come from hand-written reverse-mode
passes. This is deliberately small: just enough machinery to train the value
and policy networks used elsewhere in the package.
"""

from __future__ import annotations

import struct
import threading
from collections import namedtuple

import numpy as np

_MAGIC = b"NNP1"


class Mlp:
    """Fully connected net; weights[i] has shape (fan_out, fan_in)."""

    def __init__(self, widths, rng: np.random.Generator = None):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ValueError("widths needs at least an input and an output size")
        self.widths = widths
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            if rng is None:
                w = np.zeros((fan_out, fan_in))
            else:
                # scaled for ReLU so activation variance survives depth
                w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy_from(self, other: "Mlp") -> None:
        for dst, src in zip(self.parameters(), other.parameters()):
            dst[...] = src

    def clone(self) -> "Mlp":
        twin = Mlp(self.widths)
        twin.copy_from(self)
        return twin


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Network output; accepts a single (in,) vector or a (batch, in) matrix."""
    single = np.ndim(x) == 1
    a = np.atleast_2d(np.asarray(x, np.float64))
    if a.shape[1] != net.widths[0]:
        raise ValueError(f"input width {a.shape[1]} does not match net "
                         f"input {net.widths[0]}")
    for k in range(net.num_layers):
        a = a @ net.weights[k].T + net.biases[k]
        if k < net.num_layers - 1:
            a = np.maximum(a, 0.0)
    return a[0] if single else a


def forward_cached(net: Mlp, x: np.ndarray):
    """Forward pass keeping pre-activations for a later backward pass."""
    a = np.atleast_2d(np.asarray(x, np.float64))
    pre = []
    post = [a]
    for k in range(net.num_layers):
        z = a @ net.weights[k].T + net.biases[k]
        pre.append(z)
        a = np.maximum(z, 0.0) if k < net.num_layers - 1 else z
        post.append(a)
    return a, (pre, post)


def backward_from_cache(net: Mlp, cache, upstream: np.ndarray) -> list:
    """Parameter gradients given dLoss/dOutput from a cached forward."""
    pre, post = cache
    g = np.atleast_2d(np.asarray(upstream, np.float64))
    grads = [None] * (2 * net.num_layers)
    for k in range(net.num_layers - 1, -1, -1):
        grads[2 * k] = g.T @ post[k]
        grads[2 * k + 1] = g.sum(axis=0)
        if k > 0:
            g = (g @ net.weights[k]) * (pre[k - 1] > 0.0)
    return grads


def backward(net: Mlp, x: np.ndarray, upstream: np.ndarray) -> list:
    """Gradients of sum(upstream * output) w.r.t. every parameter.

    Runs its own forward pass; order matches net.parameters(). upstream is
    dLoss/dOutput with the same leading shape as x.
    """
    _, cache = forward_cached(net, x)
    return backward_from_cache(net, cache, upstream)


def input_gradient(net: Mlp, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """dLoss/dInput for the same scalarization as backward()."""
    single = np.ndim(x) == 1
    _, (pre, _) = forward_cached(net, x)
    g = np.atleast_2d(np.asarray(upstream, np.float64))
    for k in range(net.num_layers - 1, 0, -1):
        g = (g @ net.weights[k]) * (pre[k - 1] > 0.0)
    g = g @ net.weights[0]
    return g[0] if single else g


class AdamState:
    """First and second moment accumulators for one parameter list."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]


def adam_step(state: AdamState, params: list, grads: list) -> list:
    """One bias-corrected Adam update, applied to params in place."""
    if len(params) != len(state.m) or len(grads) != len(state.m):
        raise ValueError("parameter list does not match optimizer state")
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def huber(err: np.ndarray, delta: float = 1.0):
    """Value and derivative of the Huber loss, elementwise."""
    err = np.asarray(err, np.float64)
    small = np.abs(err) <= delta
    value = np.where(small, 0.5 * err * err, delta * (np.abs(err) - 0.5 * delta))
    grad = np.clip(err, -delta, delta)
    return value, grad


GradCheckResult = namedtuple("GradCheckResult", "max_rel_error worst_param worst_index")


def grad_check(net: Mlp, loss, x: np.ndarray,
               epsilon: float = 1e-6) -> GradCheckResult:
    """Compare backprop against central finite differences on every parameter.

    loss maps the network output to (scalar value, dValue/dOutput). Returns
    the worst relative disagreement and where it sat.
    """
    y = forward(net, x)
    _, upstream = loss(y)
    analytic = backward(net, x, upstream)
    params = net.parameters()
    worst = GradCheckResult(0.0, -1, ())
    for pi, (p, g) in enumerate(zip(params, analytic)):
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            keep = p[idx]
            p[idx] = keep + epsilon
            up, _ = loss(forward(net, x))
            p[idx] = keep - epsilon
            dn, _ = loss(forward(net, x))
            p[idx] = keep
            numeric = (up - dn) / (2.0 * epsilon)
            scale = max(abs(float(g[idx])), abs(numeric), 1e-8)
            rel = abs(float(g[idx]) - numeric) / scale
            if rel > worst.max_rel_error:
                worst = GradCheckResult(rel, pi, idx)
    return worst


Batch = namedtuple("Batch", "states actions rewards next_states dones")


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions, safe for concurrent use."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._lock = threading.Lock()
        self._states = None
        self._actions = None
        self._rewards = np.empty(capacity, np.float64)
        self._next_states = None
        self._dones = np.empty(capacity, np.bool_)
        self._size = 0
        self._cursor = 0

    def __len__(self) -> int:
        with self._lock:
            return self._size

    def push(self, state, action, reward, next_state, done) -> None:
        state = np.asarray(state, np.float64)
        action = np.asarray(action)
        next_state = np.asarray(next_state, np.float64)
        with self._lock:
            if self._states is None:
                self._states = np.empty((self.capacity,) + state.shape, np.float64)
                self._next_states = np.empty_like(self._states)
                self._actions = np.empty((self.capacity,) + action.shape,
                                         action.dtype)
            i = self._cursor
            self._states[i] = state
            self._actions[i] = action
            self._rewards[i] = reward
            self._next_states[i] = next_state
            self._dones[i] = done
            self._cursor = (i + 1) % self.capacity
            self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform minibatch without replacement; needs batch_size stored items."""
        with self._lock:
            if self._size < 1:
                raise ValueError("cannot sample from an empty buffer")
            if batch_size > self._size:
                raise ValueError(f"cannot draw {batch_size} distinct transitions "
                                 f"from {self._size} stored")
            idx = rng.choice(self._size, size=batch_size, replace=False)
            return Batch(self._states[idx].copy(), self._actions[idx].copy(),
                         self._rewards[idx].copy(), self._next_states[idx].copy(),
                         self._dones[idx].copy())


# ---------------------------------------------------------------------------
# weight files: magic, array count, per-array rank and dims, float64 payload,
# everything little-endian


def pack_params(arrays) -> bytes:
    """Encode arrays into the self-delimiting weight payload."""
    arrays = [np.ascontiguousarray(a, np.float64) for a in arrays]
    parts = [_MAGIC, struct.pack("<I", len(arrays))]
    for a in arrays:
        parts.append(struct.pack("<I", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}Q", *a.shape))
        parts.append(a.astype("<f8").tobytes())
    return b"".join(parts)


def save_params(path, arrays) -> None:
    with open(path, "wb") as f:
        f.write(pack_params(arrays))


def unpack_params(blob: bytes) -> list:
    if blob[:4] != _MAGIC:
        raise ValueError("not a recognized weight file (bad magic bytes)")
    off = 4
    try:
        (count,) = struct.unpack_from("<I", blob, off)
        off += 4
        out = []
        for _ in range(count):
            (ndim,) = struct.unpack_from("<I", blob, off)
            off += 4
            shape = struct.unpack_from(f"<{ndim}Q", blob, off)
            off += 8 * ndim
            n = int(np.prod(shape)) if ndim else 1
            a = np.frombuffer(blob, "<f8", count=n, offset=off).reshape(shape)
            off += 8 * n
            out.append(a.copy())
    except struct.error as exc:
        raise ValueError("truncated weight file") from exc
    if off != len(blob):
        raise ValueError("trailing bytes after weight payload")
    return out


def load_params(path) -> list:
    with open(path, "rb") as f:
        return unpack_params(f.read())


def save_mlp(path, net: Mlp) -> None:
    save_params(path, net.parameters())


def load_mlp(path) -> Mlp:
    arrays = load_params(path)
    if len(arrays) % 2 != 0 or not arrays:
        raise ValueError("weight file does not hold an alternating W, b list")
    widths = [arrays[0].shape[1]] + [w.shape[0] for w in arrays[0::2]]
    net = Mlp(widths)
    for dst, src in zip(net.parameters(), arrays):
        if dst.shape != src.shape:
            raise ValueError("weight file shapes are inconsistent")
        dst[...] = src
    return net
