"""Dense ReLU Q-networks with hand-written backprop and an Adam optimizer.

Everything is float64.  Weight matrices are stored ``(fan_in, fan_out)`` so a
batch of row-vector states maps through ``x @ W + b``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"QNT1"
FLUSH_EVERY = 64
FLUSH_BELOW = 1e-200


class ShapeError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


class MultiLayerNet:
    """Parameters live in one flat float64 buffer; ``weights``/``biases`` are
    views into it, laid out W0, b0, W1, b1, ... with each W row-major."""

    def __init__(self, layer_sizes, flat: np.ndarray | None = None):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        n = param_count(self.layer_sizes)
        self.flat = np.zeros(n) if flat is None else np.ascontiguousarray(flat, dtype=np.float64)
        if self.flat.shape != (n,):
            raise ShapeError(f"expected {n} parameters, got {self.flat.shape}")
        self.weights, self.biases = _layer_views(self.layer_sizes, self.flat)

    def __repr__(self):
        return f"MultiLayerNet({self.layer_sizes})"

    @property
    def n_actions(self) -> int:
        return self.layer_sizes[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    def params(self) -> list[np.ndarray]:
        """Parameters in canonical order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def n_params(self) -> int:
        return self.flat.size


class ParamGrads(list):
    """Per-tensor gradients that also expose their shared flat buffer."""

    def __init__(self, flat, views):
        super().__init__(views)
        self.flat = flat


def param_count(sizes) -> int:
    return sum(i * o + o for i, o in zip(sizes[:-1], sizes[1:]))


def _layer_views(sizes, flat):
    weights, biases, k = [], [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[k:k + fan_in * fan_out].reshape(fan_in, fan_out))
        k += fan_in * fan_out
        biases.append(flat[k:k + fan_out])
        k += fan_out
    return weights, biases


@dataclass
class AdamState:
    m: np.ndarray  # flat, mirrors MultiLayerNet.flat
    v: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0


@dataclass
class ForwardCache:
    # layer inputs (post-activation of the previous layer) and the output
    inputs: list[np.ndarray] = field(default_factory=list)
    q: np.ndarray | None = None


def init_net(input_dim: int, hidden=(128, 128), actions: int = 5,
             rng: np.random.Generator | None = None) -> MultiLayerNet:
    """Uniform Glorot weights, zero biases."""
    sizes = (int(input_dim), *map(int, hidden), int(actions))
    if any(s <= 0 for s in sizes):
        raise ShapeError(f"layer sizes must be positive, got {sizes}")
    if rng is None:
        rng = np.random.default_rng()
    net = MultiLayerNet(sizes)
    for w, fan_in, fan_out in zip(net.weights, sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w[...] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
    return net


def _check_input(net: MultiLayerNet, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (net.input_dim,) or x.ndim > 2:
        raise ShapeError(f"state shape {x.shape} does not match input dim {net.input_dim}")
    return x


def forward_cached(net: MultiLayerNet, x) -> ForwardCache:
    x = _check_input(net, x)
    cache = ForwardCache()
    h = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        cache.inputs.append(h)
        z = h @ w + b
        h = z if k == last else np.maximum(z, 0.0)
    cache.q = h
    return cache


def forward(net: MultiLayerNet, state) -> np.ndarray:
    """Q-values for one state (1-D) or a batch of states (2-D)."""
    return forward_cached(net, state).q


def backward_cached(net: MultiLayerNet, cache: ForwardCache, actions, upstream) -> ParamGrads:
    """Gradient of ``sum_k upstream[k] * Q(s_k, a_k)`` w.r.t. parameters.

    ``cache`` must come from ``forward_cached`` on a 2-D batch.  Returns the
    gradient list in ``MultiLayerNet.params()`` order.
    """
    q = cache.q
    actions = np.asarray(actions)
    rows = np.arange(q.shape[0])
    delta = np.zeros_like(q)
    delta[rows, actions] = upstream
    flat = np.empty_like(net.flat)
    g_w, g_b = _layer_views(net.layer_sizes, flat)
    for k in range(len(net.weights) - 1, -1, -1):
        h_in = cache.inputs[k]
        np.matmul(h_in.T, delta, out=g_w[k])
        np.sum(delta, axis=0, out=g_b[k])
        if k > 0:
            delta = (delta @ net.weights[k].T) * (h_in > 0.0)
    views = []
    for w, b in zip(g_w, g_b):
        views += [w, b]
    return ParamGrads(flat, views)


def backward(net: MultiLayerNet, state, action, upstream_grad) -> ParamGrads:
    """Parameter gradient of ``upstream_grad * Q(state, action)``.

    Works for a single state (scalar action and upstream) or a batch, in which
    case the per-sample gradients are summed.
    """
    x = _check_input(net, state)
    single = x.ndim == 1
    actions = np.atleast_1d(np.asarray(action))
    if not np.issubdtype(actions.dtype, np.integer) or np.any(actions < 0) \
            or np.any(actions >= net.n_actions):
        raise ValueError(f"invalid action index {action!r} for {net.n_actions} actions")
    cache = forward_cached(net, x[None, :] if single else x)
    upstream = np.broadcast_to(np.asarray(upstream_grad, dtype=np.float64), actions.shape)
    return backward_cached(net, cache, actions, upstream)


def init_adam(net: MultiLayerNet, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    return AdamState(np.zeros_like(net.flat), np.zeros_like(net.flat),
                     lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(net: MultiLayerNet, opt: AdamState, grads) -> tuple[MultiLayerNet, AdamState]:
    """Bias-corrected Adam update, applied in place (the arguments are returned)."""
    params = net.params()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ShapeError("gradient shapes do not match parameters")
    if opt.m.shape != net.flat.shape:
        raise ShapeError("optimizer state does not match the network")
    g = getattr(grads, "flat", None)
    if g is None:
        g = np.concatenate([np.ravel(x) for x in grads])
    opt.t += 1
    bc1 = 1.0 - opt.beta1 ** opt.t
    bc2 = 1.0 - opt.beta2 ** opt.t
    m, v = opt.m, opt.v
    m *= opt.beta1
    m += (1.0 - opt.beta1) * g
    v *= opt.beta2
    v += (1.0 - opt.beta2) * (g * g)
    denom = np.sqrt(v / bc2)
    denom += opt.eps
    net.flat -= opt.lr * (m / bc1) / denom
    if opt.t % FLUSH_EVERY == 0:
        # moments of dead units decay into subnormals, which are ~15x slower to
        # compute with; at this size they cannot move any parameter anyway
        m[np.abs(m) < FLUSH_BELOW] = 0.0
        v[v < FLUSH_BELOW] = 0.0
    return net, opt


def copy_into_target(src: MultiLayerNet, dst: MultiLayerNet) -> None:
    if src.layer_sizes != dst.layer_sizes:
        raise ShapeError(f"cannot copy {src.layer_sizes} into {dst.layer_sizes}")
    dst.flat[...] = src.flat


def clone_net(net: MultiLayerNet) -> MultiLayerNet:
    return MultiLayerNet(net.layer_sizes, net.flat.copy())


def serialize_net(net: MultiLayerNet) -> bytes:
    """``QNT1`` magic, uint32 layer count, uint32 sizes, then float64 params.

    All integers and floats are little-endian; each weight matrix is written
    row-major followed by its bias vector.
    """
    sizes = net.layer_sizes
    head = MAGIC + struct.pack(f"<I{len(sizes)}I", len(sizes), *sizes)
    return head + net.flat.astype("<f8").tobytes()


def deserialize_net(data: bytes) -> MultiLayerNet:
    if len(data) < 8:
        raise CheckpointError("truncated checkpoint header")
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {data[:4]!r}")
    (n_layers,) = struct.unpack_from("<I", data, 4)
    if n_layers < 2:
        raise CheckpointError(f"checkpoint declares {n_layers} layer sizes")
    offset = 8 + 4 * n_layers
    if len(data) < offset:
        raise CheckpointError("truncated checkpoint header")
    sizes = struct.unpack_from(f"<{n_layers}I", data, 8)
    if any(s == 0 for s in sizes):
        raise CheckpointError(f"checkpoint has a zero layer size: {sizes}")
    expected = param_count(sizes) * 8
    if len(data) - offset < expected:
        raise CheckpointError(f"truncated checkpoint: need {expected} parameter bytes, "
                              f"have {len(data) - offset}")
    if len(data) - offset > expected:
        raise CheckpointError("checkpoint has trailing bytes after the parameters")
    flat = np.frombuffer(data, "<f8", expected // 8, offset).astype(np.float64)
    return MultiLayerNet(sizes, flat)
