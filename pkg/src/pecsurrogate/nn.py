"""A small numpy feed-forward network: dense layers, inverted dropout, backprop and Adam.

Everything runs in float64 so that finite-difference gradient checks and
bitwise determinism are meaningful.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import DomainError
from . import serialize

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")
LOSSES = ("bce", "mse")


class UsageError(RuntimeError):
    """An operation was called out of order (e.g. backward without a forward cache)."""


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes ``[n_in, *hidden, n_out]``; one activation and dropout rate per non-input layer.

    Dropout applies to the outputs of hidden layers only; the entry for the
    output layer must be 0.
    """

    sizes: tuple
    activations: tuple
    dropout: tuple
    loss: str = "bce"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "activations", tuple(self.activations))
        object.__setattr__(self, "dropout", tuple(float(d) for d in self.dropout))
        n_layers = len(sizes) - 1
        if n_layers < 1 or any(s < 1 for s in sizes):
            raise DomainError("need at least an input and an output layer of positive size")
        if len(self.activations) != n_layers or len(self.dropout) != n_layers:
            raise DomainError("one activation and one dropout rate per layer")
        if any(a not in ACTIVATIONS for a in self.activations):
            raise DomainError(f"activations must be in {ACTIVATIONS}")
        if any(not 0.0 <= d < 1.0 for d in self.dropout):
            raise DomainError("dropout rates must lie in [0, 1)")
        if self.dropout[-1] != 0.0:
            raise DomainError("no dropout on the output layer")
        if self.loss not in LOSSES:
            raise DomainError(f"loss must be one of {LOSSES}")
        if self.loss == "bce" and (self.activations[-1] != "sigmoid" or sizes[-1] != 1):
            raise DomainError("bce loss needs a single sigmoid output")

    @classmethod
    def mlp(cls, n_in, hidden, n_out, *, hidden_activation="relu", output_activation="sigmoid",
            dropout=0.0, loss="bce") -> "NetworkSpec":
        hidden = tuple(hidden)
        return cls(
            sizes=(n_in, *hidden, n_out),
            activations=(hidden_activation,) * len(hidden) + (output_activation,),
            dropout=(dropout,) * len(hidden) + (0.0,),
            loss=loss,
        )


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return _sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name, z, a):
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Network:
    spec: NetworkSpec
    weights: list
    biases: list

    @classmethod
    def init(cls, spec: NetworkSpec, seed) -> "Network":
        """Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(spec.sizes[:-1], spec.sizes[1:]):
            bound = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(spec, weights, biases)

    @property
    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def set_params(self, params) -> None:
        self.weights = list(params[0::2])
        self.biases = list(params[1::2])

    def copy(self) -> "Network":
        return Network(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class ForwardCache:
    inputs: list = field(default_factory=list)  # layer inputs (after dropout)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    masks: list = field(default_factory=list)


def forward(net: Network, x, mode: str = "infer", rng: np.random.Generator | None = None):
    """Run the network on ``x`` of shape (n, n_in) or (n_in,).

    ``mode`` is ``"train"`` (dropout on, returns ``(output, cache)``),
    ``"infer"`` (dropout off) or ``"mc"`` (dropout on, no cache).
    """
    if mode not in ("train", "infer", "mc"):
        raise DomainError(f"unknown mode {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.spec.sizes[0]:
        raise DomainError(f"expected input width {net.spec.sizes[0]}, got shape {x.shape}")
    stochastic = mode != "infer"
    if stochastic and rng is None and any(net.spec.dropout):
        raise DomainError("train/mc mode with dropout needs an rng")
    cache = ForwardCache()
    a = x
    for w, b, act, p in zip(net.weights, net.biases, net.spec.activations, net.spec.dropout):
        cache.inputs.append(a)
        z = a @ w + b
        a = _act(act, z)
        cache.pre.append(z)
        cache.post.append(a)
        mask = None
        if stochastic and p > 0.0:
            mask = (rng.random(a.shape) >= p) / (1.0 - p)
            a = a * mask
        cache.masks.append(mask)
    out = a[0] if single else a
    if mode == "train":
        return out, cache
    return out


def loss_value(spec: NetworkSpec, output, target) -> float:
    output = np.atleast_2d(output)
    target = np.asarray(target, dtype=np.float64).reshape(output.shape)
    if spec.loss == "bce":
        p = np.clip(output, 1e-12, 1.0 - 1e-12)
        return float(-np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)))
    return float(np.mean((output - target) ** 2))


def backward(net: Network, cache: ForwardCache | None, target) -> list:
    """Gradients of the mean loss w.r.t. ``[W1, b1, W2, b2, ...]``.

    BCE uses the fused sigmoid/cross-entropy derivative ``(p - y) / n``;
    squared error is averaged over every output element.
    """
    if cache is None or not cache.post:
        raise UsageError("backward needs the cache of a train-mode forward pass")
    out = cache.post[-1]
    target = np.asarray(target, dtype=np.float64).reshape(out.shape)
    n = out.shape[0]
    if net.spec.loss == "bce":
        delta = (out - target) / n
    else:
        delta = 2.0 * (out - target) / out.size
        delta = delta * _act_grad(net.spec.activations[-1], cache.pre[-1], out)
    grads = [None] * (2 * len(net.weights))
    for layer in range(len(net.weights) - 1, -1, -1):
        grads[2 * layer] = cache.inputs[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer == 0:
            break
        delta = delta @ net.weights[layer].T
        mask = cache.masks[layer - 1]
        if mask is not None:
            delta = delta * mask
        delta = delta * _act_grad(net.spec.activations[layer - 1], cache.pre[layer - 1], cache.post[layer - 1])
    return grads


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], **kw)


def adam_step(params: list, grads: list, state: AdamState) -> list:
    """One bias-corrected Adam update; mutates the moments in ``state`` and returns new params."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DomainError("params, grads and Adam moments disagree in length")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    new = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DomainError("parameter/gradient shape mismatch")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        new.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return new


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)


def _accuracy(spec, out, y):
    if spec.loss != "bce":
        return float("nan")
    return float(np.mean((out[:, 0] >= 0.5) == (y.reshape(-1) >= 0.5)))


def train(net: Network, X, y, *, epochs: int, lr: float = 1e-3, batch_size: int = 128, seed=0,
          X_val=None, y_val=None) -> TrainHistory:
    """Mini-batch Adam; batches reshuffled every epoch from ``seed``. Updates ``net`` in place."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(X.shape[0], -1)
    rng = np.random.default_rng(seed)
    state = AdamState.for_params(net.params, lr=lr)
    hist = TrainHistory()
    n = X.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            _, cache = forward(net, X[idx], "train", rng)
            grads = backward(net, cache, y[idx])
            net.set_params(adam_step(net.params, grads, state))
        out = forward(net, X)
        hist.train_loss.append(loss_value(net.spec, out, y))
        hist.train_acc.append(_accuracy(net.spec, out, y))
        if X_val is not None:
            yv = np.asarray(y_val, dtype=np.float64).reshape(len(X_val), -1)
            ov = forward(net, X_val)
            hist.val_loss.append(loss_value(net.spec, ov, yv))
            hist.val_acc.append(_accuracy(net.spec, ov, yv))
    return hist


# --------------------------------------------------------------------------
# serialization: spec header, then W1, b1, W2, b2, ... row-major float64


def network_to_blob(net: Network) -> tuple[dict, list]:
    meta = {"spec": asdict(net.spec)}
    return meta, net.params


def network_from_blob(meta: dict, arrays: list) -> Network:
    s = meta["spec"]
    spec = NetworkSpec(tuple(s["sizes"]), tuple(s["activations"]), tuple(s["dropout"]), s["loss"])
    net = Network(spec, [], [])
    net.set_params([np.array(a) for a in arrays])
    return net


def save_network(path, net: Network) -> None:
    meta, arrays = network_to_blob(net)
    serialize.write_blob(path, "network", 1, meta, arrays)


def load_network(path) -> Network:
    kind, _, meta, arrays = serialize.read_blob(path, expect_kind="network")
    return network_from_blob(meta, arrays)


__all__ = [
    "NetworkSpec", "Network", "ForwardCache", "AdamState", "TrainHistory", "UsageError",
    "forward", "backward", "adam_step", "loss_value", "train", "save_network", "load_network",
]
