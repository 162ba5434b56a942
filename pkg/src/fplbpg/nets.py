"""Small dense networks with explicit gradients, kept in plain numpy.

tanh hidden layers; the output layer is identity, tanh scaled into an
action box, or logistic (strictly inside (0,1), matching the codomain of
normalized value estimates).  Reverse-mode gradients are exact and exposed
at parameter level, which the training loop needs to chain utility
gradients through the critic into the actor.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

IDENTITY, BOUNDED, LOGISTIC = "identity", "bounded", "logistic"
_ACT_CODES = {IDENTITY: 0, BOUNDED: 1, LOGISTIC: 2}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}

# |pre-activation| cap for the logistic output; sigma(36) is the largest
# double strictly below 1, so outputs stay inside the open interval.
_LOGISTIC_CAP = 36.0

_MAGIC = b"FPLMLP1\n"


class Mlp:
    def __init__(
        self,
        layer_sizes,
        output_activation: str = IDENTITY,
        out_low=None,
        out_high=None,
        rng: np.random.Generator | None = None,
    ):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if output_activation not in _ACT_CODES:
            raise ValueError(f"unknown output activation {output_activation!r}")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.output_activation = output_activation
        out_dim = self.layer_sizes[-1]
        if output_activation == BOUNDED:
            if out_low is None or out_high is None:
                raise ValueError("bounded output needs out_low and out_high")
            self.out_low = np.broadcast_to(np.asarray(out_low, float), (out_dim,)).copy()
            self.out_high = np.broadcast_to(np.asarray(out_high, float), (out_dim,)).copy()
        else:
            self.out_low = None
            self.out_high = None
        rng = rng if rng is not None else np.random.default_rng()
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Mlp":
        other = object.__new__(Mlp)
        other.layer_sizes = self.layer_sizes
        other.output_activation = self.output_activation
        other.out_low = None if self.out_low is None else self.out_low.copy()
        other.out_high = None if self.out_high is None else self.out_high.copy()
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def forward(self, x) -> tuple[np.ndarray, dict]:
        """Output and the cache one backward pass needs."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        a = x[None, :] if squeeze else x
        if a.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input dimension {a.shape[1]} != {self.layer_sizes[0]}"
            )
        inputs = [a]
        pre = []
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            last = li == self.n_layers - 1
            if not last:
                a = np.tanh(z)
            elif self.output_activation == IDENTITY:
                a = z
            elif self.output_activation == BOUNDED:
                center = (self.out_high + self.out_low) / 2.0
                half = (self.out_high - self.out_low) / 2.0
                a = center + half * np.tanh(z)
            else:  # logistic
                z = np.clip(z, -_LOGISTIC_CAP, _LOGISTIC_CAP)
                a = 1.0 / (1.0 + np.exp(-z))
            pre.append(z)
            inputs.append(a)
        cache = {"inputs": inputs, "pre": pre, "squeeze": squeeze}
        out = inputs[-1]
        return (out[0] if squeeze else out), cache

    def backward(self, cache, output_grad) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
        """Parameter gradients [(dW, db) per layer] and the input gradient."""
        output_grad = np.asarray(output_grad, dtype=float)
        if cache["squeeze"]:
            output_grad = output_grad[None, :]
        inputs, pre = cache["inputs"], cache["pre"]
        if output_grad.shape != inputs[-1].shape:
            raise ValueError("output_grad shape does not match the cached forward")
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * self.n_layers
        delta = output_grad
        for li in range(self.n_layers - 1, -1, -1):
            a_out = inputs[li + 1]
            last = li == self.n_layers - 1
            if not last:
                delta = delta * (1.0 - a_out**2)  # tanh'
            elif self.output_activation == BOUNDED:
                half = (self.out_high - self.out_low) / 2.0
                t = np.tanh(pre[li])
                delta = delta * half * (1.0 - t**2)
            elif self.output_activation == LOGISTIC:
                delta = delta * a_out * (1.0 - a_out)
            dw = delta.T @ inputs[li]
            db = delta.sum(axis=0)
            grads[li] = (dw, db)
            delta = delta @ self.weights[li]
        input_grad = delta[0] if cache["squeeze"] else delta
        return grads, input_grad


@dataclass
class TargetPair:
    """Online network plus a Polyak-averaged target of identical shape."""

    online: Mlp
    target: Mlp

    @classmethod
    def create(cls, online: Mlp) -> "TargetPair":
        return cls(online=online, target=online.copy())


def polyak_update(pair: TargetPair, tau: float) -> None:
    """target <- (1 - tau) * target + tau * online, elementwise."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    for wt, wo in zip(pair.target.weights, pair.online.weights):
        wt *= 1.0 - tau
        wt += tau * wo
    for bt, bo in zip(pair.target.biases, pair.online.biases):
        bt *= 1.0 - tau
        bt += tau * bo


def perturb_params(
    net: Mlp, sigma: float, j_prev: float, rng: np.random.Generator
) -> Mlp:
    """Scratch copy with Normal(0, sigma * j_prev) added to every parameter.

    The base network is never mutated; repeated per-step perturbation of the
    same base would otherwise random-walk the policy.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    out = net.copy()
    scale = sigma * j_prev
    if scale == 0.0:
        return out
    for w in out.weights:
        w += rng.normal(0.0, scale, size=w.shape)
    for b in out.biases:
        b += rng.normal(0.0, scale, size=b.shape)
    return out


def clip_gradients(grads, max_norm: float = 1.0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Scale the whole gradient so its global L2 norm is at most max_norm."""
    total = 0.0
    for dw, db in grads:
        total += float((dw**2).sum() + (db**2).sum())
    norm = np.sqrt(total)
    if norm <= max_norm or norm == 0.0:
        return list(grads)
    scale = max_norm / norm
    return [(dw * scale, db * scale) for dw, db in grads]


def descend(net: Mlp, grads, lr: float) -> None:
    """One plain gradient-descent step (callers negate for ascent)."""
    for (dw, db), w, b in zip(grads, net.weights, net.biases):
        w -= lr * dw
        b -= lr * db


class Adam:
    """Per-parameter adaptive steps; plain fixed-step descent cannot track
    the constant-magnitude gradients of root-mean-square losses fast enough
    for the control tasks here."""

    def __init__(self, net: Mlp, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.net = net
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m = [(np.zeros_like(w), np.zeros_like(b))
                   for w, b in zip(net.weights, net.biases)]
        self._v = [(np.zeros_like(w), np.zeros_like(b))
                   for w, b in zip(net.weights, net.biases)]
        self._t = 0

    def step(self, grads) -> None:
        self._t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1**self._t
        corr2 = 1.0 - b2**self._t
        for (dw, db), (mw, mb), (vw, vb), w, b in zip(
            grads, self._m, self._v, self.net.weights, self.net.biases
        ):
            for g, m, v, p in ((dw, mw, vw, w), (db, mb, vb, b)):
                m *= b1
                m += (1 - b1) * g
                v *= b2
                v += (1 - b2) * g**2
                p -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


def save_checkpoint(net: Mlp, path) -> None:
    """Versioned binary layout, documented in the README:

    magic "FPLMLP1\\n" | u32 n_sizes | u32*sizes | u8 activation code |
    [bounded only: f64 low*out_dim, f64 high*out_dim] |
    f64 parameters, layer by layer, weights row-major then biases,
    all little-endian.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(net.layer_sizes)))
        fh.write(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
        fh.write(struct.pack("<B", _ACT_CODES[net.output_activation]))
        if net.output_activation == BOUNDED:
            fh.write(net.out_low.astype("<f8").tobytes())
            fh.write(net.out_high.astype("<f8").tobytes())
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> Mlp:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic)")
        (n_sizes,) = struct.unpack("<I", fh.read(4))
        sizes = struct.unpack(f"<{n_sizes}I", fh.read(4 * n_sizes))
        (act_code,) = struct.unpack("<B", fh.read(1))
        activation = _ACT_NAMES[act_code]
        out_dim = sizes[-1]
        low = high = None
        if activation == BOUNDED:
            low = np.frombuffer(fh.read(8 * out_dim), dtype="<f8").copy()
            high = np.frombuffer(fh.read(8 * out_dim), dtype="<f8").copy()
        net = Mlp(sizes, activation, out_low=low, out_high=high,
                  rng=np.random.default_rng(0))
        for li, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype="<f8")
            net.weights[li] = w.reshape(fan_out, fan_in).copy()
            net.biases[li] = np.frombuffer(fh.read(8 * fan_out), dtype="<f8").copy()
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes after parameters")
    return net
