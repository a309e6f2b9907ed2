"""Minimal MLP with hand-written reverse-mode gradients, plus Adam.

No learning framework: correctness of every gradient path is pinned by
finite-difference tests rather than by construction. Hidden layers are
rectified-linear, the output layer is affine.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatchError(ValueError):
    """Parameter lists with incompatible shapes."""


class NonFiniteGradientError(FloatingPointError):
    """A gradient update produced NaN or Inf."""


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class MLP:
    """Fully connected network; parameters are plain numpy arrays."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            # He init for the relu hidden stack; the last layer gets the
            # same scheme, which keeps initial outputs small enough.
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray):
        """Returns (output, cache) with the per-layer inputs kept for backward."""
        h = x
        inputs = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            h = relu(z) if i < len(self.weights) - 1 else z
        return h, inputs

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (param_grads, grad_input) where param_grads matches
        :meth:`parameters` order.
        """
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        g = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = cache[i]
            grads_w[i] = h_in.T @ g
            grads_b[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                # gate through the relu that produced h_in
                g = g * (h_in > 0)
        out = []
        for gw, gb in zip(grads_w, grads_b):
            out.append(gw)
            out.append(gb)
        return out, g

    def copy_from(self, other: "MLP") -> None:
        for dst, src in zip(self.parameters(), other.parameters()):
            dst[...] = src


def polyak_update(target: MLP, source: MLP, rho: float) -> None:
    """target <- rho * target + (1 - rho) * source, elementwise."""
    tp, sp = target.parameters(), source.parameters()
    if len(tp) != len(sp) or any(a.shape != b.shape for a, b in zip(tp, sp)):
        raise ShapeMismatchError("target and source parameter shapes differ")
    for t, s in zip(tp, sp):
        t *= rho
        t += (1.0 - rho) * s


def get_flat(params: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def set_flat(params: list[np.ndarray], flat: np.ndarray) -> None:
    i = 0
    for p in params:
        p[...] = flat[i : i + p.size].reshape(p.shape)
        i += p.size
    if i != flat.size:
        raise ShapeMismatchError(f"flat vector has {flat.size} entries, need {i}")


class Adam:
    """Adaptive moment estimation over a fixed list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ShapeMismatchError("gradient list length mismatch")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError("non-finite gradient encountered")
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"t": np.array(self.t)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"m{i}"] = m
            out[f"v{i}"] = v
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.t = int(arrays["t"])
        for i in range(len(self.m)):
            self.m[i][...] = arrays[f"m{i}"]
            self.v[i][...] = arrays[f"v{i}"]
