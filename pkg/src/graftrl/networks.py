"""
Multilayer perceptrons with hand-derived gradients, plus Adam.

Inputs are batches of row vectors, shape (batch, in). Hidden layers use
ReLU; the output activation is either identity (critics) or tanh (actors).
All parameters are float64.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DimensionError, InvalidInputError

ACTIVATIONS = ('identity', 'tanh')


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, 0.0)


class Mlp:
    """
    Fully connected network ``sizes[0] -> ... -> sizes[-1]``.

    Hidden weights start uniform in +-1/sqrt(fan_in); the final layer starts
    uniform in +-``final_init``.

    Args:
        sizes: layer widths, input first
        output_activation: 'identity' or 'tanh'
        rng: generator used for initialization
        final_init: half-width of the final layer's init range
    """

    def __init__(
        self,
        sizes: Sequence[int],
        output_activation: str = 'identity',
        rng: Optional[np.random.Generator] = None,
        final_init: float = 3e-3,
    ):
        if len(sizes) < 2 or any(n < 1 for n in sizes):
            raise InvalidInputError(f"invalid layer sizes {sizes}")
        if output_activation not in ACTIVATIONS:
            raise InvalidInputError(f"unknown output activation {output_activation!r}")
        rng = rng if rng is not None else np.random.default_rng()
        self.sizes = tuple(int(n) for n in sizes)
        self.output_activation = output_activation
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        n_layers = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            bound = final_init if i == n_layers - 1 else 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def params(self) -> List[np.ndarray]:
        """Parameters in checkpoint order: W0, b0, W1, b1, ..."""
        out: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @property
    def input_size(self) -> int:
        return self.sizes[0]

    @property
    def output_size(self) -> int:
        return self.sizes[-1]

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_size:
            raise DimensionError(f"expected input width {self.input_size}, got shape {x.shape}")
        return x

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """Return the output and the pre-activations needed for backward."""
        h = self._check_input(x)
        cache = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            cache.append(z)
            if i < last:
                h = relu(z)
            elif self.output_activation == 'tanh':
                h = np.tanh(z)
            else:
                h = z
        return h, cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(
        self, cache: List[np.ndarray], grad_out: np.ndarray
    ) -> Tuple[List[np.ndarray], np.ndarray]:
        """Gradients w.r.t. params (checkpoint order) and w.r.t. the input."""
        zs = cache[1:]
        last = len(self.weights) - 1
        delta = np.asarray(grad_out, dtype=np.float64)
        if self.output_activation == 'tanh':
            delta = delta * (1.0 - np.tanh(zs[-1]) ** 2)
        grads: List[np.ndarray] = [np.empty(0)] * (2 * len(self.weights))
        for i in range(last, -1, -1):
            h_in = cache[0] if i == 0 else relu(zs[i - 1])
            grads[2 * i] = h_in.T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * relu_grad(zs[i - 1])
        return grads, delta

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.sizes = self.sizes
        clone.output_activation = self.output_activation
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def load_params(self, params: Sequence[np.ndarray]) -> None:
        own = self.params
        if len(params) != len(own):
            raise DimensionError(f"expected {len(own)} parameter arrays, got {len(params)}")
        for dst, src in zip(own, params):
            if dst.shape != np.shape(src):
                raise DimensionError(f"parameter shape {np.shape(src)} does not match {dst.shape}")
            dst[...] = src

    def soft_update_from(self, source: "Mlp", tau: float) -> None:
        """theta <- tau * source + (1 - tau) * theta, in place."""
        for dst, src in zip(self.params, source.params):
            dst *= (1.0 - tau)
            dst += tau * src


class Adam:
    """Adam over a fixed list of parameter arrays, updated in place."""

    def __init__(
        self,
        params: List[np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        """Descend along ``grads``."""
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
