"""Feed-forward network with hand-written reverse-mode gradients."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..models import Activation

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


@dataclass
class DenseLayer:
    """Affine map x @ weight + bias."""
    weight: np.ndarray
    bias: np.ndarray

    @property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.weight, self.bias


def init_network(widths: list[int], seed: int, dtype: str = "float32") -> list[DenseLayer]:
    """Glorot-normal weights and zero biases.

    Draws are made in float64 and cast to dtype.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        std = math.sqrt(2.0 / (fan_in + fan_out))
        layers.append(DenseLayer(
            weight=rng.normal(0.0, std, size=(fan_in, fan_out)).astype(dtype),
            bias=np.zeros(fan_out, dtype=dtype),
        ))
    return layers


def parameters(layers: list[DenseLayer]) -> list[np.ndarray]:
    """Parameter arrays in a fixed order (weight, bias per layer)."""
    return [arr for layer in layers for arr in layer.arrays]


def count_parameters(layers: list[DenseLayer]) -> int:
    return sum(arr.size for arr in parameters(layers))


def copy_network(layers: list[DenseLayer]) -> list[DenseLayer]:
    return [DenseLayer(layer.weight.copy(), layer.bias.copy()) for layer in layers]


def activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    return 0.5 * z * (1.0 + np.tanh(_GELU_C * (z + _GELU_K * z**3)))


def activation_grad(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return (z > 0).astype(z.dtype)
    t = np.tanh(_GELU_C * (z + _GELU_K * z**3))
    return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_K * z * z)


def _check_inputs(layers: list[DenseLayer], x: np.ndarray) -> None:
    if not layers:
        raise ContractError("network has no layers")
    if x.ndim != 2:
        raise ContractError(f"inputs must be 2-D (rows, features), got shape {x.shape}")
    if x.shape[1] != layers[0].weight.shape[0]:
        raise ContractError(
            f"network expects {layers[0].weight.shape[0]} features, got {x.shape[1]}"
        )
    for prev, nxt in zip(layers[:-1], layers[1:]):
        if prev.weight.shape[1] != nxt.weight.shape[0]:
            raise ContractError("consecutive layer shapes do not chain")


def forward(
    layers: list[DenseLayer],
    x: np.ndarray,
    activation: Activation = Activation.GELU,
    return_cache: bool = False,
):
    """Evaluate the network; the last layer is linear.

    With return_cache the (layer input, pre-activation) pairs needed by the
    backward pass are returned as well.
    """
    x = np.asarray(x, dtype=layers[0].weight.dtype if layers else float)
    _check_inputs(layers, x)

    a = x
    cache = []
    last = len(layers) - 1
    for i, layer in enumerate(layers):
        z = a @ layer.weight + layer.bias
        cache.append((a, z))
        a = z if i == last else activate(z, activation)

    if return_cache:
        return a, cache
    return a


def loss_and_grad(
    layers: list[DenseLayer],
    x: np.ndarray,
    y: np.ndarray,
    activation: Activation = Activation.GELU,
) -> tuple[float, list[np.ndarray]]:
    """Mean-squared error and its gradient, ordered like parameters()."""
    out, cache = forward(layers, x, activation, return_cache=True)
    y = np.asarray(y, dtype=out.dtype).reshape(out.shape) if np.size(y) == out.size else None
    if y is None:
        raise ContractError(f"targets do not match outputs of shape {out.shape}")
    if out.size == 0:
        raise ContractError("batch is empty")

    residual = out - y
    loss = float(np.mean(residual * residual))

    delta = 2.0 * residual / residual.size
    grads: list[np.ndarray] = []
    last = len(layers) - 1
    for i in range(last, -1, -1):
        a_in, z = cache[i]
        if i != last:
            delta = delta * activation_grad(z, activation)
        grads.append(delta.sum(axis=0))
        grads.append(a_in.T @ delta)
        delta = delta @ layers[i].weight.T

    grads.reverse()
    return loss, grads
