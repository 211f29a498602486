"""
Fully-connected feed-forward networks with manual backpropagation
"""
import copy
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Sequence, Tuple

import numpy as np

from app.utils.exceptions import ShapeMismatchError

LEAKY_SLOPE = 0.01


class Activation(IntEnum):
    IDENTITY = 0
    LEAKY_RELU = 1
    SIGMOID = 2


def leaky_relu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def activate(tag: Activation, z: np.ndarray) -> np.ndarray:
    if tag == Activation.LEAKY_RELU:
        return leaky_relu(z)
    if tag == Activation.SIGMOID:
        return sigmoid(z)
    return z


def activation_grad(tag: Activation, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation z (a = activate(z))"""
    if tag == Activation.LEAKY_RELU:
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if tag == Activation.SIGMOID:
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass
class Layer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: Activation

    @property
    def shape(self) -> Tuple[int, int]:
        return self.weight.shape


@dataclass
class ModelParams:
    layers: List[Layer] = field(default_factory=list)

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weight.shape[1] != nxt.weight.shape[0]:
                raise ShapeMismatchError(
                    message=f"Layer widths do not chain: {prev.weight.shape} -> {nxt.weight.shape}"
                )

    @property
    def signature(self) -> Tuple[Tuple[int, int, int], ...]:
        return tuple((l.weight.shape[0], l.weight.shape[1], int(l.activation)) for l in self.layers)

    @property
    def input_size(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def output_size(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def parameter_count(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def arrays(self) -> List[np.ndarray]:
        """Weights and biases in a fixed order (w0, b0, w1, b1, ...)"""
        out = []
        for l in self.layers:
            out.extend([l.weight, l.bias])
        return out

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)


@dataclass
class Gradients:
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def arrays(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


@dataclass
class ForwardCache:
    inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    outputs: List[np.ndarray]


def init_params(
    sizes: Sequence[int],
    hidden_activation: Activation,
    output_activation: Activation,
    rng: np.random.Generator,
) -> ModelParams:
    """
    Uniform init in +-sqrt(6 / (fan_in + fan_out)) with zero biases

    Args:
        sizes: Layer widths, input first (e.g. [784, 512, 72])
        hidden_activation: Activation for every layer but the last
        output_activation: Activation for the last layer
        rng: Seeded generator
    """
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        tag = output_activation if k == len(sizes) - 2 else hidden_activation
        layers.append(Layer(weight=weight, bias=np.zeros(fan_out), activation=tag))
    return ModelParams(layers=layers)


def forward(params: ModelParams, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """
    Apply every layer: affine map then activation

    Args:
        params: Network parameters
        x: Inputs, shape (rows, input_size) or (input_size,)

    Returns:
        Tuple of (outputs, cache for backward)

    Raises:
        ShapeMismatchError: If x does not match the first layer width
    """
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if a.shape[1] != params.input_size:
        raise ShapeMismatchError(message=f"Input width {a.shape[1]} != {params.input_size}")
    cache = ForwardCache(inputs=[], pre_activations=[], outputs=[])
    for layer in params.layers:
        cache.inputs.append(a)
        z = a @ layer.weight + layer.bias
        a = activate(layer.activation, z)
        cache.pre_activations.append(z)
        cache.outputs.append(a)
    return a, cache


def predict(params: ModelParams, x: np.ndarray) -> np.ndarray:
    out, _ = forward(params, x)
    return out


def backward(params: ModelParams, cache: ForwardCache, grad_out: np.ndarray) -> Tuple[Gradients, np.ndarray]:
    """
    Backpropagate dLoss/dOutput through the network

    Returns:
        Tuple of (parameter gradients, dLoss/dInput)
    """
    delta = np.atleast_2d(grad_out)
    weights: List[np.ndarray] = [None] * len(params.layers)
    biases: List[np.ndarray] = [None] * len(params.layers)
    for k in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[k]
        delta = delta * activation_grad(layer.activation, cache.pre_activations[k], cache.outputs[k])
        weights[k] = cache.inputs[k].T @ delta
        biases[k] = delta.sum(axis=0)
        delta = delta @ layer.weight.T
    return Gradients(weights=weights, biases=biases), delta


def zero_gradients(params: ModelParams) -> Gradients:
    return Gradients(
        weights=[np.zeros_like(l.weight) for l in params.layers],
        biases=[np.zeros_like(l.bias) for l in params.layers],
    )
