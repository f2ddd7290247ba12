"""Feed-forward ReLU networks: representation, JSON format and inference."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numerics import ContractError, affine_apply

ACTIVATIONS = ("relu", "none")


class ModelFormatError(ValueError):
    pass


class NeuronId(NamedTuple):
    """A ReLU neuron: ``layer`` is its position in the full layer list."""

    layer: int
    index: int

    def __str__(self):
        return f"L{self.layer}N{self.index}"


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64).reshape(-1)
        if W.ndim != 2:
            raise ModelFormatError(f"weights must be a matrix, got shape {W.shape}")
        if b.shape[0] != W.shape[0]:
            raise ModelFormatError(
                f"bias length {b.shape[0]} != weight rows {W.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ModelFormatError(f"unknown activation {self.activation!r}")
        W.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def is_relu(self) -> bool:
        return self.activation == "relu"


class Network:
    """Immutable chain of affine layers, each optionally followed by a ReLU."""

    def __init__(self, layers):
        layers = tuple(layers)
        if not layers:
            raise ModelFormatError("a network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise ModelFormatError(
                    f"layer {i} expects {layers[i].in_dim} inputs but layer {i - 1} "
                    f"produces {layers[i - 1].out_dim}"
                )
        self.layers = layers
        self.input_dim = layers[0].in_dim
        self.output_dim = layers[-1].out_dim
        self.relu_layers = tuple(i for i, l in enumerate(layers) if l.is_relu)
        self.relu_count = sum(layers[i].out_dim for i in self.relu_layers)

    def neurons(self):
        """All ReLU neurons in layer-major order."""
        return [NeuronId(i, j) for i in self.relu_layers for j in range(self.layers[i].out_dim)]

    def __repr__(self):
        widths = "-".join(str(l.out_dim) for l in self.layers)
        return f"Network({self.input_dim}->{widths}, K={self.relu_count})"

    def to_dict(self):
        return {
            "layers": [
                {
                    "weights": l.weights.tolist(),
                    "bias": l.bias.tolist(),
                    "activation": l.activation,
                }
                for l in self.layers
            ]
        }

    def dumps(self) -> str:
        # repr round-trips float64 exactly
        return json.dumps(self.to_dict())


def load_network(document) -> Network:
    """Parse the model JSON format from ``bytes``/``str`` or an already-decoded dict."""
    if isinstance(document, (bytes, bytearray, str)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"invalid JSON: {exc}") from exc
    try:
        raw_layers = document["layers"]
    except (TypeError, KeyError) as exc:
        raise ModelFormatError("document must be an object with a 'layers' list") from exc
    layers = []
    for i, raw in enumerate(raw_layers):
        try:
            layers.append(
                Layer(raw["weights"], raw["bias"], str(raw.get("activation", "relu")).lower())
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelFormatError):
                raise ModelFormatError(f"layer {i}: {exc}") from exc
            raise ModelFormatError(f"layer {i}: malformed ({exc})") from exc
    return Network(layers)


def read_network(path) -> Network:
    with open(path, "rb") as fh:
        return load_network(fh.read())


def write_network(net: Network, path):
    with open(path, "w") as fh:
        fh.write(net.dumps())


def infer(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ContractError(f"input of shape {x.shape}, network expects ({net.input_dim},)")
    h = x
    for layer in net.layers:
        h = affine_apply(layer.weights, layer.bias, h)
        if layer.is_relu:
            h = np.maximum(h, 0.0)
    return h


def count_relus(net: Network) -> int:
    return net.relu_count
