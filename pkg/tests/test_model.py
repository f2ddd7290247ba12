import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relubab.harness import random_network
from relubab.model import (
    Layer,
    ModelFormatError,
    Network,
    NeuronId,
    count_relus,
    infer,
    load_network,
    read_network,
    write_network,
)
from relubab.numerics import ContractError

from conftest import tiny_net_a


def test_minimal_document():
    doc = {
        "layers": [
            {"weights": [[1]], "bias": [0], "activation": "relu"},
            {"weights": [[1]], "bias": [0], "activation": "none"},
        ]
    }
    net = load_network(json.dumps(doc).encode())
    assert (net.relu_count, net.input_dim, net.output_dim) == (1, 1, 1)


def test_bias_length_mismatch():
    doc = {"layers": [{"weights": [[1, 2], [3, 4]], "bias": [0], "activation": "relu"}]}
    with pytest.raises(ModelFormatError):
        load_network(doc)


def test_layer_chain_mismatch():
    with pytest.raises(ModelFormatError):
        Network([Layer(np.ones((3, 2)), np.zeros(3)), Layer(np.ones((1, 4)), np.zeros(1), "none")])


def test_unknown_activation_and_bad_json():
    with pytest.raises(ModelFormatError):
        load_network({"layers": [{"weights": [[1]], "bias": [0], "activation": "tanh"}]})
    with pytest.raises(ModelFormatError):
        load_network(b"{not json")
    with pytest.raises(ModelFormatError):
        load_network({"nope": []})


def mnist_l2_document():
    rng = np.random.default_rng(0)
    shapes = [(256, 784), (256, 256), (10, 256)]
    acts = ["relu", "relu", "none"]
    return {
        "layers": [
            {"weights": rng.normal(size=s).tolist(), "bias": np.zeros(s[0]).tolist(), "activation": a}
            for s, a in zip(shapes, acts)
        ]
    }


def test_mnist_l2_shape_has_512_relus():
    net = load_network(mnist_l2_document())
    assert count_relus(net) == 512
    assert net.input_dim == 784 and net.output_dim == 10


def test_tiny_net_inference():
    net = tiny_net_a()
    assert np.array_equal(infer(net, [0.5]), [0.5])
    assert np.array_equal(infer(net, [-0.7]), [0.0])
    assert np.array_equal(infer(net, [0.0]), [0.0])
    assert count_relus(net) == 1


def test_no_relu_network():
    net = Network([Layer(np.ones((2, 2)), np.zeros(2), "none"), Layer(np.ones((1, 2)), np.zeros(1), "none")])
    assert count_relus(net) == 0
    assert net.neurons() == []


def test_infer_shape_contract():
    with pytest.raises(ContractError):
        infer(tiny_net_a(), [1.0, 2.0])


def test_neurons_are_layer_major():
    rng = np.random.default_rng(1)
    net = random_network(rng, 2, [2, 3], 2)
    assert net.neurons() == [NeuronId(0, 0), NeuronId(0, 1), NeuronId(1, 0), NeuronId(1, 1), NeuronId(1, 2)]
    assert str(NeuronId(1, 2)) == "L1N2"


def test_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(2)
    net = random_network(rng, 4, [5, 3], 3)
    path = tmp_path / "m.json"
    write_network(net, path)
    back = read_network(path)
    for a, b in zip(net.layers, back.layers):
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)
        assert a.activation == b.activation


def naive_infer(doc, x):
    h = list(x)
    for layer in doc["layers"]:
        out = []
        for row, b in zip(layer["weights"], layer["bias"]):
            s = b
            for w, v in zip(row, h):
                s += w * v
            if layer["activation"] == "relu":
                s = max(s, 0.0)
            out.append(s)
        h = out
    return h


@given(st.integers(0, 2**32 - 1))
def test_infer_matches_naive_loop(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), [int(rng.integers(1, 6)) for _ in range(2)], 3)
    x = rng.uniform(-2, 2, net.input_dim)
    assert np.allclose(infer(net, x), naive_infer(net.to_dict(), x), atol=1e-12)


def test_layers_are_read_only():
    net = tiny_net_a()
    with pytest.raises(ValueError):
        net.layers[0].weights[0, 0] = 2.0
