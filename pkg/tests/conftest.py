import numpy as np
import pytest

from segiqr.nn import build_network, parse_arch_config


def tiny_arch(input_shape=(3, 8, 8), class_count=4, with_bn=True):
    layers = [
        {"kind": "conv2d", "out_channels": 5, "kernel": 3, "padding": 1},
    ]
    if with_bn:
        layers.append({"kind": "batchnorm-inference", "num_features": 5})
    layers += [
        {"kind": "relu"},
        {"kind": "maxpool2x2"},
        {"kind": "flatten"},
        {"kind": "dense", "out_features": class_count},
        {"kind": "softmax"},
    ]
    return parse_arch_config({
        "input_shape": list(input_shape),
        "class_count": class_count,
        "layers": layers,
    })


@pytest.fixture
def tiny_net():
    net = build_network(tiny_arch(), seed=3)
    # non-trivial batchnorm statistics so the affine path is exercised
    rng = np.random.default_rng(9)
    bn = net.params[1]
    bn["mean"] = rng.normal(0, 0.3, bn["mean"].shape).astype(np.float32)
    bn["var"] = rng.uniform(0.5, 2.0, bn["var"].shape).astype(np.float32)
    bn["gamma"] = rng.uniform(0.5, 1.5, bn["gamma"].shape).astype(np.float32)
    bn["beta"] = rng.normal(0, 0.2, bn["beta"].shape).astype(np.float32)
    return net


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
