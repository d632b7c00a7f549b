"""Network construction, forward propagation, and gradient contracts."""

import numpy as np
import pytest

from segiqr.errors import ConfigError, NumericError
from segiqr.nn import build_network, parse_arch_config

from conftest import tiny_arch
from oracles import fd_input_gradient, fd_logit_gradient, naive_forward


def _arch(layers, input_shape=(3, 32, 32), class_count=10):
    return parse_arch_config({
        "input_shape": list(input_shape),
        "class_count": class_count,
        "layers": layers,
    })


class TestBuildNetwork:
    def test_flat_dense_parameter_count(self):
        net = build_network(_arch([
            {"kind": "flatten"},
            {"kind": "dense", "in_features": 3072, "out_features": 10},
        ]))
        assert net.count_parameters() == 30730

    def test_conv_stack_parameter_count(self):
        # conv 8x3x3x3 + 8 biases, then dense 2048x10 + 10
        net = build_network(_arch([
            {"kind": "conv2d", "in_channels": 3, "out_channels": 8, "kernel": 3,
             "stride": 1, "padding": 1},
            {"kind": "relu"},
            {"kind": "maxpool2x2"},
            {"kind": "flatten"},
            {"kind": "dense", "in_features": 2048, "out_features": 10},
        ]))
        assert net.count_parameters() == 20714

    def test_shape_mismatch_names_layer(self):
        with pytest.raises(ConfigError, match="layer 1.*dense"):
            build_network(_arch([
                {"kind": "flatten"},
                {"kind": "dense", "in_features": 100, "out_features": 10},
            ]))

    def test_declared_parameter_count_checked(self):
        arch = _arch([
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 10},
        ])
        arch.parameter_count = 999
        with pytest.raises(ConfigError, match="999"):
            build_network(arch)

    def test_seeded_init_reproducible(self):
        a = build_network(tiny_arch(), seed=17)
        b = build_network(tiny_arch(), seed=17)
        for pa, pb in zip(a.params, b.params):
            for k in pa:
                assert (pa[k] == pb[k]).all()

    def test_odd_pool_input_rejected(self):
        with pytest.raises(ConfigError, match="even"):
            build_network(_arch([
                {"kind": "conv2d", "out_channels": 4, "kernel": 2},  # 31x31 out
                {"kind": "maxpool2x2"},
                {"kind": "flatten"},
                {"kind": "dense", "out_features": 10},
            ]))


class TestForward:
    def test_zero_weight_network_uniform_probs(self):
        net = build_network(_arch([
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 10},
            {"kind": "softmax"},
        ]))
        net.params[1]["weight"][:] = 0.0
        x = np.random.default_rng(0).uniform(0, 1, (5, 3, 32, 32)).astype(np.float32)
        res = net.forward(x)
        assert np.allclose(res.probs, 0.1, atol=1e-7)

    def test_forward_deterministic_bitwise(self, tiny_net, rng):
        x = rng.uniform(0, 1, (6, 3, 8, 8)).astype(np.float32)
        a = tiny_net.forward(x, taps=[0, 2])
        b = tiny_net.forward(x, taps=[0, 2])
        assert (a.logits == b.logits).all()
        assert (a.probs == b.probs).all()
        for k in a.trace:
            assert (a.trace[k] == b.trace[k]).all()

    def test_single_dense_matches_matrix_product(self, rng):
        net = build_network(_arch([
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 10},
        ]), seed=5)
        x = rng.uniform(0, 1, (4, 3, 32, 32)).astype(np.float32)
        logits = net.forward(x).logits
        w = net.params[1]["weight"].astype(np.float64)
        b = net.params[1]["bias"].astype(np.float64)
        expect = x.reshape(4, -1).astype(np.float64) @ w + b
        assert np.allclose(logits, expect, atol=1e-4)

    def test_conv_matches_naive_oracle(self, tiny_net, rng):
        x = rng.uniform(0, 1, (3, 3, 8, 8)).astype(np.float32)
        logits = tiny_net.forward(x).logits
        expect = naive_forward(tiny_net, x.astype(np.float64))
        assert np.allclose(logits, expect, rtol=1e-4, atol=1e-5)

    def test_softmax_rows_sum_to_one(self, tiny_net, rng):
        x = rng.uniform(0, 1, (9, 3, 8, 8)).astype(np.float32)
        probs = tiny_net.forward(x).probs
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-5

    def test_trace_contains_exactly_requested_layers(self, tiny_net, rng):
        x = rng.uniform(0, 1, (2, 3, 8, 8)).astype(np.float32)
        res = tiny_net.forward(x, taps=[1, 4])
        assert set(res.trace) == {1, 4}
        assert res.trace[4].shape == (2, 80)

    def test_unknown_tap_rejected(self, tiny_net, rng):
        x = rng.uniform(0, 1, (1, 3, 8, 8)).astype(np.float32)
        with pytest.raises(ConfigError, match="tap"):
            tiny_net.forward(x, taps=[99])

    def test_non_finite_input_rejected(self, tiny_net):
        x = np.full((1, 3, 8, 8), np.nan, dtype=np.float32)
        with pytest.raises(NumericError):
            tiny_net.forward(x)

    def test_bad_shape_rejected(self, tiny_net, rng):
        with pytest.raises(ConfigError, match="shape"):
            tiny_net.forward(rng.uniform(0, 1, (2, 3, 8, 9)).astype(np.float32))

    def test_pass_counter_counts_samples(self, tiny_net, rng):
        tiny_net.pass_counter.reset()
        x = rng.uniform(0, 1, (7, 3, 8, 8)).astype(np.float32)
        tiny_net.forward(x)
        tiny_net.forward(x[:2])
        assert tiny_net.pass_counter.value == 9


class TestInputGradient:
    def test_saturated_softmax_gradient_vanishes(self):
        net = build_network(_arch([
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 10},
            {"kind": "softmax"},
        ]), seed=0)
        # huge margin for the true class: loss is flat to float precision
        net.params[1]["weight"][:] = 0.0
        net.params[1]["bias"][:] = 0.0
        net.params[1]["bias"][3] = 60.0
        x = np.random.default_rng(1).uniform(0, 1, (2, 3, 32, 32)).astype(np.float32)
        g = net.input_gradient(x, np.array([3, 3]))
        assert np.abs(g).max() < 1e-3

    def test_linear_model_analytic_gradient(self, rng):
        net = build_network(_arch([
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 10},
        ]), seed=2)
        x = rng.uniform(0, 1, (3, 3, 32, 32)).astype(np.float32)
        y = np.array([0, 4, 9])
        g = net.input_gradient(x, y)
        w = net.params[1]["weight"].astype(np.float64)
        logits = x.reshape(3, -1).astype(np.float64) @ w + net.params[1]["bias"]
        z = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
        p[np.arange(3), y] -= 1.0
        expect = (p @ w.T).reshape(x.shape)
        assert np.allclose(g, expect, rtol=1e-4, atol=1e-6)

    def test_matches_finite_differences(self, tiny_net, rng):
        x = rng.uniform(0.2, 0.8, (2, 3, 8, 8)).astype(np.float32)
        y = np.array([1, 3])
        g = tiny_net.input_gradient(x, y)
        flat = np.abs(g).ravel()
        # sample well-conditioned coordinates: tiny true gradients make the
        # relative-error denominator meaningless
        candidates = np.flatnonzero(flat > np.quantile(flat, 0.5))
        picks = rng.choice(candidates, size=25, replace=False)
        coords = [np.unravel_index(i, g.shape) for i in picks]
        fd = fd_input_gradient(tiny_net, x, y, coords)
        for c, ref in fd.items():
            rel = abs(g[c] - ref) / max(abs(ref), abs(g[c]), 1e-8)
            assert rel <= 1e-3, f"coord {c}: analytic {g[c]}, fd {ref}"

    def test_label_out_of_range(self, tiny_net, rng):
        x = rng.uniform(0, 1, (1, 3, 8, 8)).astype(np.float32)
        with pytest.raises(ConfigError, match="labels"):
            tiny_net.input_gradient(x, np.array([4]))


class TestLogitGradient:
    def test_linear_model_row_of_w(self, rng):
        net = build_network(_arch([
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 10},
        ]), seed=7)
        x = rng.uniform(0, 1, (2, 3, 32, 32)).astype(np.float32)
        g = net.logit_gradient(x, 4)
        w_row = net.params[1]["weight"][:, 4]
        for i in range(2):
            assert np.allclose(g[i].ravel(), w_row, atol=1e-6)

    def test_softmax_prob_gradients_sum_to_zero(self, tiny_net, rng):
        # sum over classes of grad(softmax_k) is grad of a constant
        x = rng.uniform(0.3, 0.7, (1, 3, 8, 8)).astype(np.float32)
        res = tiny_net.forward(x)
        probs = res.probs[0].astype(np.float64)
        total = np.zeros((1, 3, 8, 8), dtype=np.float64)
        logit_grads = [tiny_net.logit_gradient(x, k) for k in range(4)]
        for k in range(4):
            # d softmax_k / dx = p_k * (grad_k - sum_j p_j grad_j)
            mix = sum(probs[j] * logit_grads[j] for j in range(4))
            total += probs[k] * (logit_grads[k] - mix)
        assert np.abs(total).max() < 1e-6

    def test_matches_finite_differences(self, tiny_net, rng):
        x = rng.uniform(0.2, 0.8, (2, 3, 8, 8)).astype(np.float32)
        g = tiny_net.logit_gradient(x, 2)
        flat = np.abs(g).ravel()
        candidates = np.flatnonzero(flat > np.quantile(flat, 0.5))
        picks = rng.choice(candidates, size=25, replace=False)
        coords = [np.unravel_index(i, g.shape) for i in picks]
        fd = fd_logit_gradient(tiny_net, x, 2, coords)
        for c, ref in fd.items():
            rel = abs(g[c] - ref) / max(abs(ref), abs(g[c]), 1e-8)
            assert rel <= 1e-3

    def test_class_out_of_range(self, tiny_net, rng):
        x = rng.uniform(0, 1, (1, 3, 8, 8)).astype(np.float32)
        with pytest.raises(ConfigError, match="class"):
            tiny_net.logit_gradient(x, 11)
