"""Tests for the dense network, its gradients and the optimizer."""

import math

import numpy as np
import pytest

from src.errors import ContractError
from src.models import Activation
from src.surrogate import (
    AdamW,
    DenseLayer,
    WarmupCosineSchedule,
    clip_grad_norm,
    count_parameters,
    forward,
    init_network,
    loss_and_grad,
    parameters,
)
from src.surrogate.optimizer import global_norm


def _gelu(z: float) -> float:
    return 0.5 * z * (1.0 + math.tanh(math.sqrt(2.0 / math.pi) * (z + 0.044715 * z**3)))


def _numeric_grad(layers, x, y, activation, step=1e-5):
    grads = []
    for p in parameters(layers):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + step
            plus, _ = loss_and_grad(layers, x, y, activation)
            p[idx] = orig - step
            minus, _ = loss_and_grad(layers, x, y, activation)
            p[idx] = orig
            g[idx] = (plus - minus) / (2 * step)
        grads.append(g)
    return grads


class TestForward:
    """Tests for the forward pass."""

    def test_identity_network(self):
        """A single identity layer returns its input."""
        layers = [DenseLayer(np.eye(3), np.zeros(3))]
        x = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(forward(layers, x), x)

    def test_zero_weights_give_last_bias(self):
        """With zero weights the output is the final bias."""
        layers = init_network([3, 4, 2], seed=0)
        for layer in layers:
            layer.weight[:] = 0.0
        layers[-1].bias[:] = [1.5, -2.0]
        out = forward(layers, np.ones((5, 3)))
        np.testing.assert_array_equal(out, np.tile([1.5, -2.0], (5, 1)))

    def test_hand_computed_gelu(self):
        """A 1-2-1 GELU network matches a scalar hand computation."""
        w1, b1 = np.array([[0.5, -1.0]]), np.array([0.1, 0.2])
        w2, b2 = np.array([[2.0], [0.5]]), np.array([-0.3])
        layers = [DenseLayer(w1, b1), DenseLayer(w2, b2)]
        x = 0.7
        h1 = _gelu(0.5 * x + 0.1)
        h2 = _gelu(-1.0 * x + 0.2)
        expected = 2.0 * h1 + 0.5 * h2 - 0.3
        assert forward(layers, np.array([[x]]))[0, 0] == pytest.approx(expected, rel=1e-12)

    def test_relu_hidden_layer(self):
        """ReLU zeroes negative pre-activations."""
        layers = [DenseLayer(np.array([[1.0, -1.0]]), np.zeros(2)),
                  DenseLayer(np.array([[1.0], [1.0]]), np.zeros(1))]
        out = forward(layers, np.array([[2.0], [-3.0]]), Activation.RELU)
        np.testing.assert_array_equal(out[:, 0], [2.0, 3.0])

    def test_wrong_feature_count(self):
        """Inputs with the wrong width are a contract error."""
        layers = init_network([3, 4, 1], seed=0)
        with pytest.raises(ContractError):
            forward(layers, np.ones((2, 2)))

    def test_one_dimensional_input(self):
        """Inputs must be 2-D."""
        layers = init_network([3, 1], seed=0)
        with pytest.raises(ContractError):
            forward(layers, np.ones(3))

    def test_init_deterministic(self):
        """Same widths and seed give the same weights."""
        a = init_network([3, 8, 1], seed=4)
        b = init_network([3, 8, 1], seed=4)
        for pa, pb in zip(parameters(a), parameters(b)):
            np.testing.assert_array_equal(pa, pb)
        assert count_parameters(a) == 3 * 8 + 8 + 8 + 1

    def test_default_precision_is_float32(self):
        """Parameters default to float32 and the forward pass stays in it."""
        layers = init_network([3, 8, 1], seed=2)
        assert all(p.dtype == np.float32 for p in parameters(layers))
        assert forward(layers, np.ones((4, 3))).dtype == np.float32

    def test_float32_matches_float64(self):
        """The same seed in both precisions gives the same outputs to float32 rounding."""
        x = np.random.default_rng(0).normal(size=(16, 3))
        single = forward(init_network([3, 16, 16, 1], seed=9), x)
        double = forward(init_network([3, 16, 16, 1], seed=9, dtype="float64"), x)
        assert double.dtype == np.float64
        np.testing.assert_allclose(single, double, rtol=1e-5, atol=1e-6)


class TestGradients:
    """Tests for loss_and_grad."""

    def test_single_neuron_closed_form(self):
        """A linear neuron matches the analytic MSE gradient."""
        w, b = 1.3, -0.4
        layers = [DenseLayer(np.array([[w]]), np.array([b]))]
        x = np.array([[0.5], [1.0], [-2.0]])
        y = np.array([1.0, 0.0, 2.0])
        loss, grads = loss_and_grad(layers, x, y)
        r = w * x[:, 0] + b - y
        assert loss == pytest.approx(np.mean(r * r))
        assert grads[0][0, 0] == pytest.approx(2 * np.mean(r * x[:, 0]))
        assert grads[1][0] == pytest.approx(2 * np.mean(r))

    def test_finite_differences(self):
        """20 random configurations agree with central differences to 1e-5 relative."""
        rng = np.random.default_rng(123)
        checked = 0
        for trial in range(20):
            depth = int(rng.integers(1, 4))
            widths = [int(rng.integers(1, 5))] + [int(rng.integers(2, 6)) for _ in range(depth)]
            widths.append(int(rng.integers(1, 3)))
            layers = init_network(widths, seed=trial, dtype="float64")
            for layer in layers:
                layer.bias[:] = rng.normal(0.0, 0.1, size=layer.bias.shape)
            x = rng.normal(size=(int(rng.integers(1, 7)), widths[0]))
            y = rng.normal(size=(x.shape[0], widths[-1]))

            _, analytic = loss_and_grad(layers, x, y, Activation.GELU)
            numeric = _numeric_grad(layers, x, y, Activation.GELU)
            for ga, gn in zip(analytic, numeric):
                mask = np.abs(ga) >= 1e-8
                scale = np.maximum(np.abs(ga), np.abs(gn))
                err = np.abs(ga - gn)
                assert np.all(err[mask] <= 1e-5 * scale[mask] + 1e-10)
                checked += int(mask.sum())
        assert checked > 100

    def test_gradients_keep_precision(self):
        """float32 parameters get float32 gradients."""
        layers = init_network([3, 5, 1], seed=1)
        _, grads = loss_and_grad(layers, np.ones((4, 3)), np.zeros(4))
        assert all(g.dtype == np.float32 for g in grads)

    def test_gradient_order_matches_parameters(self):
        """Gradients line up with parameters() shapes."""
        layers = init_network([3, 5, 2], seed=1)
        _, grads = loss_and_grad(layers, np.ones((4, 3)), np.zeros((4, 2)))
        assert [g.shape for g in grads] == [p.shape for p in parameters(layers)]

    def test_target_mismatch(self):
        """Targets that do not match the output size are rejected."""
        layers = init_network([2, 1], seed=0)
        with pytest.raises(ContractError):
            loss_and_grad(layers, np.ones((3, 2)), np.ones(4))

    def test_empty_batch(self):
        """An empty batch is rejected."""
        layers = init_network([2, 1], seed=0)
        with pytest.raises(ContractError):
            loss_and_grad(layers, np.ones((0, 2)), np.ones(0))


class TestAdamW:
    """Tests for the optimizer step."""

    def test_first_step(self):
        """First step moves by lr * (1 + wd * p) against the gradient sign."""
        p = np.array([3.0])
        opt = AdamW([p], lr=1e-3, weight_decay=0.1)
        opt.step([np.array([0.5])])
        assert p[0] == pytest.approx(2.9987, abs=1e-6)

    def test_zero_gradient_only_decays(self):
        """With zero gradient only decoupled weight decay acts."""
        p = np.array([2.0, -2.0])
        opt = AdamW([p], lr=0.01, weight_decay=0.5)
        opt.step([np.zeros(2)])
        np.testing.assert_allclose(p, [1.99, -1.99])

    def test_lr_override(self):
        """A per-step learning rate overrides the default."""
        p = np.array([1.0])
        AdamW([p], lr=1.0).step([np.array([1.0])], lr=0.0)
        assert p[0] == 1.0

    def test_minimizes_quadratic(self):
        """Repeated steps drive a quadratic to its minimum."""
        p = np.array([5.0, -3.0])
        opt = AdamW([p], lr=0.1)
        for _ in range(500):
            opt.step([2.0 * (p - 1.0)])
        np.testing.assert_allclose(p, [1.0, 1.0], atol=5e-2)

    def test_keeps_float32_state(self):
        """Updates and moments stay in the parameter precision."""
        p = np.array([5.0, -3.0], dtype=np.float32)
        opt = AdamW([p], lr=0.1, weight_decay=0.01)
        opt.step([2.0 * (p - 1.0)])
        assert p.dtype == np.float32
        assert opt.m[0].dtype == np.float32
        assert opt.v[0].dtype == np.float32


class TestSchedule:
    """Tests for the warmup-cosine schedule."""

    def test_exact_values(self):
        """Linear warmup, then cosine decay to zero at the last epoch."""
        schedule = WarmupCosineSchedule(peak_lr=1.0, warmup_epochs=4, total_epochs=12)
        assert schedule(0) == 0.0
        assert schedule(1) == 0.25
        assert schedule(2) == 0.5
        assert schedule(3) == 0.75
        assert schedule(4) == 1.0
        assert schedule(8) == pytest.approx(0.5)
        assert schedule(12) == pytest.approx(0.0, abs=1e-15)

    def test_cosine_shape(self):
        """Decay follows 0.5 * (1 + cos(pi * progress))."""
        schedule = WarmupCosineSchedule(peak_lr=5e-4, warmup_epochs=10, total_epochs=500)
        for epoch in (10, 100, 255, 499):
            progress = (epoch - 10) / 490
            expected = 5e-4 * 0.5 * (1 + math.cos(math.pi * progress))
            assert schedule(epoch) == pytest.approx(expected, rel=1e-12)

    def test_clamped_after_end(self):
        """Epochs past the end stay at zero."""
        schedule = WarmupCosineSchedule(peak_lr=1.0, warmup_epochs=1, total_epochs=5)
        assert schedule(9) == pytest.approx(0.0, abs=1e-15)

    def test_monotone_after_warmup(self):
        """The learning rate never rises after warmup."""
        schedule = WarmupCosineSchedule(peak_lr=1.0, warmup_epochs=3, total_epochs=40)
        values = [schedule(e) for e in range(3, 41)]
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestClipping:
    """Tests for global gradient-norm clipping."""

    def test_scales_to_max_norm(self):
        """Large gradients are scaled to the max norm."""
        grads = [np.array([3.0]), np.array([[4.0]])]
        norm = clip_grad_norm(grads, 1.0)
        assert norm == pytest.approx(5.0)
        assert global_norm(grads) == pytest.approx(1.0)
        assert grads[0][0] == pytest.approx(0.6)

    def test_small_gradients_untouched(self):
        """Gradients within the limit are left alone."""
        grads = [np.array([0.1, 0.2])]
        clip_grad_norm(grads, 1.0)
        np.testing.assert_array_equal(grads[0], [0.1, 0.2])
