"""Backprop of the hand-written MLP against central finite differences."""

import numpy as np
import pytest

from mopelab.buffer import TransitionBatch
from mopelab.dynamics import EnsembleModel, ModelConfig, memberNll, nllLoss
from mopelab.errors import ShapeError
from mopelab.nets import Adam, FeedforwardNet, swish, swishGrad
from mopelab.rng import RngStream


def _numericGrad(fn, params, h=1e-6):
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=['multi_index'])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            up = fn()
            p[idx] = old - h
            down = fn()
            p[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


class TestSwish:

    def test_derivative(self):
        x = np.linspace(-8, 8, 401)
        h = 1e-6
        numeric = (swish(x + h) - swish(x - h)) / (2 * h)
        np.testing.assert_allclose(swishGrad(x), numeric, atol=1e-8)

    def test_values(self):
        np.testing.assert_allclose(swish(np.array([0.0])), [0.0])
        np.testing.assert_allclose(swish(np.array([50.0])), [50.0])


class TestFeedforwardGradients:

    def test_random_networks(self):
        rng = np.random.default_rng(42)
        for trial in range(20):
            inDim = int(rng.integers(1, 4))
            outDim = int(rng.integers(1, 4))
            hidden = [int(h) for h in rng.integers(2, 6, size=int(rng.integers(1, 3)))]
            net = FeedforwardNet(inDim, hidden, outDim, RngStream(trial))
            x = rng.normal(size=(int(rng.integers(1, 6)), inDim))
            weights = rng.normal(size=(x.shape[0], outDim))

            def loss():
                out, _ = net.forward(x)
                return float(np.sum(weights * np.tanh(out)))

            out, cache = net.forward(x)
            analytic = net.backward(weights * (1.0 - np.tanh(out)**2), cache)
            numeric = _numericGrad(loss, net.params)
            for a, n in zip(analytic, numeric):
                np.testing.assert_allclose(a, n, rtol=1e-4, atol=1e-7)

    def test_zero_output_layer(self):
        net = FeedforwardNet(3, [4], 2, RngStream(0), zeroOutput=True)
        out, _ = net.forward(np.ones((5, 3)))
        np.testing.assert_array_equal(out, 0.0)

    def test_bad_input_shape(self):
        net = FeedforwardNet(3, [4], 2, RngStream(0))
        with pytest.raises(ShapeError):
            net.forward(np.ones((5, 2)))


class TestNllGradients:

    def test_against_finite_differences(self):
        rng = np.random.default_rng(42)
        for trial in range(20):
            stateDim = int(rng.integers(1, 4))
            actionDim = int(rng.integers(1, 3))
            cfg = ModelConfig(ensembleSize=2, hidden=(int(rng.integers(2, 6)),), rewardHidden=(4,))
            model = EnsembleModel(stateDim, actionDim, cfg, RngStream(trial))
            n = int(rng.integers(2, 7))
            batch = TransitionBatch(
                rng.normal(size=(n, stateDim)), rng.normal(size=(n, actionDim)), rng.normal(size=(n, stateDim)),
                rng.normal(size=n)
            )
            member = int(rng.integers(0, 2))
            loss, analytic = nllLoss(model, member, batch)
            assert loss == pytest.approx(memberNll(model, member, batch), rel=1e-12)
            numeric = _numericGrad(lambda: memberNll(model, member, batch), model.members[member].params)
            for a, n_ in zip(analytic, numeric):
                np.testing.assert_allclose(a, n_, rtol=1e-4, atol=1e-6)


class TestAdam:

    def test_fits_linear_regression(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=(64, 2))
        y = x @ np.array([[1.5], [-0.5]]) + 0.3
        net = FeedforwardNet(2, [8], 1, RngStream(1))
        opt = Adam(net.params, lr=1e-2)

        def mse():
            return float(np.mean((net.forward(x)[0] - y)**2))

        start = mse()
        for _ in range(500):
            out, cache = net.forward(x)
            opt.step(net.backward(2.0 * (out - y) / len(x), cache))
        assert mse() < 0.05 * start
