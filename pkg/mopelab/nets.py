"""
Small feedforward networks with hand-written backpropagation, float64 throughout.
"""
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from mopelab.errors import ShapeError
from mopelab.rng import RngStream

Cache = List[Tuple[np.ndarray, np.ndarray]]


def swish(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def swishGrad(x: np.ndarray) -> np.ndarray:
    s = expit(x)
    return s + x * s * (1.0 - s)


class FeedforwardNet:
    """
    Fully connected net, swish hidden activations and a linear output layer.
    Parameters are stored as [W0, b0, W1, b1, ...] with W of shape (fanIn, fanOut).
    """

    def __init__(self, inDim: int, hidden: Sequence[int], outDim: int, rng: RngStream, zeroOutput: bool = False):
        self.widths = [int(inDim), *(int(h) for h in hidden), int(outDim)]
        self.params: List[np.ndarray] = []

        numLayers = len(self.widths) - 1
        for idx, (fanIn, fanOut) in enumerate(zip(self.widths[:-1], self.widths[1:])):
            if zeroOutput and idx == numLayers - 1:
                weight = np.zeros((fanIn, fanOut))
            else:
                weight = rng.standardNormal((fanIn, fanOut)) / np.sqrt(fanIn)
            self.params.append(weight)
            self.params.append(np.zeros(fanOut))

    @property
    def inDim(self) -> int:
        return self.widths[0]

    @property
    def outDim(self) -> int:
        return self.widths[-1]

    @property
    def hidden(self) -> List[int]:
        return self.widths[1:-1]

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        if x.ndim != 2 or x.shape[1] != self.inDim:
            raise ShapeError("FeedforwardNet.forward()", f"expected input (N, {self.inDim}), got {x.shape}")

        cache: Cache = []
        act = x
        numLayers = len(self.params) // 2
        for idx in range(numLayers):
            z = act @ self.params[2 * idx] + self.params[2 * idx + 1]
            cache.append((act, z))
            act = z if idx == numLayers - 1 else swish(z)
        return act, cache

    def backward(self, dOut: np.ndarray, cache: Cache) -> List[np.ndarray]:
        """
        Gradients of a scalar loss w.r.t. every parameter, given dLoss/dOutput
        """
        grads: List[np.ndarray] = [np.empty(0)] * len(self.params)
        delta = dOut
        numLayers = len(cache)
        for idx in reversed(range(numLayers)):
            act, z = cache[idx]
            if idx != numLayers - 1:
                delta = delta * swishGrad(z)
            grads[2 * idx] = act.T @ delta
            grads[2 * idx + 1] = delta.sum(axis=0)
            if idx > 0:
                delta = delta @ self.params[2 * idx].T
        return grads

    def loadParams(self, params: Sequence[np.ndarray]):
        if len(params) != len(self.params):
            raise ShapeError("FeedforwardNet.loadParams()", f"expected {len(self.params)} tensors, got {len(params)}")
        for idx, (old, new) in enumerate(zip(self.params, params)):
            if old.shape != new.shape:
                raise ShapeError("FeedforwardNet.loadParams()", f"tensor {idx}: expected {old.shape}, got {new.shape}")
        self.params = [np.array(p, dtype=np.float64) for p in params]


class Adam:
    """
    Adaptive-moment gradient descent over a list of parameter arrays, updated in place
    """

    def __init__(self, params: List[np.ndarray], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]

    def step(self, grads: Sequence[np.ndarray]):
        self.t += 1
        corr1 = 1.0 - self.beta1**self.t
        corr2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)
