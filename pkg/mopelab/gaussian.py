import math
from typing import Sequence, Union

import numpy as np

from mopelab.errors import NumericError, ShapeError
from mopelab.rng import RngStream

# (1/2)(ln 2pi + 1), entropy of a unit-variance normal in nats
HALF_LOG_2PI_E = 0.5 * (math.log(2.0 * math.pi) + 1.0)

ArrayLike = Union[Sequence[float], np.ndarray]


class DiagonalGaussian:
    """
    Gaussian with diagonal covariance, stored as mean and variance vectors.
    Immutable after construction.
    """

    def __init__(self, mean: ArrayLike, variance: ArrayLike):
        mean = np.array(mean, dtype=np.float64).reshape(-1)
        variance = np.array(variance, dtype=np.float64).reshape(-1)

        if mean.shape != variance.shape:
            raise ShapeError(
                "DiagonalGaussian.init()", f"mean and variance lengths differ, {mean.shape[0]} != {variance.shape[0]}"
            )
        if not np.all(np.isfinite(mean)):
            raise NumericError("DiagonalGaussian.init()", "mean contains non-finite values")
        if not np.all(variance > 0) or not np.all(np.isfinite(variance)):
            raise NumericError("DiagonalGaussian.init()", f"variance must be finite and > 0, got {variance}")

        mean.flags.writeable = False
        variance.flags.writeable = False
        self.mean = mean
        self.variance = variance

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def __str__(self) -> str:
        return f'DiagonalGaussian(mean: {self.mean}, variance: {self.variance})'


def entropyFromLogVariance(logVariance: np.ndarray) -> np.ndarray:
    """
    Entropy in nats of diagonal Gaussians given log-variances on the last axis
    """
    d = logVariance.shape[-1]
    return d * HALF_LOG_2PI_E + 0.5 * np.sum(logVariance, axis=-1)


def entropyFromVariance(variance: np.ndarray) -> np.ndarray:
    return entropyFromLogVariance(np.log(variance))


def gaussianEntropy(dist: DiagonalGaussian) -> float:
    """
    H = (d/2)(ln 2pi + 1) + (1/2) sum_i ln variance_i
    """
    return float(entropyFromVariance(dist.variance))


def gaussianSample(dist: DiagonalGaussian, rng: RngStream) -> np.ndarray:
    return dist.mean + np.sqrt(dist.variance) * rng.standardNormal(dist.dim)
