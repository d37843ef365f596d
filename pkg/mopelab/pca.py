from typing import Sequence, Union

import numpy as np
from scipy import linalg

from mopelab.errors import DegenerateDataError, ShapeError


class PcaResult:

    def __init__(self, mean: np.ndarray, components: np.ndarray, eigenvalues: np.ndarray, totalVariance: float,
                 projected: np.ndarray):
        self.mean = mean
        # Rows are the unit principal axes, largest eigenvalue first
        self.components = components
        self.eigenvalues = eigenvalues
        self.totalVariance = totalVariance
        self.projected = projected

    @property
    def component1(self) -> np.ndarray:
        return self.components[0]

    @property
    def component2(self) -> np.ndarray:
        return self.components[1]

    @property
    def explainedVarianceRatio(self) -> np.ndarray:
        return self.eigenvalues / self.totalVariance

    def project(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.mean) @ self.components.T


def pcaTop2(points: Union[Sequence[Sequence[float]], np.ndarray]) -> PcaResult:
    """
    Projects points onto the two leading eigenvectors of their covariance.
    Eigenvector signs are fixed so the largest-magnitude entry is positive.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("pcaTop2()", f"expected a 2D array of points, got shape {x.shape}")
    if x.shape[0] < 3:
        raise ShapeError("pcaTop2()", f"need at least 3 points, got {x.shape[0]}")
    if x.shape[1] < 2:
        raise ShapeError("pcaTop2()", f"need dimension >= 2, got {x.shape[1]}")

    if np.all(np.ptp(x, axis=0) == 0):
        raise DegenerateDataError("pcaTop2()", f"all {x.shape[0]} points are identical")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)

    # eigh returns ascending eigenvalues
    values, vectors = linalg.eigh(cov)
    order = np.argsort(values, kind='stable')[::-1][:2]
    top = vectors[:, order].T.copy()
    for row in top:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1

    eig = np.maximum(values[order], 0.0)
    total = float(np.sum(np.maximum(values, 0.0)))

    return PcaResult(mean, top, eig, total, centered @ top.T)


def boundingBoxArea(projected: np.ndarray) -> float:
    """
    Area of the axis-aligned box around 2D projected points
    """
    span = np.ptp(projected, axis=0)
    return float(span[0] * span[1])
