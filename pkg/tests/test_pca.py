"""Two-component PCA on action sets."""

import numpy as np
import pytest

from mopelab.errors import DegenerateDataError, ShapeError
from mopelab.pca import boundingBoxArea, pcaTop2


class TestPcaProperties:

    def test_points_on_a_line(self):
        t = np.linspace(-1.0, 1.0, 21)
        direction = np.array([3.0, 4.0]) / 5.0
        points = np.outer(t, direction) + np.array([2.0, -1.0])
        res = pcaTop2(points)
        np.testing.assert_allclose(res.component1, direction, atol=1e-12)
        np.testing.assert_allclose(res.explainedVarianceRatio, [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(res.projected[:, 0], t, atol=1e-12)

    def test_components_orthonormal(self):
        rng = np.random.default_rng(42)
        points = rng.normal(size=(200, 5)) @ rng.normal(size=(5, 5))
        res = pcaTop2(points)
        np.testing.assert_allclose(res.components @ res.components.T, np.eye(2), atol=1e-10)
        assert res.eigenvalues[0] >= res.eigenvalues[1]

    def test_explained_variance_at_most_one(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            d = int(rng.integers(2, 7))
            res = pcaTop2(rng.normal(size=(50, d)) * rng.uniform(0.1, 3.0, size=d))
            ratio = res.explainedVarianceRatio
            assert np.all(ratio >= 0)
            assert ratio.sum() <= 1.0 + 1e-12

    def test_matches_sample_covariance(self):
        rng = np.random.default_rng(42)
        points = rng.normal(size=(300, 3)) * np.array([3.0, 1.0, 0.2])
        res = pcaTop2(points)
        cov = np.cov(points, rowvar=False)
        top = np.sort(np.linalg.eigvalsh(cov))[::-1][:2]
        np.testing.assert_allclose(res.eigenvalues, top, rtol=1e-10)

    def test_sign_convention(self):
        rng = np.random.default_rng(42)
        res = pcaTop2(rng.normal(size=(40, 4)))
        for row in res.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_projection_matches_project(self):
        rng = np.random.default_rng(42)
        points = rng.normal(size=(30, 3))
        res = pcaTop2(points)
        np.testing.assert_allclose(res.project(points), res.projected, atol=1e-12)


class TestPcaErrors:

    def test_identical_points(self):
        with pytest.raises(DegenerateDataError):
            pcaTop2(np.ones((10, 2)) * 0.3)

    def test_too_few_points(self):
        with pytest.raises(ShapeError):
            pcaTop2([[0.0, 1.0], [1.0, 0.0]])

    def test_one_dimensional(self):
        with pytest.raises(ShapeError):
            pcaTop2(np.arange(10.0).reshape(-1, 1))


class TestBoundingBox:

    def test_area(self):
        proj = np.array([[0.0, 0.0], [2.0, 1.0], [1.0, 3.0]])
        assert boundingBoxArea(proj) == pytest.approx(6.0)
