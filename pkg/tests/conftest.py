"""Shared helpers: the bimodal example measure and a uniform test measure."""

import math

import numpy as np
import pytest

from spiketx.measures import NoiseMeasure, gaussian_mixture


def bimodal():
    """Two-component mixture at +-1 with scale 1/2 (variance 1.25)."""
    return gaussian_mixture((0.5, 0.5), (1.0, -1.0), (0.5, 0.5))


class UniformMeasure(NoiseMeasure):
    """Uniform on [-a, a] with a = sqrt(3), so the variance is one.

    Not part of the library; used to exercise the basis construction on
    a measure whose orthonormal polynomials (rescaled Legendre) are
    known in closed form and are not a preset.
    """

    name = "uniform"
    has_score = False
    a = math.sqrt(3.0)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(np.abs(z) <= self.a, 1.0 / (2.0 * self.a), 0.0)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.clip((z + self.a) / (2.0 * self.a), 0.0, 1.0)

    def sample(self, rng, size):
        return rng.uniform(-self.a, self.a, size)

    def moment(self, k):
        if k % 2:
            return 0.0
        return self.a**k / (k + 1.0)

    def gauss_nodes(self, n):
        x, w = np.polynomial.legendre.leggauss(n)
        return self.a * x, w / 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(42)
