"""Noise distributions carrying the analytic structure the predictions need.

Each measure exposes a density, a CDF, a seeded sampler, raw moments,
and (when the density is smooth) the score function d/dz log density.
Measures whose density is a Gaussian or a finite Gaussian mixture also
expose an exact quadrature discretization, which is what makes the
orthogonal-polynomial construction in :mod:`spiketx.orthopoly` stable.
Instances are stateless and picklable, so they can be shipped to worker
processes by the Monte Carlo driver.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import special

from ._quad import integrate_line
from .errors import ValidationError

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.square(x)) / SQRT_2PI


def _norm_cdf(x: np.ndarray) -> np.ndarray:
    return special.ndtr(x)


def _hermite_e(ell: int, x: np.ndarray) -> np.ndarray:
    """Probabilists' Hermite polynomial He_ell(x)."""
    if ell == 0:
        return np.ones_like(np.asarray(x, dtype=float))
    c = np.zeros(ell + 1)
    c[ell] = 1.0
    return np.polynomial.hermite_e.hermeval(x, c)


def _gaussian_raw_moment(mean: float, std: float, k: int) -> float:
    """Raw moment E[(mean + std*Z)^k] for standard normal Z."""
    total = 0.0
    for j in range(0, k + 1, 2):
        # E[Z^j] = (j-1)!! for even j, 0 for odd j.
        total = total + math.comb(k, j) * mean ** (k - j) * std**j * float(
            math.prod(range(j - 1, 0, -2)) or 1
        )
    return total


class NoiseMeasure:
    """Base class for noise laws.

    Subclasses implement :meth:`density`, :meth:`cdf`, :meth:`sample`
    and :meth:`moment`; smooth laws additionally implement
    :meth:`score` and report ``has_score = True``.  The two optional
    hooks :meth:`gauss_nodes` and :meth:`density_derivative` feed the
    basis construction and its diagnostics; returning ``None`` simply
    disables the corresponding fast path or cross-check.
    """

    name: str = "measure"
    has_finite_mgf_near_zero: bool = True
    log_density_available: bool = True
    has_score: bool = False

    def density(self, z):
        raise NotImplementedError

    def cdf(self, z):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw ``size`` variates using the provided generator."""
        raise NotImplementedError

    def moment(self, k: int) -> float:
        """Raw moment of order ``k``; ``inf`` marks a divergent moment."""
        raise NotImplementedError

    def score(self, z):
        """Score function (d/dz log density), when the density is smooth."""
        raise ValidationError(f"{self.name}: score function unavailable")

    def gauss_nodes(self, n: int) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """Quadrature rule exact for polynomials up to degree 2n - 1, or None."""
        return None

    def density_derivative(self, z, ell: int):
        """ell-th derivative of the density, or None when not available."""
        return None

    def variance(self) -> float:
        m1 = self.moment(1)
        m2 = self.moment(2)
        if math.isinf(m2) or math.isinf(m1):
            return math.inf
        return m2 - m1 * m1

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class Gaussian(NoiseMeasure):
    """Normal law N(mean, std^2); the default is the standard normal."""

    has_score = True

    def __init__(self, mean: float = 0.0, std: float = 1.0):
        if std <= 0:
            raise ValidationError("gaussian: std must be positive")
        self.mean = float(mean)
        self.std = float(std)
        self.name = (
            "gaussian"
            if (mean, std) == (0.0, 1.0)
            else f"gaussian(mean={mean:g}, std={std:g})"
        )

    def density(self, z):
        x = (np.asarray(z, dtype=float) - self.mean) / self.std
        return _norm_pdf(x) / self.std

    def cdf(self, z):
        x = (np.asarray(z, dtype=float) - self.mean) / self.std
        return _norm_cdf(x)

    def sample(self, rng, size):
        return rng.normal(self.mean, self.std, size)

    def moment(self, k):
        if k < 0:
            raise ValidationError("moment order must be nonnegative")
        return _gaussian_raw_moment(self.mean, self.std, k)

    def score(self, z):
        return -(np.asarray(z, dtype=float) - self.mean) / self.std**2

    def gauss_nodes(self, n):
        x, w = np.polynomial.hermite_e.hermegauss(n)
        return self.mean + self.std * x, w / SQRT_2PI

    def density_derivative(self, z, ell):
        x = (np.asarray(z, dtype=float) - self.mean) / self.std
        sign = -1.0 if ell % 2 else 1.0
        return sign * _hermite_e(ell, x) * _norm_pdf(x) / self.std ** (ell + 1)

    def __repr__(self):
        return f"Gaussian(mean={self.mean!r}, std={self.std!r})"


class Cauchy(NoiseMeasure):
    """Standard Cauchy law with normalized density 1 / (pi (1 + z^2)).

    All moments of order >= 1 diverge, so no orthogonal polynomial
    basis exists; the truncation route in :mod:`spiketx.transforms` is
    the way to get a usable effective SNR under this noise.
    """

    name = "cauchy"
    has_finite_mgf_near_zero = False
    has_score = True

    def density(self, z):
        z = np.asarray(z, dtype=float)
        return 1.0 / (math.pi * (1.0 + np.square(z)))

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.arctan(z) / math.pi + 0.5

    def sample(self, rng, size):
        u = rng.random(size)
        return np.tan(math.pi * (u - 0.5))

    def moment(self, k):
        if k < 0:
            raise ValidationError("moment order must be nonnegative")
        return 1.0 if k == 0 else math.inf

    def score(self, z):
        z = np.asarray(z, dtype=float)
        return -2.0 * z / (1.0 + np.square(z))


class GaussianMixture(NoiseMeasure):
    """Finite mixture of Gaussians sum_i w_i N(m_i, s_i^2).

    Weights must be positive and sum to one; scales must be positive.
    The mixture keeps every analytic hook of the Gaussian: closed-form
    moments, a stable score, exact derivative formulas through the
    Hermite polynomials, and a per-component Gauss-Hermite rule that
    integrates polynomials against the mixture exactly.
    """

    has_score = True

    def __init__(self, weights, means, scales):
        w = np.asarray(weights, dtype=float)
        m = np.asarray(means, dtype=float)
        s = np.asarray(scales, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("gaussian_mixture: weights must be a nonempty 1-d sequence")
        if not (m.shape == w.shape == s.shape):
            raise ValidationError("gaussian_mixture: weights, means, scales must share a length")
        if np.any(w <= 0):
            raise ValidationError("gaussian_mixture: weights must be positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError("gaussian_mixture: weights must sum to 1")
        if np.any(s <= 0):
            raise ValidationError("gaussian_mixture: scales must be positive")
        self.weights = w
        self.means = m
        self.scales = s
        self.name = "gaussian_mixture(" + ", ".join(
            f"{wi:g}*N({mi:g},{si:g}^2)" for wi, mi, si in zip(w, m, s)
        ) + ")"

    def _standardized(self, z):
        z = np.asarray(z, dtype=float)
        return (z[..., None] - self.means) / self.scales

    def density(self, z):
        x = self._standardized(z)
        return np.sum(self.weights / self.scales * _norm_pdf(x), axis=-1)

    def cdf(self, z):
        x = self._standardized(z)
        return np.sum(self.weights * _norm_cdf(x), axis=-1)

    def sample(self, rng, size):
        size = (size,) if np.isscalar(size) else tuple(size)
        idx = rng.choice(self.weights.size, size=size, p=self.weights)
        return rng.normal(self.means[idx], self.scales[idx])

    def moment(self, k):
        if k < 0:
            raise ValidationError("moment order must be nonnegative")
        return float(
            sum(
                wi * _gaussian_raw_moment(mi, si, k)
                for wi, mi, si in zip(self.weights, self.means, self.scales)
            )
        )

    def score(self, z):
        # Work relative to the dominant component so the ratio stays
        # finite far in the tails where the raw density underflows.
        x = self._standardized(z)
        logs = -0.5 * np.square(x) + np.log(self.weights / self.scales)
        ref = logs.max(axis=-1, keepdims=True)
        rel = np.exp(logs - ref)
        num = np.sum(rel * (-x / self.scales), axis=-1)
        den = np.sum(rel, axis=-1)
        return num / den

    def gauss_nodes(self, n):
        x, w = np.polynomial.hermite_e.hermegauss(n)
        w = w / SQRT_2PI
        nodes = (self.means[:, None] + self.scales[:, None] * x).ravel()
        weights = (self.weights[:, None] * w).ravel()
        return nodes, weights

    def density_derivative(self, z, ell):
        x = self._standardized(z)
        sign = -1.0 if ell % 2 else 1.0
        terms = (
            self.weights
            / self.scales ** (ell + 1)
            * _hermite_e(ell, x)
            * _norm_pdf(x)
        )
        return sign * np.sum(terms, axis=-1)

    def __repr__(self):
        return (
            f"GaussianMixture(weights={self.weights.tolist()!r}, "
            f"means={self.means.tolist()!r}, scales={self.scales.tolist()!r})"
        )


def gaussian() -> Gaussian:
    """Standard normal noise."""
    return Gaussian()


def cauchy() -> Cauchy:
    """Standard Cauchy noise (density normalized to integrate to one)."""
    return Cauchy()


def gaussian_mixture(weights, means, scales) -> GaussianMixture:
    """Finite Gaussian mixture with the given weights, means, and scales."""
    return GaussianMixture(weights, means, scales)


def fisher_information(measure: NoiseMeasure) -> float:
    """Fisher information for location, I = int (density'/density)^2 density.

    Computed by adaptive quadrature of the squared score.  Requires a
    measure with a score function.  For any unit-variance law this is
    at least 1, with equality exactly in the Gaussian case, which is
    what makes score preprocessing strictly helpful for non-Gaussian
    noise.
    """
    if not measure.has_score:
        raise ValidationError(f"{measure.name}: fisher information needs a score function")
    breaks = tuple(np.atleast_1d(getattr(measure, "means", ())).tolist())

    def integrand(z: float) -> float:
        return float(measure.score(z) ** 2 * measure.density(z))

    return integrate_line(
        integrand, breakpoints=breaks, context=f"fisher information of {measure.name}"
    )
