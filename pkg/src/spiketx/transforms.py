"""Elementwise preprocessing transforms and their effective SNR.

A transform is a deterministic scalar map applied entrywise to the
observed matrix before any spectral computation.  What a transform does
to the signal-to-noise ratio is summarized by a single constant: the
correlation between the transformed entry and the (infinitesimal)
signal perturbation, normalized by the transformed noise level.  For
noise with finite moments this constant comes from the orthogonal
series in :mod:`spiketx.orthopoly`; for heavy-tailed noise the
truncation route below gives a closed form that needs nothing beyond
the CDF and density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from ._quad import integrate_line
from .errors import NumericalError, ValidationError
from .measures import NoiseMeasure

SQRT_2PI = math.sqrt(2.0 * math.pi)


class Transform:
    """Base class for elementwise transforms.

    Attributes
    ----------
    name : str
        Human-readable identifier used in reports and CSV columns.
    kind : str
        Tag for dispatch ("relu", "truncate", "score", ...).
    centered_for : str or None
        Name of a measure for which the transform is known to have mean
        zero; ``None`` means centering must be checked numerically.
    breakpoints : tuple of float
        Points where the transform is non-smooth, used to split
        quadrature intervals.
    """

    name: str = "transform"
    kind: str = "custom"
    centered_for: Optional[str] = None
    breakpoints: tuple = ()

    def __call__(self, z):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class Identity(Transform):
    """f(z) = z, the no-preprocessing baseline."""

    name = "identity"
    kind = "identity"

    def __call__(self, z):
        return np.asarray(z, dtype=float)


class CenteredRelu(Transform):
    """f(z) = max(z, 0) - 1/sqrt(2 pi), centered under standard normal noise."""

    name = "relu"
    kind = "relu"
    centered_for = "gaussian"
    breakpoints = (0.0,)

    def __call__(self, z):
        return np.maximum(np.asarray(z, dtype=float), 0.0) - 1.0 / SQRT_2PI


class CenteredHeaviside(Transform):
    """f(z) = 1{z >= 0} - 1/2, the one-bit quantizer centered under symmetric noise."""

    name = "heaviside"
    kind = "heaviside"
    centered_for = "gaussian"
    breakpoints = (0.0,)

    def __call__(self, z):
        return np.where(np.asarray(z, dtype=float) >= 0.0, 0.5, -0.5)


class Truncation(Transform):
    """f_c(z) = z * 1{|z| <= c}; bounded, so usable under heavy-tailed noise."""

    kind = "truncate"

    def __init__(self, c: float):
        if not (c > 0):
            raise ValidationError("truncate: level c must be positive")
        self.c = float(c)
        self.name = f"truncate(c={self.c:g})"
        self.breakpoints = (-self.c, self.c)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(np.abs(z) <= self.c, z, 0.0)

    def __repr__(self):
        return f"Truncation(c={self.c!r})"


class PolynomialTransform(Transform):
    """Polynomial in the power basis, f(z) = sum_j coeffs[j] * z**j."""

    kind = "polynomial"

    def __init__(self, coeffs: Sequence[float]):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValidationError("polynomial: coeffs must be a nonempty 1-d sequence")
        self.coeffs = c
        self.name = f"polynomial(degree={c.size - 1})"

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=float), self.coeffs)

    def __repr__(self):
        return f"PolynomialTransform({self.coeffs.tolist()!r})"


class ScoreTransform(Transform):
    """f(z) = density'(z) / density(z), the optimal smooth preprocessor.

    Its squared effective SNR equals the Fisher information of the
    noise law, the best achievable over all admissible transforms.
    Integration by parts gives mean zero under its own measure.
    """

    kind = "score"

    def __init__(self, measure: NoiseMeasure):
        if not measure.has_score:
            raise ValidationError(f"{measure.name}: no score function available")
        self.measure = measure
        self.name = f"score({measure.name})"
        self.centered_for = measure.name

    def __call__(self, z):
        return self.measure.score(z)

    def __repr__(self):
        return f"ScoreTransform({self.measure!r})"


class CustomTransform(Transform):
    """Wrap an arbitrary vectorized callable.

    The callable must be importable (module-level) for the transform to
    survive pickling into Monte Carlo worker processes.
    """

    kind = "custom"

    def __init__(self, fn: Callable, name: str = "custom", breakpoints: Sequence[float] = ()):
        self.fn = fn
        self.name = name
        self.breakpoints = tuple(float(b) for b in breakpoints)

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=float))

    def __repr__(self):
        return f"CustomTransform({self.name!r})"


def identity() -> Identity:
    return Identity()


def relu_centered() -> CenteredRelu:
    return CenteredRelu()


def heaviside_centered() -> CenteredHeaviside:
    return CenteredHeaviside()


def truncate(c: float) -> Truncation:
    return Truncation(c)


def polynomial(coeffs) -> PolynomialTransform:
    return PolynomialTransform(coeffs)


def score_transform(measure: NoiseMeasure) -> ScoreTransform:
    return ScoreTransform(measure)


@dataclass(frozen=True)
class TruncationReport:
    """Effective SNR of a truncation, and optionally of an optimized level.

    ``c``, ``tau_c``, ``var_fc`` always describe a single level; when
    produced by :func:`optimize_truncation` that level is the optimum
    and ``c_star``/``tau_at_c_star`` repeat it explicitly.
    """

    c: float
    tau_c: float
    var_fc: float
    c_star: Optional[float] = None
    tau_at_c_star: Optional[float] = None
    warnings: tuple = field(default=())


def tau_trunc(measure: NoiseMeasure, c: float) -> TruncationReport:
    """Effective SNR of the truncation f_c(z) = z 1{|z| <= c}.

    Only the CDF and density of the noise enter:

        tau(f_c) = [F(c) - F(-c) - c (w(c) + w(-c))] / sd(f_c),

    so heavy-tailed measures without any finite moments (Cauchy) are
    fine.  The variance of f_c is computed on [-c, c] by quadrature.
    """
    if not (c > 0) or not math.isfinite(c):
        raise ValidationError("tau_trunc: level c must be positive and finite")
    F = measure.cdf
    w = measure.density
    numer = float(F(c) - F(-c) - c * (w(c) + w(-c)))
    mean_fc = integrate_line(
        lambda z: z * float(w(z)), -c, c, context=f"mean of f_c under {measure.name}"
    )
    second = integrate_line(
        lambda z: z * z * float(w(z)), -c, c, context=f"second moment of f_c under {measure.name}"
    )
    var_fc = second - mean_fc**2
    if var_fc <= 0 or not math.isfinite(var_fc):
        raise NumericalError(f"tau_trunc: degenerate truncation variance at c={c:g}")
    return TruncationReport(c=float(c), tau_c=numer / math.sqrt(var_fc), var_fc=var_fc)


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Golden-section maximizer on [lo, hi] for a locally unimodal f."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)


def optimize_truncation(
    measure: NoiseMeasure,
    bracket: tuple[float, float],
    *,
    grid_points: int = 400,
    tol: float = 1e-6,
) -> TruncationReport:
    """Maximize tau(f_c) over the truncation level c within ``bracket``.

    A 400-point log-spaced grid locates the basin, then golden-section
    refines the level to ``|delta c| < tol``.  A maximum sitting on the
    bracket edge, or several near-optimal local maxima on the grid, are
    reported through the ``warnings`` field rather than raised, since
    the returned level is still the best one probed.
    """
    lo, hi = bracket
    if not (0 < lo < hi) or not math.isfinite(hi):
        raise ValidationError("optimize_truncation: bracket must satisfy 0 < lo < hi < inf")
    cs = np.geomspace(lo, hi, grid_points)
    taus = np.array([tau_trunc(measure, c).tau_c for c in cs])
    best = int(np.argmax(taus))
    warns = []

    # tau(f_c) can saturate (gaussian: tau -> 1 as c grows); past that point
    # grid values differ only by rounding noise, so the argmax is really the
    # bracket edge, not whichever plateau sample noise happened to favor.
    plateau_tol = 1e-12 * max(1.0, abs(taus[best]))
    if taus[-1] >= taus[best] - plateau_tol:
        best = grid_points - 1
    elif taus[0] >= taus[best] - plateau_tol:
        best = 0
    else:
        interior = (taus[1:-1] > taus[:-2]) & (taus[1:-1] > taus[2:])
        peaks = np.flatnonzero(interior) + 1
        near_opt = [i for i in peaks if taus[i] >= taus[best] - 1e-4 * abs(taus[best])]
        clusters = sum(
            1 for j, i in enumerate(near_opt) if j == 0 or i - near_opt[j - 1] > 3
        )
        if clusters > 1:
            warns.append("multiple near-optimal local maxima on the probe grid")

    if best in (0, grid_points - 1):
        warns.append("maximum at bracket edge; widen the bracket")
        c_star = float(cs[best])
    else:
        c_star = _golden_max(
            lambda c: tau_trunc(measure, c).tau_c,
            float(cs[best - 1]),
            float(cs[best + 1]),
            tol,
        )
    at_star = tau_trunc(measure, c_star)
    return TruncationReport(
        c=c_star,
        tau_c=at_star.tau_c,
        var_fc=at_star.var_fc,
        c_star=c_star,
        tau_at_c_star=at_star.tau_c,
        warnings=tuple(warns),
    )


class BinomialLink:
    """Link for m-trial binomial observations of a small latent signal.

    The success probability ``logistic(x)`` equals ``Phi(g(x))`` with
    ``g(x) = sqrt(2) * erfinv(tanh(x / 2))``, so each trial is a
    thresholded Gaussian and the m-trial model inherits the spiked
    spectral theory with an effective per-trial SNR slope of
    ``g'(0) = sqrt(pi / 8)``.
    """

    def __init__(self, m: int):
        if not (isinstance(m, (int, np.integer)) and m >= 1):
            raise ValidationError("binomial_link: m must be an integer >= 1")
        self.m = int(m)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        return math.sqrt(2.0) * special.erfinv(np.tanh(0.5 * x))

    def success_probability(self, x):
        return special.expit(np.asarray(x, dtype=float))

    def recovery_threshold(self, n: int, gamma: float) -> float:
        """Smallest spike size detectable from m-trial data at shape gamma."""
        return 2.0 * math.sqrt(n / self.m) * gamma**0.25

    def __repr__(self):
        return f"BinomialLink(m={self.m})"


def binomial_link(m: int) -> BinomialLink:
    return BinomialLink(m)
