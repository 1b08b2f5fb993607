"""Quadrature helpers shared by the analytic modules.

Integrals over the real line go through scipy's adaptive Gauss-Kronrod
rules (``scipy.integrate.quad``), split at any interior breakpoints of
the integrand.  Measures with exponentially decaying densities also
admit exact fixed rules (Gauss-Hermite, Gauss-Legendre) which the
orthogonal-polynomial machinery uses for polynomial integrands.
"""

from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import NumericalError

DEFAULT_EPSABS = 1e-10
DEFAULT_EPSREL = 1e-8


def integrate_line(
    f: Callable[[float], float],
    a: float = -np.inf,
    b: float = np.inf,
    *,
    breakpoints: Sequence[float] = (),
    epsabs: float = DEFAULT_EPSABS,
    epsrel: float = DEFAULT_EPSREL,
    limit: int = 200,
    context: str = "integrand",
) -> float:
    """Integrate ``f`` over ``[a, b]``, splitting at interior breakpoints.

    Parameters
    ----------
    f : callable
        Scalar integrand.
    a, b : float
        Integration limits; infinite endpoints are allowed.
    breakpoints : sequence of float
        Points where the integrand is non-smooth.  Each piece between
        consecutive breakpoints is integrated separately so the adaptive
        rule never straddles a kink or jump.
    context : str
        Label used in error messages when the rule does not converge.

    Returns
    -------
    float
        The integral value.

    Raises
    ------
    NumericalError
        If the accumulated error estimate exceeds the tolerance by a
        wide margin, which signals nonconvergence rather than roundoff.
    """
    pts = [float(p) for p in sorted(set(breakpoints)) if a < p < b]
    edges = [a, *pts, b]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, abserr = integrate.quad(
                f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit
            )
            total += val
            err += abserr
    if not np.isfinite(total):
        raise NumericalError(f"quadrature returned a non-finite value for {context}")
    if err > max(1e4 * epsabs, 1e-5 * abs(total)):
        raise NumericalError(
            f"quadrature did not converge for {context} "
            f"(value {total:.6e}, error estimate {err:.2e})"
        )
    return total


def integrate_line_vec(
    f: Callable[[float], np.ndarray],
    a: float = -np.inf,
    b: float = np.inf,
    *,
    breakpoints: Sequence[float] = (),
    epsabs: float = DEFAULT_EPSABS,
    epsrel: float = DEFAULT_EPSREL,
    context: str = "integrand",
) -> np.ndarray:
    """Integrate a vector-valued scalar-argument ``f`` over ``[a, b]``.

    One adaptive subdivision is shared by all components, which is far
    cheaper than running :func:`integrate_line` per component when the
    components are polynomial multiples of a common weight.  Splitting
    at breakpoints mirrors :func:`integrate_line`.
    """
    pts = [float(p) for p in sorted(set(breakpoints)) if a < p < b]
    edges = [a, *pts, b]
    total: np.ndarray | None = None
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, abserr = integrate.quad_vec(
            f, lo, hi, epsabs=epsabs, epsrel=epsrel, norm="max"
        )
        total = val if total is None else total + val
        err += abserr
    assert total is not None
    scale = float(np.max(np.abs(total)))
    if not np.all(np.isfinite(total)):
        raise NumericalError(f"quadrature returned a non-finite value for {context}")
    if err > max(1e4 * epsabs, 1e-5 * scale):
        raise NumericalError(
            f"quadrature did not converge for {context} (error estimate {err:.2e})"
        )
    return total


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite rule for expectations against the standard normal.

    Returns nodes ``x`` and weights ``w`` with ``sum(w) == 1`` such that
    ``sum(w * p(x))`` equals the standard normal expectation of ``p``
    exactly for polynomials ``p`` of degree at most ``2n - 1``.
    """
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / np.sqrt(2.0 * np.pi)


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on ``[a, b]`` (weights sum to ``b - a``)."""
    x, w = np.polynomial.legendre.leggauss(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid + half * x, half * w
