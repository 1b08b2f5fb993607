"""Orthonormal polynomials of a noise measure and the effective SNR they induce.

For noise with all relevant moments finite, the entrywise transform f
decomposes against the measure's orthonormal polynomial system {q_k}.
Two families of numbers summarize everything the spectral predictions
need: the series coefficients a_k = <f, q_k> and the derivative
functionals b_kl = <q_k^(l), 1>.  The first-order contraction

    tau = (1 / ||f||) * sum_k a_k * b_k1

is the effective SNR multiplier of the transform, and the higher-order
tau_l detect transforms that kill the linear term (then the first
nonvanishing order l* sets the critical signal scaling).

Recurrence coefficients are computed by the discretized Stieltjes
procedure on a quadrature rule exact for the measure, never by
moment-matrix Gram-Schmidt, which is numerically hopeless beyond tiny
degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._quad import integrate_line, integrate_line_vec
from .errors import NumericalError, ValidationError
from .measures import Gaussian, NoiseMeasure
from .transforms import Transform

__all__ = [
    "OrthoBasis",
    "SeriesCoeffs",
    "TauReport",
    "SeriesTransform",
    "build_basis",
    "eval_q",
    "coeffs",
    "b_coeffs",
    "tau",
    "optimal_series_preprocessor",
]


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal polynomial system up to a fixed degree.

    ``alpha[k]`` and ``beta[k]`` are the three-term recurrence
    coefficients

        sqrt(beta[k+1]) q_{k+1}(z) = (z - alpha[k]) q_k(z)
                                     - sqrt(beta[k]) q_{k-1}(z),

    with ``beta[0]`` the total mass (one for a probability measure).
    ``nodes``/``weights`` hold the discretization the recurrence was
    built on; they integrate polynomials of degree up to ``2 * degree
    + 3`` exactly against the measure and are reused for polynomial
    inner products downstream.
    """

    measure: NoiseMeasure
    degree: int
    alpha: np.ndarray
    beta: np.ndarray
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SeriesCoeffs:
    """Coefficients a_k = <f, q_k> of a transform, with the L2 norm of f."""

    a: np.ndarray
    f_norm: float
    K: int
    tail_bound: float

    @property
    def a0(self) -> float:
        return float(self.a[0])


@dataclass(frozen=True)
class TauReport:
    """Effective SNR constants of a transform under a noise measure.

    ``tau`` equals ``tau_ell[0]`` (the first-order constant) and is
    signed; spectral predictions depend only on its magnitude.
    ``ell_star`` is the first order with a nonvanishing constant, or
    ``None`` if all orders up to L vanish.  ``tail_bound`` is the mass
    of f outside the degree-K expansion, ||f||^2 - sum_{k>=1} a_k^2.
    """

    tau: float
    tau_ell: np.ndarray
    ell_star: Optional[int]
    K_used: int
    tail_bound: float
    f_norm: float
    a0: float
    warnings: tuple = ()


def _discretization(measure: NoiseMeasure, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature rule used to run the Stieltjes procedure.

    Prefers the measure's own exact rule.  Otherwise falls back to a
    dense Gauss-Legendre rule on a CDF-determined interval, which is
    accurate (not exact) for smooth light-tailed densities.
    """
    n = max(4 * (degree + 2), 80)
    rule = measure.gauss_nodes(n)
    if rule is not None:
        return rule

    from ._quad import gauss_legendre

    half = 1.0
    while half < 1e12:
        if measure.cdf(-half) < 1e-16 and 1.0 - measure.cdf(half) < 1e-16:
            break
        half *= 2.0
    else:
        raise ValidationError(
            f"{measure.name}: could not bracket the support for discretization"
        )
    x, w = gauss_legendre(-half, half, max(40 * (degree + 2), 800))
    return x, w * measure.density(x)


def build_basis(measure: NoiseMeasure, degree: int) -> OrthoBasis:
    """Recurrence coefficients of the orthonormal system up to ``degree``.

    Gaussian measures get their closed-form Hermite coefficients
    (alpha_k = mean, beta_k = k * std^2); everything else goes through
    the discretized Stieltjes procedure.

    Raises
    ------
    ValidationError
        If the measure lacks finite moments up to ``2 * degree + 2``.
    NumericalError
        On recurrence breakdown (a numerically nonpositive beta), with
        the largest stable degree named in the message.
    """
    if not (isinstance(degree, (int, np.integer)) and degree >= 1):
        raise ValidationError("build_basis: degree must be an integer >= 1")
    degree = int(degree)
    if math.isinf(measure.moment(2 * degree + 2)):
        raise ValidationError(
            f"no orthogonal basis for {measure.name}: moments of order "
            f"{2 * degree + 2} diverge"
        )
    x, w = _discretization(measure, degree)
    mass = float(np.sum(w))
    if abs(mass - 1.0) > 1e-8:
        raise NumericalError(
            f"discretization of {measure.name} has mass {mass:.2e}, expected 1"
        )

    if isinstance(measure, Gaussian):
        ks = np.arange(degree + 1, dtype=float)
        alpha = np.full(degree + 1, measure.mean)
        beta = ks * measure.std**2
        beta[0] = 1.0
        return OrthoBasis(measure, degree, alpha, beta, x, w)

    alpha = np.zeros(degree + 1)
    beta = np.zeros(degree + 1)
    beta[0] = mass
    q_prev = np.zeros_like(x)
    q_cur = np.full_like(x, 1.0 / math.sqrt(mass))
    for k in range(degree):
        alpha[k] = float(np.sum(w * x * q_cur**2))
        r = (x - alpha[k]) * q_cur - math.sqrt(beta[k] if k else 0.0) * q_prev
        beta_next = float(np.sum(w * r**2))
        if beta_next <= 1e-12 * max(1.0, beta[k]):
            raise NumericalError(
                f"recurrence breakdown for {measure.name} at degree {k + 1}; "
                f"largest stable degree is {k}"
            )
        beta[k + 1] = beta_next
        q_prev, q_cur = q_cur, r / math.sqrt(beta_next)
    alpha[degree] = float(np.sum(w * x * q_cur**2))
    return OrthoBasis(measure, degree, alpha, beta, x, w)


def _eval_table(basis: OrthoBasis, z, ell: int) -> np.ndarray:
    """Values q_k^(j)(z) for all k <= degree, j <= ell.

    Returns an array of shape (ell + 1, degree + 1) + shape(z), built
    from the derivative of the three-term recurrence:

        sqrt(beta[k+1]) q_{k+1}^(j) = j q_k^(j-1) + (z - alpha[k]) q_k^(j)
                                      - sqrt(beta[k]) q_{k-1}^(j).
    """
    z = np.asarray(z, dtype=float)
    K = basis.degree
    sqb = np.sqrt(basis.beta)
    out = np.zeros((ell + 1, K + 1) + z.shape)
    out[0, 0] = 1.0 / sqb[0]
    for k in range(K):
        for j in range(ell + 1):
            lower = j * out[j - 1, k] if j else 0.0
            prev = sqb[k] * out[j, k - 1] if k else 0.0
            out[j, k + 1] = (lower + (z - basis.alpha[k]) * out[j, k] - prev) / sqb[k + 1]
    return out


def eval_q(basis: OrthoBasis, k: int, z, ell: int = 0):
    """Evaluate q_k or its ell-th derivative at z (vectorized)."""
    if not (0 <= k <= basis.degree):
        raise ValidationError(f"eval_q: k must be in [0, {basis.degree}]")
    if not (isinstance(ell, (int, np.integer)) and ell >= 0):
        raise ValidationError("eval_q: derivative order must be a nonnegative integer")
    z = np.asarray(z, dtype=float)
    if ell > k:
        out = np.zeros_like(z)
        return float(out) if out.ndim == 0 else out
    table = _eval_table(basis, z, ell)
    out = table[ell, k]
    return float(out) if np.asarray(out).ndim == 0 else out


def coeffs(f, basis: OrthoBasis, *, breakpoints=None) -> SeriesCoeffs:
    """Series coefficients a_k = <f, q_k> and the L2(measure) norm of f.

    Coefficients are computed by adaptive quadrature, split at the
    transform's breakpoints so jumps and kinks never sit inside a
    panel.  ``tail_bound`` is the Bessel residual ||f||^2 - sum a_k^2;
    a materially positive value means degree K is not yet resolving f.
    """
    measure = basis.measure
    if breakpoints is None:
        breakpoints = getattr(f, "breakpoints", ())
    K = basis.degree

    def vec_integrand(z: float) -> np.ndarray:
        qs = _eval_table(basis, np.float64(z), 0)[0]
        fz = float(f(z))
        wz = float(measure.density(z))
        out = np.empty(K + 2)
        out[: K + 1] = qs * (fz * wz)
        out[K + 1] = fz * fz * wz
        return out

    try:
        vals = integrate_line_vec(
            vec_integrand,
            breakpoints=breakpoints,
            context=f"series coefficients under {measure.name}",
        )
    except NumericalError:
        # Rerun component by component so the failing k gets named.
        vals = np.empty(K + 2)
        for k in range(K + 1):
            vals[k] = integrate_line(
                lambda z, k=k: float(f(z))
                * float(eval_q(basis, k, z))
                * float(measure.density(z)),
                breakpoints=breakpoints,
                context=f"series coefficient k={k}",
            )
        vals[K + 1] = integrate_line(
            lambda z: float(f(z)) ** 2 * float(measure.density(z)),
            breakpoints=breakpoints,
            context=f"||f||^2 under {measure.name}",
        )

    a = vals[: K + 1]
    fn2 = float(vals[K + 1])
    if fn2 <= 0 or not math.isfinite(fn2):
        raise ValidationError("coeffs: transform has zero or non-finite L2 norm")
    return SeriesCoeffs(
        a=a, f_norm=math.sqrt(fn2), K=K, tail_bound=fn2 - float(np.sum(a**2))
    )


def b_coeffs(
    basis: OrthoBasis, ell: int, kmax: Optional[int] = None, *, check: bool = True
) -> np.ndarray:
    """Derivative functionals b_kl = <q_k^(l), 1> for k = 0..kmax.

    Computed on the basis discretization, which integrates these
    polynomial integrands exactly.  When the measure exposes analytic
    density derivatives, the result is cross-checked against the
    integration-by-parts identity

        b_kl = (-1)^l * int q_k(z) * density^(l)(z) dz,

    and a disagreement beyond 1e-4 raises a NumericalError (beyond
    what roundoff in either route can explain, so one of the two is
    wrong).
    """
    if not (isinstance(ell, (int, np.integer)) and ell >= 1):
        raise ValidationError("b_coeffs: order ell must be an integer >= 1")
    kmax = basis.degree if kmax is None else int(kmax)
    if not (0 <= kmax <= basis.degree):
        raise ValidationError(f"b_coeffs: kmax must be in [0, {basis.degree}]")

    table = _eval_table(basis, basis.nodes, ell)
    b = table[ell, : kmax + 1] @ basis.weights

    measure = basis.measure
    if check and measure.density_derivative(0.0, ell) is not None:
        sign = -1.0 if ell % 2 else 1.0

        def vec_integrand(z: float) -> np.ndarray:
            qs = _eval_table(basis, np.float64(z), 0)[0, : kmax + 1]
            return qs * float(measure.density_derivative(z, ell))

        d = sign * integrate_line_vec(
            vec_integrand, context=f"b-coefficient cross-check at ell={ell}"
        )
        gap = float(np.max(np.abs(b - d)))
        if gap > 1e-4:
            raise NumericalError(
                f"b-coefficient cross-check diverged at ell={ell}: "
                f"max deviation {gap:.2e} between the derivative and "
                f"integration-by-parts routes"
            )
    return b


def tau(
    f,
    measure: NoiseMeasure,
    K: int = 24,
    L: int = 4,
    *,
    auto_center: bool = False,
    basis: Optional[OrthoBasis] = None,
) -> TauReport:
    """Effective SNR constants tau_1..tau_L of transform f under the measure.

    tau_l = (1 / ||f||) * sum_{k >= l} a_k * b_kl.  The transform must
    be centered (a_0 = 0) under the measure; pass ``auto_center=True``
    to subtract the constant component instead of failing.  A constant
    is declared zero when its magnitude falls below 1e-8 times the
    cancellation mass sum_k |a_k| |b_kl| + 1, so exact cancellations
    are not mistaken for tiny-but-real constants.
    """
    if basis is None:
        basis = build_basis(measure, K)
    elif basis.degree < K:
        raise ValidationError("tau: provided basis has smaller degree than K")
    if L < 1:
        raise ValidationError("tau: L must be >= 1")

    sc = coeffs(f, basis)
    a = sc.a.copy()
    warnings_: list[str] = []
    a0 = sc.a0
    fn2 = sc.f_norm**2
    if auto_center:
        fn2 = fn2 - a0**2
        a[0] = 0.0
        if fn2 <= 1e-14:
            raise ValidationError("tau: transform is numerically constant under the measure")
    elif abs(a0) > 1e-8 * max(1.0, sc.f_norm):
        raise ValidationError(
            f"tau: transform is not centered under {measure.name} "
            f"(a_0 = {a0:.3e}); center it or pass auto_center=True"
        )
    else:
        a[0] = 0.0
    f_norm = math.sqrt(fn2)

    tau_ell = np.zeros(L)
    ell_star: Optional[int] = None
    for ell in range(1, L + 1):
        b = b_coeffs(basis, ell)
        val = float(np.dot(a[ell:], b[ell:])) / f_norm
        mass = float(np.dot(np.abs(a), np.abs(b)))
        if abs(val) <= 1e-8 * (mass + 1.0):
            val = 0.0
        tau_ell[ell - 1] = val
        if ell_star is None and val != 0.0:
            ell_star = ell

    tail = fn2 - float(np.sum(a[1:] ** 2))
    if tail > 1e-3 * fn2:
        warnings_.append(
            f"series tail {tail:.3e} exceeds 0.1% of ||f||^2; "
            f"increase K for a converged expansion"
        )
    return TauReport(
        tau=float(tau_ell[0]),
        tau_ell=tau_ell,
        ell_star=ell_star,
        K_used=K,
        tail_bound=tail,
        f_norm=f_norm,
        a0=a0,
        warnings=tuple(warnings_),
    )


class SeriesTransform(Transform):
    """Transform given by a finite orthonormal series sum_k c_k q_k."""

    kind = "series"

    def __init__(self, basis: OrthoBasis, series: np.ndarray, name: str = "series"):
        series = np.asarray(series, dtype=float)
        if series.shape != (basis.degree + 1,):
            raise ValidationError("series length must equal basis degree + 1")
        self.basis = basis
        self.series = series
        self.name = name
        if series[0] == 0.0:
            self.centered_for = basis.measure.name

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        table = _eval_table(self.basis, z, 0)
        out = np.tensordot(self.series, table[0], axes=(0, 0))
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        return f"SeriesTransform(degree={self.basis.degree}, name={self.name!r})"


def optimal_series_preprocessor(measure: NoiseMeasure, K: int = 24) -> SeriesTransform:
    """The degree-K series transform maximizing the effective SNR.

    With c_k = b_k1 the contraction tau equals sqrt(sum_k b_k1^2),
    which increases with K toward sqrt(fisher_information(measure)),
    the optimum over all admissible transforms.  For standard Gaussian
    noise this is the identity map (b_11 = 1, the rest vanish).
    """
    basis = build_basis(measure, K)
    series = np.zeros(K + 1)
    series[1:] = b_coeffs(basis, 1)[1:]
    return SeriesTransform(basis, series, name=f"optimal_series(K={K})")
