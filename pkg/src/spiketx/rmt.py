"""Spiked-model spectral formulas: biased locations, cosines, and bulk laws.

Once an entrywise transform is summarized by its effective SNR tau,
the transformed model behaves exactly like a classical spiked matrix
with spike strengths tau * sigma_i.  This module holds that classical
layer: the Marchenko-Pastur biasing function and squared cosines for
rectangular matrices, their Wigner analogues for symmetric ones, the
bulk densities and CDFs, the Stieltjes transform, and the prediction
objects that bundle everything per spike.

Conventions: ``gamma = p / n`` is the aspect ratio; rectangular
locations live on the squared-singular-value scale (eigenvalues of the
Gram matrix of the noise-normalized observation), so the bulk edge is
``(1 + sqrt(gamma))^2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ValidationError

__all__ = [
    "SpikePrediction",
    "SpectralPrediction",
    "mp_lambda",
    "mp_cos_sq",
    "wigner_lambda_bar",
    "wigner_cos_sq",
    "mp_edges",
    "mp_atom",
    "mp_density",
    "mp_cdf",
    "semicircle_density",
    "semicircle_cdf",
    "mp_stieltjes",
    "mp_stieltjes_companion",
    "predict",
    "predict_ell_star",
]


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ValidationError("gamma must be a positive finite real")
    return gamma


def mp_edges(gamma: float) -> tuple[float, float]:
    """Support edges of the Marchenko-Pastur bulk, ((1 -+ sqrt(gamma))^2)."""
    gamma = _check_gamma(gamma)
    sq = math.sqrt(gamma)
    return (1.0 - sq) ** 2, (1.0 + sq) ** 2


def mp_atom(gamma: float) -> float:
    """Mass of the atom at zero (nonzero only when gamma > 1)."""
    gamma = _check_gamma(gamma)
    return max(0.0, 1.0 - 1.0 / gamma)


def mp_lambda(sigma, gamma: float):
    """Biased squared-singular-value location of a spike of strength sigma.

    Above the detection threshold gamma**(1/4) the top squared singular
    value lands at (1 + sigma^2)(gamma + sigma^2) / sigma^2; below it,
    at the bulk edge (1 + sqrt(gamma))^2.  Continuous at the threshold.
    """
    gamma = _check_gamma(gamma)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValidationError("mp_lambda: sigma must be nonnegative")
    edge = (1.0 + math.sqrt(gamma)) ** 2
    s2 = np.square(sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        biased = (1.0 + s2) * (gamma + s2) / s2
    out = np.where(sigma > gamma**0.25, biased, edge)
    return float(out) if out.ndim == 0 else out


def mp_cos_sq(sigma, gamma: float):
    """Squared cosines (left, right) between spike and observed vectors.

    Zero at and below the threshold gamma**(1/4); above it,

        c1^2 = 1 - (gamma + sigma^2) / (sigma^2 (1 + sigma^2))   (left, n-side)
        c2^2 = 1 - gamma (1 + sigma^2) / (sigma^2 (gamma + sigma^2))   (right, p-side).
    """
    gamma = _check_gamma(gamma)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValidationError("mp_cos_sq: sigma must be nonnegative")
    s2 = np.square(sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = 1.0 - (gamma + s2) / (s2 * (1.0 + s2))
        c2 = 1.0 - gamma * (1.0 + s2) / (s2 * (gamma + s2))
    super_ = sigma > gamma**0.25
    c1 = np.where(super_, c1, 0.0)
    c2 = np.where(super_, c2, 0.0)
    if c1.ndim == 0:
        return float(c1), float(c2)
    return c1, c2


def wigner_lambda_bar(lam):
    """Biased eigenvalue location lambda + 1/lambda for a symmetric spike.

    Subcritical spikes (|lambda| <= 1) stick to the bulk edge
    2 * sign(lambda); the convention sign(0) = 0 makes the zero spike
    map to zero rather than to either edge.
    """
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        biased = lam + 1.0 / lam
    out = np.where(np.abs(lam) > 1.0, biased, 2.0 * np.sign(lam))
    return float(out) if out.ndim == 0 else out


def wigner_cos_sq(lam):
    """Squared cosine 1 - 1/lambda^2 for |lambda| > 1, else zero."""
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = 1.0 - 1.0 / np.square(lam)
    out = np.where(np.abs(lam) > 1.0, c, 0.0)
    return float(out) if out.ndim == 0 else out


def mp_density(x, gamma: float):
    """Density of the Marchenko-Pastur bulk at x.

    sqrt((upper - x)(x - lower)) / (2 pi gamma x) on the bulk support.
    For gamma > 1 this continuous part integrates to 1/gamma; the
    remaining mass is the atom at zero, reported by :func:`mp_atom`.
    """
    gamma = _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    lower, upper = mp_edges(gamma)
    inside = (x > lower) & (x < upper)
    xs = np.where(inside, x, 1.0)
    dens = np.sqrt(np.maximum((upper - xs) * (xs - lower), 0.0)) / (
        2.0 * math.pi * gamma * xs
    )
    out = np.where(inside, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def mp_cdf(x, gamma: float):
    """CDF of the Marchenko-Pastur law at x, atom at zero included.

    Uses the closed-form antiderivative under the substitution
    x = 1 + gamma + 2 sqrt(gamma) sin(t), which stays accurate through
    the square-root edges.
    """
    gamma = _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    lower, upper = mp_edges(gamma)
    sq = math.sqrt(gamma)
    t = np.arcsin(np.clip((x - 1.0 - gamma) / (2.0 * sq), -1.0, 1.0))

    if gamma == 1.0:
        cont = (t + np.cos(t) + math.pi / 2.0) / math.pi
    else:
        absd = abs(1.0 - gamma)

        def G(tv):
            A = ((1.0 + gamma) * np.tan(tv / 2.0) + 2.0 * sq) / absd
            return (2.0 / math.pi) * (
                np.cos(tv) / (2.0 * sq)
                + (1.0 + gamma) / (4.0 * gamma) * tv
                - absd / (2.0 * gamma) * np.arctan(A)
            )

        cont = G(t) - G(np.float64(-math.pi / 2.0))

    cont = np.where(x <= lower, 0.0, cont)
    cont = np.where(x >= upper, (1.0 / gamma if gamma > 1 else 1.0), cont)
    out = cont + mp_atom(gamma) * (x >= 0.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def semicircle_density(x):
    """Semicircle density sqrt(4 - x^2) / (2 pi) on [-2, 2]."""
    x = np.asarray(x, dtype=float)
    out = np.sqrt(np.maximum(4.0 - np.square(x), 0.0)) / (2.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def semicircle_cdf(x):
    """CDF of the semicircle law on [-2, 2]."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -2.0, 2.0)
    out = 0.5 + xc * np.sqrt(4.0 - np.square(xc)) / (4.0 * math.pi) + np.arcsin(
        xc / 2.0
    ) / math.pi
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def mp_stieltjes(z, gamma: float):
    """Stieltjes transform of the Marchenko-Pastur law on the upper half-plane.

    Closed-form root of gamma z m^2 + (z - 1 + gamma) m + 1 = 0,

        m(z) = -(z - 1 + gamma - sqrt((z - 1 - gamma)^2 - 4 gamma)) / (2 gamma z),

    with the branch sqrt((z - upper)(z - lower)) built from principal
    square roots, which is analytic off the bulk, asymptotic to z at
    infinity (so m ~ -1/z), and maps the upper half-plane to itself;
    the inversion Im m(x + i eps) / pi recovers the density.  The same
    branch is valid for every gamma > 0: for gamma > 1 it develops the
    pole -(1 - 1/gamma)/z of the atom at zero automatically.
    """
    gamma = _check_gamma(gamma)
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValidationError("mp_stieltjes: z must lie in the open upper half-plane")

    lower, upper = mp_edges(gamma)
    s = np.sqrt(z - upper) * np.sqrt(z - lower)
    out = -(z - 1.0 + gamma - s) / (2.0 * gamma * z)
    return complex(out) if out.ndim == 0 else out


def mp_stieltjes_companion(z, gamma: float):
    """Stieltjes transform of the companion Gram block, for gamma in (0, 1].

    For an n x p noise matrix with p/n = gamma <= 1, the p x p Gram
    spectrum follows MP(gamma) while the n x n Gram (same scaling) has
    the law (1 - gamma) delta_0 + gamma MP(gamma).  Its transform obeys

        m_companion(z) = gamma m(z) - (1 - gamma) / z,

    the identity this function evaluates.
    """
    gamma = _check_gamma(gamma)
    if gamma > 1.0:
        raise ValidationError("mp_stieltjes_companion: gamma must lie in (0, 1]")
    z = np.asarray(z, dtype=complex)
    out = gamma * mp_stieltjes(z, gamma) - (1.0 - gamma) / z
    return complex(out) if np.asarray(out).ndim == 0 else out


@dataclass(frozen=True)
class SpikePrediction:
    """Asymptotic prediction for a single spike."""

    sigma: float
    effective_snr: float
    supercritical: bool
    location: float
    cos_left_sq: float
    cos_right_sq: float


@dataclass(frozen=True)
class SpectralPrediction:
    """Per-spike predictions plus the shared bulk geometry.

    ``tau_effective`` is the magnitude |tau| actually used; the sign of
    tau never enters rectangular predictions and is kept by the caller.
    ``threshold_sigma`` is the smallest supercritical spike strength,
    infinite when tau = 0.  ``location`` values are squared singular
    values in the asymmetric setting and eigenvalues in the symmetric
    one, where ``bulk_edge`` is (1 + sqrt(gamma))^2 or 2 respectively.
    """

    gamma: float
    setting: str
    tau_effective: float
    threshold_sigma: float
    bulk_edge: float
    spikes: tuple
    ell_star: Optional[int] = None
    note: Optional[str] = None


def _tau_value(tau: Union[float, "object"]) -> float:
    value = getattr(tau, "tau", tau)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError("predict: tau must be finite")
    return value


def predict(
    tau: Union[float, object],
    gamma: float,
    sigmas: Sequence[float],
    setting: str = "asymmetric",
) -> SpectralPrediction:
    """Spectral predictions for spikes of strengths ``sigmas``.

    ``tau`` may be a plain effective-SNR constant or any object with a
    ``tau`` attribute (a TauReport, or a TruncationReport's ``tau_c``
    passed as a float).  The transformed model behaves like a classical
    spiked model with strengths |tau| * sigma, so everything reduces to
    the biasing and cosine formulas above.
    """
    if setting not in ("asymmetric", "symmetric"):
        raise ValidationError("predict: setting must be 'asymmetric' or 'symmetric'")
    gamma = _check_gamma(gamma)
    tau_val = _tau_value(tau)
    t = abs(tau_val)
    sig = np.atleast_1d(np.asarray(sigmas, dtype=float))
    if sig.size == 0:
        raise ValidationError("predict: sigmas must be nonempty")

    note = None
    if setting == "asymmetric":
        if np.any(sig <= 0):
            raise ValidationError("predict: asymmetric spike strengths must be positive")
        bulk_edge = (1.0 + math.sqrt(gamma)) ** 2
        threshold = gamma**0.25 / t if t > 0 else math.inf
        snr = t * sig
        locs = mp_lambda(snr, gamma)
        c1, c2 = mp_cos_sq(snr, gamma)
        sup = snr > gamma**0.25
    else:
        if np.any(sig == 0):
            raise ValidationError("predict: symmetric spike eigenvalues must be nonzero")
        bulk_edge = 2.0
        threshold = 1.0 / t if t > 0 else math.inf
        snr = tau_val * sig
        locs = wigner_lambda_bar(snr)
        c = wigner_cos_sq(snr)
        c1 = c2 = c
        sup = np.abs(snr) > 1.0
    if t == 0:
        note = (
            "tau vanishes at first order: all spikes are subcritical at the "
            "sqrt(n) signal scaling; use the higher-order path (predict_ell_star)"
        )

    locs = np.atleast_1d(locs)
    c1 = np.atleast_1d(c1)
    c2 = np.atleast_1d(c2)
    spikes = tuple(
        SpikePrediction(
            sigma=float(sig[i]),
            effective_snr=float(snr[i]),
            supercritical=bool(sup[i]),
            location=float(locs[i]),
            cos_left_sq=float(c1[i]),
            cos_right_sq=float(c2[i]),
        )
        for i in range(sig.size)
    )
    return SpectralPrediction(
        gamma=gamma,
        setting=setting,
        tau_effective=t,
        threshold_sigma=threshold,
        bulk_edge=bulk_edge,
        spikes=spikes,
        note=note,
    )


def predict_ell_star(
    tau_report,
    gamma: float,
    sigma: float,
    moment_u: float,
    moment_v: float,
) -> SpectralPrediction:
    """Prediction at the critical scaling when tau vanishes to order ell* - 1.

    When the first ell* - 1 constants vanish, the signal must grow like
    n^(1 - 1/(2 ell*)) to bias the spectrum, and the effective spiked
    model has strength

        tau_tilde * sigma^ell*,
        tau_tilde = tau_ell* * sqrt(moment_u * moment_v)
                    / (ell*! * gamma^((ell* - 1)/2)),

    where ``moment_u`` and ``moment_v`` are the (2 ell*)-th moments of
    the entries of sqrt(n) u and sqrt(p) v.  The aligned directions are
    the normalized ell*-th Hadamard powers of u and v, so the returned
    cosines refer to those (see sim.hadamard_alignment).  For ell* = 1
    this reduces exactly to :func:`predict` (both moments are 1).
    """
    gamma = _check_gamma(gamma)
    ell = tau_report.ell_star
    if ell is None:
        raise ValidationError(
            "predict_ell_star: no nonvanishing constant up to the computed order L"
        )
    if not (moment_u > 0 and moment_v > 0):
        raise ValidationError("predict_ell_star: vector moments must be positive")
    sigma = float(sigma)
    if sigma <= 0:
        raise ValidationError("predict_ell_star: sigma must be positive")

    tau_ell = float(tau_report.tau_ell[ell - 1])
    tau_tilde = (
        tau_ell
        * math.sqrt(moment_u * moment_v)
        / (math.factorial(ell) * gamma ** ((ell - 1) / 2.0))
    )
    t = abs(tau_tilde)
    snr = t * sigma**ell
    c1, c2 = mp_cos_sq(snr, gamma)
    spike = SpikePrediction(
        sigma=sigma,
        effective_snr=snr,
        supercritical=bool(snr > gamma**0.25),
        location=float(mp_lambda(snr, gamma)),
        cos_left_sq=float(c1),
        cos_right_sq=float(c2),
    )
    return SpectralPrediction(
        gamma=gamma,
        setting="asymmetric",
        tau_effective=t,
        threshold_sigma=(gamma**0.25 / t) ** (1.0 / ell) if t > 0 else math.inf,
        bulk_edge=(1.0 + math.sqrt(gamma)) ** 2,
        spikes=(spike,),
        ell_star=int(ell),
    )
