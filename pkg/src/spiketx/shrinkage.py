"""Optimal singular-value shrinkage for transform-normalized observations.

Input matrices are assumed normalized so the noise bulk edge sits at
1 + sqrt(gamma) on the singular-value scale (divide by the transformed
noise level ||f|| first; the effective spike strengths are then
tau * sigma_i).  ``t_squared`` inverts the biasing map to recover the
underlying spike strength from an observed singular value, and
``eta_star`` is the operator-norm-optimal amount to keep.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import ValidationError
from .rmt import mp_atom, mp_cdf, mp_edges

__all__ = [
    "ShrinkageRule",
    "DenoiseResult",
    "t_squared",
    "eta_star",
    "denoise",
    "rank_one_loss",
]


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ValidationError("gamma must be a positive finite real")
    return gamma


def t_squared(sigma, gamma: float):
    """Squared spike strength recovered from an observed singular value.

    Inverts the biasing map on its supercritical branch:

        t^2 = (sigma^2 - 1 - gamma + sqrt((sigma^2 - 1 - gamma)^2 - 4 gamma)) / 2

    for sigma above the bulk edge 1 + sqrt(gamma), and 0 at or below it
    (an observation at the edge carries no recoverable spike).  The
    supercritical branch approaches sqrt(gamma) as sigma comes down to
    the edge.
    """
    gamma = _check_gamma(gamma)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValidationError("t_squared: sigma must be nonnegative")
    edge = 1.0 + math.sqrt(gamma)
    s2 = np.square(sigma)
    base = s2 - 1.0 - gamma
    disc = np.maximum(np.square(base) - 4.0 * gamma, 0.0)
    t2 = 0.5 * (base + np.sqrt(disc))
    out = np.where(sigma > edge, t2, 0.0)
    return float(out) if out.ndim == 0 else out


def eta_star(sigma, gamma: float):
    """Operator-norm-optimal shrinkage of an observed singular value.

    With t = sqrt(t_squared(sigma)),

        eta*(sigma) = t * sqrt((t^2 + min(1, gamma)) / (t^2 + max(1, gamma))),

    which equals t itself in the square case gamma = 1 and shrinks
    subcritical observations all the way to zero.  Always
    eta* <= t <= sigma.
    """
    gamma = _check_gamma(gamma)
    t2 = np.asarray(t_squared(sigma, gamma), dtype=float)
    lo, hi = min(1.0, gamma), max(1.0, gamma)
    with np.errstate(invalid="ignore"):
        out = np.sqrt(t2) * np.sqrt((t2 + lo) / (t2 + hi))
    out = np.where(t2 > 0.0, out, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ShrinkageRule:
    """How to map observed singular values to retained weights.

    kind = "eta_star" applies :func:`eta_star`; "hard" keeps values
    above ``level`` untouched and zeroes the rest; "none" keeps
    everything as observed.
    """

    gamma: float
    kind: str = "eta_star"
    level: Optional[float] = None

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.kind not in ("eta_star", "hard", "none"):
            raise ValidationError("ShrinkageRule: kind must be eta_star, hard, or none")
        if self.kind == "hard" and (self.level is None or self.level <= 0):
            raise ValidationError("ShrinkageRule: hard thresholding needs a positive level")

    def apply(self, sigma) -> np.ndarray:
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if self.kind == "eta_star":
            return np.atleast_1d(eta_star(sigma, self.gamma))
        if self.kind == "hard":
            return np.where(sigma > self.level, sigma, 0.0)
        return sigma.copy()


@dataclass(frozen=True)
class DenoiseResult:
    """Retained singular triples after shrinkage."""

    values: np.ndarray
    left: np.ndarray
    right: np.ndarray
    kept: np.ndarray
    rule: ShrinkageRule

    def to_matrix(self) -> np.ndarray:
        """Dense rank-k estimate sum_i eta_i u_i v_i^T."""
        return (self.left * self.values) @ self.right.T


def rank_one_loss(alpha, u, v, theta, u_star, v_star) -> float:
    """Operator norm of alpha*u v^T - theta*u_star v_star^T, computed exactly.

    The difference has rank at most two, so its norm equals that of the
    2x2 core in orthonormal bases of span{u, u_star} and span{v, v_star};
    no large SVD is needed.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    u_star = np.asarray(u_star, dtype=float).ravel()
    v_star = np.asarray(v_star, dtype=float).ravel()
    if u.shape != u_star.shape or v.shape != v_star.shape:
        raise ValidationError("rank_one_loss: vector shapes must match pairwise")
    ql, _ = np.linalg.qr(np.column_stack([u, u_star]))
    qr, _ = np.linalg.qr(np.column_stack([v, v_star]))
    core = float(alpha) * np.outer(ql.T @ u, qr.T @ v) - float(theta) * np.outer(
        ql.T @ u_star, qr.T @ v_star
    )
    return float(np.linalg.norm(core, 2))


def _mp_median(gamma: float) -> float:
    atom = mp_atom(gamma)
    if atom >= 0.5:
        return 0.0
    lower, upper = mp_edges(gamma)
    return float(
        optimize.brentq(lambda x: mp_cdf(x, gamma) - 0.5, lower, upper, xtol=1e-12)
    )


def denoise(triples: tuple, rule: ShrinkageRule) -> DenoiseResult:
    """Shrink singular triples and drop the ones sent to zero.

    ``triples`` is an ``(s, U, V)`` tuple as returned by
    :func:`spiketx.sim.svd_top` on a noise-normalized matrix.  When the
    triples cover the full spectrum, the median squared value is
    compared against the bulk median as a normalization sanity check;
    a mismatch beyond a factor of two in either direction warns that
    the input does not look noise-normalized.
    """
    s, U, V = triples
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if U.ndim != 2 or V.ndim != 2 or U.shape[1] != s.size or V.shape[1] != s.size:
        raise ValidationError("denoise: triples must be (s, U, V) with matching columns")

    n, p = U.shape[0], V.shape[0]
    if s.size >= min(n, p):
        med_target = _mp_median(rule.gamma)
        med = float(np.median(np.square(s)))
        if med_target > 0 and not (0.5 <= med / med_target <= 2.0):
            _warnings.warn(
                f"denoise: median squared singular value {med:.3g} is far from "
                f"the bulk median {med_target:.3g}; input may not be noise-normalized",
                stacklevel=2,
            )

    shrunk = rule.apply(s)
    kept = np.flatnonzero(shrunk > 0)
    return DenoiseResult(
        values=shrunk[kept],
        left=U[:, kept],
        right=V[:, kept],
        kept=kept,
        rule=rule,
    )
