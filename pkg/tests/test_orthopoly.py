"""Orthonormal bases, series coefficients, and the effective SNR tau."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from spiketx.errors import ValidationError
from spiketx.measures import cauchy, fisher_information, gaussian
from spiketx.orthopoly import (
    SeriesTransform,
    b_coeffs,
    build_basis,
    coeffs,
    eval_q,
    optimal_series_preprocessor,
    tau,
)
from spiketx.transforms import identity, polynomial, relu_centered, score_transform

from conftest import UniformMeasure, bimodal


def _hermite_normalized(k, z):
    # orthonormal probabilists' Hermite: He_k / sqrt(k!)
    c = np.zeros(k + 1)
    c[k] = 1.0
    return np.polynomial.hermite_e.hermeval(z, c) / math.sqrt(math.factorial(k))


def test_gaussian_basis_is_normalized_hermite():
    basis = build_basis(gaussian(), 10)
    z = np.linspace(-3.5, 3.5, 41)
    for k in range(11):
        assert_allclose(eval_q(basis, k, z), _hermite_normalized(k, z), atol=1e-10)


def test_gaussian_recurrence_coefficients():
    basis = build_basis(gaussian(), 12)
    assert_allclose(basis.alpha, np.zeros(13), atol=1e-13)
    assert_allclose(basis.beta[0], 1.0, rtol=1e-13)
    assert_allclose(basis.beta[1:], np.arange(1, 13, dtype=float), rtol=1e-10)


def test_hermite_derivative_identity():
    # q_k' = sqrt(k) q_{k-1} under the standard normal
    basis = build_basis(gaussian(), 10)
    z = np.linspace(-3, 3, 25)
    for k in range(1, 11):
        assert_allclose(
            eval_q(basis, k, z, ell=1),
            math.sqrt(k) * eval_q(basis, k - 1, z),
            atol=1e-10,
        )


def test_derivatives_match_numpy_coefficient_space():
    # express q_k in the monomial basis via hermite_e, differentiate
    # there, and compare against the recurrence-table derivatives
    basis = build_basis(gaussian(), 8)
    z = np.linspace(-2.5, 2.5, 17)
    for k in range(2, 9):
        c = np.zeros(k + 1)
        c[k] = 1.0 / math.sqrt(math.factorial(k))
        dc = np.polynomial.hermite_e.hermeder(c, 2)
        assert_allclose(
            eval_q(basis, k, z, ell=2),
            np.polynomial.hermite_e.hermeval(z, dc),
            atol=1e-9,
        )


def test_uniform_basis_matches_legendre():
    # uniform on [-sqrt(3), sqrt(3)]: q_k(z) = sqrt(2k+1) P_k(z / sqrt(3))
    u = UniformMeasure()
    basis = build_basis(u, 6)
    z = np.linspace(-1.6, 1.6, 21)
    for k in range(7):
        c = np.zeros(k + 1)
        c[k] = 1.0
        ref = math.sqrt(2 * k + 1) * np.polynomial.legendre.legval(z / u.a, c)
        assert_allclose(eval_q(basis, k, z), ref, atol=1e-10)


def test_gram_orthonormality_by_quadrature():
    # independent adaptive quadrature, not the basis's own nodes; the
    # density is below 1e-300 outside +-40, so finite bounds lose nothing
    for measure, pts in ((gaussian(), None), (bimodal(), (-1.0, 1.0))):
        basis = build_basis(measure, 8)
        for i in range(9):
            for j in range(i, 9):
                val, _ = integrate.quad(
                    lambda z, i=i, j=j: eval_q(basis, i, z)
                    * eval_q(basis, j, z)
                    * measure.density(z),
                    -40.0,
                    40.0,
                    points=pts,
                    limit=200,
                )
                assert abs(val - (1.0 if i == j else 0.0)) < 1e-9


def test_cauchy_has_no_basis():
    with pytest.raises(ValidationError, match="diverge"):
        build_basis(cauchy(), 4)


def test_coeffs_recover_a_pure_mode():
    basis = build_basis(gaussian(), 8)
    sc = coeffs(lambda z: eval_q(basis, 3, z), basis)
    expected = np.zeros(9)
    expected[3] = 1.0
    assert_allclose(sc.a, expected, atol=1e-9)
    assert_allclose(sc.f_norm, 1.0, rtol=1e-9)
    assert abs(sc.tail_bound) < 1e-9


def test_b_coeffs_gaussian_closed_form():
    # b_k1 = <q_k', 1> = sqrt(k) delta_{k,1}; b_k2 = sqrt(k(k-1)) delta_{k,2}
    basis = build_basis(gaussian(), 8)
    b1 = b_coeffs(basis, 1)
    expected = np.zeros(9)
    expected[1] = 1.0
    assert_allclose(b1, expected, atol=1e-10)
    b2 = b_coeffs(basis, 2)
    expected = np.zeros(9)
    expected[2] = math.sqrt(2.0)
    assert_allclose(b2, expected, atol=1e-10)


def test_b_coeffs_cross_check_runs_for_mixture():
    basis = build_basis(bimodal(), 8)
    b1 = b_coeffs(basis, 1, check=True)
    # independent route: b_k1 = -int q_k w' dz
    for k in (0, 1, 2, 3):
        ref, _ = integrate.quad(
            lambda z, k=k: eval_q(basis, k, z) * bimodal().density_derivative(z, 1),
            -40.0,
            40.0,
            points=(-1.0, 1.0),
            limit=200,
        )
        assert_allclose(b1[k], -ref, atol=1e-8)


def test_tau_identity_is_one_for_unit_variance():
    for measure in (gaussian(), UniformMeasure()):
        rep = tau(identity(), measure, K=12)
        assert_allclose(rep.tau, 1.0, atol=1e-10)
        assert rep.ell_star == 1


def test_tau_relu_gaussian_closed_form():
    rep = tau(relu_centered(), gaussian(), K=24)
    assert_allclose(rep.tau, math.sqrt(math.pi / (2.0 * (math.pi - 1.0))), atol=1e-6)
    # ||f||^2 = Var(max(z,0)) = 1/2 - 1/(2 pi)
    assert_allclose(rep.f_norm, math.sqrt(0.5 - 0.5 / math.pi), rtol=1e-8)


def test_tau_quadratic_vanishes_at_first_order():
    # f = q_2 = (z^2 - 1)/sqrt(2): tau_1 = 0, tau_2 = sqrt(2)
    f = polynomial([-1.0 / math.sqrt(2.0), 0.0, 1.0 / math.sqrt(2.0)])
    rep = tau(f, gaussian(), K=12, L=3)
    assert rep.tau == 0.0
    assert rep.ell_star == 2
    assert_allclose(rep.tau_ell[1], math.sqrt(2.0), rtol=1e-9)


def test_tau_rejects_uncentered_transform():
    with pytest.raises(ValidationError, match="center"):
        tau(lambda z: np.maximum(z, 0.0), gaussian(), K=12)


def test_tau_auto_center_matches_manual_centering():
    raw = lambda z: np.maximum(z, 0.0)
    rep = tau(raw, gaussian(), K=24, auto_center=True)
    ref = tau(relu_centered(), gaussian(), K=24)
    assert_allclose(rep.tau, ref.tau, rtol=1e-8)
    assert_allclose(rep.a0, 1.0 / math.sqrt(2.0 * math.pi), rtol=1e-8)


def test_tau_basis_reuse_and_degree_check():
    basis = build_basis(gaussian(), 24)
    rep = tau(relu_centered(), gaussian(), K=24, basis=basis)
    assert_allclose(rep.tau, tau(relu_centered(), gaussian(), K=24).tau, rtol=1e-12)
    with pytest.raises(ValidationError):
        tau(relu_centered(), gaussian(), K=30, basis=basis)


def test_tau_warns_on_unresolved_tail():
    # heaviside's expansion decays slowly; K = 6 leaves a visible tail
    from spiketx.transforms import heaviside_centered

    rep = tau(heaviside_centered(), gaussian(), K=6)
    assert any("tail" in w for w in rep.warnings)


def test_series_transform_evaluates_expansion():
    basis = build_basis(gaussian(), 4)
    series = np.array([0.0, 1.0, 0.5, 0.0, 0.0])
    f = SeriesTransform(basis, series)
    z = np.linspace(-2, 2, 9)
    ref = eval_q(basis, 1, z) + 0.5 * eval_q(basis, 2, z)
    assert_allclose(f(z), ref, atol=1e-12)
    assert f.centered_for == basis.measure.name


def test_series_transform_length_validation():
    basis = build_basis(gaussian(), 4)
    with pytest.raises(ValidationError):
        SeriesTransform(basis, np.ones(3))


def test_optimal_series_preprocessor_approaches_sqrt_fisher():
    # round-trip tau of the degree-K polynomial; higher degrees overflow
    # the quadrature, so check convergence from below instead
    measure = bimodal()
    target = math.sqrt(fisher_information(measure))
    taus = {}
    for K in (20, 40):
        f = optimal_series_preprocessor(measure, K=K)
        taus[K] = abs(tau(f, measure, K=K).tau)
    assert taus[20] < taus[40] <= target + 1e-9
    assert_allclose(taus[40], target, rtol=1e-3)


def test_score_transform_tau_is_minus_sqrt_fisher():
    measure = bimodal()
    rep = tau(score_transform(measure), measure, K=80)
    assert rep.tau < 0
    assert_allclose(-rep.tau, math.sqrt(fisher_information(measure)), rtol=1e-4)


def test_gaussian_score_transform_is_identity_up_to_sign():
    # for the standard normal, -score(z) = z, so tau = 1 exactly
    rep = tau(score_transform(gaussian()), gaussian(), K=12)
    assert_allclose(rep.tau, -1.0, atol=1e-9)
