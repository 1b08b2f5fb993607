"""Singular value shrinkage: inverse biasing, eta*, losses, denoising."""

import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spiketx.errors import ValidationError
from spiketx.rmt import mp_edges, mp_lambda
from spiketx.shrinkage import (
    DenoiseResult,
    ShrinkageRule,
    denoise,
    eta_star,
    rank_one_loss,
    t_squared,
)
from spiketx.sim import SpikeConfig, gen_signal, rng_for, svd_top


def test_t_squared_inverts_biasing_map():
    for gamma in (0.25, 0.5, 1.0, 2.0):
        for t in np.linspace(gamma**0.25 + 0.05, 3.0, 9):
            observed = math.sqrt(mp_lambda(t, gamma))
            assert_allclose(t_squared(observed, gamma), t * t, rtol=1e-10)


def test_t_squared_zero_at_and_below_edge():
    for gamma in (0.5, 1.0, 2.0):
        edge = 1.0 + math.sqrt(gamma)
        assert t_squared(edge, gamma) == 0.0
        assert t_squared(edge - 0.3, gamma) == 0.0


def test_t_squared_vectorized():
    vals = t_squared(np.array([1.0, 2.5, 4.0]), 1.0)
    assert vals.shape == (3,)
    assert vals[0] == 0.0 and vals[1] > 0


def test_eta_star_square_case_equals_t():
    # gamma = 1: eta* = t exactly
    for s in (2.1, 2.5, 4.0):
        assert_allclose(eta_star(s, 1.0), math.sqrt(t_squared(s, 1.0)), rtol=1e-12)


def test_eta_star_ordering_and_subcritical_zero():
    for gamma in (0.25, 0.5, 2.0):
        edge = 1.0 + math.sqrt(gamma)
        assert eta_star(edge - 0.1, gamma) == 0.0
        for s in (edge + 0.2, edge + 1.0):
            t = math.sqrt(t_squared(s, gamma))
            eta = eta_star(s, gamma)
            assert 0 < eta <= t <= s


def test_eta_star_closed_form():
    gamma, s = 0.5, 2.4
    t2 = t_squared(s, gamma)
    expected = math.sqrt(t2) * math.sqrt((t2 + min(1, gamma)) / (t2 + max(1, gamma)))
    assert_allclose(eta_star(s, gamma), expected, rtol=1e-12)


def test_rank_one_loss_matches_dense_svd(rng):
    n, p = 60, 40
    for _ in range(5):
        u = rng.normal(size=n)
        u /= np.linalg.norm(u)
        us = rng.normal(size=n)
        us /= np.linalg.norm(us)
        v = rng.normal(size=p)
        v /= np.linalg.norm(v)
        vs = rng.normal(size=p)
        vs /= np.linalg.norm(vs)
        alpha, theta = 1.7, 2.3
        dense = alpha * np.outer(u, v) - theta * np.outer(us, vs)
        assert_allclose(
            rank_one_loss(alpha, u, v, theta, us, vs),
            np.linalg.norm(dense, 2),
            rtol=1e-12,
        )


def test_rank_one_loss_degenerate_directions():
    u = np.zeros(10)
    u[0] = 1.0
    v = np.zeros(8)
    v[0] = 1.0
    # identical directions: loss is |alpha - theta|
    assert_allclose(rank_one_loss(1.5, u, v, 2.0, u, v), 0.5, rtol=1e-14)
    # zero estimator: loss is theta
    assert_allclose(rank_one_loss(0.0, u, v, 2.0, u, v), 2.0, rtol=1e-14)


def test_rank_one_loss_shape_validation():
    with pytest.raises(ValidationError):
        rank_one_loss(1.0, np.ones(3), np.ones(4), 1.0, np.ones(5), np.ones(4))


def test_eta_star_minimizes_asymptotic_loss_profile():
    # deterministic check on synthetic vectors with the exact limiting
    # angles: the loss profile over alpha is minimized at eta*(s)
    gamma, t = 0.5, 1.6
    s = math.sqrt(mp_lambda(t, gamma))
    from spiketx.rmt import mp_cos_sq

    c1sq, c2sq = mp_cos_sq(t, gamma)
    n, p = 300, 150
    us = np.zeros(n)
    us[0] = 1.0
    vs = np.zeros(p)
    vs[0] = 1.0
    u = math.sqrt(c1sq) * us
    u[1] = math.sqrt(1 - c1sq)
    v = math.sqrt(c2sq) * vs
    v[1] = math.sqrt(1 - c2sq)
    alphas = np.linspace(0.0, 3.0, 301)
    losses = [rank_one_loss(a, u, v, t, us, vs) for a in alphas]
    best = alphas[int(np.argmin(losses))]
    assert abs(best - eta_star(s, gamma)) < 0.02


def test_shrinkage_rule_apply():
    rule = ShrinkageRule(gamma=1.0, kind="hard", level=2.0)
    assert_allclose(rule.apply([2.5, 1.9]), [2.5, 0.0])
    rule = ShrinkageRule(gamma=1.0, kind="none")
    assert_allclose(rule.apply([2.5, 1.9]), [2.5, 1.9])
    rule = ShrinkageRule(gamma=1.0, kind="eta_star")
    assert_allclose(rule.apply([2.5, 1.9]), [2.0, 0.0], rtol=1e-12)


def test_shrinkage_rule_validation():
    with pytest.raises(ValidationError):
        ShrinkageRule(gamma=1.0, kind="soft")
    with pytest.raises(ValidationError):
        ShrinkageRule(gamma=1.0, kind="hard")  # missing level
    with pytest.raises(ValidationError):
        ShrinkageRule(gamma=-1.0)


def test_denoise_keeps_only_supercritical(rng):
    config = SpikeConfig(n=300, p=150, sigmas=(3.0, 0.3), setting="asymmetric", seed=9)
    signal = gen_signal(config, rng_for(9, 0))
    noise = rng.normal(size=(300, 150)) / math.sqrt(300)
    Y = signal.matrix() + noise
    s, U, V = svd_top(Y, 2)
    result = denoise((s, U, V), ShrinkageRule(gamma=0.5))
    assert isinstance(result, DenoiseResult)
    assert result.kept.tolist() == [0]
    est = result.to_matrix()
    truth = 3.0 * np.outer(signal.U[:, 0], signal.V[:, 0])
    raw = s[0] * np.outer(U[:, 0], V[:, 0])
    assert np.linalg.norm(est - truth, 2) < np.linalg.norm(raw - truth, 2)


def test_denoise_warns_when_not_noise_normalized(rng):
    # full-spectrum input far from the MP bulk triggers the sanity warning
    Y = 15.0 * rng.normal(size=(80, 40)) / math.sqrt(80)
    s, U, V = svd_top(Y, 40)
    with pytest.warns(UserWarning, match="noise-normalized"):
        denoise((s, U, V), ShrinkageRule(gamma=0.5))


def test_denoise_no_warning_on_clean_input(rng):
    Y = rng.normal(size=(80, 40)) / math.sqrt(80)
    s, U, V = svd_top(Y, 40)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        denoise((s, U, V), ShrinkageRule(gamma=0.5))


def test_denoise_shape_validation():
    with pytest.raises(ValidationError):
        denoise((np.ones(2), np.ones((5, 3)), np.ones((4, 2))), ShrinkageRule(gamma=1.0))
