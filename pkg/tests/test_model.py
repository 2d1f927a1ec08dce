import math

import numpy as np
import pytest

import spreadcomm as sc
from spreadcomm.model import (
    PROB_EPS,
    TWO_PI,
    LatentState,
    ModelConfig,
    ModelError,
    log_likelihood,
    log_posterior,
)

TWO = np.array([[0, 1], [1, 0]])


def state(*angles):
    return LatentState(np.arange(len(angles)), np.array(angles, dtype=float))


def test_circular_distance_examples():
    assert sc.circular_distance(0.0, 0.0) == 0.0
    assert abs(sc.circular_distance(0.1, TWO_PI - 0.1) - 0.2) < 1e-12
    assert abs(sc.circular_distance(0.0, np.pi) - np.pi) < 1e-12


def test_circular_distance_range():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(-20, 20, (2, 1000))
    d = sc.circular_distance(a, b)
    assert np.all(d >= 0) and np.all(d <= np.pi + 1e-12)


def test_link_h_examples():
    assert sc.link_h(0.0) == 1.0
    assert abs(sc.link_h(np.pi)) < 1e-12
    assert abs(sc.link_h(np.pi / 2) - 0.5) < 1e-12


def test_link_h_even_and_periodic():
    rng = np.random.default_rng(1)
    y = rng.uniform(-10, 10, 500)
    assert np.allclose(sc.link_h(y), sc.link_h(-y))
    assert np.allclose(sc.link_h(y), sc.link_h(y + TWO_PI))
    assert np.all((sc.link_h(y) >= 0) & (sc.link_h(y) <= 1))


def test_link_g_examples():
    assert sc.link_g(0.0, 5) == 1.0
    assert abs(sc.link_g(np.pi / 2, 2) - 0.25) < 1e-12
    y = np.linspace(0, TWO_PI, 50)
    assert np.allclose(sc.link_g(y, 1), sc.link_h(y))


def test_link_g_invalid_exponent():
    with pytest.raises(ModelError):
        sc.link_g(1.0, 0)


def test_model_config_validation():
    with pytest.raises(ModelError):
        ModelConfig(likelihood="gaussian")
    with pytest.raises(ModelError):
        ModelConfig(lam=0.0)
    with pytest.raises(ModelError):
        ModelConfig(sharpness_k=0)


def test_latent_state_wraps_angles():
    s = state(7.0, -1.0)
    assert np.all((s.angles >= 0) & (s.angles < TWO_PI))
    assert abs(s.angle_of(1) - (TWO_PI - 1.0)) < 1e-12


def test_log_likelihood_two_vertex_edge_aligned():
    g = sc.Graph(TWO)
    ll = log_likelihood(g, state(0.0, 0.0), ModelConfig())
    assert abs(ll - math.log(1 - PROB_EPS)) < 1e-9


def test_log_likelihood_two_vertex_edge_quarter():
    g = sc.Graph(TWO)
    ll = log_likelihood(g, state(0.0, np.pi / 2), ModelConfig())
    assert abs(ll - math.log(0.5)) < 1e-12


def _oracle_log_likelihood(adj, angles, likelihood, lam, k):
    """Independent pair-by-pair enumeration with scalar math only."""
    n = len(angles)
    total = 0.0
    for j in range(n):
        for kk in range(j + 1, n):
            p = ((math.cos(angles[j] - angles[kk]) + 1.0) / 2.0) ** k
            p = min(max(p, PROB_EPS), 1.0 - PROB_EPS)
            a = adj[j][kk]
            if likelihood == "bernoulli":
                total += a * math.log(p) + (1 - a) * math.log(1.0 - p)
            else:
                rate = lam * p
                total += a * math.log(rate) - rate - math.lgamma(a + 1)
    return total


@pytest.mark.parametrize("likelihood", ["bernoulli", "poisson"])
def test_log_likelihood_matches_enumeration_oracle(likelihood):
    rng = np.random.default_rng(42)
    mode = "binary" if likelihood == "bernoulli" else "count"
    hi = 2 if likelihood == "bernoulli" else 4
    for _ in range(50):
        n = int(rng.integers(2, 6))
        upper = rng.integers(0, hi, (n, n))
        adj = np.triu(upper, 1)
        adj = adj + adj.T
        g = sc.Graph(adj, mode=mode)
        angles = rng.uniform(0, TWO_PI, n)
        k = int(rng.integers(1, 5))
        lam = float(rng.uniform(0.5, 3.0))
        cfg = ModelConfig(likelihood=likelihood, lam=lam, sharpness_k=k)
        got = log_likelihood(g, LatentState(np.arange(n), angles), cfg)
        want = _oracle_log_likelihood(adj.tolist(), angles.tolist(), likelihood, lam, k)
        assert abs(got - want) < 1e-12 * max(1.0, abs(want))


def test_log_posterior_prior_constant():
    g = sc.Graph(TWO)
    s = state(0.3, 1.7)
    cfg = ModelConfig()
    diff = log_posterior(g, s, cfg) - log_likelihood(g, s, cfg)
    assert diff == pytest.approx(-2 * math.log(TWO_PI), abs=1e-12)


def test_log_posterior_rotation_reflection_invariance():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        upper = np.triu(rng.integers(0, 2, (n, n)), 1)
        g = sc.Graph(upper + upper.T)
        angles = rng.uniform(0, TWO_PI, n)
        cfg = ModelConfig(sharpness_k=int(rng.integers(1, 4)))
        base = log_posterior(g, LatentState(np.arange(n), angles), cfg)
        c = rng.uniform(0, TWO_PI)
        rotated = log_posterior(g, LatentState(np.arange(n), angles + c), cfg)
        reflected = log_posterior(g, LatentState(np.arange(n), TWO_PI - angles), cfg)
        assert abs(rotated - base) < 1e-9
        assert abs(reflected - base) < 1e-9


def test_log_likelihood_monotone_in_distance_single_edge():
    g = sc.Graph(TWO)
    cfg = ModelConfig()
    values = [log_likelihood(g, state(0.0, y), cfg) for y in np.linspace(0, np.pi, 40)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_log_likelihood_mode_mismatch():
    g = sc.Graph(TWO)  # binary
    with pytest.raises(ModelError, match="does not match"):
        log_likelihood(g, state(0.0, 1.0), ModelConfig(likelihood="poisson"))


def test_log_likelihood_state_mismatch():
    g = sc.Graph(TWO)
    bad = LatentState(np.array([0, 5]), np.array([0.0, 1.0]))
    with pytest.raises(ModelError, match="cover"):
        log_likelihood(g, bad, ModelConfig())


def test_poisson_finite_at_opposite_angles():
    adj = np.array([[0, 3], [3, 0]])
    g = sc.Graph(adj, mode="count")
    ll = log_likelihood(g, state(0.0, np.pi), ModelConfig(likelihood="poisson"))
    assert math.isfinite(ll)
