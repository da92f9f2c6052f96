import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import p3_direct, poly_integral
from runn.quadrature import (
    Partition,
    estimate,
    make_sample,
    p3_sample,
    vanilla_sample,
    variance_probe,
)


def test_vanilla_single_point_weight():
    s = vanilla_sample((-1, 1), 1, 0)
    assert s.weights[0] == 2.0


def test_constant_integrand_exact_for_both_rules():
    for rule in ("vanilla", "p3"):
        for seed in range(5):
            s = make_sample(rule, 30, (-1, 1), seed)
            assert estimate(s, np.full(30, 2.5)) == pytest.approx(5.0, abs=1e-13)


def test_estimate_basics():
    from runn.quadrature import QuadratureSample

    s = QuadratureSample(np.zeros(2), np.ones(2), "vanilla")
    assert estimate(s, [2.0, 3.0]) == 5.0
    with pytest.raises(ValueError):
        estimate(s, [1.0])
    rng = np.random.default_rng(0)
    w, v = rng.normal(size=50), rng.normal(size=50)
    s = QuadratureSample(np.zeros(50), w, "vanilla")
    fold = 0.0
    for a, b in zip(w, v):
        fold += a * b
    assert estimate(s, v) == pytest.approx(fold, rel=1e-13)


def test_p3_matches_reference_rule_formula():
    part = Partition(-1.0, 1.0, 5)
    rng = np.random.default_rng(4)
    s = p3_sample(part, np.random.default_rng(4))
    xhat = np.cbrt(rng.uniform(size=5))
    L = lambda x: np.exp(np.sin(3 * x))  # noqa: E731
    assert estimate(s, L(s.nodes)) == pytest.approx(p3_direct(L, -1.0, 1.0, 5, xhat), rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(K=st.integers(1, 40), seed=st.integers(0, 10**6), a=st.floats(-3, 0), width=st.floats(0.1, 5))
def test_p3_sample_invariants(K, seed, a, width):
    part = Partition(a, a + width, K)
    s = p3_sample(part, seed)
    assert len(s) == 3 * K
    trip = s.weights.reshape(K, 3)
    assert np.allclose(trip.sum(axis=1), part.h, rtol=1e-12, atol=1e-14)
    assert np.all(trip[:, 0] > 0) and np.all(trip[:, 2] > 0)
    assert s.weights.sum() == pytest.approx(width, rel=1e-12)
    assert np.all(np.diff(s.nodes) >= 0)
    assert s.nodes.min() >= a - 1e-12 and s.nodes.max() <= a + width + 1e-12


@settings(max_examples=60, deadline=None)
@given(K=st.integers(1, 32), seed=st.integers(0, 10**6),
       c=st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_p3_is_exact_for_cubics(K, seed, c):
    s = p3_sample(Partition(-1.0, 1.0, K), seed)
    vals = c[0] + c[1] * s.nodes + c[2] * s.nodes**2 + c[3] * s.nodes**3
    assert abs(estimate(s, vals) - poly_integral(c, -1.0, 1.0)) < 1e-10


def test_p3_x_squared_is_two_thirds_every_draw():
    for seed in range(20):
        s = p3_sample(Partition(-1, 1, 1), seed)
        assert estimate(s, s.nodes**2) == pytest.approx(2 / 3, abs=1e-14)


def test_p3_x_cubed_zero():
    for K in (1, 3, 8):
        s = p3_sample(Partition(-1, 1, K), K)
        assert abs(estimate(s, s.nodes**3)) < 1e-12


def test_p3_zero_draw_is_resampled():
    class Stub:
        def __init__(self):
            self.calls = 0

        def uniform(self, size=None):
            self.calls += 1
            return np.zeros(size) if self.calls == 1 else np.full(size, 0.5)

    s = p3_sample(Partition(-1, 1, 2), np.random.default_rng(0))
    assert np.all(np.isfinite(s.weights))
    stub = Stub()
    from runn import quadrature

    orig = quadrature._rng
    quadrature._rng = lambda seed: stub
    try:
        s = quadrature.p3_sample(Partition(-1, 1, 2), None)
    finally:
        quadrature._rng = orig
    assert stub.calls == 2 and np.all(np.isfinite(s.weights))


@pytest.mark.parametrize("rule", ["vanilla", "p3"])
@pytest.mark.parametrize("deg", [2, 4, 6])
def test_unbiased_for_polynomials(rule, deg):
    rng = np.random.default_rng(deg)
    est = np.array([estimate(s, s.nodes**deg) for s in (make_sample(rule, 24, (-1, 1), rng) for _ in range(10_000))])
    truth = 2.0 / (deg + 1)
    se = est.std(ddof=1) / np.sqrt(est.size)
    assert abs(est.mean() - truth) <= 4 * se + 1e-15


def test_sin_p3_mean_k8():
    rng = np.random.default_rng(8)
    est = np.array([estimate(s, np.sin(np.pi * s.nodes)) for s in (p3_sample(Partition(-1, 1, 8), rng) for _ in range(10_000))])
    se = est.std(ddof=1) / np.sqrt(est.size)
    assert abs(est.mean()) <= 3 * se


def test_vanilla_x2_mean():
    rng = np.random.default_rng(2)
    est = np.array([estimate(s, s.nodes**2) for s in (vanilla_sample((-1, 1), 10, rng) for _ in range(10_000))])
    se = est.std(ddof=1) / np.sqrt(est.size)
    assert abs(est.mean() - 2 / 3) <= 3 * se


def test_variance_probe_constant_is_degenerate():
    t = variance_probe(lambda x: np.ones_like(x), "p3", (2, 4), reps=100)
    assert np.all(t.variance == 0) and np.isnan(t.slope)


def test_variance_slopes():
    exp_p3 = variance_probe(np.exp, "p3", (4, 8, 16, 32, 64), reps=400, seed=1)
    assert -9.8 <= exp_p3.slope <= -8.2
    van = variance_probe(np.exp, "vanilla", (4, 8, 16, 32, 64), reps=400, seed=1)
    assert -1.3 <= van.slope <= -0.7
    # kink at an interior point of an element: the fast rate is lost
    kink = variance_probe(lambda x: np.abs(x - 0.3), "p3", (4, 8, 16, 32, 64), reps=400, seed=1)
    assert kink.slope > -9.0 + 1.0


def test_variance_probe_rejects_few_reps(tmp_path):
    with pytest.raises(ValueError):
        variance_probe(np.exp, "p3", (2,), reps=10)
    t = variance_probe(np.exp, "p3", (2, 4), reps=100)
    t.to_csv(tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "rule,K,N_K,variance" and lines[1].startswith("p3,2,6,")


def test_determinism_and_bad_inputs():
    a, b = make_sample("p3", 30, (-1, 1), 5), make_sample("p3", 30, (-1, 1), 5)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.weights, b.weights)
    with pytest.raises(ValueError):
        make_sample("p3", 31)
    with pytest.raises(ValueError):
        make_sample("gauss", 30)
    with pytest.raises(ValueError):
        Partition(0, 1, 0)
    with pytest.raises(ValueError):
        vanilla_sample((-1, 1), 0)
