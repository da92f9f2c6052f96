import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_ncpsd
from runn import formulations as fm
from runn.diffnet import ConfigurationError, ContractViolation, NetworkSpec, build_network
from runn.spectral import (
    DegenerateSpectrumError,
    InitPlan,
    PhaseDescriptor,
    SequencingError,
    init_plan_for_phase,
    ncpsd,
    sample_frequencies,
    select_bandwidth,
    uniform_grid,
)
from runn.trainer import TrainConfig, train_phase


def test_matches_direct_dft():
    x = uniform_grid(64)
    g = np.exp(np.sin(3 * x)) * (1 - x * x) + 0.1 * np.cos(7 * np.pi * x)
    for s in (-2, -1, 0, 1, 2):
        om, cum = naive_ncpsd(g, s)
        c = ncpsd(g, s)
        assert np.allclose(c.omegas, om, rtol=1e-14, atol=0)
        assert np.allclose(c.ncpsd, cum, rtol=1e-10, atol=1e-12)


def test_constant_signal_jumps_at_zero():
    c = ncpsd(np.full(128, 3.0), 1)
    assert c.ncpsd[0] == pytest.approx(1.0, abs=1e-12)
    assert c.omegas[0] == 0.0


def test_pure_tone_transition():
    x = uniform_grid(2048)
    c = ncpsd(np.sin(5 * np.pi * x), 0)
    k = int(np.argmin(np.abs(c.omegas - 5 * np.pi)))
    assert c.ncpsd[k - 1] < 0.01 and c.ncpsd[k] > 0.99
    lo, hi = select_bandwidth(c, 0.05)
    assert lo == hi == pytest.approx(5 * np.pi)


def test_two_tone_weighting_fraction():
    x = uniform_grid(4096)
    g = np.sin(np.pi * x) + np.sin(20 * np.pi * x)
    for s in (-2, 0):
        c = ncpsd(g, s)
        hi_bin = int(np.argmin(np.abs(c.omegas - 20 * np.pi)))
        frac = c.power[hi_bin] / c.power.sum()
        a, b = (1 + np.pi**2) ** s, (1 + (20 * np.pi) ** 2) ** s
        assert frac == pytest.approx(b / (a + b), rel=1e-9)
    assert ncpsd(g, 0).power[20] / ncpsd(g, 0).power.sum() == pytest.approx(0.5, rel=1e-9)


def test_input_contracts():
    with pytest.raises(DegenerateSpectrumError):
        ncpsd(np.zeros(64), 0)
    with pytest.raises(ContractViolation):
        ncpsd(np.ones(15), 0)
    with pytest.raises(ContractViolation):
        ncpsd(np.ones(63), 0)
    pts = np.sort(np.random.default_rng(0).uniform(-1, 1, 64))
    with pytest.raises(ContractViolation):
        ncpsd(np.ones(64), 0, points=pts)
    ncpsd(np.ones(64), 0, points=uniform_grid(64))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), s=st.integers(-3, 3), scale=st.floats(1e-3, 1e3))
def test_curve_invariants_and_scale_invariance(seed, s, scale):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=128)
    c = ncpsd(g, s)
    assert np.all(np.diff(c.ncpsd) >= 0)
    assert abs(c.ncpsd[-1] - 1) <= 1e-12
    assert np.all(c.power >= 0)
    assert c.omegas[0] == 0 and np.all(np.diff(c.omegas) > 0)
    sign = -1 if seed % 2 else 1
    assert select_bandwidth(ncpsd(sign * scale * g, s), 0.05) == select_bandwidth(c, 0.05)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.1, 10), b=st.floats(0.1, 10), s1=st.integers(-3, 3), s2=st.integers(-3, 3))
def test_lower_s_puts_more_mass_on_lower_bin(a, b, s1, s2):
    x = uniform_grid(64)
    g = a * np.sin(2 * np.pi * x) + b * np.sin(6 * np.pi * x)
    lo, hi = sorted((s1, s2))
    assert ncpsd(g, lo).ncpsd[2] >= ncpsd(g, hi).ncpsd[2] - 1e-15


def test_band_near_half_alpha_is_ordered():
    g = np.random.default_rng(1).normal(size=256)
    lo, hi = select_bandwidth(ncpsd(g, 0), 0.5 - 1e-9)
    assert lo <= hi


def test_zero_lower_edge_clamped_to_first_bin():
    x = uniform_grid(256)
    lo, hi = select_bandwidth(ncpsd(1.0 + 0.01 * np.sin(3 * np.pi * x), 0), 0.05)
    assert lo == pytest.approx(np.pi) and hi >= lo


def test_sample_frequencies():
    assert np.all(sample_frequencies(7.0, 7.0, 10, 0) == 7.0)
    k = sample_frequencies(1.0, np.e**2, 100_000, 3)
    lk = np.log(k)
    se = lk.std(ddof=1) / np.sqrt(lk.size)
    assert abs(lk.mean() - 1.0) < 3 * se
    assert k.min() >= 1.0 and k.max() <= np.e**2
    with pytest.raises(ConfigurationError):
        sample_frequencies(0.0, 1.0, 3)
    with pytest.raises(ConfigurationError):
        sample_frequencies(-1.0, 1.0, 3)


def test_highfreq_source_band_contains_tone():
    prob = fm.sine_problem(40 * np.pi)
    grid = uniform_grid()
    plan = init_plan_for_phase(PhaseDescriptor("weak", 0), {"source_term": prob.f(grid)})
    assert plan.omega_min <= 40 * np.pi <= plan.omega_max


@pytest.mark.parametrize(
    "form,phase,s,tag",
    [
        ("weak", 0, -1, "source_term"),
        ("weak", 1, -1, "strong_residual"),
        ("weak", 2, 1, "prior_weak_residual"),
        ("weak", 5, 1, "prior_weak_residual"),
        ("ultraweak", 0, -2, "source_term"),
        ("ultraweak", 1, -2, "strong_residual"),
        ("ultraweak", 2, 0, "prior_correction_proxy"),
    ],
)
def test_strategy_table(form, phase, s, tag):
    g = np.sin(np.pi * uniform_grid())
    plan = init_plan_for_phase(PhaseDescriptor(form, phase), {tag: g})
    assert (plan.s_used, plan.source_tag) == (s, tag)


def test_missing_prior_signal_is_a_sequencing_error():
    with pytest.raises(SequencingError):
        init_plan_for_phase(PhaseDescriptor("weak", 2), {"source_term": np.ones(64)})
    with pytest.raises(ContractViolation):
        init_plan_for_phase(PhaseDescriptor("weak", 0), {})


def test_trained_first_correction_band_brackets_pi():
    # phase 2 analyzes the trained first correction r ≈ c·sin(πx)
    prob = fm.sine_problem(np.pi)
    spec = NetworkSpec(10)
    u0 = fm.Scaled(fm.SineMode(np.pi), 0.9)
    net = build_network(spec, InitPlan(np.pi, np.pi), 0)
    res = train_phase(prob, net, spec, u0, TrainConfig(epochs=30, learning_rate=1e-2, n_points=600), seed=0)
    r = fm.NetworkHandle(res.params, spec).evaluate(uniform_grid(), 0)[0]
    plan = init_plan_for_phase(PhaseDescriptor("weak", 2), {"prior_weak_residual": r})
    assert plan.omega_min <= np.pi <= plan.omega_max


def test_curve_csv(tmp_path):
    c = ncpsd(np.sin(np.pi * uniform_grid(32)), 0)
    c.to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "omega,power,ncpsd" and len(rows) == 18


def test_dirac_proxy_spectrum_is_broad():
    g = fm.dirac_prime_proxy(uniform_grid())
    plan = init_plan_for_phase(PhaseDescriptor("ultraweak", 0), {"source_term": g})
    assert plan.omega_max > plan.omega_min > 0
