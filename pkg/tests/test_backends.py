import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_net
from runn import _backend, _kernels_py
from runn.diffnet import NetworkSpec, evaluate

compiled = pytest.importorskip("runn._kernels")

ACTS = [_kernels_py.SIN, _kernels_py.TANH, _kernels_py.RELU3]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 12), N=st.integers(1, 200), act=st.sampled_from(ACTS))
def test_first_layer_stack_agrees(seed, n, N, act):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, N)
    kappa, w, b = rng.uniform(1, 50, n), rng.uniform(-1, 1, n), rng.uniform(-3, 3, n)
    a = compiled.first_layer_stack(x, kappa, w, b, act)
    r = _kernels_py.first_layer_stack(x, kappa, w, b, act)
    assert np.allclose(a, r, rtol=1e-13, atol=1e-13 * np.abs(r).max())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), act=st.sampled_from([_kernels_py.TANH, _kernels_py.RELU3]))
def test_activation_stack_agrees(seed, act):
    p = np.random.default_rng(seed).normal(size=(40, 7))
    assert np.allclose(compiled.activation_stack(p, act), _kernels_py.activation_stack(p, act), rtol=1e-14, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), act=st.sampled_from(ACTS), orders=st.integers(0, 2))
def test_vjp_agrees(seed, act, orders):
    rng = np.random.default_rng(seed)
    N, n = 60, 9
    x = rng.uniform(-1, 1, N)
    kappa, w, b = rng.uniform(1, 20, n), rng.uniform(-1, 1, n), rng.uniform(-3, 3, n)
    D = _kernels_py.first_layer_stack(x, kappa, w, b, act)
    zb = [rng.normal(size=(N, n)) for _ in range(3)]
    zb = [z if k <= orders else None for k, z in enumerate(zb)]
    gw, gb = compiled.first_layer_vjp(x, kappa, w, D, *zb)
    rw, rb = _kernels_py.first_layer_vjp(x, kappa, w, D, *zb)
    assert np.allclose(gw, rw, rtol=1e-11, atol=1e-11 * np.abs(rw).max())
    assert np.allclose(gb, rb, rtol=1e-11, atol=1e-11 * np.abs(rb).max())


@pytest.mark.parametrize("spec", [NetworkSpec(8, depth=2), NetworkSpec(8, depth=2, activation="relu_cubed"),
                                  NetworkSpec(8, fourier=False, activation="relu_cubed")])
def test_network_evaluation_agrees(spec):
    p = random_net(spec, 0)
    x = np.linspace(-1, 1, 301)
    a = evaluate(p, spec, x, 2, backend="compiled")
    b = evaluate(p, spec, x, 2, backend="python")
    for u, v in ((a.output, b.output), (a.doutput, b.doutput), (a.d2output, b.d2output)):
        assert np.allclose(u, v, rtol=1e-12, atol=1e-12 * np.abs(v).max())


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.kernels("gpu")
    with pytest.raises(ValueError):
        _backend.activation("gpu")


def test_environment_forces_fallback():
    env = dict(os.environ, RUNN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import runn; print(runn.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
