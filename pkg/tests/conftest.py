import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from runn.diffnet import NetworkSpec, build_network  # noqa: E402
from runn.spectral import InitPlan  # noqa: E402


def random_net(spec, seed, band=(1.0, 8.0), out_scale=1.0):
    rng = np.random.default_rng(seed)
    p = build_network(spec, InitPlan(*band) if spec.fourier else None, rng)
    for l, (W, c) in enumerate(p.hidden):
        p.hidden[l][1][:] = rng.normal(scale=0.3, size=c.shape)
    return p.with_output(out_scale * rng.normal(size=spec.width))


@pytest.fixture
def net_factory():
    return random_net


CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
