import numpy as np
import pytest

from clique_memory import _backend, dynamics, experiments, network
from clique_memory.model import ModelParams

BACKENDS = ["python"] + (["cython"] if _backend.ckernels is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    mod = _backend.pykernels if request.param == "python" else _backend.ckernels
    for m in (network, dynamics, experiments):
        monkeypatch.setattr(m, "kernels", mod)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_msg():
    """l=2, c=2 instance storing (0,0) and (1,1), threshold kappa*c = 1."""
    p = ModelParams(l=2, c=2, M=2, kappa="1/2")
    return p, np.array([[0, 0], [1, 1]])


def random_instance(rng, l_max=6, c_max=4, m_max=10, kappa=None):
    l = int(rng.integers(2, l_max + 1))
    c = int(rng.integers(2, c_max + 1))
    M = int(rng.integers(1, m_max + 1))
    if kappa is None:
        # random rational kappa in (0, 1 - 1/c]
        den = int(rng.integers(1, 4)) * c
        num = int(rng.integers(1, den - den // c + 1))
        kappa = f"{num}/{den}"
    p = ModelParams(l=l, c=c, M=M, kappa=kappa)
    msgs = rng.integers(0, l, size=(M, c))
    return p, msgs


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
