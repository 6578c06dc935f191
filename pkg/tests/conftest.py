import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.linalg import expm

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def fock_oracle(amplitudes, eta, phase_sign=1):
    """Beam splitter as expm(i*s*theta*(a1^dag a2 + a2^dag a1)) on a truncated space."""
    amplitudes = np.asarray(amplitudes)
    d = amplitudes.shape[0]
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    eye = np.eye(d)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    gen = a1.conj().T @ a2 + a2.conj().T @ a1
    theta = math.asin(math.sqrt(eta))
    u = expm(1j * phase_sign * theta * gen)
    return (u @ amplitudes.reshape(-1)).reshape(d, d)


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)
