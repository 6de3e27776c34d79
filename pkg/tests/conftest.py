import numpy as np
import pytest

from authsim.statespace import StateSpaceModel

_CRITERIA = []


def random_stable(rng, n, m=None, complex_=True, sensors=1):
    """Random stable, diagonalizable model with PSD noises."""
    m = m or n
    b = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if complex_ else 0)
    shift = np.abs(np.linalg.eigvals(b).real).max() + 0.5
    A = b - shift * np.eye(n)
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    D = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    outputs = [rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
               for _ in range(sensors)]
    return StateSpaceModel(A, B @ B.conj().T, outputs, 0.3 * D @ D.conj().T + 0.1 * np.eye(m))


def random_pd(rng, m, ridge=0.1):
    b = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return b @ b.conj().T / m + ridge * np.eye(m)


def cn(rng, n, m):
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
