import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sqgsteady.spectral import make_grid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64)


def random_coeffs(grid, seed, kmax=None):
    """Hermitian, mean-free, dealiased coefficients from numpy's generator."""
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((grid.n, grid.n))
    c = grid.fft(vals)
    c[0, 0] = 0
    keep = grid.mask if kmax is None else grid.mask & (grid.kmag <= kmax)
    return np.where(keep, c, 0)


def brute_force_transport(grid, theta_hat, u1_hat, u2_hat):
    """-div(u theta) by explicit convolution over the retained modes."""
    n = grid.n
    k0 = grid.k0
    idx = [(a, b) for a in range(n) for b in range(n) if grid.mask[a, b]]
    out = np.zeros((n, n), dtype=complex)
    for a, b in idx:
        j1, j2 = grid.j1[a, b], grid.j2[a, b]
        acc = 0j
        for pa, pb in idx:
            q1, q2 = j1 - grid.j1[pa, pb], j2 - grid.j2[pa, pb]
            qa, qb = q1 % n, q2 % n
            if not grid.mask[qa, qb] or grid.j1[qa, qb] != q1 or grid.j2[qa, qb] != q2:
                continue
            acc += (u1_hat[pa, pb] * j1 + u2_hat[pa, pb] * j2) * theta_hat[qa, qb]
        out[a, b] = -1j * k0 * acc
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
