import numpy as np
import pytest


def random_contractive(rng, d):
    """Random C whose drift C - I has a negative semidefinite Hermitian part."""
    Q = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, _ = np.linalg.qr(Q)
    ev = -rng.uniform(0.0, 1.0, d)
    C1h = (Q * ev) @ Q.conj().T
    B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    C2h = (B + B.conj().T) / 2
    return np.eye(d) + C1h + 1j * C2h


def random_dominant(rng, d):
    """Random real diagonally dominant A with a random right-hand side."""
    A = rng.normal(size=(d, d))
    slack = rng.uniform(0.1, 1.0, d)
    A += np.diag(np.sign(np.diag(A)) * (np.abs(A).sum(axis=1) + slack))
    b = rng.normal(size=d)
    return A, b


def random_power_instance(rng, d):
    """Diagonal-plus-small-perturbation C with real positive spectrum < 1
    and a clearly nondegenerate top eigenvalue."""
    lam = np.sort(rng.uniform(0.05, 0.95, d))[::-1]
    lam[0] = max(lam[0], lam[1] + 0.15) if d > 1 else lam[0]
    lam = np.minimum(lam, 0.97)
    C = np.diag(lam) + 0.01 * rng.normal(size=(d, d))
    ev = np.linalg.eigvals(C)
    if np.max(np.abs(ev.imag)) > 1e-9 or np.any(ev.real <= 0) or np.max(ev.real) >= 1:
        return random_power_instance(rng, d)
    return C


@pytest.fixture
def rng():
    return np.random.default_rng(20240824)
