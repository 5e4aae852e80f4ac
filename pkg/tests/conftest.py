import numpy as np
import pytest

from compmeas.povm import Povm, random_povm

PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def computational_pvm(dim=2):
    return Povm([np.diag(np.eye(dim)[i]).astype(complex) for i in range(dim)])


def trine():
    effects = []
    for j in range(3):
        t = 2 * np.pi * j / 3
        psi = np.array([np.cos(t / 2), np.sin(t / 2)], dtype=complex)
        effects.append(2 / 3 * np.outer(psi, psi.conj()))
    return Povm(effects)


def sic_qubit():
    s = [
        (0, 0, 1),
        (2 * np.sqrt(2) / 3, 0, -1 / 3),
        (-np.sqrt(2) / 3, np.sqrt(2 / 3), -1 / 3),
        (-np.sqrt(2) / 3, -np.sqrt(2 / 3), -1 / 3),
    ]
    return Povm([0.25 * (PAULI[0] + sum(c * p for c, p in zip(v, PAULI[1:]))) for v in s])


def c3_example():
    return Povm([np.diag([0.5, 1.0, 0.0]), np.diag([0.5, 0.0, 1.0])])


def bell_vector():
    return np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def povm_suite(count, seed=2024, max_dim=6, max_outcomes=5):
    """Seeded random POVMs with random effect ranks."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        d = int(rng.integers(2, max_dim + 1))
        n = int(rng.integers(1, max_outcomes + 1))
        ranks = rng.integers(1, d + 1, size=n)
        if ranks.sum() < d:
            continue
        out.append(random_povm(d, n, rng, ranks))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
