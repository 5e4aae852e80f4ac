"""Seeded random states and unitaries."""

from __future__ import annotations

import numpy as np


def as_generator(seed) -> np.random.Generator:
    """Accept an int, a ``SeedSequence`` or an existing ``Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_vector(dim: int, rng) -> np.ndarray:
    """Haar-random unit vector (normalized complex Gaussian)."""
    rng = as_generator(rng)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rng, rank: int = None) -> np.ndarray:
    """Ginibre-distributed density matrix ``G G^+ / tr(G G^+)``."""
    rng = as_generator(rng)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar unitary via QR of a Ginibre matrix with the phases of ``R`` removed."""
    rng = as_generator(rng)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
