"""Dense complex linear algebra used by every other module.

Operators are plain ``numpy`` arrays of dtype ``complex128``.  Bipartite
states carry their subsystem dimensions in :class:`BipartiteState`; the
left factor always owns the slow (outer) index, matching ``np.kron``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotHermitianError(ValueError):
    """Matrix deviates from its adjoint by more than the tolerance."""


class InvalidStateError(ValueError):
    """Matrix is not a density operator within tolerance."""


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def ket(v) -> np.ndarray:
    """Column vector from any 1-D sequence."""
    return np.asarray(v, dtype=complex).reshape(-1, 1)


def projector(v) -> np.ndarray:
    """|v><v| for a (not necessarily normalized) vector."""
    col = ket(v)
    return col @ dagger(col)


def basis_vector(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def tensor(a, b) -> np.ndarray:
    """Kronecker product; the left factor owns the slow index."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def hermiticity_error(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - dagger(h)))) if h.size else 0.0


def hermitian_eig(h, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    h : array_like
        Square matrix, Hermitian up to ``tol`` (max-abs entry of ``h - h^dagger``).
    tol : float
        Hermiticity tolerance.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in descending order.  Ties keep the order LAPACK
        produced them in.
    eigenvectors : ndarray
        Orthonormal columns.  Each column is rotated so that its first
        component of largest modulus is real and nonnegative.
    """
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"matrix is not square: {h.shape}")
    err = hermiticity_error(h)
    if err > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max |h - h^+| = {err:.3e})")
    h = 0.5 * (h + dagger(h))
    vals, vecs = np.linalg.eigh(h)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    start = 0
    for j in range(1, vals.size + 1):
        if j == vals.size or vals[start] - vals[j] > tol:
            if j - start > 1:
                vecs[:, start:j] = _canonical_basis(vecs[:, start:j])
            start = j
    pivots = np.argmax(np.abs(vecs), axis=0)
    entries = vecs[pivots, np.arange(vecs.shape[1])]
    phases = np.ones_like(entries)
    nz = np.abs(entries) > 0
    phases[nz] = entries[nz].conj() / np.abs(entries[nz])
    return vals, vecs * phases


def _canonical_basis(block: np.ndarray) -> np.ndarray:
    """Basis-independent orthonormal basis of the span of ``block``'s columns.

    Greedy pivoted Gram-Schmidt on the projected standard basis vectors:
    each round keeps the one with the largest remaining norm (lowest index
    on ties), so a coordinate subspace yields its own basis vectors in order.
    """
    proj = block @ dagger(block)
    cands = proj.copy()
    chosen = []
    for _ in range(block.shape[1]):
        norms = np.linalg.norm(cands, axis=0)
        idx = int(np.flatnonzero(norms >= norms.max() * (1 - 1e-12))[0])
        v = cands[:, idx] / norms[idx]
        chosen.append(v)
        cands = cands - np.outer(v, v.conj() @ cands)
    return np.column_stack(chosen)


def psd_sqrt(h, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues with ``|lambda| <= tol`` are treated as exact zeros (so
    round-off is not amplified by the root); anything below ``-tol`` raises
    ``ValueError``.
    """
    vals, vecs = hermitian_eig(h, tol)
    if vals.size and vals[-1] < -tol:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {vals[-1]:.3e})")
    root = np.sqrt(np.where(vals > tol, vals, 0.0))
    return (vecs * root) @ dagger(vecs)


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def as_density(rho, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Validate a density operator and return it as a complex array.

    Raises :class:`InvalidStateError` unless ``rho`` is Hermitian, has unit
    trace and no eigenvalue below ``-tol``.
    """
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if hermiticity_error(rho) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise InvalidStateError(f"density matrix trace is {tr.real:.12g}, expected 1")
    low = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0]
    if low < -tol:
        raise InvalidStateError(f"density matrix has negative eigenvalue {low:.3e}")
    return rho


def pure_state(v) -> np.ndarray:
    """Density operator of the normalized vector ``v``."""
    v = np.asarray(v, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("zero vector has no associated state")
    return projector(v / norm)


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Density operator on ``C^dim_left (x) C^dim_right``."""

    rho: np.ndarray
    dim_left: int
    dim_right: int
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.dim_left < 1 or self.dim_right < 1:
            raise DimensionError("subsystem dimensions must be positive")
        n = self.dim_left * self.dim_right
        rho = as_matrix(self.rho)
        if rho.shape != (n, n):
            raise DimensionError(
                f"state of shape {rho.shape} does not match {self.dim_left}x{self.dim_right}"
            )
        object.__setattr__(self, "rho", as_density(rho, self.tol))

    @classmethod
    def from_vector(cls, psi, dim_left: int, dim_right: int, tol: float = DEFAULT_TOL):
        return cls(pure_state(psi), dim_left, dim_right, tol)

    @property
    def dims(self) -> tuple[int, int]:
        return self.dim_left, self.dim_right


def _split(omega: BipartiteState) -> np.ndarray:
    dl, dr = omega.dims
    return omega.rho.reshape(dl, dr, dl, dr)


def partial_trace(omega: BipartiteState, side: str) -> np.ndarray:
    """Trace out one subsystem.

    ``side`` names the subsystem that is traced *out*: ``"right"`` returns
    the reduced state of the left factor and vice versa.
    """
    t = _split(omega)
    if side == "right":
        return np.einsum("ajbj->ab", t)
    if side == "left":
        return np.einsum("jajb->ab", t)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def partial_transpose(omega: BipartiteState, side: str = "right") -> np.ndarray:
    """Transpose the indices of one subsystem only."""
    t = _split(omega)
    n = omega.dim_left * omega.dim_right
    if side == "right":
        return t.transpose(0, 3, 2, 1).reshape(n, n)
    if side == "left":
        return t.transpose(2, 1, 0, 3).reshape(n, n)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def orthonormal_completion(columns: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Extend orthonormal columns to a unitary.

    Standard basis vectors are tried in index order and kept whenever
    Gram-Schmidt (applied twice for stability) leaves a residual of norm
    above 1e-6.
    """
    columns = np.asarray(columns, dtype=complex)
    n, k = columns.shape
    gram = dagger(columns) @ columns
    if np.max(np.abs(gram - np.eye(k))) > tol:
        raise ValueError("columns are not orthonormal")
    out = [columns[:, j] for j in range(k)]
    for idx in range(n):
        if len(out) == n:
            break
        v = basis_vector(n, idx)
        for _ in range(2):
            for u in out:
                v = v - (u.conj() @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            out.append(v / norm)
    return np.column_stack(out)
