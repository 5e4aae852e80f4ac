"""POVMs, their maximal rank-1 refinement and informational completeness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    DimensionError,
    as_density,
    as_matrix,
    hermitian_eig,
    hermiticity_error,
    projector,
)


class InvalidPovmError(ValueError):
    """Effects are not PSD or do not sum to the identity."""


@dataclass(frozen=True, eq=False)
class Povm:
    """Ordered effects ``M_i`` with outcome labels.

    Construction only checks shapes; use :func:`validate_povm` for the
    positivity and normalization conditions.
    """

    effects: tuple
    labels: tuple = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        effects = tuple(as_matrix(e) for e in self.effects)
        if not effects:
            raise DimensionError("a POVM needs at least one effect")
        d = effects[0].shape[0]
        for e in effects:
            if e.shape != (d, d):
                raise DimensionError(f"effect of shape {e.shape} in a POVM on C^{d}")
        labels = tuple(range(len(effects))) if self.labels is None else tuple(self.labels)
        if len(labels) != len(effects):
            raise ValueError("one label per effect is required")
        if len(set(labels)) != len(labels):
            raise ValueError("outcome labels must be distinct")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    psd_violations: tuple  # per effect: max(0, -min eigenvalue)
    hermiticity_errors: tuple
    normalization_residual: float  # spectral norm of sum(M_i) - I

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "psd_violations": list(self.psd_violations),
            "hermiticity_errors": list(self.hermiticity_errors),
            "normalization_residual": self.normalization_residual,
        }


def validate_povm(p: Povm) -> ValidationReport:
    herm = tuple(hermiticity_error(e) for e in p.effects)
    psd = []
    for e in p.effects:
        low = np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0]
        psd.append(float(max(0.0, -low)))
    total = sum(p.effects) - np.eye(p.dim)
    total = 0.5 * (total + total.conj().T)
    residual = float(np.max(np.abs(np.linalg.eigvalsh(total))))
    passed = max(herm) <= p.tol and max(psd) <= p.tol and residual <= p.tol
    return ValidationReport(passed, tuple(psd), herm, residual)


def require_valid(p: Povm) -> None:
    report = validate_povm(p)
    if not report.passed:
        raise InvalidPovmError(
            f"invalid POVM: normalization residual {report.normalization_residual:.3e}, "
            f"max PSD violation {max(report.psd_violations):.3e}"
        )


def effect_rank(effect, tol: float = DEFAULT_TOL) -> int:
    vals, _ = hermitian_eig(effect, tol)
    if vals.size and vals[-1] < -tol:
        raise ValueError(f"effect is not PSD (min eigenvalue {vals[-1]:.3e})")
    return int(np.sum(vals > tol))


@dataclass(frozen=True)
class SharpObservable:
    """Self-adjoint operator given by distinct eigenvalues and eigenprojections."""

    eigenvalues: tuple
    projections: tuple
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        vals = tuple(float(a) for a in self.eigenvalues)
        projs = tuple(as_matrix(q) for q in self.projections)
        if len(vals) != len(projs) or not projs:
            raise ValueError("need one projection per eigenvalue")
        if len(set(vals)) != len(vals):
            raise ValueError("eigenvalues must be distinct")
        d = projs[0].shape[0]
        for a, q in enumerate(projs):
            if q.shape != (d, d):
                raise DimensionError("projections must share one square shape")
            if hermiticity_error(q) > self.tol or np.max(np.abs(q @ q - q)) > self.tol:
                raise ValueError(f"projection {a} is not an orthogonal projection")
            for b in range(a):
                if np.max(np.abs(q @ projs[b])) > self.tol:
                    raise ValueError(f"projections {b} and {a} are not orthogonal")
        if np.max(np.abs(sum(projs) - np.eye(d))) > self.tol:
            raise ValueError("projections do not resolve the identity")
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "projections", projs)

    @classmethod
    def from_hermitian(cls, h, tol: float = DEFAULT_TOL, decimals: int = 8) -> "SharpObservable":
        """Group eigenvectors of ``h`` by eigenvalue (rounded to ``decimals``)."""
        vals, vecs = hermitian_eig(h, tol)
        keys = np.round(vals, decimals)
        eigenvalues, projections = [], []
        for key in dict.fromkeys(keys.tolist()):
            cols = vecs[:, keys == key]
            eigenvalues.append(float(np.mean(vals[keys == key])))
            projections.append(cols @ cols.conj().T)
        return cls(tuple(eigenvalues), tuple(projections), tol)

    @classmethod
    def from_basis(cls, eigenvalues: Sequence[float], vectors, tol: float = DEFAULT_TOL):
        """Nondegenerate observable with the given orthonormal eigenvectors (columns)."""
        vectors = np.asarray(vectors, dtype=complex)
        projs = tuple(projector(vectors[:, k]) for k in range(vectors.shape[1]))
        return cls(tuple(eigenvalues), projs, tol)

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def matrix(self) -> np.ndarray:
        return sum(a * q for a, q in zip(self.eigenvalues, self.projections))

    def eigenvectors(self) -> list[np.ndarray]:
        """One unit vector from the range of each projection, in eigenvalue order."""
        out = []
        for q in self.projections:
            _, vecs = hermitian_eig(q, self.tol)
            out.append(vecs[:, 0])
        return out

    def as_povm(self) -> Povm:
        return Povm(self.projections, self.eigenvalues, self.tol)


@dataclass(frozen=True, eq=False)
class RefinedPovm:
    """Rank-1 POVM ``|d_ik><d_ik|`` on outcome pairs ``(x_i, k)``.

    ``vectors[i]`` is the list of ``d_ik`` for parent outcome ``i``; ``k``
    runs from 0 to ``m_i - 1``.  Indices are zero-based throughout.
    """

    parent_labels: tuple
    vectors: tuple
    tol: float = DEFAULT_TOL
    multiplicities: tuple = field(init=False)

    def __post_init__(self):
        vectors = tuple(
            tuple(np.asarray(v, dtype=complex).ravel() for v in group) for group in self.vectors
        )
        if len(vectors) != len(self.parent_labels):
            raise ValueError("one vector group per parent outcome is required")
        if any(len(g) == 0 for g in vectors):
            raise ValueError("every parent outcome needs at least one vector")
        dims = {v.size for g in vectors for v in g}
        if len(dims) != 1:
            raise DimensionError("refinement vectors must share one dimension")
        for i, group in enumerate(vectors):
            stack = np.column_stack(group)
            if np.linalg.matrix_rank(stack, tol=self.tol) != len(group):
                raise ValueError(f"vectors of outcome {i} are linearly dependent")
        object.__setattr__(self, "parent_labels", tuple(self.parent_labels))
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "multiplicities", tuple(len(g) for g in vectors))

    @property
    def dim(self) -> int:
        return self.vectors[0][0].size

    def pairs(self) -> list[tuple[int, int]]:
        return [(i, k) for i, m in enumerate(self.multiplicities) for k in range(m)]

    def labels(self) -> list[tuple[Hashable, int]]:
        return [(self.parent_labels[i], k) for i, k in self.pairs()]

    def vector(self, i: int, k: int) -> np.ndarray:
        return self.vectors[i][k]

    def effect(self, i: int, k: int) -> np.ndarray:
        return projector(self.vectors[i][k])

    def as_povm(self) -> Povm:
        """The refinement itself as a (rank-1) POVM labelled by ``(x_i, k)``."""
        effects = [self.effect(i, k) for i, k in self.pairs()]
        return Povm(effects, self.labels(), self.tol)


def maximally_refine(p: Povm) -> RefinedPovm:
    """Split every effect into rank-1 pieces ``d_ik = sqrt(lambda_k) v_k``.

    Eigenvalues at or below ``p.tol`` are dropped; ``k`` follows descending
    eigenvalue order.
    """
    require_valid(p)
    groups = []
    for e in p.effects:
        vals, vecs = hermitian_eig(e, p.tol)
        keep = vals > p.tol
        groups.append([np.sqrt(lam) * vecs[:, j] for j, lam in zip(np.flatnonzero(keep), vals[keep])])
    return RefinedPovm(p.labels, groups, p.tol)


def coarse_grain(r: RefinedPovm) -> Povm:
    effects = [sum(projector(v) for v in group) for group in r.vectors]
    return Povm(effects, r.parent_labels, r.tol)


def is_pvm(p: Povm) -> bool:
    return all(np.max(np.abs(e @ e - e)) <= p.tol for e in p.effects)


def is_rank_one(p: Povm) -> bool:
    return all(effect_rank(e, p.tol) == 1 for e in p.effects)


def outcome_probabilities(rho, p: Povm) -> np.ndarray:
    """``tr[rho M_i]`` for every effect, as a real array."""
    rho = as_density(rho, p.tol)
    if rho.shape[0] != p.dim:
        raise DimensionError(f"state on C^{rho.shape[0]} vs POVM on C^{p.dim}")
    # tr[rho M] = sum_ab rho_ab M_ba
    return np.array([np.sum(rho * e.T).real for e in p.effects])


def is_informationally_complete(p: Povm, tol: float = None) -> tuple[bool, int]:
    """Return ``(ic, span)`` where ``span`` is the real dimension spanned by the effects.

    Each effect is flattened to the real vector ``(Re M, Im M)``; the span
    is the numerical rank of their Gram matrix.
    """
    tol = p.tol if tol is None else tol
    rows = np.array([np.concatenate([e.real.ravel(), e.imag.ravel()]) for e in p.effects])
    gram = rows @ rows.T
    span = int(np.sum(np.linalg.eigvalsh(gram) > tol))
    return span == p.dim**2, span


def random_povm(
    dim: int,
    n_outcomes: int,
    rng: np.random.Generator,
    ranks: Sequence[int] = None,
) -> Povm:
    """Random POVM from normalized Ginibre-positive operators.

    ``A_i A_i^+`` with ``A_i`` a ``dim x ranks[i]`` complex Gaussian matrix,
    then ``S^{-1/2} A_i A_i^+ S^{-1/2}`` with ``S = sum A_i A_i^+``.  The sum of
    ``ranks`` must be at least ``dim`` for ``S`` to be invertible.
    """
    ranks = [dim] * n_outcomes if ranks is None else list(ranks)
    if len(ranks) != n_outcomes or sum(ranks) < dim:
        raise ValueError("ranks must have one entry per outcome and sum to at least dim")
    pos = []
    for r in ranks:
        a = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
        pos.append(a @ a.conj().T)
    vals, vecs = hermitian_eig(sum(pos))
    s_inv_half = (vecs / np.sqrt(vals)) @ vecs.conj().T
    effects = []
    for g in pos:
        e = s_inv_half @ g @ s_inv_half
        effects.append(0.5 * (e + e.conj().T))
    return Povm(effects)
