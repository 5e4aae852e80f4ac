"""Instruments in Kraus form and minimal measurement models.

An :class:`Instrument` maps each outcome label to a list of Kraus
operators (``output_dim x input_dim``).  The measurement model realizes a
refined POVM through an interaction unitary on system (x) ancilla, with the
pointer observable given by the standard basis of the ancilla.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    BipartiteState,
    DimensionError,
    as_density,
    as_matrix,
    basis_vector,
    dagger,
    hermitian_eig,
    orthonormal_completion,
    psd_sqrt,
    tensor,
)
from .povm import (
    Povm,
    RefinedPovm,
    SharpObservable,
    effect_rank,
    maximally_refine,
    require_valid,
)


class InvalidInstrumentError(ValueError):
    """Kraus operators do not add up to a trace-preserving map."""


class IsometryError(ValueError):
    """The measurement map ``psi -> U(psi (x) xi)`` is not an isometry."""


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-indexed completely positive maps in Kraus form."""

    labels: tuple
    kraus: tuple
    tol: float = DEFAULT_TOL
    name: str = "instrument"

    def __post_init__(self):
        labels = tuple(self.labels)
        kraus = tuple(tuple(as_matrix(k) for k in ops) for ops in self.kraus)
        if len(labels) != len(kraus) or not labels:
            raise ValueError("one Kraus list per outcome label is required")
        if len(set(labels)) != len(labels):
            raise ValueError("outcome labels must be distinct")
        shapes = {k.shape for ops in kraus for k in ops}
        if len(shapes) != 1:
            raise DimensionError(f"Kraus operators have inconsistent shapes {sorted(shapes)}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "kraus", kraus)
        residual = self.normalization_residual()
        if residual > self.tol:
            raise InvalidInstrumentError(f"instrument is not trace preserving (residual {residual:.3e})")

    @property
    def input_dim(self) -> int:
        return self.kraus[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.kraus[0][0].shape[0]

    def normalization_residual(self) -> float:
        total = sum(dagger(k) @ k for ops in self.kraus for k in ops)
        return float(np.max(np.abs(total - np.eye(self.input_dim))))

    def operators(self, outcome) -> list[np.ndarray]:
        """Kraus list of one outcome, or the union for a list/set of outcomes."""
        if isinstance(outcome, (list, set, frozenset)):
            return [k for o in outcome for k in self.operators(o)]
        try:
            return list(self.kraus[self.labels.index(outcome)])
        except ValueError:
            raise KeyError(f"unknown outcome label {outcome!r}") from None

    def apply(self, rho, outcome) -> np.ndarray:
        """Unnormalized output ``I_outcome(rho)``."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.input_dim, self.input_dim):
            raise DimensionError(f"state of shape {rho.shape} vs instrument input {self.input_dim}")
        out = np.zeros((self.output_dim, self.output_dim), dtype=complex)
        for k in self.operators(outcome):
            out += k @ rho @ dagger(k)
        return out


class Outcome(NamedTuple):
    """Probability and normalized post-measurement state.

    ``state`` is ``None`` when the probability does not exceed the
    instrument tolerance: the conditional state is undefined there.
    """

    probability: float
    state: object


def luders_instrument(p: Povm) -> Instrument:
    """Kraus operator ``sqrt(M_i)`` for every outcome."""
    require_valid(p)
    return Instrument(p.labels, [[psd_sqrt(e, p.tol)] for e in p.effects], p.tol, "luders")


def rank1_prepare_instrument(source, outputs: Sequence) -> Instrument:
    """Measure-and-prepare instrument ``rho -> <d|rho|d> sigma``.

    ``source`` is either a :class:`RefinedPovm` (outcomes ``(x_i, k)``) or
    a rank-1 :class:`Povm` (outcomes ``x_i``).  ``outputs`` holds one state
    per outcome; their dimension may differ from the input dimension.
    """
    if isinstance(source, RefinedPovm):
        labels = source.labels()
        vectors = [source.vector(i, k) for i, k in source.pairs()]
        tol = source.tol
    else:
        require_valid(source)
        for label, e in zip(source.labels, source.effects):
            if effect_rank(e, source.tol) != 1:
                raise ValueError(f"effect {label!r} is not rank-1")
        refined = maximally_refine(source)
        labels = list(source.labels)
        vectors = [group[0] for group in refined.vectors]
        tol = source.tol
    if len(outputs) != len(vectors):
        raise ValueError(f"{len(vectors)} outcomes but {len(outputs)} output states")
    kraus = []
    for d, sigma in zip(vectors, outputs):
        sigma = as_density(sigma, tol)
        vals, vecs = hermitian_eig(sigma, tol)
        bra = d.conj()[None, :]
        kraus.append([np.sqrt(s) * vecs[:, [j]] @ bra for j, s in enumerate(vals) if s > tol])
    return Instrument(labels, kraus, tol, "measure-and-prepare")


def dilation_kraus(r: RefinedPovm, posterior: Sequence) -> list[np.ndarray]:
    """Per-outcome operators ``A_i = sum_k |phi_k><d_ik|``.

    ``A_i`` is the block of the measurement isometry selected by pointer
    value ``i``; it generates ``I_i(rho) = sum_kl <d_ik|rho|d_il> |phi_k><phi_l|``.
    """
    posterior = [np.asarray(v, dtype=complex).ravel() for v in posterior]
    if len(posterior) < max(r.multiplicities):
        raise ValueError(
            f"need {max(r.multiplicities)} posterior vectors, got {len(posterior)}"
        )
    out = []
    for group in r.vectors:
        a = np.zeros((posterior[0].size, r.dim), dtype=complex)
        for k, d in enumerate(group):
            a += np.outer(posterior[k], d.conj())
        out.append(a)
    return out


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Probe ``xi``, interaction ``U`` on system (x) ancilla, pointer basis ``e_i``."""

    refined: RefinedPovm
    posterior: tuple
    probe: np.ndarray
    interaction: np.ndarray
    tol: float = DEFAULT_TOL

    @property
    def system_dim(self) -> int:
        return self.refined.dim

    @property
    def ancilla_dim(self) -> int:
        return len(self.refined.parent_labels)

    @property
    def pointer_basis(self) -> np.ndarray:
        return np.eye(self.ancilla_dim, dtype=complex)

    def isometry(self) -> np.ndarray:
        """``psi -> U(psi (x) xi)`` as a ``(dS*dA) x dS`` matrix."""
        return self.interaction @ tensor(np.eye(self.system_dim), self.probe.reshape(-1, 1))

    def unitarity_error(self) -> float:
        u = self.interaction
        return float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])))


def build_measurement_model(
    r: RefinedPovm, posterior: Sequence = None, probe=None
) -> MeasurementModel:
    """Interaction with ``U(psi (x) xi) = sum_ik <d_ik|psi> phi_k (x) e_i``.

    The isometry is assembled column by column and both it and the input
    frame ``{e_s (x) xi}`` are completed to unitaries by Gram-Schmidt over
    standard basis vectors; ``U`` maps one frame onto the other.
    """
    ds = r.dim
    na = len(r.parent_labels)
    if posterior is None:
        posterior = [basis_vector(ds, k) for k in range(max(r.multiplicities))]
    posterior = tuple(np.asarray(v, dtype=complex).ravel() for v in posterior)
    if any(v.size != ds for v in posterior):
        raise DimensionError("posterior vectors must live in the system space")
    probe = basis_vector(na, 0) if probe is None else np.asarray(probe, dtype=complex).ravel()
    if probe.size != na or abs(np.linalg.norm(probe) - 1) > r.tol:
        raise ValueError("probe must be a unit vector of the ancilla space")

    v = np.zeros((ds * na, ds), dtype=complex)
    for i, a in enumerate(dilation_kraus(r, posterior)):
        v += tensor(a, basis_vector(na, i).reshape(-1, 1))
    err = float(np.max(np.abs(dagger(v) @ v - np.eye(ds))))
    if err > r.tol:
        raise IsometryError(f"measurement map is not an isometry (max |V^+V - I| = {err:.3e})")

    w_out = orthonormal_completion(v, r.tol)
    w_in = orthonormal_completion(tensor(np.eye(ds), probe.reshape(-1, 1)), r.tol)
    u = w_out @ dagger(w_in)
    model = MeasurementModel(r, posterior, probe, u, r.tol)
    if model.unitarity_error() > r.tol:
        raise IsometryError("unitary completion failed")
    return model


def model_induced_instrument(m: MeasurementModel) -> Instrument:
    """Read off ``K_i = (I (x) <e_i|) U (I (x) |xi>)`` for every pointer value."""
    blocks = m.isometry().reshape(m.system_dim, m.ancilla_dim, m.system_dim)
    kraus = [[blocks[:, i, :]] for i in range(m.ancilla_dim)]
    return Instrument(m.refined.parent_labels, kraus, m.tol, "measurement-model")


def pointer_collapse(m: MeasurementModel, omega: BipartiteState, i: int) -> np.ndarray:
    """Unnormalized E(x)S(x)A state after interaction and pointer reading ``i``.

    Computes ``(I (x) I (x) P_i)(I (x) U)(omega (x) |xi><xi|)(I (x) U)^+(I (x) I (x) P_i)``
    with the full interaction unitary.
    """
    de, ds = omega.dims
    if ds != m.system_dim:
        raise DimensionError("environment-system state does not match the model")
    big_u = tensor(np.eye(de), m.interaction)
    pointer = tensor(np.eye(de * ds), np.outer(m.pointer_basis[i], m.pointer_basis[i].conj()))
    joint = tensor(omega.rho, np.outer(m.probe, m.probe.conj()))
    return pointer @ big_u @ joint @ dagger(big_u) @ pointer


def sequential(first: Instrument, second: Instrument, name: str = "sequential") -> Instrument:
    """Measure ``first`` then ``second``; outcomes are label pairs.

    Kraus operators are products ``L_b K_a``; products that vanish
    identically are dropped, and so are outcome pairs left without any.
    """
    if first.output_dim != second.input_dim:
        raise DimensionError("output of the first instrument does not feed the second")
    labels, kraus = [], []
    for a, ops_a in zip(first.labels, first.kraus):
        for b, ops_b in zip(second.labels, second.kraus):
            prods = [l @ k for k in ops_a for l in ops_b]
            prods = [x for x in prods if np.max(np.abs(x)) > first.tol]
            if prods:
                labels.append((a, b))
                kraus.append(prods)
    return Instrument(labels, kraus, max(first.tol, second.tol), name)


def complete_measurement(p, n: SharpObservable, posterior: Sequence = None) -> Instrument:
    """Measure ``p`` through its dilation, then ``n`` by a Luders measurement.

    The dilation prepares eigenvectors ``phi_k`` of ``n``; the follow-up
    measurement of ``n`` then leaves ``<d_ik|rho|d_ik> |phi_k><phi_k|`` for
    outcome ``(x_i, a_k)``.  ``p`` may be a :class:`Povm` (refined here) or a
    :class:`RefinedPovm`.  ``posterior`` overrides the eigenvectors taken
    from ``n``; ``posterior[k]`` must lie in the range of ``n.projections[k]``.
    """
    r = p if isinstance(p, RefinedPovm) else maximally_refine(p)
    needed = max(r.multiplicities)
    if len(n.eigenvalues) < needed:
        raise ValueError(
            f"observable has {len(n.eigenvalues)} eigenvalues, maximal multiplicity is {needed}"
        )
    if n.dim != r.dim:
        raise DimensionError("observable and POVM act on different spaces")
    phi = n.eigenvectors() if posterior is None else [np.asarray(v, dtype=complex).ravel() for v in posterior]
    phi = phi[:needed]
    for k, v in enumerate(phi):
        if np.linalg.norm(n.projections[k] @ v - v) > r.tol:
            raise ValueError(f"posterior vector {k} is not an eigenvector for eigenvalue {n.eigenvalues[k]}")
    labels, kraus = [], []
    for i, a in enumerate(dilation_kraus(r, phi)):
        for k in range(r.multiplicities[i]):
            labels.append((r.parent_labels[i], n.eigenvalues[k]))
            kraus.append([n.projections[k] @ a])
    return Instrument(labels, kraus, r.tol, "complete")


def apply_instrument(inst: Instrument, rho, outcome) -> Outcome:
    rho = as_density(rho, inst.tol)
    out = inst.apply(rho, outcome)
    prob = float(np.trace(out).real)
    if prob <= inst.tol:
        return Outcome(prob, None)
    return Outcome(prob, out / prob)


def _local_kraus(k: np.ndarray, rho4: np.ndarray) -> np.ndarray:
    # (I (x) K) rho (I (x) K)^+ on a (dl, dr, dl, dr) tensor
    t = np.tensordot(k, rho4, axes=([1], [1])).transpose(1, 0, 2, 3)
    return np.tensordot(t, k.conj(), axes=([3], [1]))


def local_output(omega: BipartiteState, inst: Instrument, outcome) -> np.ndarray:
    """Unnormalized ``(id (x) I_outcome)(omega)``."""
    dl, dr = omega.dims
    if dr != inst.input_dim:
        raise DimensionError(f"right subsystem C^{dr} vs instrument input C^{inst.input_dim}")
    do = inst.output_dim
    rho4 = omega.rho.reshape(dl, dr, dl, dr)
    acc = np.zeros((dl, do, dl, do), dtype=complex)
    for k in inst.operators(outcome):
        acc += _local_kraus(k, rho4)
    return acc.reshape(dl * do, dl * do)


def apply_local_instrument(omega: BipartiteState, inst: Instrument, outcome) -> Outcome:
    """Apply ``id (x) I_outcome`` to the right factor; state is a :class:`BipartiteState`."""
    out = local_output(omega, inst, outcome)
    prob = float(np.trace(out).real)
    if prob <= inst.tol:
        return Outcome(prob, None)
    out = out / prob
    out = 0.5 * (out + dagger(out))
    return Outcome(prob, BipartiteState(out, omega.dim_left, inst.output_dim, omega.tol))


def instrument_channel(inst: Instrument, label: Hashable = "channel") -> Instrument:
    """Forget the outcome: one label carrying every Kraus operator."""
    ops = [k for group in inst.kraus for k in group]
    return Instrument([label], [ops], inst.tol, f"{inst.name}-channel")


def identity_instrument(dim: int) -> Instrument:
    return Instrument(["id"], [[np.eye(dim)]], DEFAULT_TOL, "identity")
