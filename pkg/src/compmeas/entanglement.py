"""PPT tests, negativity, product detection and Monte Carlo entanglement-breaking checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    BipartiteState,
    DimensionError,
    frobenius_distance,
    hermitian_eig,
    partial_trace,
    partial_transpose,
    tensor,
)
from .measurement import Instrument, local_output
from .povm import Povm
from .sampling import as_generator, random_vector
from .serialize import matrix_to_json

EB_THRESHOLD = 1e-7


def negativity(omega: BipartiteState) -> float:
    """Sum of the absolute values of the negative eigenvalues of the partial transpose."""
    vals = np.linalg.eigvalsh(partial_transpose(omega, "right"))
    return float(0.0 - np.sum(vals[vals < 0]))


def _negativities(rhos: np.ndarray, dl: int, dr: int) -> np.ndarray:
    # batched partial transpose + eigvalsh for a stack of normalized states
    n = dl * dr
    pt = rhos.reshape(-1, dl, dr, dl, dr).transpose(0, 1, 4, 3, 2).reshape(-1, n, n)
    vals = np.linalg.eigvalsh(pt)
    return 0.0 - np.sum(np.where(vals < 0, vals, 0.0), axis=1)


def is_ppt(omega: BipartiteState, tol: float = DEFAULT_TOL) -> bool:
    """Positive partial transpose.

    Decides separability when ``dim_left * dim_right <= 6``; in larger
    dimensions ``True`` only means the state is PPT.
    """
    return bool(np.linalg.eigvalsh(partial_transpose(omega, "right"))[0] >= -tol)


def is_product(omega: BipartiteState, tol: float = DEFAULT_TOL) -> bool:
    left = partial_trace(omega, "right")
    right = partial_trace(omega, "left")
    return frobenius_distance(omega.rho, tensor(left, right)) < tol


def ppt_decides_separability(omega: BipartiteState) -> bool:
    return omega.dim_left * omega.dim_right <= 6


def maximally_entangled(dim: int) -> BipartiteState:
    psi = np.eye(dim, dtype=complex).ravel() / np.sqrt(dim)
    return BipartiteState.from_vector(psi, dim, dim)


def random_entangled_state(dim_left: int, dim_right: int, seed, min_negativity: float = 0.05) -> BipartiteState:
    """Haar-random pure state, redrawn until its negativity exceeds ``min_negativity``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if dim_left < 2 or dim_right < 2:
        raise DimensionError("both subsystems need dimension at least 2")
    rng = as_generator(seed)
    while True:
        omega = BipartiteState.from_vector(random_vector(dim_left * dim_right, rng), dim_left, dim_right)
        if negativity(omega) > min_negativity:
            return omega


def entangling_witness(p: Povm) -> tuple[BipartiteState, object]:
    """Input on ``C^2 (x) C^d`` that keeps maximal entanglement under one Luders outcome.

    Picks the first effect of rank at least 2, takes two eigenvectors
    ``v1, v2`` with eigenvalues ``l1, l2`` and prepares
    ``|0>v1/sqrt(l1) + |1>v2/sqrt(l2)`` (normalized).  After ``sqrt(M_i)`` the
    state is proportional to ``|0>v1 + |1>v2``, whose negativity is 1/2.
    Returns the state and the outcome label.
    """
    for label, e in zip(p.labels, p.effects):
        vals, vecs = hermitian_eig(e, p.tol)
        if np.sum(vals > p.tol) >= 2:
            psi = np.kron([1, 0], vecs[:, 0] / np.sqrt(vals[0])) + np.kron(
                [0, 1], vecs[:, 1] / np.sqrt(vals[1])
            )
            return BipartiteState.from_vector(psi, 2, p.dim), label
    raise ValueError("POVM is rank-1; no Luders outcome preserves entanglement")


@dataclass(frozen=True)
class EbCertificate:
    instrument: str
    trials: int
    seed: int
    max_negativity: float
    threshold: float
    counterexample: object = None  # BipartiteState input achieving max_negativity

    @property
    def verdict(self) -> str:
        if self.max_negativity > self.threshold:
            return "counterexample_found"
        return "entanglement_breaking_consistent"

    def to_dict(self) -> dict:
        ce = None
        if self.verdict == "counterexample_found" and self.counterexample is not None:
            ce = {
                "dim_left": self.counterexample.dim_left,
                "dim_right": self.counterexample.dim_right,
                "state": matrix_to_json(self.counterexample.rho),
            }
        return {
            "instrument": self.instrument,
            "trials": self.trials,
            "max_negativity": self.max_negativity,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "seed": self.seed,
            "counterexample": ce,
        }


def post_measurement_negativities(omega: BipartiteState, inst: Instrument) -> np.ndarray:
    """Negativity of the normalized output for every outcome (0 for null outcomes)."""
    dl = omega.dim_left
    do = inst.output_dim
    outs, keep = [], []
    for j, label in enumerate(inst.labels):
        out = local_output(omega, inst, label)
        prob = np.trace(out).real
        if prob > inst.tol:
            outs.append(out / prob)
            keep.append(j)
    result = np.zeros(len(inst.labels))
    if outs:
        result[keep] = _negativities(np.array(outs), dl, do)
    return result


def certify_entanglement_breaking(
    inst: Instrument,
    dim_env: int = None,
    trials: int = 200,
    seed: int = 42,
    threshold: float = EB_THRESHOLD,
    name: str = None,
) -> EbCertificate:
    """Search for an entangled input that survives some outcome of ``id (x) inst``.

    Every trial draws its own generator from ``SeedSequence(seed).spawn``,
    so the result does not depend on evaluation order.  The maximally
    entangled state on ``C^d (x) C^d`` is always probed as well.
    """
    d = inst.input_dim
    dim_env = d if dim_env is None else dim_env
    probes = [maximally_entangled(d)]
    for child in np.random.SeedSequence(seed).spawn(trials):
        probes.append(random_entangled_state(dim_env, d, np.random.default_rng(child)))
    worst, worst_state = 0.0, None
    for omega in probes:
        value = float(np.max(post_measurement_negativities(omega, inst)))
        if value > worst:
            worst, worst_state = value, omega
    return EbCertificate(
        name or inst.name, trials, seed, worst, threshold, worst_state
    )
