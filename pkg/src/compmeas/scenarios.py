"""Worked constructions: spin-1/2 particle on a grid, and the complete Zeno effect.

Position example
----------------
The system space is ``C^2 (x) C^n`` (spin (x) grid site).  Bin ``j`` of the
position observable is ``I_spin (x) |x_j><x_j|`` (rank 2); its refinement
splits the bin by spin.  The environment is a spin mirror ``C^2`` and the
initial joint state is ``(|E+>|+> + |E->|->)/sqrt 2`` with
``|+-> = spin+- (x) phi_0`` and ``phi_0`` the sampled vacuum.

Zeno effect
-----------
The joint environment (x) system state evolves by ``exp(-i G dt)``; after every
step the system is measured and the run is conditioned on the outcome
observed at ``t = 0``.  ``"incomplete"`` measures the Hamiltonian with
Luders projections, ``"complete"`` additionally resolves the degenerate
eigenspaces into the rank-1 projections ``|d_ik><d_ik|``.

``survival`` is the cumulative probability of the conditioned outcome over
the ``n`` steps after the initial preparation; ``fidelity`` is
``<d_ik|rho_S|d_ik>`` of the reduced system state.  Neither the figure of
merit nor the finite-``n`` discretization of continuous observation are
canonical; both are choices of this module.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    BipartiteState,
    DimensionError,
    as_matrix,
    basis_vector,
    dagger,
    frobenius_distance,
    hermitian_eig,
    hermiticity_error,
    partial_trace,
    pure_state,
    tensor,
)
from .entanglement import is_product, negativity
from .measurement import (
    Instrument,
    apply_local_instrument,
    complete_measurement,
    dilation_kraus,
    luders_instrument,
    sequential,
)
from .povm import Povm, RefinedPovm, SharpObservable, maximally_refine
from .serialize import FormatError, matrix_from_json, matrix_to_json, vector_from_json, vector_to_json


class NormalizationError(ValueError):
    """Sampled vacuum does not carry unit mass on the grid."""


class CommutantError(ValueError):
    """Generator does not commute with every ``I (x) M_i``."""


class ZeroProbabilityError(ValueError):
    """Conditioning on an outcome that has (numerically) zero probability."""


# -- position example -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Grid:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 1 or pts.shape != w.shape or pts.size == 0:
            raise ValueError("points and weights must be equal-length 1-D arrays")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.points.size


def uniform_grid(n: int = 64, halfwidth: float = 6.0) -> Grid:
    pts = np.linspace(-halfwidth, halfwidth, n)
    return Grid(pts, np.full(n, pts[1] - pts[0]))


def sampled_vacuum(grid: Grid, width: float = 1.0, tol: float = 1e-6) -> np.ndarray:
    """Unit vector of grid amplitudes ``h_0(x_j) sqrt(w_j)``.

    ``h_0(x) = (pi width^2)^(-1/4) exp(-x^2 / (2 width^2))``.  Raises
    :class:`NormalizationError` if the raw mass misses 1 by more than ``tol``.
    """
    x = grid.points
    h0 = (np.pi * width**2) ** -0.25 * np.exp(-(x**2) / (2 * width**2))
    amp = h0 * np.sqrt(grid.weights)
    mass = float(np.sum(amp**2))
    if abs(mass - 1.0) > tol:
        raise NormalizationError(f"vacuum mass on grid is {mass:.9f}; widen or refine the grid")
    return (amp / np.sqrt(mass)).astype(complex)


@dataclass(frozen=True, eq=False)
class PositionSpinExample:
    grid: Grid
    vacuum: np.ndarray
    position: Povm  # Q
    refined: RefinedPovm  # Q^1, k = 0 for spin up, 1 for spin down
    spin: SharpObservable  # N with eigenvalues +1/2, -1/2 (hbar = 1)
    bell: BipartiteState  # environment spin (x) system
    posterior: tuple  # |+>, |->

    @property
    def system_dim(self) -> int:
        return 2 * len(self.grid)

    def position_instrument(self) -> Instrument:
        """``A(x_j) = |+><d_+(x_j)| + |-><d_-(x_j)|`` per bin."""
        kraus = [[a] for a in dilation_kraus(self.refined, self.posterior)]
        return Instrument(self.position.labels, kraus, self.position.tol, "position")

    def completed_instrument(self) -> Instrument:
        """Position followed by the spin Luders measurement; outcomes ``(x_j, +-1/2)``."""
        return complete_measurement(self.refined, self.spin, self.posterior)

    def product_state(self, sign: int) -> np.ndarray:
        """``|E s>|s><E s|<s|`` for spin sign ``s = +1`` or ``-1``."""
        k = 0 if sign > 0 else 1
        return pure_state(tensor(basis_vector(2, k), self.posterior[k]))


def build_position_spin_example(grid: Grid = None, vacuum_width: float = 1.0) -> PositionSpinExample:
    grid = uniform_grid() if grid is None else grid
    n = len(grid)
    phi0 = sampled_vacuum(grid, vacuum_width)
    up, down = basis_vector(2, 0), basis_vector(2, 1)
    labels = [float(x) for x in grid.points]
    effects = [tensor(np.eye(2), np.diag(basis_vector(n, j))) for j in range(n)]
    position = Povm(effects, labels)
    refined = RefinedPovm(
        labels, [[tensor(up, basis_vector(n, j)), tensor(down, basis_vector(n, j))] for j in range(n)]
    )
    n_up = tensor(np.diag(up), np.eye(n))
    n_down = tensor(np.diag(down), np.eye(n))
    spin = SharpObservable((0.5, -0.5), (n_up, n_down))
    plus, minus = tensor(up, phi0), tensor(down, phi0)
    psi = (tensor(up, plus) + tensor(down, minus)) / np.sqrt(2)
    bell = BipartiteState.from_vector(psi, 2, 2 * n)
    return PositionSpinExample(grid, phi0, position, refined, spin, bell, (plus, minus))


@dataclass
class SpinBranch:
    sign: int
    probability: float
    expected_probability: float
    distance_to_product: float
    negativity: float
    product: bool


@dataclass
class PositionReport:
    bins: list
    probability: float
    expected_probability: float
    bell_distance: float
    negativity_before: float
    negativity_after: float
    spin_branches: list = field(default_factory=list)
    tol: float = 1e-7

    def checks(self) -> dict:
        out = {
            "position_probability": abs(self.probability - self.expected_probability) < 1e-9,
            "bell_preserved": self.bell_distance < self.tol,
            "negativity_retained": abs(self.negativity_after - self.negativity_before) < self.tol,
        }
        for b in self.spin_branches:
            tag = "plus" if b.sign > 0 else "minus"
            out[f"spin_{tag}_probability"] = abs(b.probability - b.expected_probability) < 1e-9
            out[f"spin_{tag}_product"] = b.distance_to_product < self.tol and b.product
            out[f"spin_{tag}_negativity"] = b.negativity < self.tol
        return out

    @property
    def passed(self) -> bool:
        return all(self.checks().values())

    def to_dict(self) -> dict:
        return {
            "bins": len(self.bins),
            "probability": self.probability,
            "expected_probability": self.expected_probability,
            "bell_distance": self.bell_distance,
            "negativity_before": self.negativity_before,
            "negativity_after": self.negativity_after,
            "spin_branches": [dataclasses.asdict(b) for b in self.spin_branches],
            "checks": self.checks(),
            "passed": self.passed,
        }


def run_position_example(example: PositionSpinExample, bins=None) -> PositionReport:
    """Measure position over ``bins`` (default: all), then complete it with spin.

    ``bins`` is a collection of grid indices.  The position-only branch
    keeps the Bell state; each spin branch collapses to a product state.
    """
    bins = list(range(len(example.grid))) if bins is None else sorted(bins)
    labels = [example.position.labels[j] for j in bins]
    mass = float(np.sum(np.abs(example.vacuum[bins]) ** 2))

    before = negativity(example.bell)
    pos = apply_local_instrument(example.bell, example.position_instrument(), labels)
    if pos.state is None:
        raise ZeroProbabilityError("selected bins carry no probability")
    report = PositionReport(
        bins=bins,
        probability=pos.probability,
        expected_probability=mass,
        bell_distance=frobenius_distance(pos.state.rho, example.bell.rho),
        negativity_before=before,
        negativity_after=negativity(pos.state),
    )

    complete = example.completed_instrument()
    for sign, value in ((1, 0.5), (-1, -0.5)):
        out = apply_local_instrument(example.bell, complete, [(x, value) for x in labels])
        if out.state is None:
            raise ZeroProbabilityError(f"spin outcome {value} has zero probability")
        report.spin_branches.append(
            SpinBranch(
                sign=sign,
                probability=out.probability,
                expected_probability=0.5 * mass,
                distance_to_product=frobenius_distance(out.state.rho, example.product_state(sign)),
                negativity=negativity(out.state),
                product=is_product(out.state, 1e-7),
            )
        )
    return report


# -- Zeno effect ------------------------------------------------------------


MODES = ("incomplete", "complete")


@dataclass(frozen=True, eq=False)
class ZenoConfig:
    hamiltonian: SharpObservable
    generator: np.ndarray
    initial_state: np.ndarray  # unit vector on env (x) system
    env_dim: int
    total_time: float = 1.0
    steps: int = 100
    mode: str = "complete"
    target: tuple = (0, 0)  # (i, k) of the conditioned refined outcome
    tol: float = DEFAULT_TOL

    @property
    def system_dim(self) -> int:
        return self.hamiltonian.dim

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.total_time < 0:
            raise ValueError("total_time must be nonnegative")
        n = self.env_dim * self.system_dim
        g = as_matrix(self.generator)
        if g.shape != (n, n):
            raise DimensionError(f"generator must be {n}x{n}, got {g.shape}")
        if hermiticity_error(g) > self.tol:
            raise ValueError("generator is not Hermitian")
        if np.asarray(self.initial_state).size != n:
            raise DimensionError("initial state does not live on env (x) system")
        for a, proj in zip(self.hamiltonian.eigenvalues, self.hamiltonian.projections):
            lifted = tensor(np.eye(self.env_dim), proj)
            err = float(np.max(np.abs(g @ lifted - lifted @ g)))
            if err > self.tol:
                raise CommutantError(
                    f"generator does not commute with I (x) M for eigenvalue {a} (max |[G, I(x)M]| = {err:.3e})"
                )


def canonical_zeno_config(
    steps: int = 100,
    mode: str = "complete",
    total_time: float = 1.0,
    angle: float = np.pi / 2,
    mixing: float = np.pi / 6,
) -> ZenoConfig:
    """Environment ``C^2``, system ``C^3``; eigenvalue 1 of ``H`` is twofold on ``span{e1, e2}``.

    ``G = (angle / total_time) sigma_x (x) Y`` where ``Y`` is the Pauli-y
    on ``span{e1, e2}``: it rotates ``e1`` into ``e2`` while flipping the
    environment, so it commutes with both eigenprojections of ``H``.  The
    initial state is ``cos(mixing)|0,e1> + sin(mixing)|1,e2>``.
    """
    p12 = np.diag([1.0, 1.0, 0.0]).astype(complex)
    p3 = np.diag([0.0, 0.0, 1.0]).astype(complex)
    h = SharpObservable((1.0, 2.0), (p12, p3))
    y = np.zeros((3, 3), dtype=complex)
    y[0, 1], y[1, 0] = -1j, 1j
    sigma_x = np.array([[0, 1], [1, 0]], dtype=complex)
    rate = angle / total_time if total_time > 0 else 0.0
    g = rate * tensor(sigma_x, y)
    psi = np.cos(mixing) * tensor(basis_vector(2, 0), basis_vector(3, 0)) + np.sin(mixing) * tensor(
        basis_vector(2, 1), basis_vector(3, 1)
    )
    return ZenoConfig(h, g, psi, 2, total_time, steps, mode)


@dataclass
class ZenoResult:
    mode: str
    steps: int
    preparation_probability: float
    survival: np.ndarray
    negativity: np.ndarray
    fidelity: np.ndarray
    final_system_state: np.ndarray

    @property
    def final_survival(self) -> float:
        return float(self.survival[-1])

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])

    @property
    def certified_survival(self) -> float:
        """Survival weighted by the final overlap with ``d_ik``."""
        return self.final_survival * self.final_fidelity

    def rows(self) -> list[tuple]:
        return [
            (j + 1, float(s), float(q), float(f))
            for j, (s, q, f) in enumerate(zip(self.survival, self.negativity, self.fidelity))
        ]

    def checks(self) -> dict:
        out = {
            "survival_in_unit_interval": bool(np.all((self.survival >= 0) & (self.survival <= 1 + 1e-12))),
            "survival_monotone": bool(np.all(np.diff(self.survival) <= 1e-12)),
        }
        if self.mode == "complete":
            out["negativity_below_threshold"] = bool(np.all(self.negativity < 1e-7))
        return out


def _measurement(cfg: ZenoConfig) -> tuple[Instrument, object, np.ndarray]:
    """Instrument, conditioned label and the target vector ``d_ik``."""
    h_povm = cfg.hamiltonian.as_povm()
    refined = maximally_refine(h_povm)
    i, k = cfg.target
    d_target = refined.vector(i, k)
    luders = luders_instrument(h_povm)
    if cfg.mode == "incomplete":
        return luders, h_povm.labels[i], d_target
    basis = np.column_stack([refined.vector(a, b) for a, b in refined.pairs()])
    fine = SharpObservable.from_basis(range(basis.shape[1]), basis, cfg.tol)
    inst = sequential(luders, luders_instrument(fine.as_povm()), "complete-luders")
    index = refined.pairs().index((i, k))
    return inst, (h_povm.labels[i], fine.eigenvalues[index]), d_target


def step_unitary(g: np.ndarray, dt: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    vals, vecs = hermitian_eig(g, tol)
    return (vecs * np.exp(-1j * vals * dt)) @ dagger(vecs)


def zeno_simulate(cfg: ZenoConfig) -> ZenoResult:
    cfg.validate()
    inst, label, d_target = _measurement(cfg)
    u = step_unitary(as_matrix(cfg.generator), cfg.total_time / cfg.steps, cfg.tol)
    state = BipartiteState.from_vector(cfg.initial_state, cfg.env_dim, cfg.system_dim)

    prep = apply_local_instrument(state, inst, label)
    if prep.state is None:
        raise ZeroProbabilityError(f"initial state never yields outcome {label!r}")
    state = prep.state

    survival = np.empty(cfg.steps)
    neg = np.empty(cfg.steps)
    fid = np.empty(cfg.steps)
    cumulative = 1.0
    for j in range(cfg.steps):
        evolved = u @ state.rho @ dagger(u)
        out = apply_local_instrument(
            BipartiteState(0.5 * (evolved + dagger(evolved)), cfg.env_dim, cfg.system_dim), inst, label
        )
        if out.state is None:
            raise ZeroProbabilityError(f"outcome {label!r} has zero probability at step {j + 1}")
        cumulative *= min(out.probability, 1.0)
        state = out.state
        rho_s = partial_trace(state, "left")
        survival[j] = cumulative
        neg[j] = negativity(state)
        fid[j] = float(np.real(d_target.conj() @ rho_s @ d_target))
    return ZenoResult(cfg.mode, cfg.steps, prep.probability, survival, neg, fid, partial_trace(state, "left"))


@dataclass(frozen=True)
class SweepRow:
    steps: int
    mode: str
    final_survival: float
    final_fidelity: float
    certified_survival: float
    max_negativity: float


def zeno_sweep(template: ZenoConfig, step_values, modes=MODES) -> list[SweepRow]:
    rows = []
    for mode in modes:
        for n in step_values:
            res = zeno_simulate(dataclasses.replace(template, steps=int(n), mode=mode))
            rows.append(
                SweepRow(n, mode, res.final_survival, res.final_fidelity, res.certified_survival, float(np.max(res.negativity)))
            )
    return rows


def zeno_config_to_json(cfg: ZenoConfig) -> dict:
    h = cfg.hamiltonian
    return {
        "env_dim": cfg.env_dim,
        "system_dim": cfg.system_dim,
        "hamiltonian": {
            "eigenvalues": list(h.eigenvalues),
            "projections": [matrix_to_json(q) for q in h.projections],
        },
        "generator": matrix_to_json(cfg.generator),
        "initial_state": vector_to_json(cfg.initial_state),
        "total_time": cfg.total_time,
        "steps": cfg.steps,
        "mode": cfg.mode,
        "target": list(cfg.target),
        "tol": cfg.tol,
    }


def zeno_config_from_json(obj) -> ZenoConfig:
    try:
        h = SharpObservable(
            obj["hamiltonian"]["eigenvalues"],
            [matrix_from_json(q) for q in obj["hamiltonian"]["projections"]],
            float(obj.get("tol", DEFAULT_TOL)),
        )
        cfg = ZenoConfig(
            hamiltonian=h,
            generator=matrix_from_json(obj["generator"]),
            initial_state=vector_from_json(obj["initial_state"]),
            env_dim=int(obj["env_dim"]),
            total_time=float(obj.get("total_time", 1.0)),
            steps=int(obj.get("steps", 100)),
            mode=str(obj.get("mode", "complete")),
            target=tuple(obj.get("target", (0, 0))),
            tol=float(obj.get("tol", DEFAULT_TOL)),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed Zeno config: {exc}") from None
    if "system_dim" in obj and int(obj["system_dim"]) != cfg.system_dim:
        raise FormatError("system_dim does not match the Hamiltonian")
    return cfg
