"""JSON wire formats.

Complex numbers are ``[re, im]`` pairs; matrices are
``{"rows": n, "cols": m, "data": [[re, im], ...]}`` in row-major order.
Python's float ``repr`` is round-trip exact, so no precision is lost.
"""

from __future__ import annotations

import json

import numpy as np

from .linalg import DEFAULT_TOL, DimensionError
from .measurement import Instrument, MeasurementModel
from .povm import Povm, RefinedPovm, coarse_grain


class FormatError(ValueError):
    """Document does not follow the expected JSON schema."""


def _complex_to_json(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _complex_from_json(pair) -> complex:
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise FormatError(f"complex number must be [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionError("only 2-D arrays serialize as matrices")
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [_complex_to_json(z) for z in a.ravel()],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed matrix: {exc}") from None
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise FormatError(f"matrix declares {rows}x{cols} but has {len(data)} entries")
    m = np.array([_complex_from_json(z) for z in data], dtype=complex).reshape(rows, cols)
    if not np.all(np.isfinite(m)):
        raise FormatError("matrix has non-finite entries")
    return m


def vector_to_json(v) -> list:
    return [_complex_to_json(z) for z in np.asarray(v, dtype=complex).ravel()]


def vector_from_json(data) -> np.ndarray:
    if not isinstance(data, list):
        raise FormatError("vector must be a list of [re, im] pairs")
    return np.array([_complex_from_json(z) for z in data], dtype=complex)


def label_to_json(label):
    if isinstance(label, tuple):
        return [label_to_json(x) for x in label]
    if isinstance(label, (np.floating, np.integer)):
        return label.item()
    return label


def label_from_json(label):
    if isinstance(label, list):
        return tuple(label_from_json(x) for x in label)
    return label


def povm_to_json(p: Povm) -> dict:
    return {
        "dim": p.dim,
        "tol": p.tol,
        "outcomes": [
            {"label": label_to_json(x), "effect": matrix_to_json(e)} for x, e in zip(p.labels, p.effects)
        ],
    }


def povm_from_json(obj) -> Povm:
    try:
        outcomes = obj["outcomes"]
        tol = float(obj.get("tol", DEFAULT_TOL))
        labels = [label_from_json(o["label"]) for o in outcomes]
        effects = [matrix_from_json(o["effect"]) for o in outcomes]
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"malformed POVM: {exc}") from None
    if "dim" in obj and any(e.shape != (obj["dim"], obj["dim"]) for e in effects):
        raise FormatError(f"effects do not match declared dim {obj['dim']}")
    try:
        return Povm(effects, labels, tol)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def refined_to_json(r: RefinedPovm) -> dict:
    doc = povm_to_json(coarse_grain(r))
    doc["multiplicities"] = list(r.multiplicities)
    doc["vectors"] = [{"i": i, "k": k, "d": vector_to_json(r.vector(i, k))} for i, k in r.pairs()]
    return doc


def refined_from_json(obj) -> RefinedPovm:
    try:
        labels = [label_from_json(o["label"]) for o in obj["outcomes"]]
        groups = [[] for _ in labels]
        for entry in sorted(obj["vectors"], key=lambda e: (e["i"], e["k"])):
            groups[int(entry["i"])].append(vector_from_json(entry["d"]))
        tol = float(obj.get("tol", DEFAULT_TOL))
    except (KeyError, TypeError, IndexError) as exc:
        raise FormatError(f"malformed refined POVM: {exc}") from None
    return RefinedPovm(labels, groups, tol)


def instrument_to_json(inst: Instrument) -> dict:
    return {
        "name": inst.name,
        "input_dim": inst.input_dim,
        "output_dim": inst.output_dim,
        "tol": inst.tol,
        "outcomes": [
            {"label": label_to_json(x), "kraus": [matrix_to_json(k) for k in ops]}
            for x, ops in zip(inst.labels, inst.kraus)
        ],
    }


def instrument_from_json(obj) -> Instrument:
    try:
        labels = [label_from_json(o["label"]) for o in obj["outcomes"]]
        kraus = [[matrix_from_json(k) for k in o["kraus"]] for o in obj["outcomes"]]
        tol = float(obj.get("tol", DEFAULT_TOL))
        name = str(obj.get("name", "instrument"))
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"malformed instrument: {exc}") from None
    if any(not ops for ops in kraus):
        raise FormatError("every outcome needs at least one Kraus operator")
    shape = kraus[0][0].shape
    if ("input_dim" in obj and obj["input_dim"] != shape[1]) or (
        "output_dim" in obj and obj["output_dim"] != shape[0]
    ):
        raise FormatError("declared dimensions do not match the Kraus operators")
    return Instrument(labels, kraus, tol, name)


def model_to_json(m: MeasurementModel) -> dict:
    return {
        "system_dim": m.system_dim,
        "ancilla_dim": m.ancilla_dim,
        "refined_povm": refined_to_json(m.refined),
        "posterior_vectors": [vector_to_json(v) for v in m.posterior],
        "probe": vector_to_json(m.probe),
        "pointer_basis": [vector_to_json(e) for e in m.pointer_basis],
        "interaction": matrix_to_json(m.interaction),
    }


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(obj, sort_keys=True, indent=2)
