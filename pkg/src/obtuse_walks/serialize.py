"""JSON serialization for every artifact the package produces.

All files are JSON with a top-level ``"schema": "obtuse-walks/v1"`` field.
Matrices are stored dense row-major with separate ``re``/``im`` arrays of
IEEE-754 doubles; nothing binary, so fixtures stay diffable and
language-portable.  Schemas:

  obtuse-system.json   {"dim": N, "values": [[...], ...], "probabilities": [...]}
  three-tensor.json    {"dim": N, "coeffs": [...]} flat row-major, index order (i, j, k)
  matrix.json          {"rows": r, "cols": c, "re": [...], "im": [...]}
  block-unitary.json   {"system_dim": d, "site_dim": N+1, "blocks": [[matrix, ...], ...]}
                       indexed [i][j] for the block U^i_j
  classical-form.json  {"system": ..., "step_unitaries": [matrix, ...],
                        "coefficients": [matrix, ...]}
  trajectory.json      {"seed": S, "steps": [...], "final": matrix, "states": [...]? }
  distribution.json    {"horizon": n, "atoms": [{"probability": p, "matrix": ...}, ...]}

Loaders raise MalformedInputError on anything structurally wrong, including
a present-but-different schema tag.
"""

import json

import numpy as np

from .classicality import BlockUnitary, ClassicalForm
from .errors import MalformedInputError
from .obtuse import ObtuseSystem
from .tensor3 import ThreeTensor
from .walk import WalkDistribution

SCHEMA_VERSION = "obtuse-walks/v1"


def _require(condition, message):
    if not condition:
        raise MalformedInputError(message)


def _check_schema(obj, path):
    _require(isinstance(obj, dict), f"{path}: top level must be a JSON object")
    tag = obj.get("schema", SCHEMA_VERSION)
    _require(
        tag == SCHEMA_VERSION, f"{path}: schema {tag!r} is not {SCHEMA_VERSION!r}"
    )


def _float_list(values, what):
    try:
        out = [float(x) for x in values]
    except (TypeError, ValueError) as exc:
        raise MalformedInputError(f"{what}: expected a list of numbers") from exc
    return out


def matrix_to_obj(matrix):
    """Dense complex matrix -> {"rows", "cols", "re", "im"} (row-major)."""
    m = np.asarray(matrix, dtype=complex)
    _require(m.ndim == 2, f"matrix must be 2-D, got shape {m.shape}")
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def matrix_from_obj(obj, what="matrix"):
    _require(isinstance(obj, dict), f"{what}: expected an object")
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = _float_list(obj["re"], f"{what}.re")
        im = _float_list(obj["im"], f"{what}.im")
    except KeyError as exc:
        raise MalformedInputError(f"{what}: missing key {exc}") from exc
    _require(rows >= 1 and cols >= 1, f"{what}: rows/cols must be positive")
    _require(
        len(re) == rows * cols and len(im) == rows * cols,
        f"{what}: entry count does not match {rows}x{cols}",
    )
    return (np.array(re) + 1j * np.array(im)).reshape(rows, cols)


def system_to_obj(system):
    return {
        "schema": SCHEMA_VERSION,
        "dim": int(system.dim),
        "values": [[float(x) for x in row] for row in system.values],
        "probabilities": [float(p) for p in system.probabilities],
    }


def system_from_obj(obj, path="obtuse-system"):
    _check_schema(obj, path)
    try:
        dim = int(obj["dim"])
        values = [_float_list(row, f"{path}.values") for row in obj["values"]]
        probabilities = _float_list(obj["probabilities"], f"{path}.probabilities")
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"{path}: missing or bad key ({exc})") from exc
    try:
        return ObtuseSystem(dim=dim, values=np.array(values), probabilities=probabilities)
    except (MalformedInputError, ValueError) as exc:
        raise MalformedInputError(f"{path}: {exc}") from exc


def tensor_to_obj(tensor):
    return {
        "schema": SCHEMA_VERSION,
        "dim": int(tensor.dim),
        "coeffs": [float(x) for x in tensor.coeffs.ravel()],
    }


def tensor_from_obj(obj, path="three-tensor"):
    _check_schema(obj, path)
    try:
        dim = int(obj["dim"])
        coeffs = _float_list(obj["coeffs"], f"{path}.coeffs")
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"{path}: missing or bad key ({exc})") from exc
    _require(dim >= 1, f"{path}: dim must be positive")
    _require(
        len(coeffs) == (dim + 1) ** 3,
        f"{path}: expected {(dim + 1) ** 3} coefficients, got {len(coeffs)}",
    )
    return ThreeTensor(dim=dim, coeffs=np.array(coeffs).reshape((dim + 1,) * 3))


def block_unitary_to_obj(u):
    return {
        "schema": SCHEMA_VERSION,
        "system_dim": int(u.system_dim),
        "site_dim": int(u.site_dim),
        "blocks": [
            [matrix_to_obj(u.blocks[i, j]) for j in range(u.site_dim)]
            for i in range(u.site_dim)
        ],
    }


def block_unitary_from_obj(obj, path="block-unitary"):
    _check_schema(obj, path)
    try:
        system_dim = int(obj["system_dim"])
        site_dim = int(obj["site_dim"])
        rows = obj["blocks"]
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"{path}: missing or bad key ({exc})") from exc
    _require(
        isinstance(rows, list) and len(rows) == site_dim,
        f"{path}: blocks must be a {site_dim}x{site_dim} grid",
    )
    blocks = np.empty((site_dim, site_dim, system_dim, system_dim), dtype=complex)
    for i, row in enumerate(rows):
        _require(
            isinstance(row, list) and len(row) == site_dim,
            f"{path}: blocks must be a {site_dim}x{site_dim} grid",
        )
        for j, entry in enumerate(row):
            block = matrix_from_obj(entry, f"{path}.blocks[{i}][{j}]")
            _require(
                block.shape == (system_dim, system_dim),
                f"{path}.blocks[{i}][{j}]: expected {system_dim}x{system_dim}",
            )
            blocks[i, j] = block
    return BlockUnitary(system_dim=system_dim, site_dim=site_dim, blocks=blocks)


def classical_form_to_obj(form):
    return {
        "schema": SCHEMA_VERSION,
        "system": system_to_obj(form.system),
        "step_unitaries": [matrix_to_obj(w) for w in form.step_unitaries],
        "coefficients": [matrix_to_obj(b) for b in form.coefficients],
    }


def classical_form_from_obj(obj, path="classical-form"):
    _check_schema(obj, path)
    try:
        system = system_from_obj(obj["system"], f"{path}.system")
        w = [matrix_from_obj(m, f"{path}.step_unitaries") for m in obj["step_unitaries"]]
        b = [matrix_from_obj(m, f"{path}.coefficients") for m in obj["coefficients"]]
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"{path}: missing or bad key ({exc})") from exc
    try:
        return ClassicalForm(system=system, step_unitaries=w, coefficients=b)
    except (MalformedInputError, ValueError) as exc:
        raise MalformedInputError(f"{path}: {exc}") from exc


def trajectory_to_obj(trajectory, include_states=False):
    obj = {
        "schema": SCHEMA_VERSION,
        "seed": int(trajectory.seed),
        "steps": [int(i) for i in trajectory.steps],
        "final": matrix_to_obj(trajectory.final),
    }
    if include_states:
        obj["states"] = [matrix_to_obj(v) for v in trajectory.states]
    return obj


def distribution_to_obj(distribution):
    return {
        "schema": SCHEMA_VERSION,
        "horizon": int(distribution.horizon),
        "atoms": [
            {"probability": float(p), "matrix": matrix_to_obj(m)}
            for m, p in distribution.atoms
        ],
    }


def distribution_from_obj(obj, path="distribution"):
    _check_schema(obj, path)
    try:
        horizon = int(obj["horizon"])
        atoms = [
            (matrix_from_obj(a["matrix"], f"{path}.atoms"), float(a["probability"]))
            for a in obj["atoms"]
        ]
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"{path}: missing or bad key ({exc})") from exc
    return WalkDistribution(horizon=horizon, atoms=atoms)


def dump_json(obj, path, indent=2):
    """Write canonical JSON: fixed key order, repr floats, trailing newline."""
    indent = None if indent is not None and indent < 0 else indent
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=indent, allow_nan=False)
        fh.write("\n")


def load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise MalformedInputError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON ({exc})") from exc


def save_obtuse_system(system, path, indent=2):
    dump_json(system_to_obj(system), path, indent)


def load_obtuse_system(path):
    return system_from_obj(load_json(path), str(path))


def save_tensor(tensor, path, indent=2):
    dump_json(tensor_to_obj(tensor), path, indent)


def load_tensor(path):
    return tensor_from_obj(load_json(path), str(path))


def save_matrix(matrix, path, indent=2):
    obj = {"schema": SCHEMA_VERSION}
    obj.update(matrix_to_obj(matrix))
    dump_json(obj, path, indent)


def load_matrix(path):
    obj = load_json(path)
    _check_schema(obj, str(path))
    return matrix_from_obj(obj, str(path))


def save_block_unitary(u, path, indent=2):
    dump_json(block_unitary_to_obj(u), path, indent)


def load_block_unitary(path):
    return block_unitary_from_obj(load_json(path), str(path))


def save_classical_form(form, path, indent=2):
    dump_json(classical_form_to_obj(form), path, indent)


def load_classical_form(path):
    return classical_form_from_obj(load_json(path), str(path))


def save_distribution(distribution, path, indent=2):
    dump_json(distribution_to_obj(distribution), path, indent)


def load_distribution(path):
    return distribution_from_obj(load_json(path), str(path))
