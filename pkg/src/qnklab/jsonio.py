"""JSON encoding shared by every file format in the repo.

Matrices are nested row arrays with each complex entry a two-element
``[re, im]`` pair.  Writers sort keys and use a fixed indentation so that
identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .families import OperatorFamily
from .linalg import as_matrix
from .protocol import Transcript


class FormatError(ValueError):
    """Raised when an input file does not match its documented shape."""


def matrix_to_json(m) -> list:
    a = as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data) -> np.ndarray:
    try:
        rows = [[complex(entry[0], entry[1]) for entry in row] for row in data]
    except (TypeError, IndexError) as exc:
        raise FormatError(f"malformed matrix encoding: {exc}") from None
    a = np.array(rows, dtype=complex)
    if a.ndim != 2:
        raise FormatError("matrix encoding must be a nested row list")
    return a


def dump(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON in {path}: {exc}") from None


def channel_to_json(ch) -> dict:
    """Channels serialize as their Kraus set only; the superoperator
    matrix is recomputed on load."""
    return {"dim": ch.dim, "kraus": [matrix_to_json(e) for e in ch.kraus]}


def channel_from_json(data: dict):
    from .channels import Channel

    try:
        dim = int(data["dim"])
        kraus = tuple(matrix_from_json(e) for e in data["kraus"])
    except KeyError as exc:
        raise FormatError(f"channel file missing key {exc}") from None
    if any(e.shape != (dim, dim) for e in kraus):
        raise FormatError("channel Kraus operators do not match the declared dim")
    try:
        return Channel(kraus)
    except ValueError as exc:
        raise FormatError(f"invalid channel: {exc}") from None


def family_to_json(family: OperatorFamily) -> dict:
    base = None
    if family.base_a0 is not None and family.base_b0 is not None:
        base = {"A0": matrix_to_json(family.base_a0), "B0": matrix_to_json(family.base_b0)}
    return {
        "scheme": family.scheme,
        "dim": family.dim,
        "seed": family.seed,
        "base": base,
        "S_A": [matrix_to_json(m) for m in family.s_a],
        "S_B": [matrix_to_json(m) for m in family.s_b],
        "N": matrix_to_json(family.n_matrix),
        "T": matrix_to_json(family.transform),
    }


def family_from_json(data: dict, validate: bool = True) -> OperatorFamily:
    """Rebuild a family from its file form; structural invariants are
    re-checked unless ``validate`` is disabled."""
    from .channels import unitary_from_natural
    from .families import validate_family

    try:
        scheme = int(data["scheme"])
        dim = int(data["dim"])
        seed = data["seed"]
        s_a = tuple(matrix_from_json(m) for m in data["S_A"])
        s_b = tuple(matrix_from_json(m) for m in data["S_B"])
        n_matrix = matrix_from_json(data["N"])
        transform = matrix_from_json(data["T"])
        base = data.get("base")
    except KeyError as exc:
        raise FormatError(f"family file missing key {exc}") from None
    if not s_a or not s_b:
        raise FormatError("family file has empty operator sets")

    base_a0 = matrix_from_json(base["A0"]) if base else None
    base_b0 = matrix_from_json(base["B0"]) if base else None
    try:
        unitaries_a = tuple(unitary_from_natural(m) for m in s_a)
        unitaries_b = tuple(unitary_from_natural(m) for m in s_b)
    except ValueError as exc:
        raise FormatError(f"family element violates the channel structure: {exc}") from None
    family = OperatorFamily(
        scheme=scheme,
        dim=dim,
        s_a=s_a,
        s_b=s_b,
        n_matrix=n_matrix,
        transform=transform,
        index_set=tuple(range(min(len(s_a), len(s_b)))),
        seed=seed,
        unitaries_a=unitaries_a,
        unitaries_b=unitaries_b,
        base_a0=base_a0,
        base_b0=base_b0,
    )
    if validate:
        check = validate_family(family)
        if not check.passed:
            raise FormatError(f"family invariant violated: {check.failures[0]}")
    return family


def density_to_json(rho) -> list:
    m = rho.matrix if hasattr(rho, "matrix") else rho
    return matrix_to_json(m)


def transcript_to_json(t: Transcript) -> dict:
    return {
        "scheme": t.scheme,
        "dim": t.dim,
        "cipher1": density_to_json(t.ciphers[0]),
        "cipher2": density_to_json(t.ciphers[1]),
        "cipher3": density_to_json(t.ciphers[2]),
        "final": density_to_json(t.final),
        "l1": t.l1,
        "l2": t.l2,
        "key_id": t.key_id,
        "seeds": t.seeds,
        "correctness_distance": float(t.correctness_distance),
    }


def density_from_json(data):
    from .linalg import DensityMatrix

    try:
        return DensityMatrix(matrix_from_json(data))
    except ValueError as exc:
        raise FormatError(f"invalid density matrix: {exc}") from None
