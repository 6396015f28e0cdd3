"""JSON forms of matrices, subspaces, idempotents, chart coordinates and tangent vectors.

Matrix::

    {"field": "R" | "C", "rows": n, "cols": m, "data": [...]}

``data`` is row-major; complex entries are ``[re, im]`` pairs. Floats go
through :mod:`json`, which writes the shortest round-trip decimal.
"""

from __future__ import annotations

import numpy as np

from .bundle import ChartCoords
from .grassmann import OperatorBetween, Subspace, make_subspace
from .kernel import as_matrix
from .tangent import TangentVector


def matrix_to_json(A) -> dict:
    A = as_matrix(A)
    rows, cols = A.shape
    if np.iscomplexobj(A):
        data = [[float(z.real), float(z.imag)] for z in A.reshape(-1)]
        field = "C"
    else:
        data = [float(x) for x in A.reshape(-1)]
        field = "R"
    return {"field": field, "rows": rows, "cols": cols, "data": data}


def matrix_from_json(obj) -> np.ndarray:
    try:
        field, rows, cols, data = obj["field"], int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if len(data) != rows * cols:
        raise ValueError(f"matrix JSON has {len(data)} entries, expected {rows * cols}")
    if field == "C":
        flat = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    elif field == "R":
        flat = np.array(data, dtype=np.float64)
    else:
        raise ValueError(f"unknown field {field!r}")
    return flat.reshape(rows, cols)


def scalar_to_json(a):
    a = complex(a)
    return a.real if a.imag == 0 else [a.real, a.imag]


def scalar_from_json(obj):
    if isinstance(obj, (list, tuple)):
        re, im = obj
        return complex(re, im)
    return float(obj)


def subspace_to_json(E: Subspace) -> dict:
    return {"ambient": E.ambient, "basis": matrix_to_json(E.basis)}


def subspace_from_json(obj) -> Subspace:
    B = matrix_from_json(obj["basis"])
    if "ambient" in obj and int(obj["ambient"]) != B.shape[0]:
        raise ValueError("ambient dimension does not match the basis")
    return make_subspace(B)


def idempotent_to_json(Q) -> dict:
    return {"mat": matrix_to_json(Q)}


def idempotent_from_json(obj) -> np.ndarray:
    return matrix_from_json(obj["mat"] if "mat" in obj else obj)


def coords_to_json(c: ChartCoords) -> dict:
    return {
        "anchors": {"E0": subspace_to_json(c.E0), "F0": subspace_to_json(c.F0)},
        "R": matrix_to_json(c.R),
        "S": matrix_to_json(c.S),
    }


def coords_from_json(obj) -> ChartCoords:
    anchors = obj["anchors"]
    return ChartCoords(
        subspace_from_json(anchors["E0"]),
        subspace_from_json(anchors["F0"]),
        matrix_from_json(obj["R"]),
        matrix_from_json(obj["S"]),
    )


def tangent_to_json(t: TangentVector) -> dict:
    return {"base": subspace_to_json(t.base), "T": matrix_to_json(t.coeffs)}


def tangent_from_json(obj) -> TangentVector:
    return TangentVector(subspace_from_json(obj["base"]), matrix_from_json(obj["T"]))


def operator_to_json(T: OperatorBetween) -> dict:
    return {"source": subspace_to_json(T.source), "target": subspace_to_json(T.target), "coeffs": matrix_to_json(T.coeffs)}


def operator_from_json(obj) -> OperatorBetween:
    return OperatorBetween(subspace_from_json(obj["source"]), subspace_from_json(obj["target"]), matrix_from_json(obj["coeffs"]))
