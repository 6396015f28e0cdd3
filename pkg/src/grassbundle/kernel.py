"""Dense linear-algebra primitives shared by every other module.

Matrices are plain :class:`numpy.ndarray` objects. The scalar field is read
off the dtype: anything complex is treated as the complex field, everything
else is promoted to ``float64`` and treated as the real field.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import IllConditioned, RankDeficient

TOL_ENV = "GRASSBUNDLE_TOL"


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical thresholds used by validation and rank decisions.

    ``rank_rel_tol`` is relative to the largest singular value,
    ``residual_tol`` bounds identity residuals and ``cond_cap`` is the
    largest 2-norm condition number accepted as "invertible".
    """

    rank_rel_tol: float = 1e-10
    residual_tol: float = 1e-9
    cond_cap: float = 1e8

    def __post_init__(self):
        for name in ("rank_rel_tol", "residual_tol", "cond_cap"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    def with_residual_tol(self, tol: float) -> "ToleranceConfig":
        return replace(self, residual_tol=float(tol))


def default_config() -> ToleranceConfig:
    """Default thresholds, with ``GRASSBUNDLE_TOL`` overriding ``residual_tol``."""
    raw = os.environ.get(TOL_ENV)
    if raw:
        return ToleranceConfig(residual_tol=float(raw))
    return ToleranceConfig()


def resolve(cfg: ToleranceConfig | None) -> ToleranceConfig:
    return default_config() if cfg is None else cfg


def as_matrix(A) -> np.ndarray:
    """Coerce to a 2-D float64 or complex128 array (1-D input becomes a column)."""
    A = np.asarray(A)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {A.shape}")
    if np.iscomplexobj(A):
        return A.astype(np.complex128, copy=False)
    return A.astype(np.float64, copy=False)


def field_of(A) -> str:
    """``"C"`` for complex arrays, ``"R"`` otherwise."""
    return "C" if np.iscomplexobj(A) else "R"


def common_dtype(*arrays):
    return np.result_type(np.float64, *[np.asarray(a).dtype for a in arrays])


def adjoint(A) -> np.ndarray:
    """Conjugate transpose (plain transpose for real input)."""
    A = as_matrix(A)
    return A.conj().T if np.iscomplexobj(A) else A.T


def opnorm(A) -> float:
    """Spectral norm; zero for empty matrices."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def singular_values(A) -> np.ndarray:
    A = as_matrix(A)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def rank_of(A, cfg: ToleranceConfig | None = None) -> int:
    """Number of singular values above ``rank_rel_tol`` times the largest one."""
    cfg = resolve(cfg)
    s = singular_values(A)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > cfg.rank_rel_tol * s[0]))


def condition_number(A) -> float:
    s = singular_values(A)
    if s.size == 0:
        return 1.0
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def orthonormalize(B, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Orthonormal basis of the column span of ``B``.

    The result ``Q`` satisfies ``B = Q @ R`` with ``R`` upper triangular with
    strictly positive (real) diagonal, which fixes ``Q`` uniquely.

    Raises
    ------
    RankDeficient
        If the numerical rank of ``B`` is smaller than its column count.
    """
    B = as_matrix(B)
    rows, cols = B.shape
    if cols == 0:
        return B.copy()
    if cols > rows or rank_of(B, cfg) < cols:
        raise RankDeficient(f"columns of the {rows}x{cols} input are not independent")
    Q, R = np.linalg.qr(B)
    d = np.diagonal(R)
    phase = d / np.abs(d)
    if not np.iscomplexobj(Q):
        phase = phase.real
    return Q * phase


def solve(A, B, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Solve ``A X = B`` for square ``A`` with condition number at most ``cond_cap``."""
    cfg = resolve(cfg)
    A = as_matrix(A)
    B = np.asarray(B)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"solve needs a square matrix, got shape {A.shape}")
    cond = condition_number(A)
    if not cond <= cfg.cond_cap:
        raise IllConditioned(f"condition number {cond:.3e} exceeds cap {cfg.cond_cap:.3e}")
    return np.linalg.solve(A, B)


def inverse(A, cfg: ToleranceConfig | None = None) -> np.ndarray:
    A = as_matrix(A)
    return solve(A, np.eye(A.shape[0], dtype=A.dtype), cfg)


def column_span(M, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Orthonormal basis (left singular vectors) of the numerical range of ``M``."""
    M = as_matrix(M)
    U, _, _ = np.linalg.svd(M)
    return U[:, : rank_of(M, cfg)]


def null_space(M, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``M``."""
    M = as_matrix(M)
    _, _, Vh = np.linalg.svd(M)
    return adjoint(Vh[rank_of(M, cfg):, :])


def orthogonal_complement_basis(B) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the span of orthonormal ``B``."""
    B = as_matrix(B)
    n, k = B.shape
    Q, _ = np.linalg.qr(B, mode="complete")
    return Q[:, k:]


def rel_residual(A, B) -> float:
    """``||A - B|| / (1 + ||B||)`` in the spectral norm."""
    return opnorm(np.asarray(A) - np.asarray(B)) / (1.0 + opnorm(B))
