"""Subspaces of K^n, complementarity and the two chart systems on the Grassmannian.

A subspace is held through a canonical orthonormal basis. Charts are always
anchored at an explicit complementary pair ``(E0, F0)``:

* ``p_chart`` / ``q_chart`` identify subspaces complementary to ``F0`` with
  operators ``E0 -> F0`` (stored in basis coordinates);
* ``pi_chart`` / ``pi_chart_inv`` identify the same subspaces with square-zero
  operators ``R`` on ``K^n`` with range in ``F0`` and ``R(F0) = 0``.

``lambda_restrict`` and ``lambda_extend`` pass between the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernel
from .errors import ComplementRequired, CoordOutsideChart, NotProper
from .kernel import ToleranceConfig, adjoint, as_matrix, opnorm, resolve


@dataclass(frozen=True, eq=False)
class Subspace:
    """A nonzero proper subspace, stored as an orthonormal ``n x k`` basis."""

    basis: np.ndarray

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def field(self) -> str:
        return kernel.field_of(self.basis)

    @property
    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace."""
        return self.basis @ adjoint(self.basis)

    def __repr__(self):
        return f"Subspace(ambient={self.ambient}, dim={self.dim}, field={self.field})"


@dataclass(frozen=True, eq=False)
class OperatorBetween:
    """A linear map ``source -> target`` in the bases of the two subspaces.

    ``coeffs`` has shape ``(target.dim, source.dim)``.
    """

    source: Subspace
    target: Subspace
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (self.target.dim, self.source.dim)
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs shape {self.coeffs.shape} does not match {expected}")

    def ambient(self) -> np.ndarray:
        """The map as an ``n x n`` matrix, extended by zero on ``source``'s orthogonal complement."""
        return self.target.basis @ self.coeffs @ adjoint(self.source.basis)

    def apply_to_source_basis(self) -> np.ndarray:
        return self.target.basis @ self.coeffs


@dataclass(frozen=True, eq=False)
class NilpotentCoord:
    """An operator ``R`` with ``R(K^n)`` inside ``fiber`` and ``R(fiber) = 0``."""

    mat: np.ndarray
    fiber: Subspace


def make_subspace(B, cfg: ToleranceConfig | None = None) -> Subspace:
    """Canonical representative of the column span of ``B``.

    Raises ``RankDeficient`` for dependent columns and ``NotProper`` when the
    span is zero or everything.
    """
    B = as_matrix(B)
    n, k = B.shape
    if k == 0 or k >= n:
        raise NotProper(f"a {k}-dimensional subspace of K^{n} is not a nonzero proper subspace")
    return Subspace(kernel.orthonormalize(B, cfg))


def span_of(M, cfg: ToleranceConfig | None = None) -> Subspace:
    """Subspace spanned by the columns of ``M`` (rank revealing, ``M`` may be singular)."""
    return make_subspace(kernel.column_span(M, cfg), cfg)


def kernel_subspace(M, cfg: ToleranceConfig | None = None) -> Subspace:
    return make_subspace(kernel.null_space(M, cfg), cfg)


def subspace_gap(E: Subspace, F: Subspace) -> float:
    """Spectral-norm distance between the orthogonal projectors of ``E`` and ``F``."""
    if E.ambient != F.ambient:
        raise ValueError("subspaces live in different ambient spaces")
    return opnorm(E.projector - F.projector)


def same_subspace(E: Subspace, F: Subspace, cfg: ToleranceConfig | None = None) -> bool:
    cfg = resolve(cfg)
    return E.dim == F.dim and subspace_gap(E, F) <= cfg.residual_tol


def is_complement(E: Subspace, F: Subspace, cfg: ToleranceConfig | None = None) -> bool:
    """Whether ``F`` is a (well conditioned) complement of ``E``."""
    cfg = resolve(cfg)
    if E.ambient != F.ambient:
        raise ValueError("subspaces live in different ambient spaces")
    if E.dim + F.dim != E.ambient:
        return False
    return kernel.condition_number(np.hstack([E.basis, F.basis])) <= cfg.cond_cap


def require_complement(E: Subspace, F: Subspace, cfg: ToleranceConfig | None = None, what=""):
    if not is_complement(E, F, cfg):
        label = f" ({what})" if what else ""
        raise ComplementRequired(f"subspaces are not complementary{label}")


def oblique_projector(E: Subspace, F: Subspace, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """The idempotent with range ``E`` and kernel ``F``.

    Solves ``[B_E | B_F] C = I`` and returns ``B_E @ C[:k]``.
    """
    require_complement(E, F, cfg, "oblique projector")
    M = np.hstack([E.basis, F.basis])
    C = kernel.solve(M, np.eye(E.ambient, dtype=M.dtype), cfg)
    return E.basis @ C[: E.dim]


def check_nilpotent(R, F: Subspace, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Validate membership of ``R`` in L^F(K^n, F); returns ``R`` as an array."""
    cfg = resolve(cfg)
    R = as_matrix(R)
    n = F.ambient
    if R.shape != (n, n):
        raise CoordOutsideChart(f"coordinate has shape {R.shape}, expected {(n, n)}")
    scale = cfg.residual_tol * (1.0 + opnorm(R))
    leak = opnorm(R - F.projector @ R)
    if leak > scale:
        raise CoordOutsideChart(f"range leaves the fiber subspace (residual {leak:.2e})")
    on_fiber = opnorm(R @ F.basis)
    if on_fiber > scale:
        raise CoordOutsideChart(f"coordinate does not vanish on the fiber subspace (residual {on_fiber:.2e})")
    return R


def _coord_matrix(R, F: Subspace, cfg) -> np.ndarray:
    if isinstance(R, NilpotentCoord):
        R = R.mat
    return check_nilpotent(R, F, cfg)


def q_chart(E: Subspace, F: Subspace, T: OperatorBetween, cfg: ToleranceConfig | None = None) -> Subspace:
    """The subspace ``(I + T)(E)`` for ``T: E -> F``; it is always complementary to ``F``."""
    require_complement(E, F, cfg, "q_chart anchors")
    coeffs = _coeffs_between(T, E, F)
    return make_subspace(E.basis + F.basis @ coeffs, cfg)


def _coeffs_between(T: OperatorBetween, E: Subspace, F: Subspace) -> np.ndarray:
    # Re-express T in the bases of (E, F); T.source/T.target may be other
    # representatives of the same subspaces.
    lifted = T.ambient()
    return adjoint(F.basis) @ lifted @ E.basis


def p_chart(E0: Subspace, F0: Subspace, E1: Subspace, cfg: ToleranceConfig | None = None) -> OperatorBetween:
    """The unique ``T: E0 -> F0`` with ``(I + T)(E0) = E1``."""
    require_complement(E0, F0, cfg, "p_chart anchors")
    Q = oblique_projector(E1, F0, cfg)
    image = Q @ E0.basis - E0.basis
    return OperatorBetween(E0, F0, adjoint(F0.basis) @ image)


def pi_chart(E0: Subspace, F0: Subspace, E: Subspace, cfg: ToleranceConfig | None = None) -> NilpotentCoord:
    """Nilpotent coordinate ``Q^{F0}_E - Q^{F0}_{E0}`` of a subspace ``E`` complementary to ``F0``."""
    require_complement(E0, F0, cfg, "pi_chart anchors")
    R = oblique_projector(E, F0, cfg) - oblique_projector(E0, F0, cfg)
    return NilpotentCoord(R, F0)


def pi_chart_inv(E0: Subspace, F0: Subspace, R, cfg: ToleranceConfig | None = None) -> Subspace:
    """The subspace ``(I + R)(E0)``."""
    require_complement(E0, F0, cfg, "pi_chart anchors")
    R = _coord_matrix(R, F0, cfg)
    return make_subspace(E0.basis + R @ E0.basis, cfg)


def lambda_restrict(E0: Subspace, F0: Subspace, R, cfg: ToleranceConfig | None = None) -> OperatorBetween:
    """Restriction of ``R`` in L^{F0}(K^n, F0) to ``E0``, as an operator ``E0 -> F0``."""
    R = _coord_matrix(R, F0, cfg)
    return OperatorBetween(E0, F0, adjoint(F0.basis) @ R @ E0.basis)


def lambda_extend(E0: Subspace, F0: Subspace, T: OperatorBetween, cfg: ToleranceConfig | None = None) -> NilpotentCoord:
    """Extension of ``T: E0 -> F0`` to ``T o Q^{F0}_{E0}`` (zero on ``F0``)."""
    Q = oblique_projector(E0, F0, cfg)
    coeffs = _coeffs_between(T, E0, F0)
    # B_E0^* Q gives the E0-coordinates of Q x.
    return NilpotentCoord(F0.basis @ coeffs @ adjoint(E0.basis) @ Q, F0)
