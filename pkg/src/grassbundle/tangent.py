"""Inner-product layer: orthogonal projections, tangent vectors and fiber metrics.

A tangent vector at ``E`` is a map ``T: E -> E^perp`` stored in the canonical
bases of ``E`` and of ``orth_complement(E)``. Over the reals the map

    (E, T) -> T^* P_{E^perp} + P_E

is a fiberwise affine bijection onto the idempotents with range ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernel
from .bundle import ChartCoords, check_idempotent, range_of
from .errors import CoordOutsideChart, FieldMismatch, FiberMismatch
from .grassmann import (
    OperatorBetween,
    Subspace,
    check_nilpotent,
    make_subspace,
    p_chart,
    pi_chart,
    pi_chart_inv,
    q_chart,
    require_complement,
    same_subspace,
)
from .kernel import ToleranceConfig, adjoint, as_matrix, opnorm, resolve

FD_STEP = 1e-5


def orth_complement(E: Subspace) -> Subspace:
    return make_subspace(kernel.orthogonal_complement_basis(E.basis))


def orth_projector(E: Subspace) -> np.ndarray:
    return E.projector


@dataclass(frozen=True, eq=False)
class TangentVector:
    """``T: base -> base^perp`` with ``coeffs`` of shape ``(n - k, k)``."""

    base: Subspace
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (self.base.ambient - self.base.dim, self.base.dim)
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs shape {self.coeffs.shape} does not match {expected}")

    @property
    def complement(self) -> Subspace:
        return orth_complement(self.base)

    def as_operator(self) -> OperatorBetween:
        return OperatorBetween(self.base, self.complement, self.coeffs)

    def ambient(self) -> np.ndarray:
        """``T P_E`` as an ``n x n`` matrix."""
        return self.complement.basis @ self.coeffs @ adjoint(self.base.basis)


def tangent_from_ambient(E: Subspace, T) -> TangentVector:
    """Tangent vector at ``E`` from an ``n x n`` matrix mapping ``E`` into ``E^perp``."""
    comp = orth_complement(E)
    return TangentVector(E, adjoint(comp.basis) @ as_matrix(T) @ E.basis)


def same_tangent(s: TangentVector, t: TangentVector, cfg: ToleranceConfig | None = None) -> bool:
    cfg = resolve(cfg)
    if not same_subspace(s.base, t.base, cfg):
        return False
    return opnorm(s.ambient() - t.ambient()) <= cfg.residual_tol * (1.0 + opnorm(t.ambient()))


def _require_real(*arrays):
    for a in arrays:
        if np.iscomplexobj(a):
            raise FieldMismatch("the tangent bijection is only defined over the real field")


def tangent_to_idempotent(t: TangentVector) -> np.ndarray:
    """``T^* P_{E^perp} + P_E``; an idempotent with range ``E``."""
    _require_real(t.base.basis, t.coeffs)
    comp = t.complement
    return t.base.basis @ t.coeffs.T @ comp.basis.T + t.base.projector


def idempotent_to_tangent(Q, cfg: ToleranceConfig | None = None) -> TangentVector:
    """``Q -> (Q(K), P_{Q(K)^perp} Q^* |_{Q(K)})``."""
    Q = check_idempotent(Q, cfg)
    _require_real(Q)
    E = range_of(Q, cfg)
    comp = orth_complement(E)
    return TangentVector(E, comp.basis.T @ Q.T @ E.basis)


def tangent_embed(t: TangentVector, cfg: ToleranceConfig | None = None):
    """``(E, T) -> (E, T P_E)``; the second entry lies in L^{E^perp}(K, E^perp)."""
    _require_real(t.base.basis, t.coeffs)
    S = t.ambient()
    check_nilpotent(S, t.complement, cfg)
    return t.base, S


def psi_derivative(E0: Subspace, E1: Subspace, T: TangentVector, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Derivative at ``s = 0`` of ``s -> p_{E0,E0^perp}(q_{E1,E1^perp}(sT))``.

    Returned in ambient form, i.e. composed with the orthogonal projection
    onto ``E0``:

        (P_{E1} - R + P_{E0^perp}) T P_{E1} (I + R) P_{E0},   R = pi_{E0,E0^perp}(E1).
    """
    if not same_subspace(T.base, E1, cfg):
        raise FiberMismatch("tangent vector is not based at E1")
    comp0 = orth_complement(E0)
    require_complement(E1, comp0, cfg, "E1 against E0^perp")
    R = pi_chart(E0, comp0, E1, cfg).mat
    P0, P1 = E0.projector, E1.projector
    eye = np.eye(E0.ambient)
    return (P1 - R + comp0.projector) @ T.ambient() @ (eye + R) @ P0


def chart_composition(E0: Subspace, T: TangentVector, s: float, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """``p_{E0,E0^perp}(q_{E1,E1^perp}(sT))`` in ambient form (zero on ``E0^perp``)."""
    E1 = T.base
    step = OperatorBetween(E1, T.complement, s * T.coeffs)
    moved = q_chart(E1, T.complement, step, cfg)
    return p_chart(E0, orth_complement(E0), moved, cfg).ambient()


def psi_derivative_fd(E0: Subspace, T: TangentVector, h: float = FD_STEP, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Central finite difference of :func:`chart_composition` at ``s = 0``."""
    return (chart_composition(E0, T, h, cfg) - chart_composition(E0, T, -h, cfg)) / (2.0 * h)


def psi_quotient(E0: Subspace, T: TangentVector, h: float = FD_STEP) -> np.ndarray:
    """The same central difference quotient as :func:`psi_derivative_fd`, without cancellation.

    With ``M(s) = (I + s T) B_{E1}``, ``X = B_{E0}^T M`` and ``Y = B_{E0^perp}^T M``
    the composition is ``Y X^{-1}``, and the resolvent identity gives

        (Y(h) X(h)^{-1} - Y(-h) X(-h)^{-1}) / 2h = (Y1 - Y(h) X(h)^{-1} X1) X(-h)^{-1}

    with ``X1, Y1`` the coefficients of ``s``. Rounding then stays near
    ``eps`` instead of ``eps / h``, so the ``h**2`` truncation term is visible
    at small steps.
    """
    _require_real(E0.basis, T.base.basis, T.coeffs)
    B0, B0p = E0.basis, orth_complement(E0).basis
    M0 = T.base.basis
    M1 = T.ambient() @ M0
    X0, X1 = B0.T @ M0, B0.T @ M1
    Y0, Y1 = B0p.T @ M0, B0p.T @ M1
    Xp, Xm = X0 + h * X1, X0 - h * X1
    Yp = Y0 + h * Y1
    inner = Y1 - Yp @ kernel.solve(Xp, X1)
    C = kernel.solve(Xm.T, inner.T).T
    return B0p @ C @ B0.T


def nu_chart(E0: Subspace, t: TangentVector, cfg: ToleranceConfig | None = None) -> ChartCoords:
    """Tangent-bundle chart ``(pi_{E0,E0^perp}(E1), Psi(T) P_{E0})``."""
    comp0 = orth_complement(E0)
    R = pi_chart(E0, comp0, t.base, cfg).mat
    return ChartCoords(E0, comp0, R, psi_derivative(E0, t.base, t, cfg))


def nu_chart_inv(c: ChartCoords, cfg: ToleranceConfig | None = None) -> TangentVector:
    """``(I + R + P_{E0} - P_{E1}) S (I - R)`` restricted to ``E1 = (I + R)(E0)``."""
    cfg = resolve(cfg)
    E0 = c.E0
    comp0 = orth_complement(E0)
    if not same_subspace(comp0, c.F0, cfg):
        raise CoordOutsideChart("tangent chart must be anchored at (E0, E0^perp)")
    R = check_nilpotent(c.R, comp0, cfg)
    S = check_nilpotent(c.S, comp0, cfg)
    E1 = pi_chart_inv(E0, comp0, R, cfg)
    eye = np.eye(E0.ambient)
    T = (eye + R + E0.projector - E1.projector) @ S @ (eye - R) @ E1.projector
    return tangent_from_ambient(E1, T)


@dataclass(frozen=True, eq=False)
class FiberOperator:
    """An element ``S`` of L^E(K, E): range inside ``base`` and ``S(base) = 0``."""

    base: Subspace
    mat: np.ndarray

    def __post_init__(self):
        try:
            check_nilpotent(self.mat, self.base)
        except CoordOutsideChart as exc:
            raise FiberMismatch(f"operator is not in the fiber over its base: {exc}") from exc


def _same_base(s1: FiberOperator, s2: FiberOperator, cfg):
    if not same_subspace(s1.base, s2.base, cfg):
        raise FiberMismatch("operators lie over different subspaces")


def operator_metric(s1: FiberOperator, s2: FiberOperator, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Operator-valued metric ``S T^*``; lies in ``P_E L(K) P_E``."""
    _same_base(s1, s2, cfg)
    return s1.mat @ adjoint(s2.mat)


def trace_metric(s1: FiberOperator, s2: FiberOperator, cfg: ToleranceConfig | None = None):
    """``Tr(S T^*)``."""
    return np.trace(operator_metric(s1, s2, cfg))


def pseudo_metric(s1: FiberOperator, s2: FiberOperator, x, cfg: ToleranceConfig | None = None):
    """``<S T^* x, x>``."""
    x = np.asarray(x).reshape(-1)
    return np.vdot(x, operator_metric(s1, s2, cfg) @ x)
