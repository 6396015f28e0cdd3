"""The idempotent manifold of K^n fibred over the Grassmannian.

Idempotents are plain ``n x n`` arrays; :func:`check_idempotent` validates
them. The bundle projection sends an idempotent to its range
(:func:`range_of`). Local trivializations conjugate by

    xi(E) = Q^{F0}_E + Q^{E0}_{F0},      xi(E)^{-1} = 2I - xi(E),

and the algebraic chart ``mu_chart`` on the total space has the polynomial
inverse ``(I + R)(S + Q^{F0}_{E0})(I - R)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernel
from .errors import (
    ComplementRequired,
    CoordOutsideChart,
    FiberMismatch,
    NotIdempotent,
    NotInvolution,
)
from .grassmann import (
    NilpotentCoord,
    Subspace,
    check_nilpotent,
    kernel_subspace,
    oblique_projector,
    pi_chart,
    require_complement,
    same_subspace,
    span_of,
)
from .kernel import ToleranceConfig, as_matrix, opnorm, resolve


@dataclass(frozen=True, eq=False)
class ChartCoords:
    """Chart coordinates ``(R, S)`` together with the anchor pair they refer to."""

    E0: Subspace
    F0: Subspace
    R: np.ndarray
    S: np.ndarray


def idempotency_residual(Q) -> float:
    Q = np.asarray(Q)
    return opnorm(Q @ Q - Q)


def check_idempotent(Q, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Validate a non-zero, non-identity idempotent; returns it as an array.

    The tolerance is relative, ``residual_tol * (1 + ||Q||^2)``, because
    oblique projectors become large as their range and kernel approach each
    other.
    """
    cfg = resolve(cfg)
    Q = as_matrix(Q)
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise NotIdempotent(f"expected a square matrix, got {Q.shape}")
    norm = opnorm(Q)
    res = idempotency_residual(Q)
    if res > cfg.residual_tol * (1.0 + norm**2):
        raise NotIdempotent(f"||Q^2 - Q|| = {res:.3e} is too large")
    r = kernel.rank_of(Q, cfg)
    if r == 0 or r == n:
        raise NotIdempotent("the zero and identity operators are excluded")
    return Q


def range_of(Q, cfg: ToleranceConfig | None = None) -> Subspace:
    """The bundle projection: the range of ``Q``."""
    return span_of(check_idempotent(Q, cfg), cfg)


def kernel_of(Q, cfg: ToleranceConfig | None = None) -> Subspace:
    Q = check_idempotent(Q, cfg)
    return span_of(np.eye(Q.shape[0], dtype=Q.dtype) - Q, cfg)


def _require_fiber(Q, E: Subspace, cfg, what="idempotent") -> np.ndarray:
    Q = check_idempotent(Q, cfg)
    if not same_subspace(range_of(Q, cfg), E, cfg):
        raise FiberMismatch(f"{what} does not lie in the fiber over the given subspace")
    return Q


def fiber_difference(Q1, Q2, shared: str = "range", cfg: ToleranceConfig | None = None) -> NilpotentCoord:
    """``Q1 - Q2`` for idempotents sharing their range (or their kernel).

    Idempotents with common range ``E`` differ by an element of L^E(K^n, E);
    with common kernel ``F`` by an element of L^F(K^n, F).
    """
    if shared not in ("range", "kernel"):
        raise ValueError("shared must be 'range' or 'kernel'")
    of = range_of if shared == "range" else kernel_of
    A, B = of(Q1, cfg), of(Q2, cfg)
    if not same_subspace(A, B, cfg):
        raise FiberMismatch(f"idempotents do not share their {shared}")
    D = as_matrix(Q1) - as_matrix(Q2)
    try:
        check_nilpotent(D, A, cfg)
    except CoordOutsideChart as exc:
        raise FiberMismatch(str(exc)) from exc
    return NilpotentCoord(D, A)


def xi(E0: Subspace, F0: Subspace, E: Subspace, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """``Q^{F0}_E + Q^{E0}_{F0}``; an invertible operator carrying ``E0`` onto ``E``."""
    require_complement(E0, F0, cfg, "xi anchors")
    require_complement(E, F0, cfg, "xi target")
    return oblique_projector(E, F0, cfg) + oblique_projector(F0, E0, cfg)


def xi_inv(E0: Subspace, F0: Subspace, E: Subspace, cfg: ToleranceConfig | None = None) -> np.ndarray:
    X = xi(E0, F0, E, cfg)
    return 2.0 * np.eye(X.shape[0], dtype=X.dtype) - X


def conjugate(W, Q, W_inv=None, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """``W Q W^{-1}``."""
    W = as_matrix(W)
    if W_inv is None:
        W_inv = kernel.inverse(W, cfg)
    return W @ as_matrix(Q) @ W_inv


def theta_trivialize(E0: Subspace, F0: Subspace, E: Subspace, Q, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Carry ``Q`` from the fiber over ``E0`` to the fiber over ``E`` by conjugation with ``xi(E)``."""
    Q = _require_fiber(Q, E0, cfg)
    X = xi(E0, F0, E, cfg)
    return X @ Q @ (2.0 * np.eye(X.shape[0], dtype=X.dtype) - X)


def theta_untrivialize(E0: Subspace, F0: Subspace, Qp, cfg: ToleranceConfig | None = None):
    """Inverse of :func:`theta_trivialize`: returns ``(range(Qp), Q0)`` with ``Q0`` over ``E0``."""
    Qp = check_idempotent(Qp, cfg)
    E = range_of(Qp, cfg)
    require_complement(E, F0, cfg, "range of Qp against F0")
    X = xi(E0, F0, E, cfg)
    return E, (2.0 * np.eye(X.shape[0], dtype=X.dtype) - X) @ Qp @ X


def mu_chart(E0: Subspace, F0: Subspace, Q, cfg: ToleranceConfig | None = None) -> ChartCoords:
    """Chart ``Q -> (Q^{F0}_E - Q^{F0}_{E0}, Q^{F0}_{E0} Q Q^{E0}_{F0})`` with ``E = range(Q)``."""
    require_complement(E0, F0, cfg, "mu_chart anchors")
    Q = check_idempotent(Q, cfg)
    E = range_of(Q, cfg)
    R = pi_chart(E0, F0, E, cfg).mat
    S = oblique_projector(E0, F0, cfg) @ Q @ oblique_projector(F0, E0, cfg)
    return ChartCoords(E0, F0, R, S)


def _chart_parts(c: ChartCoords, cfg):
    R = check_nilpotent(c.R, c.F0, cfg)
    S = check_nilpotent(c.S, c.E0, cfg)
    P0 = oblique_projector(c.E0, c.F0, cfg)
    return R, S, P0


def theta_polynomial(R, S, P0) -> np.ndarray:
    """Expanded form ``S - SR + P0 + RS - RSR + R``."""
    return S - S @ R + P0 + R @ S - R @ S @ R + R


def mu_chart_inv(c: ChartCoords, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """``(I + R)(S + Q^{F0}_{E0})(I - R)``, cross-checked against the expanded polynomial."""
    cfg = resolve(cfg)
    require_complement(c.E0, c.F0, cfg, "chart anchors")
    R, S, P0 = _chart_parts(c, cfg)
    eye = np.eye(R.shape[0], dtype=np.result_type(R, S, P0))
    factored = (eye + R) @ (S + P0) @ (eye - R)
    expanded = theta_polynomial(R, S, P0)
    # Rounding in either form is bounded by eps * ||I+R|| ||S+P0|| ||I-R||.
    scale = (1.0 + opnorm(R)) ** 2 * (1.0 + opnorm(S) + opnorm(P0))
    if opnorm(factored - expanded) > cfg.residual_tol * scale:
        raise CoordOutsideChart("factored and expanded chart inverses disagree")
    return factored


def transition(E0, F0, E1, F1, E: Subspace, Q, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Transition between the trivializations anchored at ``(E0, F0)`` and ``(E1, F1)`` over ``E``.

    Evaluates ``(I - pi1(E))(I + pi0(E)) Q (I - pi0(E))(I + pi1(E))``; the
    result lies in the fiber over ``E1``.
    """
    Q = _require_fiber(Q, E0, cfg)
    require_complement(E1, F1, cfg, "second anchors")
    P0 = pi_chart(E0, F0, E, cfg).mat
    P1 = pi_chart(E1, F1, E, cfg).mat
    eye = np.eye(Q.shape[0], dtype=np.result_type(Q, P0, P1))
    return (eye - P1) @ (eye + P0) @ Q @ (eye - P0) @ (eye + P1)


def ad_right_inverse(E0: Subspace, F0: Subspace, Q, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Invertible ``W`` with ``W Q^{F0}_{E0} W^{-1} = Q``.

    ``W = (Q^E_F + Q^{F0}_E)(Q^{F0}_E + Q^{E0}_{F0})`` where ``E, F`` are the
    range and kernel of ``Q``; it maps ``E0`` onto ``E`` and ``F0`` onto ``F``.
    """
    require_complement(E0, F0, cfg, "anchors")
    Q = check_idempotent(Q, cfg)
    E, F = range_of(Q, cfg), kernel_of(Q, cfg)
    require_complement(E, F0, cfg, "range of Q against F0")
    QE_F0 = oblique_projector(E, F0, cfg)
    return (oblique_projector(F, E, cfg) + QE_F0) @ (QE_F0 + oblique_projector(F0, E0, cfg))


def delta_projector(E: Subspace, F: Subspace, T, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """``Q^F_E T Q^E_F``: the projection of operator space onto L^E(K^n, E)."""
    return oblique_projector(E, F, cfg) @ as_matrix(T) @ oblique_projector(F, E, cfg)


def to_involution(Q, cfg: ToleranceConfig | None = None) -> np.ndarray:
    Q = check_idempotent(Q, cfg)
    return 2.0 * Q - np.eye(Q.shape[0], dtype=Q.dtype)


def check_involution(V, cfg: ToleranceConfig | None = None) -> np.ndarray:
    cfg = resolve(cfg)
    V = as_matrix(V)
    n = V.shape[0]
    if V.shape != (n, n):
        raise NotInvolution(f"expected a square matrix, got {V.shape}")
    eye = np.eye(n, dtype=V.dtype)
    if opnorm(V @ V - eye) > cfg.residual_tol * (1.0 + opnorm(V) ** 2):
        raise NotInvolution("V^2 differs from the identity")
    for sign in (1.0, -1.0):
        if opnorm(V - sign * eye) <= cfg.residual_tol:
            raise NotInvolution("the involutions I and -I are excluded")
    return V


def from_involution(V, cfg: ToleranceConfig | None = None) -> np.ndarray:
    V = check_involution(V, cfg)
    return (V + np.eye(V.shape[0], dtype=V.dtype)) / 2.0


def inv_chart(E0: Subspace, F0: Subspace, V, cfg: ToleranceConfig | None = None) -> ChartCoords:
    """Chart on involutions: ``(Q^{F0}_{(I+V)K} - Q^{F0}_{E0}, Q^{F0}_{E0} V Q^{E0}_{F0} / 2)``."""
    require_complement(E0, F0, cfg, "anchors")
    V = check_involution(V, cfg)
    eye = np.eye(V.shape[0], dtype=V.dtype)
    fixed = span_of(eye + V, cfg)
    try:
        R = pi_chart(E0, F0, fixed, cfg).mat
    except ComplementRequired as exc:
        raise ComplementRequired("fixed space of V is not complementary to F0") from exc
    S = oblique_projector(E0, F0, cfg) @ V @ oblique_projector(F0, E0, cfg) / 2.0
    return ChartCoords(E0, F0, R, S)


def inv_chart_inv(c: ChartCoords, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """``2(RS + R - RSR + S - SR) + Q^{F0}_{E0} - Q^{E0}_{F0}``."""
    require_complement(c.E0, c.F0, cfg, "chart anchors")
    R, S, P0 = _chart_parts(c, cfg)
    return 2.0 * (R @ S + R - R @ S @ R + S - S @ R) + P0 - oblique_projector(c.F0, c.E0, cfg)


def pair_chart(E0: Subspace, F0: Subspace, E: Subspace, F: Subspace, cfg: ToleranceConfig | None = None) -> ChartCoords:
    """Chart on complementary pairs, through ``(E, F) -> Q^F_E``."""
    return mu_chart(E0, F0, oblique_projector(E, F, cfg), cfg)


def pair_chart_inv(c: ChartCoords, cfg: ToleranceConfig | None = None):
    """``((I+R)(S+Q^{F0}_{E0})(K^n), ker (S+Q^{F0}_{E0})(I-R))``."""
    require_complement(c.E0, c.F0, cfg, "chart anchors")
    R, S, P0 = _chart_parts(c, cfg)
    eye = np.eye(R.shape[0], dtype=np.result_type(R, S, P0))
    E = span_of((eye + R) @ (S + P0), cfg)
    F = kernel_subspace((S + P0) @ (eye - R), cfg)
    return E, F


def same_fiber(x, y, cfg: ToleranceConfig | None = None) -> Subspace:
    E = range_of(x, cfg)
    if not same_subspace(E, range_of(y, cfg), cfg):
        raise FiberMismatch("idempotents lie in different fibers")
    return E


def fiber_add(x, y, z, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Fiber addition with zero element ``z``: ``x + y - z``."""
    same_fiber(x, y, cfg)
    same_fiber(x, z, cfg)
    return as_matrix(x) + as_matrix(y) - as_matrix(z)


def fiber_scale(a, x, z, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Fiber scalar multiplication with zero element ``z``: ``a x + (1 - a) z``."""
    same_fiber(x, z, cfg)
    return a * as_matrix(x) + (1 - a) * as_matrix(z)


def orthogonal_section(E: Subspace) -> np.ndarray:
    """The cross section ``E -> P_E`` (orthogonal projector)."""
    return E.projector


Section = Callable[[Subspace], np.ndarray]


def _section_coord(E0, F0, E, section: Section, cfg) -> np.ndarray:
    # Pull section(E) back into the fiber over E0.
    X = xi(E0, F0, E, cfg)
    return (2.0 * np.eye(X.shape[0], dtype=X.dtype) - X) @ as_matrix(section(E)) @ X


def psi_banachize(E0, F0, E: Subspace, y, section: Section = orthogonal_section, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Fiberwise *linear* trivialization built from a global cross section.

    The fiber over ``E0`` is a vector space with zero ``section(E0)``; the
    fiber over ``E`` with zero ``section(E)``. Sends ``(E, section(E0))`` to
    ``section(E)``.
    """
    require_complement(E0, F0, cfg, "anchors")
    y = _require_fiber(y, E0, cfg)
    zero = as_matrix(section(E0))
    shifted = y + _section_coord(E0, F0, E, section, cfg) - zero
    X = xi(E0, F0, E, cfg)
    return X @ shifted @ (2.0 * np.eye(X.shape[0], dtype=X.dtype) - X)


def psi_banachize_inv(E0, F0, x, section: Section = orthogonal_section, cfg: ToleranceConfig | None = None):
    """Inverse of :func:`psi_banachize`: returns ``(range(x), y)`` with ``y`` over ``E0``."""
    require_complement(E0, F0, cfg, "anchors")
    E, y0 = theta_untrivialize(E0, F0, x, cfg)
    zero = as_matrix(section(E0))
    return E, y0 + zero - _section_coord(E0, F0, E, section, cfg)
