"""Batch verification of the library's invariants on random instances.

Each check maps a random instance to a non-negative residual; a check passes
when the largest residual over all instances is at most its threshold.

Random instances use independent standard Gaussian entries. Every
complementary pair (and every invertible matrix) is redrawn until its
condition number is at most :data:`VERIFY_COND_CAP`; the library itself
accepts anything up to ``ToleranceConfig.cond_cap``, but the residual
thresholds below are absolute and rounding grows like ``eps * cond**2``.
"""

from __future__ import annotations

import datetime as _dt
import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import bundle as bd
from . import grassmann as gm
from . import kernel, paths, sampling, tangent
from .errors import GrassbundleError, RankMismatch
from .kernel import ToleranceConfig, adjoint, opnorm

SCHEMA = "verify-report/1"
SUITES = ("charts", "bundle", "tangent", "paths")
VERIFY_COND_CAP = 100.0
FD_STEP = 1e-5
FD_ORDER_STEPS = (1e-4, 5e-5)
FD_ORDER_RANGE = (3.5, 4.5)


@dataclass
class Context:
    cfg: ToleranceConfig
    gen: ToleranceConfig
    fixture: list = field(default_factory=list)


@dataclass
class Check:
    name: str
    suite: str
    threshold: float
    fn: Callable
    fields: tuple = ("R", "C")
    min_dim: int = 2
    fixed: bool = False


REGISTRY: dict[str, Check] = {}


def check(suite, threshold, fields=("R", "C"), min_dim=2, fixed=False):
    def register(fn):
        name = fn.__name__.removeprefix("check_")
        REGISTRY[name] = Check(name, suite, threshold, fn, tuple(fields), min_dim, fixed)
        return fn

    return register


def _rng(seed, name, field_name, salt=0):
    return np.random.default_rng([int(seed), zlib.crc32(name.encode()), "RCa".index(field_name[0]), salt])


def _well_conditioned(rng, n, field_name):
    def draw():
        W = sampling.gaussian(rng, n, n, field_name)
        return W if kernel.condition_number(W) <= VERIFY_COND_CAP else None

    return sampling._retry(draw)


def _anchors(rng, n, field_name, ctx, k=None):
    k = sampling.random_rank(rng, n) if k is None else k
    return sampling.random_pair(rng, n, k, field_name, ctx.gen)


def _scalar(rng, field_name):
    a = rng.uniform(-1.0, 2.0)
    if field_name == "C":
        a = a + 1j * rng.uniform(-1.0, 1.0)
    return a


# --------------------------------------------------------------------------
# closed-form fixtures on C^2

C2_LAMBDAS = (1.0, -2.0, 0.5 + 0.5j)
C2_ALPHAS = (0.0, 1.0, 2.0 + 1.0j)


def _c2_line(lam):
    return gm.make_subspace(np.array([[1.0], [lam]], dtype=complex))


def c2_fixture_errors() -> dict:
    """Absolute error of each closed form for the lines ``E_lambda = span(1, lambda)`` in C^2."""
    M = lambda rows: np.array(rows, dtype=complex)  # noqa: E731
    E0 = gm.make_subspace(M([[1], [0]]))
    Einf = gm.make_subspace(M([[0], [1]]))
    err: dict[str, float] = {}

    def rec(name, got, want):
        e = float(np.max(np.abs(np.asarray(got) - np.asarray(want))))
        err[name] = max(err.get(name, 0.0), e)

    rec("Q^{E_0}_{E_inf}", bd.oblique_projector(Einf, E0), M([[0, 0], [0, 1]]))
    rec("Q^{E_inf}_{E_0}", bd.oblique_projector(E0, Einf), M([[1, 0], [0, 0]]))
    rec("pi_{E_inf,E_0}(E_inf)", gm.pi_chart(Einf, E0, Einf).mat, np.zeros((2, 2)))
    for lam in C2_LAMBDAS:
        El = _c2_line(lam)
        rec("E_lambda basis", El.basis, M([[1], [lam]]) / math.sqrt(1 + abs(lam) ** 2))
        rec("E_lambda complements", 0.0, 0.0 if gm.is_complement(El, Einf) and gm.is_complement(El, E0) else 1.0)
        Q_inf = M([[1, 0], [lam, 0]])
        Q_0 = M([[0, 1 / lam], [0, 1]])
        R0 = M([[0, 0], [lam, 0]])
        Rinf = M([[0, 1 / lam], [0, 0]])
        rec("Q^{E_inf}_{E_lambda}", bd.oblique_projector(El, Einf), Q_inf)
        rec("Q^{E_0}_{E_lambda}", bd.oblique_projector(El, E0), Q_0)
        rec("pi_{E_0,E_inf}(E_lambda)", gm.pi_chart(E0, Einf, El).mat, R0)
        rec("pi_{E_inf,E_0}(E_lambda)", gm.pi_chart(Einf, E0, El).mat, Rinf)
        rec("p_{E_0,E_inf}(E_lambda)", gm.p_chart(E0, Einf, El).coeffs, M([[lam]]))
        rec("pi^{-1}_{E_0,E_inf}", gm.subspace_gap(gm.pi_chart_inv(E0, Einf, R0), El), 0.0)
        rec("Lambda restriction", gm.lambda_restrict(E0, Einf, R0).coeffs, M([[lam]]))
        rec("xi_{E_0,E_inf}(E_lambda)", bd.xi(E0, Einf, El), M([[1, 0], [lam, 1]]))
        rec("theta(E_lambda, Q^{E_inf}_{E_0})", bd.theta_trivialize(E0, Einf, El, M([[1, 0], [0, 0]])), Q_inf)
        for a in C2_ALPHAS:
            Q = M([[1 - a, a / lam], [lam * (1 - a), a]])
            c = bd.mu_chart(E0, Einf, Q)
            rec("mu_{E_0,E_inf} R", c.R, R0)
            rec("mu_{E_0,E_inf} S", c.S, M([[0, a / lam], [0, 0]]))
            rec("mu_{E_0,E_inf}^{-1}", bd.mu_chart_inv(bd.ChartCoords(E0, Einf, R0, M([[0, a / lam], [0, 0]]))), Q)
            c = bd.mu_chart(Einf, E0, Q)
            rec("mu_{E_inf,E_0} R", c.R, Rinf)
            rec("mu_{E_inf,E_0} S", c.S, M([[0, 0], [lam * (1 - a), 0]]))
            rec("mu_{E_inf,E_0}^{-1}", bd.mu_chart_inv(bd.ChartCoords(Einf, E0, Rinf, M([[0, 0], [lam * (1 - a), 0]]))), Q)
            rec("kappa(Q)", gm.subspace_gap(bd.range_of(Q), El), 0.0)
            Ek, Fk = bd.pair_chart_inv(bd.ChartCoords(E0, Einf, R0, M([[0, a / lam], [0, 0]])))
            kern = gm.make_subspace(M([[a], [-lam * (1 - a)]]))
            rec("pair chart inverse", gm.subspace_gap(Ek, El) + gm.subspace_gap(Fk, kern), 0.0)
            # chart change between the two anchor pairs over E_lambda
            Qf = M([[1, a], [0, 0]])
            eye = np.eye(2)
            want = (eye - Rinf) @ (eye + R0) @ Qf @ (eye - R0) @ (eye + Rinf)
            rec("transition over E_lambda", bd.transition(E0, Einf, Einf, E0, El, Qf), want)
    for g in C2_ALPHAS:
        c = bd.mu_chart(E0, Einf, M([[1, g], [0, 0]]))
        rec("mu_{E_0,E_inf} on fiber E_0", np.hstack([c.R, c.S]), np.hstack([np.zeros((2, 2)), M([[0, g], [0, 0]])]))
        c = bd.mu_chart(Einf, E0, M([[0, 0], [g, 1]]))
        rec("mu_{E_inf,E_0} on fiber E_inf", np.hstack([c.R, c.S]), np.hstack([np.zeros((2, 2)), M([[0, 0], [g, 0]])]))
    return err


@check("charts", 1e-12, fields=("C",), fixed=True)
def check_c2_fixtures(rng, n, f, ctx):
    return max(c2_fixture_errors().values())


# --------------------------------------------------------------------------
# numeric kernel and Grassmannian charts


@check("charts", 1e-9)
def check_orthonormalize(rng, n, f, ctx):
    k = sampling.random_rank(rng, n) + 1
    B = sampling.gaussian(rng, n, min(k, n), f)
    Q = kernel.orthonormalize(B)
    unitary = opnorm(adjoint(Q) @ Q - np.eye(Q.shape[1]))
    span = opnorm(B @ np.linalg.pinv(B) - Q @ adjoint(Q))
    R = adjoint(Q) @ B
    diag = np.diagonal(R)
    sign = 0.0 if np.all(diag.real > 0) and np.allclose(diag.imag, 0) else 1.0
    return max(unitary, span, sign)


@check("charts", 1e-9)
def check_solve(rng, n, f, ctx):
    A = _well_conditioned(rng, n, f)
    B = sampling.gaussian(rng, n, 3, f)
    X = kernel.solve(A, B)
    return opnorm(A @ X - B) / (1.0 + opnorm(B))


@check("charts", 0.0)
def check_adjoint(rng, n, f, ctx):
    A = sampling.gaussian(rng, n, n, f)
    B = sampling.gaussian(rng, n, n, f)
    exact = float(np.max(np.abs(kernel.adjoint(kernel.adjoint(A)) - A)))
    product = opnorm(adjoint(A @ B) - adjoint(B) @ adjoint(A))
    # (AB)* = B*A* holds up to rounding in the products.
    return exact + max(0.0, product - 1e-12 * (1 + opnorm(A) * opnorm(B)))


@check("charts", 0.0)
def check_rank(rng, n, f, ctx):
    k = sampling.random_rank(rng, n)
    A = sampling.gaussian(rng, n, k, f) @ sampling.gaussian(rng, k, n, f)
    return float(abs(kernel.rank_of(A) - k) + kernel.rank_of(np.zeros((n, n))))


@check("charts", 1e-8)
def check_q_p_roundtrip(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E1 = sampling.random_transversal(rng, F0, f, ctx.gen)
    T = gm.p_chart(E0, F0, E1)
    back = gm.q_chart(E0, F0, T)
    T2 = gm.OperatorBetween(E0, F0, sampling.gaussian(rng, F0.dim, E0.dim, f))
    again = gm.p_chart(E0, F0, gm.q_chart(E0, F0, T2))
    return max(gm.subspace_gap(back, E1), opnorm(again.coeffs - T2.coeffs))


@check("charts", 1e-8)
def check_pi_roundtrip(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E1 = sampling.random_transversal(rng, F0, f, ctx.gen)
    R = gm.pi_chart(E0, F0, E1)
    R2 = sampling.random_nilpotent(rng, F0, f)
    again = gm.pi_chart(E0, F0, gm.pi_chart_inv(E0, F0, R2)).mat
    return max(gm.subspace_gap(gm.pi_chart_inv(E0, F0, R), E1), opnorm(again - R2))


@check("charts", 1e-9)
def check_p_is_lambda_pi(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E1 = sampling.random_transversal(rng, F0, f, ctx.gen)
    T = gm.p_chart(E0, F0, E1)
    T2 = gm.lambda_restrict(E0, F0, gm.pi_chart(E0, F0, E1))
    back = gm.q_chart(E0, F0, T2)
    return max(opnorm(T.coeffs - T2.coeffs), gm.subspace_gap(back, E1))


@check("charts", 1e-9)
def check_lambda_roundtrip(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    R = sampling.random_nilpotent(rng, F0, f)
    back = gm.lambda_extend(E0, F0, gm.lambda_restrict(E0, F0, R)).mat
    T = gm.OperatorBetween(E0, F0, sampling.gaussian(rng, F0.dim, E0.dim, f))
    again = gm.lambda_restrict(E0, F0, gm.lambda_extend(E0, F0, T)).coeffs
    return max(opnorm(back - R), opnorm(again - T.coeffs))


@check("charts", 1e-9)
def check_pi_antisymmetry(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E1 = sampling.random_transversal(rng, F0, f, ctx.gen)
    return opnorm(gm.pi_chart(E0, F0, E1).mat + gm.pi_chart(E1, F0, E0).mat)


@check("charts", 1e-9)
def check_pi_square_zero(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E1 = sampling.random_transversal(rng, F0, f, ctx.gen)
    R = gm.pi_chart(E0, F0, E1).mat
    eye = np.eye(n)
    return max(opnorm(R @ R) / (1 + opnorm(R) ** 2), opnorm((eye + R) @ (eye - R) - eye) / (1 + opnorm(R) ** 2))


@check("charts", 0.0)
def check_complement_symmetry(rng, n, f, ctx):
    k = sampling.random_rank(rng, n)
    E = sampling.random_subspace(rng, n, k, f)
    F = sampling.random_subspace(rng, n, n - k, f)
    G = sampling.random_subspace(rng, n, k, f)
    mism = float(gm.is_complement(E, F) != gm.is_complement(F, E))
    return mism + float(gm.is_complement(E, E)) + float(gm.is_complement(E, G) and E.dim * 2 != n)


@check("charts", 1e-12)
def check_gap_metric(rng, n, f, ctx):
    k = sampling.random_rank(rng, n)
    E, F, G = (sampling.random_subspace(rng, n, k, f) for _ in range(3))
    tri = max(0.0, gm.subspace_gap(E, G) - gm.subspace_gap(E, F) - gm.subspace_gap(F, G))
    sym = abs(gm.subspace_gap(E, F) - gm.subspace_gap(F, E))
    return tri + sym + gm.subspace_gap(E, E)


# --------------------------------------------------------------------------
# idempotent bundle


@check("bundle", 1e-9)
def check_projector_roundtrip(rng, n, f, ctx):
    E, F = _anchors(rng, n, f, ctx)
    Q = bd.oblique_projector(E, F)
    back = bd.oblique_projector(bd.range_of(Q), bd.kernel_of(Q))
    pair = gm.subspace_gap(bd.range_of(Q), E) + gm.subspace_gap(bd.kernel_of(Q), F)
    return max(opnorm(back - Q), pair)


@check("bundle", 1e-9)
def check_fiber_difference(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    Q1 = bd.oblique_projector(E0, F0)
    Q2 = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    D = bd.fiber_difference(Q1, Q2, "range").mat
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    K = bd.fiber_difference(Q1, bd.oblique_projector(E, F0), "kernel").mat
    return max(opnorm(D @ E0.basis), opnorm(D - E0.projector @ D), opnorm(K @ F0.basis), opnorm(K - F0.projector @ K))


@check("bundle", 1e-9)
def check_xi_inverse(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    X = bd.xi(E0, F0, E)
    moved = gm.span_of(X @ E0.basis)
    return max(opnorm(X @ bd.xi_inv(E0, F0, E) - np.eye(n)), gm.subspace_gap(moved, E), opnorm(bd.xi(E0, F0, E0) - np.eye(n)))


@check("bundle", 1e-9)
def check_kappa_theta(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    Q = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    return gm.subspace_gap(bd.range_of(bd.theta_trivialize(E0, F0, E, Q)), E)


@check("bundle", 1e-8)
def check_theta_affine(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    Q1 = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    Q2 = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    a = _scalar(rng, f)
    lhs = bd.theta_trivialize(E0, F0, E, a * Q1 + (1 - a) * Q2)
    rhs = a * bd.theta_trivialize(E0, F0, E, Q1) + (1 - a) * bd.theta_trivialize(E0, F0, E, Q2)
    return opnorm(lhs - rhs)


@check("bundle", 1e-8)
def check_theta_roundtrip(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    Q = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    E_back, Q_back = bd.theta_untrivialize(E0, F0, bd.theta_trivialize(E0, F0, E, Q))
    Qp = sampling.random_in_fiber(rng, E, f, ctx.gen)
    E2, Q0 = bd.theta_untrivialize(E0, F0, Qp)
    return max(gm.subspace_gap(E_back, E), opnorm(Q_back - Q), opnorm(bd.theta_trivialize(E0, F0, E2, Q0) - Qp))


@check("bundle", 1e-8)
def check_mu_roundtrip(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    Q = sampling.random_in_fiber(rng, E, f, ctx.gen)
    back = bd.mu_chart_inv(bd.mu_chart(E0, F0, Q))
    c = bd.ChartCoords(E0, F0, sampling.random_nilpotent(rng, F0, f), sampling.random_nilpotent(rng, E0, f))
    c2 = bd.mu_chart(E0, F0, bd.mu_chart_inv(c))
    return max(opnorm(back - Q), opnorm(c2.R - c.R), opnorm(c2.S - c.S))


@check("bundle", 1e-9)
def check_mu_forms_agree(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    R = sampling.random_nilpotent(rng, F0, f)
    S = sampling.random_nilpotent(rng, E0, f)
    P0 = bd.oblique_projector(E0, F0)
    eye = np.eye(n)
    factored = (eye + R) @ (S + P0) @ (eye - R)
    Q = bd.mu_chart_inv(bd.ChartCoords(E0, F0, R, S))
    return max(opnorm(factored - bd.theta_polynomial(R, S, P0)), opnorm(Q - factored), bd.idempotency_residual(Q) / (1 + opnorm(Q) ** 2))


@check("bundle", 1e-8)
def check_transition(rng, n, f, ctx):
    k = sampling.random_rank(rng, n)
    E0, F0 = _anchors(rng, n, f, ctx, k)
    E1, F1 = _anchors(rng, n, f, ctx, k)
    E = sampling.random_subspace(rng, n, k, f)
    if not (gm.is_complement(E, F0, ctx.gen) and gm.is_complement(E, F1, ctx.gen)):
        E = E0 if gm.is_complement(E0, F1, ctx.gen) else E1
        if not gm.is_complement(E, F0, ctx.gen):
            return 0.0
    Q = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    direct = bd.transition(E0, F0, E1, F1, E, Q)
    _, two_step = bd.theta_untrivialize(E1, F1, bd.theta_trivialize(E0, F0, E, Q))
    return max(opnorm(direct - two_step), gm.subspace_gap(bd.range_of(direct), E1))


@check("bundle", 1e-9)
def check_ad_right_inverse(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    Q = sampling.random_in_fiber(rng, E, f, ctx.gen)
    W = bd.ad_right_inverse(E0, F0, Q)
    P0 = bd.oblique_projector(E0, F0)
    conj = W @ P0 @ kernel.inverse(W)
    spans = gm.subspace_gap(gm.span_of(W @ E0.basis), E) + gm.subspace_gap(gm.span_of(W @ F0.basis), bd.kernel_of(Q))
    return max(opnorm(conj - Q), spans, opnorm(bd.ad_right_inverse(E0, F0, P0) - np.eye(n)))


@check("bundle", 1e-9)
def check_delta_projector(rng, n, f, ctx):
    E, F = _anchors(rng, n, f, ctx)
    T = sampling.gaussian(rng, n, n, f)
    D = bd.delta_projector(E, F, T)
    DD = bd.delta_projector(E, F, D)
    member = opnorm(D @ E.basis) + opnorm(D - E.projector @ D)
    return max(opnorm(DD - D) / (1 + opnorm(D)), member / (1 + opnorm(D)), opnorm(bd.delta_projector(E, F, np.eye(n))))


@check("bundle", 1e-12)
def check_involution(rng, n, f, ctx):
    E, F = _anchors(rng, n, f, ctx)
    Q = bd.oblique_projector(E, F)
    V = bd.to_involution(Q)
    square = opnorm(V @ V - np.eye(n)) / (1 + opnorm(V) ** 2)
    return max(square * 1e-3, opnorm(bd.from_involution(V) - Q))


@check("bundle", 1e-8)
def check_inv_chart_roundtrip(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    Q = sampling.random_in_fiber(rng, E, f, ctx.gen)
    V = bd.to_involution(Q)
    c = bd.inv_chart(E0, F0, V)
    mu = bd.mu_chart(E0, F0, Q)
    consistency = opnorm(c.R - mu.R) + opnorm(c.S - mu.S)
    c2 = bd.ChartCoords(E0, F0, sampling.random_nilpotent(rng, F0, f), sampling.random_nilpotent(rng, E0, f))
    c3 = bd.inv_chart(E0, F0, bd.inv_chart_inv(c2))
    return max(opnorm(bd.inv_chart_inv(c) - V), consistency, opnorm(c3.R - c2.R) + opnorm(c3.S - c2.S))


@check("bundle", 1e-8)
def check_pair_chart_roundtrip(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    F = sampling.random_complement(rng, E, f, ctx.gen)
    Eb, Fb = bd.pair_chart_inv(bd.pair_chart(E0, F0, E, F))
    c = bd.ChartCoords(E0, F0, sampling.random_nilpotent(rng, F0, f), sampling.random_nilpotent(rng, E0, f))
    E2, F2 = bd.pair_chart_inv(c)
    c2 = bd.pair_chart(E0, F0, E2, F2)
    return max(gm.subspace_gap(Eb, E) + gm.subspace_gap(Fb, F), opnorm(c2.R - c.R) + opnorm(c2.S - c.S))


def quadratic_remainder(rng, n, f, ctx):
    """``(remainder, eps**2 * (2 + eps), fd_error)`` for one random ``(R, S)`` with ``eps <= 0.5``."""
    E0, F0 = _anchors(rng, n, f, ctx)
    R = sampling.random_nilpotent(rng, F0, f)
    S = sampling.random_nilpotent(rng, E0, f)
    eps = rng.uniform(0.0, 0.5)
    share = rng.uniform(0.05, 0.95)
    R = R * (share * eps / max(opnorm(R), 1e-300))
    S = S * ((1 - share) * eps / max(opnorm(S), 1e-300))
    eps = opnorm(R) + opnorm(S)
    P0 = bd.oblique_projector(E0, F0)
    theta = lambda r, s: bd.mu_chart_inv(bd.ChartCoords(E0, F0, r, s))  # noqa: E731
    remainder = opnorm(theta(R, S) - P0 - (R + S))
    h = FD_STEP
    jac = (theta(h * R, h * S) - theta(-h * R, -h * S)) / (2 * h)
    return remainder, eps**2 * (2 + eps), opnorm(jac - (R + S))


@check("bundle", 0.0)
def check_quadratic_remainder(rng, n, f, ctx):
    rem, bound, _ = quadratic_remainder(rng, n, f, ctx)
    return max(0.0, rem - bound)


@check("bundle", 1e-6)
def check_chart_derivative(rng, n, f, ctx):
    return quadratic_remainder(rng, n, f, ctx)[2]


@check("bundle", 1e-9)
def check_fiber_vector_space(rng, n, f, ctx):
    E, F = _anchors(rng, n, f, ctx)
    z, x, y, w = (sampling.random_in_fiber(rng, E, f, ctx.gen) for _ in range(4))
    a, b = _scalar(rng, f), _scalar(rng, f)
    add = lambda p, q: bd.fiber_add(p, q, z)  # noqa: E731
    scale = lambda c, p: bd.fiber_scale(c, p, z)  # noqa: E731
    res = [
        opnorm(add(add(x, y), w) - add(x, add(y, w))),
        opnorm(add(x, y) - add(y, x)),
        opnorm(add(x, z) - x),
        opnorm(add(x, scale(-1, x)) - z),
        opnorm(scale(a, add(x, y)) - add(scale(a, x), scale(a, y))),
        opnorm(scale(a + b, x) - add(scale(a, x), scale(b, x))),
        opnorm(scale(a * b, x) - scale(a, scale(b, x))),
        opnorm(scale(0, x) - z),
        opnorm(add(z, z) - z),
        gm.subspace_gap(bd.range_of(add(x, y)), E),
    ]
    return max(res) / (1 + max(opnorm(m) for m in (x, y, z, w)))


@check("bundle", 1e-10)
def check_psi_banachize(rng, n, f, ctx):
    E0, F0 = _anchors(rng, n, f, ctx)
    E = sampling.random_transversal(rng, F0, f, ctx.gen)
    y1 = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    y2 = sampling.random_in_fiber(rng, E0, f, ctx.gen)
    x = bd.psi_banachize(E0, F0, E, y1)
    E_back, y_back = bd.psi_banachize_inv(E0, F0, x)
    zero0, zeroE = E0.projector, E.projector
    lin = bd.psi_banachize(E0, F0, E, y1 + y2 - zero0) - (x + bd.psi_banachize(E0, F0, E, y2) - zeroE)
    at_zero = bd.psi_banachize(E0, F0, E, zero0) - zeroE
    # xi is a sum of two oblique projectors; its condition number is not capped by the sampling
    amplification = opnorm(bd.xi(E0, F0, E)) * opnorm(bd.xi_inv(E0, F0, E))
    res = max(gm.subspace_gap(bd.range_of(x), E), gm.subspace_gap(E_back, E), opnorm(y_back - y1), opnorm(lin), opnorm(at_zero))
    return res / amplification


@check("bundle", 0.0, fields=("any",), fixed=True)
def check_fixture_idempotents(rng, n, f, ctx):
    """Idempotents supplied with ``--fixture``: validation plus range/kernel roundtrip."""
    worst = 0.0
    for Q in ctx.fixture:
        try:
            back = bd.oblique_projector(bd.range_of(Q, ctx.cfg), bd.kernel_of(Q, ctx.cfg), ctx.cfg)
        except GrassbundleError:
            return math.inf
        worst = max(worst, max(0.0, opnorm(back - Q) - ctx.cfg.residual_tol * (1 + opnorm(Q))))
    return worst


# --------------------------------------------------------------------------
# tangent bundle and metrics


@check("tangent", 1e-9, fields=("R", "C"))
def check_orth_projector(rng, n, f, ctx):
    E = sampling.random_subspace(rng, n, sampling.random_rank(rng, n), f)
    P = tangent.orth_projector(E)
    comp = tangent.orth_complement(E)
    return max(opnorm(P - adjoint(P)), opnorm(P @ P - P), opnorm(adjoint(comp.basis) @ E.basis), gm.subspace_gap(bd.range_of(P), E))


@check("tangent", 1e-9, fields=("R",))
def check_tangent_roundtrip(rng, n, f, ctx):
    t = sampling.random_tangent(rng, n, sampling.random_rank(rng, n))
    Q = tangent.tangent_to_idempotent(t)
    t_back = tangent.idempotent_to_tangent(Q)
    E, F = _anchors(rng, n, f, ctx)
    Q2 = bd.oblique_projector(E, F)
    Q2_back = tangent.tangent_to_idempotent(tangent.idempotent_to_tangent(Q2))
    return max(
        gm.subspace_gap(t_back.base, t.base),
        opnorm(t_back.ambient() - t.ambient()),
        opnorm(Q2_back - Q2),
        gm.subspace_gap(bd.range_of(Q), t.base),
    )


@check("tangent", 1e-9, fields=("R",))
def check_tangent_affine(rng, n, f, ctx):
    k = sampling.random_rank(rng, n)
    t1 = sampling.random_tangent(rng, n, k)
    t2 = tangent.TangentVector(t1.base, rng.standard_normal(t1.coeffs.shape))
    a = rng.uniform(-1.0, 2.0)
    mix = tangent.TangentVector(t1.base, a * t1.coeffs + (1 - a) * t2.coeffs)
    lhs = tangent.tangent_to_idempotent(mix)
    rhs = a * tangent.tangent_to_idempotent(t1) + (1 - a) * tangent.tangent_to_idempotent(t2)
    return opnorm(lhs - rhs)


def _tangent_instance(rng, n, ctx):
    k = sampling.random_rank(rng, n)
    E0 = sampling.random_subspace(rng, n, k)
    comp0 = tangent.orth_complement(E0)
    E1 = sampling.random_transversal(rng, comp0, "R", ctx.gen)
    return E0, tangent.TangentVector(E1, rng.standard_normal((n - k, k)))


def psi_order_ratio(rng, n, ctx):
    """``(d(1e-4), d(5e-5))``: distances from the closed-form derivative to the difference quotients."""
    E0, T = _tangent_instance(rng, n, ctx)
    closed = tangent.psi_derivative(E0, T.base, T)
    return tuple(opnorm(closed - tangent.psi_quotient(E0, T, h)) for h in FD_ORDER_STEPS)


@check("tangent", 1e-8, fields=("R",))
def check_psi_derivative(rng, n, f, ctx):
    # central-difference truncation grows with the size of the chart values
    E0, T = _tangent_instance(rng, n, ctx)
    closed = tangent.psi_derivative(E0, T.base, T)
    return opnorm(closed - tangent.psi_derivative_fd(E0, T, FD_STEP)) / (1 + opnorm(closed)) ** 3


@check("tangent", 1e-9, fields=("R",))
def check_psi_quotient(rng, n, f, ctx):
    E0, T = _tangent_instance(rng, n, ctx)
    scale = (1 + opnorm(tangent.psi_derivative(E0, T.base, T))) ** 2
    return opnorm(tangent.psi_quotient(E0, T, 1e-4) - tangent.psi_derivative_fd(E0, T, 1e-4)) / scale


@check("tangent", 0.0, fields=("R",))
def check_psi_derivative_order(rng, n, f, ctx):
    d1, d2 = psi_order_ratio(rng, n, ctx)
    ratio = d1 / d2
    lo, hi = FD_ORDER_RANGE
    return max(0.0, lo - ratio, ratio - hi)


@check("tangent", 1e-9, fields=("R",))
def check_psi_linear(rng, n, f, ctx):
    E0, T1 = _tangent_instance(rng, n, ctx)
    T2 = tangent.TangentVector(T1.base, rng.standard_normal(T1.coeffs.shape))
    a, b = rng.standard_normal(2)
    mix = tangent.TangentVector(T1.base, a * T1.coeffs + b * T2.coeffs)
    lhs = tangent.psi_derivative(E0, T1.base, mix)
    rhs = a * tangent.psi_derivative(E0, T1.base, T1) + b * tangent.psi_derivative(E0, T1.base, T2)
    return opnorm(lhs - rhs)


@check("tangent", 1e-8, fields=("R",))
def check_nu_roundtrip(rng, n, f, ctx):
    E0, T = _tangent_instance(rng, n, ctx)
    c = tangent.nu_chart(E0, T)
    back = tangent.nu_chart_inv(c)
    comp0 = tangent.orth_complement(E0)
    c2 = bd.ChartCoords(E0, comp0, c.R, sampling.random_nilpotent(rng, comp0, "R"))
    c3 = tangent.nu_chart(E0, tangent.nu_chart_inv(c2))
    at_base = tangent.TangentVector(E0, rng.standard_normal((n - E0.dim, E0.dim)))
    c0 = tangent.nu_chart(E0, at_base)
    return max(
        gm.subspace_gap(back.base, T.base) + opnorm(back.ambient() - T.ambient()),
        opnorm(c3.R - c2.R) + opnorm(c3.S - c2.S),
        opnorm(c0.R) + opnorm(c0.S - at_base.ambient()),
    )


@check("tangent", 1e-12, fields=("R",))
def check_tangent_embed(rng, n, f, ctx):
    k = sampling.random_rank(rng, n)
    t1 = sampling.random_tangent(rng, n, k)
    t2 = tangent.TangentVector(t1.base, rng.standard_normal(t1.coeffs.shape))
    a, b = rng.standard_normal(2)
    _, S1 = tangent.tangent_embed(t1)
    _, S2 = tangent.tangent_embed(t2)
    _, S = tangent.tangent_embed(tangent.TangentVector(t1.base, a * t1.coeffs + b * t2.coeffs))
    comp = t1.complement
    return max(opnorm(S - a * S1 - b * S2), opnorm(S @ comp.basis), opnorm(S - comp.projector @ S))


def _fiber_operator(rng, E, f, unit=True):
    S = sampling.random_nilpotent(rng, E, f)
    if unit:
        S = S / opnorm(S)
    return tangent.FiberOperator(E, S)


@check("tangent", 0.0)
def check_trace_metric_pd(rng, n, f, ctx):
    E = sampling.random_subspace(rng, n, sampling.random_rank(rng, n), f)
    s = _fiber_operator(rng, E, f)
    value = complex(tangent.trace_metric(s, s))
    return max(0.0, 1e-14 - value.real) + max(0.0, abs(value.imag) - 1e-12 * value.real)


@check("tangent", 1e-10)
def check_operator_metric_corner(rng, n, f, ctx):
    E = sampling.random_subspace(rng, n, sampling.random_rank(rng, n), f)
    s1, s2 = _fiber_operator(rng, E, f), _fiber_operator(rng, E, f)
    M = tangent.operator_metric(s1, s2)
    P = E.projector
    return opnorm(M - P @ M @ P)


@check("tangent", 1e-10)
def check_metric_forms(rng, n, f, ctx):
    E = sampling.random_subspace(rng, n, sampling.random_rank(rng, n), f)
    s1, s2, s3 = (_fiber_operator(rng, E, f) for _ in range(3))
    a = _scalar(rng, f)
    mix = tangent.FiberOperator(E, a * s1.mat + s3.mat)
    herm = abs(tangent.trace_metric(s1, s2) - np.conj(tangent.trace_metric(s2, s1)))
    lin = abs(tangent.trace_metric(mix, s2) - (a * tangent.trace_metric(s1, s2) + tangent.trace_metric(s3, s2)))
    x = sampling.gaussian(rng, n, 1, f)[:, 0]
    pseudo = tangent.pseudo_metric(s1, s1, x)
    basis_sum = sum(tangent.pseudo_metric(s1, s1, e) for e in np.eye(n))
    separating = abs(basis_sum - tangent.trace_metric(s1, s1))
    return herm + lin + max(0.0, -pseudo.real) + abs(pseudo.imag) + separating


# --------------------------------------------------------------------------
# homogeneous spaces and paths


def random_equal_rank_pair(rng, n, f, ctx, k=None):
    k = sampling.random_rank(rng, n) if k is None else k
    return (sampling.random_idempotent(rng, n, k, f, ctx.gen), sampling.random_idempotent(rng, n, k, f, ctx.gen))


def path_residuals(path: paths.IdempotentPath, Q1, Q2):
    """``(max idempotency residual, rank changes, endpoint error, rotation endpoint error)``."""
    res = max(path.residuals)
    rank_changes = float(len(set(path.ranks)) - 1)
    ends = max(opnorm(path.samples[0] - Q1), opnorm(path.samples[-1] - Q2))
    rot = 0.0
    for leg in path.legs:
        if leg.meta is None:
            continue
        Q0, target = leg.meta["Q0"], leg.meta["target"]
        W0, W0i = paths.rotation_matrix(leg.meta["frame"], leg.meta["sizes"], 0.0)
        W1, W1i = paths.rotation_matrix(leg.meta["frame"], leg.meta["sizes"], np.pi / 2)
        rot = max(rot, opnorm(W0 @ Q0 @ W0i - Q0), opnorm(W1 @ Q0 @ W1i - target))
    return res, rank_changes, ends, rot


@check("paths", 1e-8, min_dim=3)
def check_connect_idempotents(rng, n, f, ctx):
    Q1, Q2 = random_equal_rank_pair(rng, n, f, ctx)
    path = paths.connect_idempotents(Q1, Q2, 64)
    res, changes, ends, rot = path_residuals(path, Q1, Q2)
    return max(res, changes, ends, rot * 100)


@check("paths", 1e-9)
def check_similarity_witness(rng, n, f, ctx):
    P, Q = random_equal_rank_pair(rng, n, f, ctx)
    W = paths.similarity_witness(P, Q)
    res = opnorm(W @ P @ kernel.inverse(W) - Q)
    consistent = float(not paths.same_component(P, Q))
    if n >= 3:
        k = kernel.rank_of(P)
        other = sampling.random_idempotent(rng, n, k % (n - 1) + 1, f, ctx.gen)
        try:
            paths.similarity_witness(P, other)
            consistent += 1.0
        except RankMismatch:
            pass
        consistent += float(paths.same_component(P, other))
    return res + consistent


@check("paths", 1e-9)
def check_gram_schmidt_rep(rng, n, f, ctx):
    W = _well_conditioned(rng, n, f)
    k = sampling.random_rank(rng, n)
    V = paths.gram_schmidt_rep(W, k)
    unitary = opnorm(adjoint(V) @ V - np.eye(n))
    span = gm.subspace_gap(paths.leading_span(V, k), paths.leading_span(W, k))
    idem = opnorm(paths.gram_schmidt_rep(V, k) - V)
    qr = opnorm(V - kernel.orthonormalize(W))
    G = np.triu(sampling.gaussian(rng, n, n, f)) + 3 * np.eye(n)
    coset = gm.subspace_gap(paths.leading_span(paths.gram_schmidt_rep(W @ G, k), k), paths.leading_span(V, k))
    return max(unitary * 10, span, idem * 10, qr, coset)


# --------------------------------------------------------------------------
# runner


@dataclass
class CheckResult:
    name: str
    suite: str
    field: str
    instances: int
    max_residual: float
    threshold: float
    passed: bool
    error: str | None = None


def run_check(chk: Check, trials: int, dims, seed: int, field_name: str, ctx: Context) -> CheckResult:
    rng = _rng(seed, chk.name, field_name)
    usable = [d for d in dims if d >= chk.min_dim] or [max(chk.min_dim, max(dims))]
    count = 1 if chk.fixed else trials
    worst, error = 0.0, None
    for i in range(count):
        n = usable[i % len(usable)]
        try:
            r = float(chk.fn(rng, n, field_name, ctx))
        except (GrassbundleError, RuntimeError, np.linalg.LinAlgError) as exc:
            r, error = math.inf, f"{type(exc).__name__}: {exc}"
        if not r <= worst:
            worst = r
    passed = worst <= chk.threshold
    return CheckResult(chk.name, chk.suite, field_name, count, worst, chk.threshold, passed, error)


def checks_for(suite: str) -> list[Check]:
    if suite == "all":
        return list(REGISTRY.values())
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    return [c for c in REGISTRY.values() if c.suite == suite]


def run_suite(
    suite: str = "all",
    trials: int = 100,
    dims=(2, 3, 4, 5, 6),
    seed: int = 1,
    fields=("R", "C"),
    cfg: ToleranceConfig | None = None,
    fixture=None,
    timestamp: bool = True,
) -> dict:
    """Run a suite and return a ``verify-report/1`` dictionary."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cfg = kernel.resolve(cfg)
    ctx = Context(cfg=cfg, gen=ToleranceConfig(cond_cap=VERIFY_COND_CAP), fixture=list(fixture or []))
    results = []
    for chk in checks_for(suite):
        if chk.name == "fixture_idempotents" and not ctx.fixture:
            continue
        if chk.fields == ("any",):
            results.append(run_check(chk, trials, list(dims), seed, "any", ctx))
            continue
        for field_name in fields:
            if field_name in chk.fields:
                results.append(run_check(chk, trials, list(dims), seed, field_name, ctx))
    report = {
        "schema": SCHEMA,
        "suite": suite,
        "seed": seed,
        "trials": trials,
        "dims": list(dims),
        "fields": list(fields),
        "tolerance": asdict(cfg),
        "instance_cond_cap": VERIFY_COND_CAP,
        "checks": [_jsonable(asdict(r)) for r in results],
        "passed": all(r.passed for r in results),
    }
    if timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return report


def _jsonable(d):
    out = dict(d)
    if not math.isfinite(out["max_residual"]):
        out["max_residual"] = "inf"
    return out
