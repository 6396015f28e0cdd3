import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grassbundle import bundle as bd
from grassbundle import grassmann as gm
from grassbundle import sampling, verify
from grassbundle.errors import (
    ComplementRequired,
    CoordOutsideChart,
    FiberMismatch,
    NotIdempotent,
    NotInvolution,
)
from grassbundle.kernel import opnorm

from conftest import GEN

E0 = gm.make_subspace([[1.0], [0.0]])
EINF = gm.make_subspace([[0.0], [1.0]])


def test_c2_closed_forms():
    errors = verify.c2_fixture_errors()
    assert len(errors) > 20
    bad = {k: v for k, v in errors.items() if v > 1e-12}
    assert not bad


def test_mu_chart_at_anchor_is_origin():
    P0 = bd.oblique_projector(E0, EINF)
    c = bd.mu_chart(E0, EINF, P0)
    assert np.allclose(c.R, 0) and np.allclose(c.S, 0)
    assert np.allclose(bd.mu_chart_inv(c), P0)


def test_check_idempotent():
    with pytest.raises(NotIdempotent):
        bd.check_idempotent(np.array([[1.0, 0.0], [0.0, 0.5]]))
    with pytest.raises(NotIdempotent):
        bd.check_idempotent(np.eye(3))
    with pytest.raises(NotIdempotent):
        bd.check_idempotent(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        bd.check_idempotent(np.ones((2, 3)))


def test_range_and_kernel_known():
    Q = np.array([[1.0, 2.0], [0.0, 0.0]])
    assert gm.subspace_gap(bd.range_of(Q), E0) < 1e-15
    assert gm.subspace_gap(bd.kernel_of(Q), gm.make_subspace([[2.0], [-1.0]])) < 1e-15


def test_xi_closed_form():
    lam = -2.0
    El = gm.make_subspace([[1.0], [lam]])
    X = bd.xi(E0, EINF, El)
    assert np.allclose(X, [[1, 0], [lam, 1]])
    assert np.allclose(bd.xi_inv(E0, EINF, El), 2 * np.eye(2) - X)
    assert np.allclose(bd.xi_inv(E0, EINF, El), [[1, 0], [-lam, 1]])


def test_theta_requires_fiber_member():
    El = gm.make_subspace([[1.0], [1.0]])
    with pytest.raises(FiberMismatch):
        bd.theta_trivialize(E0, EINF, El, np.array([[0.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(ComplementRequired):
        bd.theta_trivialize(E0, EINF, EINF, np.diag([1.0, 0.0]))


def test_involution_exact_on_dyadic():
    Q = np.array([[1.0, 0.5], [0.0, 0.0]])
    V = bd.to_involution(Q)
    assert np.array_equal(V, [[1.0, 1.0], [0.0, -1.0]])
    assert np.array_equal(bd.from_involution(V), Q)
    with pytest.raises(NotInvolution):
        bd.from_involution(np.diag([1.0, 2.0]))
    with pytest.raises(NotInvolution):
        bd.from_involution(np.eye(2))


def test_fiber_operations_known():
    z = np.array([[1.0, 0.0], [0.0, 0.0]])
    x = np.array([[1.0, 1.0], [0.0, 0.0]])
    y = np.array([[1.0, -2.0], [0.0, 0.0]])
    assert np.allclose(bd.fiber_add(x, y, z), [[1.0, -1.0], [0.0, 0.0]])
    assert np.allclose(bd.fiber_scale(3.0, x, z), [[1.0, 3.0], [0.0, 0.0]])
    with pytest.raises(FiberMismatch):
        bd.fiber_add(x, np.array([[0.0, 0.0], [0.0, 1.0]]), z)


def test_fiber_difference_shared_kernel():
    Q1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    Q2 = np.array([[1.0, 0.0], [3.0, 0.0]])
    D = bd.fiber_difference(Q1, Q2, "kernel").mat
    assert np.allclose(D, [[0.0, 0.0], [-3.0, 0.0]])
    with pytest.raises(FiberMismatch):
        bd.fiber_difference(Q1, Q2, "range")
    with pytest.raises(ValueError):
        bd.fiber_difference(Q1, Q1, "neither")


def test_mu_chart_inv_rejects_bad_coordinates():
    c = bd.ChartCoords(E0, EINF, np.eye(2), np.zeros((2, 2)))
    with pytest.raises(CoordOutsideChart):
        bd.mu_chart_inv(c)


def test_pair_chart_c2():
    lam, a = -2.0, 2.0
    El = gm.make_subspace([[1.0], [lam]])
    K = gm.make_subspace([[a], [-lam * (1 - a)]])
    c = bd.pair_chart(E0, EINF, El, K)
    assert np.allclose(c.R, [[0, 0], [lam, 0]])
    assert np.allclose(c.S, [[0, a / lam], [0, 0]])


def draw(seed, n, f):
    rng = np.random.default_rng(seed)
    E0, F0 = sampling.random_pair(rng, n, sampling.random_rank(rng, n), f, GEN)
    E = sampling.random_transversal(rng, F0, f, GEN)
    return rng, E0, F0, E


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), f=st.sampled_from("RC"))
def test_theta_lands_in_fiber_and_inverts(seed, n, f):
    rng, E0, F0, E = draw(seed, n, f)
    Q = sampling.random_in_fiber(rng, E0, f, GEN)
    Qp = bd.theta_trivialize(E0, F0, E, Q)
    assert gm.subspace_gap(bd.range_of(Qp), E) <= 1e-9
    E_back, Q_back = bd.theta_untrivialize(E0, F0, Qp)
    assert gm.subspace_gap(E_back, E) <= 1e-9
    assert opnorm(Q_back - Q) <= 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), f=st.sampled_from("RC"))
def test_mu_chart_roundtrip_and_forms(seed, n, f):
    rng, E0, F0, E = draw(seed, n, f)
    Q = sampling.random_in_fiber(rng, E, f, GEN)
    c = bd.mu_chart(E0, F0, Q)
    assert opnorm(bd.mu_chart_inv(c) - Q) <= 1e-8
    P0 = bd.oblique_projector(E0, F0)
    eye = np.eye(n)
    factored = (eye + c.R) @ (c.S + P0) @ (eye - c.R)
    assert opnorm(bd.theta_polynomial(c.R, c.S, P0) - factored) <= 1e-9 * (1 + opnorm(factored))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), f=st.sampled_from("RC"))
def test_involution_chart_matches_mu(seed, n, f):
    rng, E0, F0, E = draw(seed, n, f)
    Q = sampling.random_in_fiber(rng, E, f, GEN)
    V = bd.to_involution(Q)
    cv, cq = bd.inv_chart(E0, F0, V), bd.mu_chart(E0, F0, Q)
    assert opnorm(cv.R - cq.R) <= 1e-9 and opnorm(cv.S - cq.S) <= 1e-9
    assert opnorm(bd.inv_chart_inv(cv) - V) <= 1e-8
    assert opnorm(bd.from_involution(V) - Q) <= 1e-14 * (1 + opnorm(Q))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), f=st.sampled_from("RC"))
def test_ad_right_inverse_conjugates(seed, n, f):
    rng, E0, F0, E = draw(seed, n, f)
    Q = sampling.random_in_fiber(rng, E, f, GEN)
    W = bd.ad_right_inverse(E0, F0, Q)
    P0 = bd.oblique_projector(E0, F0)
    assert opnorm(W @ P0 @ np.linalg.inv(W) - Q) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), f=st.sampled_from("RC"))
def test_delta_projects_onto_fiber_tangent(seed, n, f):
    rng, E, F, _ = draw(seed, n, f)
    T = sampling.gaussian(rng, n, n, f)
    D = bd.delta_projector(E, F, T)
    assert opnorm(bd.delta_projector(E, F, D) - D) <= 1e-9 * (1 + opnorm(D))
    assert opnorm(D @ E.basis) <= 1e-9 * (1 + opnorm(D))
    # D is the first-order change of idempotents in the fiber: Q + tD stays idempotent
    Q = bd.oblique_projector(E, F)
    assert bd.idempotency_residual(Q + 0.3 * D) <= 1e-9 * (1 + opnorm(D)) ** 2


def test_psi_banachize_fixes_orthogonal_point():
    rng = np.random.default_rng(3)
    E0, F0 = sampling.random_pair(rng, 4, 2, "R", GEN)
    E = sampling.random_transversal(rng, F0, "R", GEN)
    x = bd.psi_banachize(E0, F0, E, E0.projector)
    assert np.allclose(x, E.projector, atol=1e-10)
