import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grassbundle import bundle as bd
from grassbundle import grassmann as gm
from grassbundle import paths, sampling
from grassbundle.errors import RankDeficient, RankMismatch
from grassbundle.kernel import opnorm

from conftest import GEN


def test_gram_schmidt_known():
    W = np.array([[1.0, 0.0], [1.0, 1.0]])
    V = paths.gram_schmidt_rep(W, 1)
    r = 1 / math.sqrt(2)
    assert np.allclose(V, [[r, -r], [r, r]])


def test_gram_schmidt_rejects_singular():
    with pytest.raises(RankDeficient):
        paths.gram_schmidt_rep(np.array([[1.0, 2.0], [2.0, 4.0]]), 1)
    with pytest.raises(ValueError):
        paths.gram_schmidt_rep(np.eye(3), 3)


def test_gram_schmidt_complex_matches_qr():
    rng = np.random.default_rng(5)
    W = sampling.gaussian(rng, 4, 4, "C")
    V = paths.gram_schmidt(W)
    Q, R = np.linalg.qr(W)
    phases = np.diag(R) / np.abs(np.diag(R))
    assert np.allclose(V, Q * phases, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), f=st.sampled_from("RC"))
def test_gram_schmidt_coset_invariance(seed, n, f):
    rng = np.random.default_rng(seed)
    W = sampling.gaussian(rng, n, n, f)
    if np.linalg.cond(W) > 100:
        return
    k = sampling.random_rank(rng, n)
    V = paths.gram_schmidt_rep(W, k)
    G = np.zeros((n, n), dtype=W.dtype)
    G[:k, :k] = sampling.gaussian(rng, k, k, f) + 4 * np.eye(k)
    G[k:, k:] = sampling.gaussian(rng, n - k, n - k, f) + 4 * np.eye(n - k)
    V2 = paths.gram_schmidt_rep(W @ G, k)
    assert gm.subspace_gap(paths.leading_span(V2, k), paths.leading_span(V, k)) <= 1e-9


def test_same_component():
    P = np.diag([1.0, 0.0, 0.0])
    Q = np.diag([0.0, 1.0, 0.0])
    assert paths.same_component(P, Q)
    assert not paths.same_component(P, np.diag([1.0, 1.0, 0.0]))


def test_connect_rank_mismatch():
    with pytest.raises(RankMismatch):
        paths.connect_idempotents(np.diag([1.0, 0.0, 0.0]), np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        paths.connect_idempotents(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), steps=1)


def test_connect_same_range_is_one_affine_leg():
    Q1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    Q2 = np.array([[1.0, 5.0], [0.0, 0.0]])
    path = paths.connect_idempotents(Q1, Q2, steps=5)
    assert [leg.kind for leg in path.legs] == ["affine"]
    assert len(path) == 5
    assert np.allclose(path.samples[2], [[1.0, 2.5], [0.0, 0.0]])


def test_connect_uses_rotation_scheme_when_room():
    P = np.diag([1.0, 0.0, 0.0, 0.0])
    Q = np.diag([0.0, 1.0, 0.0, 0.0])
    path = paths.connect_idempotents(P, Q, steps=9)
    assert [leg.kind for leg in path.legs] == ["affine", "rotation", "rotation", "affine"]
    assert all(leg.meta is not None for leg in path.legs if leg.kind == "rotation")
    assert len(path) == 4 * 9 - 3
    assert path.legs[-1].end_index == len(path) - 1
    assert set(path.ranks) == {1}


def test_connect_falls_back_to_geodesic():
    P = np.diag([1.0, 1.0, 0.0])
    Q = np.diag([0.0, 1.0, 1.0])
    path = paths.connect_idempotents(P, Q, steps=9)
    assert [leg.kind for leg in path.legs] == ["affine", "rotation", "affine"]
    assert path.legs[1].meta is None
    assert np.allclose(path.samples[-1], Q)
    assert max(path.residuals) < 1e-12


def test_rotation_matrix_endpoints():
    frame = np.eye(3)
    W0, W0i = paths.rotation_matrix(frame, (1, 1, 1), 0.0)
    assert np.allclose(W0, np.eye(3))
    W, Wi = paths.rotation_matrix(frame, (1, 1, 1), math.pi / 2)
    assert np.allclose(W @ Wi, np.eye(3))
    Q0 = np.diag([1.0, 0.0, 0.0])
    assert np.allclose(W @ Q0 @ Wi, np.diag([0.0, 0.0, 1.0]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 6), f=st.sampled_from("RC"))
def test_connect_random(seed, n, f):
    rng = np.random.default_rng(seed)
    k = sampling.random_rank(rng, n)
    Q1 = sampling.random_idempotent(rng, n, k, f, GEN)
    Q2 = sampling.random_idempotent(rng, n, k, f, GEN)
    path = paths.connect_idempotents(Q1, Q2, steps=16)
    assert max(path.residuals) <= 1e-8
    assert set(path.ranks) == {k}
    assert opnorm(path.samples[0] - Q1) == 0 and opnorm(path.samples[-1] - Q2) == 0
    # consecutive samples stay close: the sampled curve is continuous
    jumps = [opnorm(b - a) for a, b in zip(path.samples, path.samples[1:])]
    assert max(jumps) < 0.5 * (1 + max(opnorm(Q) for Q in path.samples))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), f=st.sampled_from("RC"))
def test_similarity_witness(seed, n, f):
    rng = np.random.default_rng(seed)
    k = sampling.random_rank(rng, n)
    P = sampling.random_idempotent(rng, n, k, f, GEN)
    Q = sampling.random_idempotent(rng, n, k, f, GEN)
    W = paths.similarity_witness(P, Q)
    assert opnorm(W @ P @ np.linalg.inv(W) - Q) <= 1e-9


def test_similarity_witness_non_transversal():
    P = np.diag([1.0, 0.0])
    Q = np.diag([0.0, 1.0])  # range Q equals ker P
    W = paths.similarity_witness(P, Q)
    assert np.allclose(W @ P @ np.linalg.inv(W), Q)
    assert bd.idempotency_residual(Q) == 0


def test_similarity_witness_of_equal_idempotents_is_identity():
    P = np.array([[1.0, 2.0], [0.0, 0.0]])
    assert np.allclose(paths.similarity_witness(P, P), np.eye(2), atol=1e-14)


@pytest.mark.parametrize("lam", [1.0, -2.0, 0.5 + 0.5j])
def test_similarity_witness_c2_uses_right_inverse(lam):
    P = np.diag([1.0, 0.0]).astype(complex)
    Q = np.array([[1, 0], [lam, 0]], dtype=complex)
    W = paths.similarity_witness(P, Q)
    # the right-inverse formula gives W = xi = [[1, 0], [lam, 1]] here
    assert np.allclose(W, [[1, 0], [lam, 1]], atol=1e-14)
    assert np.allclose(W @ P @ np.linalg.inv(W), Q, atol=1e-14)


def test_connect_axis_projectors_steps_50():
    P, Q = np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 1.0, 0.0])
    path = paths.connect_idempotents(P, Q, steps=50)
    assert max(path.residuals) <= 1e-9
    assert set(path.ranks) == {1}
    assert np.array_equal(path.samples[0], P) and np.array_equal(path.samples[-1], Q)


def test_constant_path_for_equal_idempotents():
    P = np.array([[1.0, 1.0], [0.0, 0.0]])
    path = paths.connect_idempotents(P, P, steps=4)
    assert all(np.array_equal(S, P) for S in path.samples)
