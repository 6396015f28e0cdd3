"""Acceptance criteria, each at its stated instance count and tolerance.

Every criterion records one PASS/FAIL line. The lines are printed by the
terminal-summary hook in ``conftest.py`` and also with ``print`` for ``pytest -s``.
"""

import time

import numpy as np
import pytest

from grassbundle import bundle as bd
from grassbundle import grassmann as gm
from grassbundle import kernel, paths, sampling, tangent, verify
from grassbundle.kernel import ToleranceConfig, adjoint, opnorm

CTX = verify.Context(cfg=ToleranceConfig(), gen=ToleranceConfig(cond_cap=verify.VERIFY_COND_CAP))
RESULTS = {}


def record(number, title, passed, detail):
    line = f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    RESULTS[number] = line
    print(line)
    return passed


def rng_for(number, field):
    return np.random.default_rng([2024, number, "RC".index(field)])


def test_criterion_1_c2_fixtures():
    start = time.perf_counter()
    errors = verify.c2_fixture_errors()
    elapsed = time.perf_counter() - start
    worst = max(errors.values())
    ok = worst <= 1e-12 and elapsed < 1.0
    assert record(1, "closed forms on C^2", ok, f"max abs error {worst:.1e} over {len(errors)} forms, {elapsed:.2f} s")


def test_criterion_2_chart_roundtrips():
    start = time.perf_counter()
    checks = {
        "q o p": verify.check_q_p_roundtrip,
        "pi": verify.check_pi_roundtrip,
        "mu": verify.check_mu_roundtrip,
        "pair": verify.check_pair_chart_roundtrip,
        "involution": verify.check_inv_chart_roundtrip,
        "nu": verify.check_nu_roundtrip,
    }
    worst = {}
    for f in "RC":
        rng = rng_for(2, f)
        for name, fn in checks.items():
            if name == "nu" and f == "C":
                continue  # the tangent chart exists over the reals only
            for i in range(500):
                worst[(name, f)] = max(worst.get((name, f), 0.0), fn(rng, 2 + i % 5, f, CTX))
    elapsed = time.perf_counter() - start
    top = max(worst.values())
    ok = top <= 1e-8 and elapsed < 30.0
    per = ", ".join(f"{n}/{f} {v:.1e}" for (n, f), v in worst.items())
    assert record(2, "chart roundtrips, 500 per field", ok, f"max {top:.1e}, {elapsed:.1f} s ({per})")


def test_criterion_3_quadratic_remainder():
    violations, fd_worst, slack = 0, 0.0, np.inf
    for f in "RC":
        rng = rng_for(3, f)
        for i in range(200):
            rem, bound, fd = verify.quadratic_remainder(rng, 2 + i % 5, f, CTX)
            violations += rem > bound
            slack = min(slack, bound - rem)
            fd_worst = max(fd_worst, fd)
    ok = violations == 0 and fd_worst <= 1e-6
    detail = f"{violations} bound violations in 400, min slack {slack:.1e}, Jacobian error {fd_worst:.1e} at h=1e-5"
    assert record(3, "remainder below eps^2(2+eps)", ok, detail)


def test_criterion_4_bundle_conditions():
    gap = affine = trans = 0.0
    for f in "RC":
        rng = rng_for(4, f)
        for i in range(500):
            n = 2 + i % 5
            gap = max(gap, verify.check_kappa_theta(rng, n, f, CTX))
            affine = max(affine, verify.check_theta_affine(rng, n, f, CTX))
            trans = max(trans, verify.check_transition(rng, n, f, CTX))
    ok = gap <= 1e-9 and affine <= 1e-8 and trans <= 1e-8
    detail = f"range gap {gap:.1e}, affine residual {affine:.1e}, transition vs two-step {trans:.1e}"
    assert record(4, "trivialization, 500 per field", ok, detail)


def test_criterion_5_tangent():
    rng = rng_for(5, "R")
    bij = 0.0
    for i in range(500):
        n = 2 + i % 7
        t = sampling.random_tangent(rng, n, sampling.random_rank(rng, n))
        Q = tangent.tangent_to_idempotent(t)
        back = tangent.idempotent_to_tangent(Q)
        E, F = sampling.random_pair(rng, n, t.base.dim, "R", CTX.gen)
        Q2 = bd.oblique_projector(E, F)
        Q2_back = tangent.tangent_to_idempotent(tangent.idempotent_to_tangent(Q2))
        bij = max(bij, gm.subspace_gap(back.base, t.base), opnorm(back.ambient() - t.ambient()), opnorm(Q2_back - Q2))
    ratios = []
    for i in range(200):
        d1, d2 = verify.psi_order_ratio(rng, 2 + i % 7, CTX)
        ratios.append(d1 / d2)
    lo, hi = verify.FD_ORDER_RANGE
    outside = sum(not lo <= r <= hi for r in ratios)
    ok = bij <= 1e-9 and outside == 0
    detail = f"bijection residual {bij:.1e}; difference ratios in [{min(ratios):.3f}, {max(ratios):.3f}], {outside} of 200 outside"
    assert record(5, "tangent bijection and derivative order", ok, detail)


def test_criterion_6_metrics():
    smallest, corner = np.inf, 0.0
    for f in "RC":
        rng = rng_for(6, f)
        for i in range(200):
            n = 2 + i % 7
            E = sampling.random_subspace(rng, n, sampling.random_rank(rng, n), f)
            S = sampling.random_nilpotent(rng, E, f)
            s = tangent.FiberOperator(E, S / opnorm(S))
            smallest = min(smallest, complex(tangent.trace_metric(s, s)).real)
            s2 = tangent.FiberOperator(E, sampling.random_nilpotent(rng, E, f))
            M = tangent.operator_metric(s, s2)
            corner = max(corner, opnorm(M - E.projector @ M @ E.projector))
    ok = smallest > 1e-14 and corner <= 1e-10
    assert record(6, "metrics, 200 fibers per field", ok, f"min <S,S> {smallest:.2e}, corner residual {corner:.1e}")


def test_criterion_7_paths():
    res = rot = 0.0
    rank_changes = rotation_paths = 0
    for f in "RC":
        rng = rng_for(7, f)
        for i in range(100):
            n = 3 + i % 4
            Q1, Q2 = verify.random_equal_rank_pair(rng, n, f, CTX)
            path = paths.connect_idempotents(Q1, Q2, steps=64)
            r, changes, _, endpoints = verify.path_residuals(path, Q1, Q2)
            res, rot = max(res, r), max(rot, endpoints)
            rank_changes += changes > 0
            rotation_paths += any(leg.meta for leg in path.legs)
    ok = res <= 1e-8 and rank_changes == 0 and rot <= 1e-10
    detail = (
        f"max sample residual {res:.1e}, {rank_changes} paths changed rank, "
        f"rotation endpoints {rot:.1e} ({rotation_paths} of 200 paths use the rotation legs)"
    )
    assert record(7, "paths, 100 per field", ok, detail)


def test_criterion_8_gram_schmidt():
    unitary = span = idem = 0.0
    for f in "RC":
        rng = rng_for(8, f)
        for i in range(200):
            n = 2 + i % 7
            W = verify._well_conditioned(rng, n, f)
            k = sampling.random_rank(rng, n)
            V = paths.gram_schmidt_rep(W, k)
            unitary = max(unitary, opnorm(adjoint(V) @ V - np.eye(n)))
            span = max(span, gm.subspace_gap(paths.leading_span(V, k), paths.leading_span(W, k)))
            idem = max(idem, opnorm(paths.gram_schmidt_rep(V, k) - V))
    ok = unitary <= 1e-10 and span <= 1e-9 and idem <= 1e-10
    detail = f"unitarity {unitary:.1e}, span gap {span:.1e}, idempotence {idem:.1e}"
    assert record(8, "Gram-Schmidt representative, 200 per field", ok, detail)


def test_criterion_9_ad_right_inverse():
    worst = 0.0
    for f in "RC":
        rng = rng_for(9, f)
        for i in range(300):
            n = 2 + i % 5
            E0, F0 = sampling.random_pair(rng, n, sampling.random_rank(rng, n), f, CTX.gen)
            E = sampling.random_transversal(rng, F0, f, CTX.gen)
            Q = sampling.random_in_fiber(rng, E, f, CTX.gen)
            W = bd.ad_right_inverse(E0, F0, Q)
            worst = max(worst, opnorm(W @ bd.oblique_projector(E0, F0) @ kernel.inverse(W) - Q))
    assert record(9, "conjugation identity, 300 per field", worst <= 1e-9, f"max residual {worst:.1e}")
