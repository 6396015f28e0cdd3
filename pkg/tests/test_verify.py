import json

import numpy as np
import pytest

from grassbundle import cli, verify


def test_every_compute_op_is_covered_by_a_check():
    for op, (_, checks) in cli.OPERATIONS.items():
        assert checks, op
        for name in checks:
            assert name in verify.REGISTRY, (op, name)


def test_every_check_has_a_known_suite():
    assert {c.suite for c in verify.REGISTRY.values()} == set(verify.SUITES)


def test_report_is_deterministic_apart_from_timestamp():
    a = verify.run_suite("charts", trials=3, dims=[2, 3], seed=11)
    b = verify.run_suite("charts", trials=3, dims=[2, 3], seed=11)
    a.pop("timestamp"), b.pop("timestamp")
    assert json.dumps(a) == json.dumps(b)
    assert a["schema"] == "verify-report/1"
    assert a["tolerance"]["residual_tol"] == 1e-9


def test_seed_changes_instances():
    a = verify.run_suite("bundle", trials=3, dims=[4], seed=1, timestamp=False)
    b = verify.run_suite("bundle", trials=3, dims=[4], seed=2, timestamp=False)
    assert [c["max_residual"] for c in a["checks"]] != [c["max_residual"] for c in b["checks"]]


def test_report_pass_rule():
    r = verify.run_suite("paths", trials=4, dims=[3, 4], seed=3, fields=("R",), timestamp=False)
    assert r["passed"] == all(c["max_residual"] <= c["threshold"] for c in r["checks"])
    assert all(c["field"] == "R" for c in r["checks"])


def test_corrupted_fixture_fails():
    bad = np.array([[1.0, 0.5], [0.01, 0.0]])
    r = verify.run_suite("bundle", trials=1, dims=[2], seed=1, fixture=[bad], timestamp=False)
    failed = [c["name"] for c in r["checks"] if not c["passed"]]
    assert failed == ["fixture_idempotents"]
    assert not r["passed"]


def test_good_fixture_passes():
    good = np.array([[1.0, 0.5], [0.0, 0.0]])
    r = verify.run_suite("bundle", trials=1, dims=[2], seed=1, fixture=[good], timestamp=False)
    assert r["passed"]


def test_bad_arguments():
    with pytest.raises(ValueError):
        verify.run_suite("nope")
    with pytest.raises(ValueError):
        verify.run_suite("charts", trials=0)
