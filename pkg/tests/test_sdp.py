import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opsys import sdp
from opsys.acceptance import random_sdp
from opsys.errors import PreconditionError, SchemaError


def _diag_problem():
    # dual of "maximize t s.t. diag(1 - t, 2 - t) >= 0" with y = t, b = -1, A = -I, C = -diag(1, 2)
    return sdp.SdpProblem([2], [-np.diag([1.0, 2.0])], [-np.eye(2)[None]], [-1.0])


def test_diag_t_equals_one():
    r = sdp.solve(_diag_problem())
    assert r.status == sdp.OPTIMAL
    assert r.dual[0] == pytest.approx(1.0, abs=1e-6)
    assert -r.primal_objective == pytest.approx(1.0, abs=1e-6)


def test_negative_trace_infeasible():
    p = sdp.SdpProblem([3], [np.zeros((3, 3))], [np.eye(3)[None]], [-1.0])
    r = sdp.solve(p)
    assert r.status == sdp.INFEASIBLE and r.certificate_verified
    y = r.dual
    assert p.rhs @ y > 0
    assert np.linalg.eigvalsh(np.tensordot(y, p.coefficients[0], axes=1))[-1] <= 1e-7


def test_feasibility_examples():
    ok = sdp.SdpProblem.feasibility_of([2], [np.eye(2)[None]], [1.0])
    assert sdp.feasibility(ok).status == sdp.OPTIMAL
    E = np.zeros((1, 2, 2))
    E[0, 0, 0] = 1
    bad = sdp.SdpProblem.feasibility_of([2], [E], [-1.0])
    r = sdp.feasibility(bad)
    assert r.status == sdp.INFEASIBLE and r.certificate_verified


def test_tolerance_range():
    with pytest.raises(PreconditionError):
        sdp.solve(_diag_problem(), tol=1e-2)
    with pytest.raises(PreconditionError):
        sdp.solve(_diag_problem(), tol=1e-12)


def test_too_many_constraints_rejected():
    with pytest.raises(PreconditionError):
        sdp.SdpProblem([1], [np.zeros((1, 1))], [np.ones((2, 1, 1))], [1.0, 1.0])


def test_json_round_trip():
    p = random_sdp(np.random.default_rng(3))
    q = sdp.SdpProblem.loads(p.dumps())
    assert q.blocks == p.blocks
    for A, B in zip(p.coefficients, q.coefficients):
        assert np.array_equal(A, B)
    assert np.array_equal(p.rhs, q.rhs)


def test_json_schema_error_path():
    doc = _diag_problem().to_json()
    doc["constraints"][0]["coefficients"][0][0][1] = "bad"
    with pytest.raises(SchemaError) as exc:
        sdp.SdpProblem.from_json(doc)
    assert "constraints[0]" in str(exc.value)


def test_deterministic():
    p = random_sdp(np.random.default_rng(5))
    a, b = sdp.solve(p), sdp.solve(p)
    assert a.primal_objective == b.primal_objective


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_weak_duality_and_rescaling(seed):
    r = np.random.default_rng(seed)
    p = random_sdp(r)
    res = sdp.solve(p)
    assert res.status == sdp.OPTIMAL
    assert res.primal_objective <= res.dual_objective + 1e-7 * (1 + abs(res.primal_objective))
    doubled = sdp.solve(p.scaled(np.full(p.num_constraints, 2.0)))
    assert doubled.status == sdp.OPTIMAL
    assert abs(doubled.primal_objective - res.primal_objective) < 1e-6 * (1 + abs(res.primal_objective))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_infeasible_certificates(seed):
    p = random_sdp(np.random.default_rng(seed), infeasible=True)
    res = sdp.solve(p)
    assert res.status == sdp.INFEASIBLE
    m, valid = sdp.farkas_margin(p, res.dual)
    assert valid and m <= 1e-7


def test_facial_reduction_on_degenerate_problem():
    # X >= 0 with X00 = 0 forces the first row and column to vanish: no interior point.
    E = np.zeros((2, 3, 3), dtype=complex)
    E[0, 0, 0] = 1
    E[1] = np.eye(3)
    C = np.zeros((3, 3), dtype=complex)
    C[1, 2] = C[2, 1] = 1
    p = sdp.SdpProblem([3], [C], [E], [0.0, 1.0])
    r = sdp.solve(p, facial="first", trace=1.0)
    assert r.status == sdp.OPTIMAL
    assert r.primal_objective == pytest.approx(1.0, abs=1e-6)
    assert abs(r.primal[0][0, 0]) < 1e-8
