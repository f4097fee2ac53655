import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opsys import numerics as nm
from opsys import tuples as tp
from opsys.errors import PreconditionError, SizeError
from opsys.tuples import LambdaMatrix, RationalAngle


def coprime_angles(max_n=7):
    return st.integers(1, max_n).flatmap(
        lambda n: st.sampled_from([k for k in range(n) if math.gcd(k, n) == 1]).map(lambda k: RationalAngle(k, n)))


def test_angle_parse_and_reduce():
    assert RationalAngle.parse("2/4") == RationalAngle(1, 2)
    assert RationalAngle.parse("-1/3") == RationalAngle(2, 3)
    assert RationalAngle.parse("0") == RationalAngle(0, 1)
    with pytest.raises(PreconditionError):
        RationalAngle.parse("0.5")
    with pytest.raises(PreconditionError):
        RationalAngle(2, 4)


def test_standard_pair_n2():
    u, v = tp.standard_pair(RationalAngle(1, 2)).matrices
    assert np.array_equal(u, np.diag([1, -1]))
    assert np.array_equal(v, [[0, 1], [1, 0]])


def test_standard_pair_n1():
    u, v = tp.standard_pair(RationalAngle(0, 1)).matrices
    assert u[0, 0] == 1 and v[0, 0] == 1


@settings(max_examples=20, deadline=None)
@given(coprime_angles(12))
def test_standard_pair_algebra(a):
    u, v = tp.standard_pair(a).matrices
    n = a.n
    assert np.max(np.abs(u @ v - a.q * v @ u)) < 1e-12
    assert np.max(np.abs(np.linalg.matrix_power(u, n) - np.eye(n))) < 1e-12
    assert np.max(np.abs(np.linalg.matrix_power(v, n) - np.eye(n))) < 1e-12


def test_phase_scaled():
    a = RationalAngle(1, 2)
    u, _ = tp.phase_scaled_pair(a, 1j, 1).matrices
    assert np.allclose(u @ u, -np.eye(2))
    assert tp.phase_scaled_pair(a, 1, 1).commutation_residual() == 0
    with pytest.raises(PreconditionError):
        tp.phase_scaled_pair(a, 1.1, 1)


@settings(max_examples=20, deadline=None)
@given(coprime_angles(), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_phase_scaled_residual(a, s, t):
    assert tp.phase_scaled_pair(a, cmath.exp(1j * s), cmath.exp(1j * t)).commutation_residual() < 1e-12


def test_lambda_all_minus_one():
    lam = LambdaMatrix.from_upper(3, {(0, 1): "1/2", (0, 2): "1/2", (1, 2): "1/2"})
    T = tp.lambda_tuple(lam)
    assert T.m == 8
    assert T.commutation_residual() < 1e-12


def test_lambda_single_pair():
    lam = LambdaMatrix.from_upper(3, {(0, 1): "1/3"})
    T = tp.lambda_tuple(lam)
    assert T.m == 3
    assert T.commutation_residual() < 1e-12


def test_lambda_d2_is_standard():
    a = RationalAngle(2, 5)
    T = tp.lambda_tuple(LambdaMatrix.from_upper(2, {(0, 1): a}))
    S = tp.standard_pair(a)
    for x, y in zip(T.matrices, S.matrices):
        assert np.allclose(x, y)


def test_lambda_must_be_self_adjoint():
    h, z = RationalAngle(1, 3), RationalAngle(0, 1)
    with pytest.raises(PreconditionError):
        LambdaMatrix([[z, h], [h, z]])


def test_lambda_cap():
    lam = LambdaMatrix.from_upper(4, {p: "1/4" for p in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]})
    with pytest.raises(SizeError):
        tp.lambda_tuple(lam)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_lambda_tuples(seed):
    from opsys.acceptance import random_lambda
    lam = random_lambda(np.random.default_rng(seed), cap=256)
    T = tp.lambda_tuple(lam)
    assert T.commutation_residual() < 1e-10
    assert all(nm.is_unitary(M) for M in T.matrices)


def test_universal_sample_shapes():
    a = RationalAngle(1, 2)
    S1 = tp.universal_sample(a, 1)
    for x, y in zip(S1.matrices, tp.standard_pair(a).matrices):
        assert np.allclose(x, y)
    assert tp.universal_sample(RationalAngle(1, 3), 4).m == 3 * 16


def test_universal_sample_norm_grid64():
    # oracle: max over phases of 2 sqrt(cos^2 a + cos^2 b) = 2 sqrt 2
    S = tp.universal_sample(RationalAngle(1, 2), 64, cap=10**5)
    worst = max(nm.operator_norm(b[0] + b[0].conj().T + b[1] + b[1].conj().T) for b in S.blocks)
    assert abs(worst - 2 * math.sqrt(2)) < 3e-3


def test_transpose():
    a = RationalAngle(1, 3)
    T = tp.transpose_tuple(tp.standard_pair(a))
    assert T.commutation == RationalAngle(2, 3)
    u, v = T.matrices
    assert np.max(np.abs(u @ v - RationalAngle(2, 3).q * v @ u)) < 1e-12
    F = tp.standard_pair(RationalAngle(1, 2))
    FT = tp.transpose_tuple(F)
    assert FT.commutation == F.commutation
    back = tp.transpose_tuple(T)
    for x, y in zip(back.matrices, tp.standard_pair(a).matrices):
        assert np.array_equal(x, y)


def test_classify_example():
    a = RationalAngle(1, 3)
    c = tp.classify_irreducible_pair(tp.phase_scaled_pair(a, cmath.exp(1j * math.pi / 7), 1))
    assert abs(c.xi - cmath.exp(3j * math.pi / 7)) < 1e-12
    assert abs(c.zeta - 1) < 1e-12
    c = tp.classify_irreducible_pair(tp.standard_pair(a))
    assert abs(c.xi - 1) < 1e-12 and abs(c.zeta - 1) < 1e-12
    W = c.unitary
    # a permutation times phases
    assert np.allclose(np.abs(W), np.round(np.abs(W)))


@settings(max_examples=40, deadline=None)
@given(coprime_angles(5), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.integers(0, 2**31 - 1))
def test_classify_round_trip(a, s, t, seed):
    alpha, beta = cmath.exp(1j * s), cmath.exp(1j * t)
    W0 = nm.random_unitary(a.n, np.random.default_rng(seed))
    T = tp.phase_scaled_pair(a, alpha, beta).conjugate(W0)
    c = tp.classify_irreducible_pair(T)
    assert abs(c.xi - alpha ** a.n) < 1e-9 and abs(c.zeta - beta ** a.n) < 1e-9
    u, v = T.matrices
    W = c.unitary
    assert np.max(np.abs(W.conj().T @ u @ W - c.lam * tp.clock(a))) < 1e-8
    assert np.max(np.abs(W.conj().T @ v @ W - c.eta * tp.shift(a.n))) < 1e-8


def test_classify_preconditions():
    a = RationalAngle(1, 3)
    with pytest.raises(PreconditionError):  # wrong dimension
        tp.classify_irreducible_pair(tp.standard_pair(RationalAngle(1, 2)), a)
    u, v = tp.standard_pair(a).matrices
    not_q = tp.OperatorTuple([np.array([u, u])], None, check=False)
    with pytest.raises(PreconditionError):
        tp.classify_irreducible_pair(not_q, a)
    not_unitary = tp.OperatorTuple([np.array([2 * u, v])], None, check=False)
    with pytest.raises(PreconditionError):
        tp.classify_irreducible_pair(not_unitary, a)


def test_disk_tuple_resolution():
    T, res = tp.disk_tuple(10_000)
    assert T.m == 10_000
    pts = np.array([b[:, 0, 0] for b in T.blocks])
    assert np.max(np.abs(pts[:, 0] + 1j * pts[:, 1])) <= 1 + 1e-12
    # every grid point of the disk is within res of a sample
    g = np.linspace(-1, 1, 41)
    X, Y = np.meshgrid(g, g)
    z = (X + 1j * Y).ravel()
    z = z[np.abs(z) <= 1]
    samples = pts[:, 0].real + 1j * pts[:, 1].real
    d = np.min(np.abs(z[:, None] - samples[None, :]), axis=1)
    assert np.max(d) <= res
