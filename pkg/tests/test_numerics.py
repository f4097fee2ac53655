import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opsys import numerics as nm
from opsys.errors import PreconditionError, SizeError
from opsys.tuples import RationalAngle, clock, shift, standard_pair


def test_eigen_diagonal():
    w, Q = nm.hermitian_eigen(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1, 2, 3])
    assert nm.is_unitary(Q)


def test_eigen_swap():
    w, _ = nm.hermitian_eigen(np.array([[0, 1], [1, 0]]))
    assert np.allclose(w, [-1, 1])


def test_eigen_F_combination(F):
    # closed form for a sz + b sx: +-sqrt(a^2 + b^2)
    u, v = F.matrices
    w, _ = nm.hermitian_eigen(2 * u + 2 * v)
    assert np.allclose(w, [-2 * np.sqrt(2), 2 * np.sqrt(2)], atol=1e-12)


def test_eigen_rejects_non_hermitian():
    with pytest.raises(PreconditionError):
        nm.hermitian_eigen(np.array([[0, 1], [0, 0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_eigen_reconstruction(dim, seed):
    r = np.random.default_rng(seed)
    A = r.standard_normal((dim, dim)) + 1j * r.standard_normal((dim, dim))
    M = A + A.conj().T
    w, Q = nm.hermitian_eigen(M)
    assert np.max(np.abs(Q @ np.diag(w) @ Q.conj().T - M)) < 1e-9 * dim
    assert np.all(np.diff(w) >= 0)


def test_operator_norm_examples(rng):
    assert nm.operator_norm(np.eye(4)) == pytest.approx(1.0)
    assert nm.operator_norm(nm.random_unitary(5, rng)) == pytest.approx(1.0, abs=1e-12)
    u, v = standard_pair(RationalAngle(1, 2)).matrices
    H = u + u.conj().T + v + v.conj().T
    assert nm.operator_norm(H) == pytest.approx(2 * np.sqrt(2), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_operator_norm_invariance(dim, seed):
    r = np.random.default_rng(seed)
    M = r.standard_normal((dim, dim)) + 1j * r.standard_normal((dim, dim))
    N = r.standard_normal((dim, dim))
    W = nm.random_unitary(dim, r)
    assert abs(nm.operator_norm(W @ M @ W.conj().T) - nm.operator_norm(M)) < 1e-10 * max(1, nm.operator_norm(M))
    assert nm.operator_norm(M @ N) <= nm.operator_norm(M) * nm.operator_norm(N) * (1 + 1e-12)


def test_kron_examples():
    assert np.array_equal(nm.kron(np.eye(2), np.eye(3)), np.eye(6))
    assert np.array_equal(nm.kron(np.diag([1, -1]), np.eye(2)), np.diag([1, 1, -1, -1]))
    a = RationalAngle(1, 3)
    K = nm.kron(clock(a), shift(3))
    # entry [(i,j),(k,l)] = U[i,k] V[j,l]; (0,1),(0,0) -> U[0,0] V[1,0] = 1
    assert K[0 * 3 + 1, 0 * 3 + 0] == 1


def test_kron_cap():
    big = np.eye(64)
    with pytest.raises(SizeError):
        nm.kron(big, big)


def test_commutant_dimension_examples():
    a = RationalAngle(1, 3)
    assert nm.commutant_dimension([clock(a), shift(3)]) == 1
    D = np.diag([1.0, 2.0, 3.0])
    assert nm.commutant_dimension([D, D]) == 3
    assert nm.commutant_dimension([np.eye(4)]) == 16


def test_commutant_conjugation_invariance(rng):
    s = standard_pair(RationalAngle(2, 5))
    W = nm.random_unitary(5, rng)
    assert nm.commutant_dimension(s.conjugate(W).matrices) == 1


def test_decomposition_of_direct_sum(rng):
    a = RationalAngle(1, 3)
    u, v = clock(a), shift(3)
    Z = np.zeros((3, 3))
    U = np.block([[u, Z], [Z, 1j * u]])
    V = np.block([[v, Z], [Z, v]])
    W = nm.random_unitary(6, rng)
    pieces = nm.irreducible_decomposition([W @ U @ W.conj().T, W @ V @ W.conj().T])
    assert sorted(P.shape[1] for P in pieces) == [3, 3]
