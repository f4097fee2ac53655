import numpy as np
import pytest

from opsys import extremal as ex
from opsys import numerics as nm
from opsys import tuples as tp
from opsys.errors import PreconditionError
from opsys.tuples import RationalAngle

A3 = RationalAngle(1, 3)


@pytest.fixture(scope="module")
def S():
    return tp.universal_sample(A3, 2)


def test_boundary_restriction_examples(rng):
    u, v = tp.clock(A3), tp.shift(3)
    for alpha, beta in [(1, 1), (1j, np.exp(0.3j)), (-1, 1)]:
        assert ex.is_boundary_restriction([alpha * u, beta * v], A3)
    assert not ex.is_boundary_restriction([u, u], A3)
    chk = ex.is_boundary_restriction([u, v], RationalAngle(2, 3))
    assert not chk and chk.unitary and not chk.commuting
    with pytest.raises(PreconditionError):
        ex.is_boundary_restriction([u[:2, :2], v[:2, :2]], A3)
    W = nm.random_unitary(3, rng)
    assert ex.is_boundary_restriction([W @ u @ W.conj().T, W @ v @ W.conj().T], A3)


def test_compression_not_unitary():
    u, v = tp.clock(A3), tp.shift(3)
    P = np.eye(3)[:, :2]
    a4 = RationalAngle(1, 2)
    chk = ex.is_boundary_restriction([P.T @ u @ P, P.T @ v @ P], a4)
    assert not chk.unitary


def test_coupling_directions_prefix_stable():
    a = ex.coupling_directions(2, 3, 4, seed=5)
    b = ex.coupling_directions(2, 3, 8, seed=5)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    assert np.linalg.norm(a[0]) == pytest.approx(1.0)
    assert np.all(a[0][:, :3, :3] == 0) and np.all(a[0][:, 3, 3] == 0)


def test_boundary_coupling_vanishes(S):
    cr = ex.dilation_coupling_max(S, [tp.clock(A3), tp.shift(3)], directions=4)
    assert cr.upper_bound < 1e-6
    assert cr.classification == "consistent-with-maximal"
    assert all(d.lower <= d.upper + 1e-9 for d in cr.per_direction)


def test_state_is_dilatable(F):
    cr = ex.dilation_coupling_max(F, [np.eye(1), np.zeros((1, 1))], directions=8)
    assert cr.coupling >= 0.5
    assert cr.classification == "dilatable"
    # the optimiser is a genuine dilation: corner equals phi
    assert np.allclose(cr.best_values[:, :1, :1], [[[1]], [[0]]], atol=1e-6)


def test_trivial_direct_sum_has_no_coupling(S):
    # phi = two boundary blocks side by side: already maximal, no coupling
    b0, b1 = S.blocks[0], S.blocks[1]
    vals = np.zeros((2, 6, 6), dtype=complex)
    vals[:, :3, :3] = b0
    vals[:, 3:, 3:] = b1
    cr = ex.dilation_coupling_max(S, vals, directions=2)
    assert cr.coupling < 1e-6


def test_coupling_monotone_in_directions(F):
    phi = [np.eye(1), np.zeros((1, 1))]
    few = ex.dilation_coupling_max(F, phi, directions=3, seed=2)
    many = ex.dilation_coupling_max(F, phi, directions=6, seed=2)
    assert many.coupling >= few.coupling - 1e-9


def test_not_ucp_is_inconclusive(F):
    cr = ex.dilation_coupling_max(F, [2 * np.eye(1), np.zeros((1, 1))], directions=2)
    assert cr.status == "phi-not-ucp" and cr.classification == "inconclusive"


def test_chain_from_pure_state(S):
    st = ex.exposed_state(S, np.array([1.0, 0.5j]))
    ch = ex.extreme_chain_walk(S, st, seed=1)
    assert ch.terminated and ch.final_level <= 3
    assert ch.levels[0] == 1
    assert ch.to_json()["final_level"] == ch.final_level


def test_chain_from_boundary_stops_immediately(S):
    ch = ex.extreme_chain_walk(S, S.blocks[0], directions=4)
    assert ch.terminated and ch.levels == [3]


def test_chain_commuting_case():
    T = tp.universal_sample(RationalAngle(0, 1), 3)
    st = ex.exposed_state(T, np.array([1.0, 1.0j]))
    ch = ex.extreme_chain_walk(T, st, directions=4)
    assert ch.terminated and ch.levels == [1]
