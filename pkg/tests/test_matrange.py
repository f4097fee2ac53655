import numpy as np
import pytest

from opsys import matrange as mr
from opsys import numerics as nm
from opsys import tuples as tp
from opsys.errors import PreconditionError
from opsys.tuples import OperatorTuple, RationalAngle


def scalars(*zs):
    return [np.array([[z]]) for z in zs]


def test_membership_level1(F):
    assert mr.membership(F, scalars(0, 0)).verdict == "feasible"
    v = mr.membership(F, scalars(1.1, 0))
    assert v.verdict == "infeasible" and v.result.certificate_verified


def test_identity_targets_feasible(s31):
    v = mr.ucp_exists(s31, s31)
    assert v.verdict == "feasible"
    # the returned map reproduces the targets
    phi = v.choi_map()
    for s, t in zip(s31.matrices, s31.matrices):
        assert np.max(np.abs(phi(s) - t)) < 1e-6


def test_compression_is_member(rng):
    a = RationalAngle(1, 3)
    S = tp.universal_sample(a, 2)
    u, v = S.blocks[3]  # an on-grid phase pair
    gamma = nm.orthonormal_columns(rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))
    A = [gamma.conj().T @ x @ gamma for x in (u, v)]
    assert mr.membership(S, A).verdict == "feasible"


def test_support_examples(F):
    assert mr.support(F, 1, scalars(1, 0)) == pytest.approx(1.0, abs=1e-6)
    assert mr.support(F, 2, [np.zeros((2, 2))] * 2) == 0.0
    c = np.array([0.6, -0.8])
    vals, _ = mr.support_level1(F, [c])
    assert vals[0] == pytest.approx(np.linalg.norm(c), abs=1e-12)


def test_support_shape_check(F):
    with pytest.raises(PreconditionError):
        mr.support(F, 2, scalars(1, 0))


def test_support_homogeneous(F, rng):
    B = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(2)]
    h1 = mr.support(F, 2, B)
    h3 = mr.support(F, 2, [2.5 * b for b in B])
    assert h3 == pytest.approx(2.5 * h1, rel=1e-6)


def test_support_upper_bound_certified(F, rng):
    B = [rng.standard_normal((2, 2)) for _ in range(2)]
    value, res = mr.support(F, 2, B, detail=True)
    assert res.dual_objective >= value - 1e-7


def test_containment_consistency(s31, rng):
    gamma = nm.orthonormal_columns(rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))
    r = OperatorTuple([np.array([gamma.conj().T @ x @ gamma for x in s31.matrices])], None, check=False)
    assert mr.ucp_exists(s31, r).verdict == "feasible"
    for _ in range(10):
        B = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(2)]
        assert mr.support(r, 2, B) <= mr.support(s31, 2, B) + 1e-6


def test_boundary_unit_circle(F):
    poly = mr.numerical_range_boundary(F, directions=360)
    assert np.max(np.abs(poly.values - 1)) < 1e-9
    csv = poly.to_csv()
    lines = csv.split("\n")
    assert lines[0].startswith("index,c1_re,c1_im,c2_re,c2_im,support,error_bound")
    assert len(lines) == 362 and "\r" not in csv


def test_boundary_interval():
    s = OperatorTuple([np.array([np.diag([0.0, 1.0])])], None, check=False)
    poly = mr.numerical_range_boundary(s, directions=4)
    # real fan for a Hermitian tuple: support is max(c * 0, c * 1)
    for c, h in zip(poly.directions[:, 0].real, poly.values):
        assert h == pytest.approx(max(0.0, c), abs=1e-12)


def test_boundary_rotation_invariance(s31):
    a = RationalAngle(1, 3)
    C = mr.direction_fan(s31, 50, seed=3)
    h, _ = mr.support_level1(s31, C)
    rot = C * np.array([a.q, 1])
    h2, _ = mr.support_level1(s31, rot)
    assert np.max(np.abs(h - h2)) < 1e-9


def test_direction_fan_properties():
    C = mr.direction_fan(3, 100, seed=7)
    assert C.shape == (100, 3)
    assert np.allclose(np.linalg.norm(C, axis=1), 1)
    assert np.array_equal(C, mr.direction_fan(3, 100, seed=7))
    planar = mr.direction_fan(1, 8)
    assert np.allclose(np.abs(planar[:, 0]), 1)


def test_one_order(F):
    rep = mr.one_order_equivalent(F, F)
    assert rep.verdict == "equivalent" and rep.deviation == 0
    half = F.scaled(0.5)
    rep = mr.one_order_equivalent(F, half)
    assert rep.verdict == "s-to-r-only"
    assert rep.deviation == pytest.approx(0.5, abs=1e-9)


def test_one_order_disk(F):
    D, res = tp.disk_tuple(2000)
    rep = mr.one_order_equivalent(F, D, directions=360, tol=2 * res)
    assert rep.verdict == "equivalent"
    assert rep.to_json()["scope"].startswith("level-1")


def test_complete_equivalence(s31, rng):
    W = nm.random_unitary(3, rng)
    rep = mr.completely_order_equivalent(s31, s31.conjugate(W))
    assert rep.verdict == "equivalent" and rep.star_isomorphic
    rep = mr.completely_order_equivalent(s31, tp.standard_pair(RationalAngle(2, 3)))
    assert rep.verdict == "neither"
    assert all(c.result.certificate_verified for c in rep.certificates)
    F = tp.standard_pair(RationalAngle(1, 2))
    assert mr.completely_order_equivalent(F, tp.transpose_tuple(F)).verdict == "equivalent"


def test_equivalence_symmetric(s31, rng):
    W = nm.random_unitary(3, rng)
    r = s31.conjugate(W)
    assert mr.completely_order_equivalent(r, s31).verdict == mr.completely_order_equivalent(s31, r).verdict


def test_level_link(F, s31):
    assert mr.level_link_check(F, 1) == 0.0
    assert mr.level_link_check(F, 2, directions=20) < 1e-6
    assert mr.level_link_check(s31, 3, directions=10) < 1e-6
    with pytest.raises(PreconditionError):
        mr.level_link_check(F, 0)
