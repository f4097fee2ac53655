import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opsys import spectral as sp
from opsys.errors import PreconditionError
from opsys.tuples import RationalAngle

HALF = RationalAngle(1, 2)


def closed_form_half(a, b):
    """||H|| for n = 2: H = 2cos(a) sz + 2cos(b) sx after a diagonal phase change."""
    return 2 * math.sqrt(math.cos(a) ** 2 + math.cos(b) ** 2)


def test_harper_n1():
    H = sp.harper_matrix(RationalAngle(0, 1), cmath.exp(0.3j), cmath.exp(-1.1j))
    assert H.shape == (1, 1)
    assert H[0, 0] == pytest.approx(2 * math.cos(0.3) + 2 * math.cos(1.1))


def test_harper_n2_identity_phases():
    w = np.linalg.eigvalsh(sp.harper_matrix(HALF, 1, 1))
    assert np.allclose(w, [-2 * math.sqrt(2), 2 * math.sqrt(2)])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_harper_traceless_hermitian(n, a, b):
    ang = RationalAngle.of(1, n)
    H = sp.harper_matrix(ang, cmath.exp(1j * a), cmath.exp(1j * b))
    assert np.array_equal(H, H.conj().T)
    assert abs(np.trace(H)) < 1e-12


def test_harper_rejects_non_unimodular():
    with pytest.raises(PreconditionError):
        sp.harper_matrix(HALF, 2, 1)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_fibre_norm_closed_form(a, b):
    got = sp.fibre_norm(HALF, cmath.exp(1j * a), cmath.exp(1j * b))
    assert got == pytest.approx(closed_form_half(a, b), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_phase_symmetry(n, a, b):
    ang = RationalAngle.of(1, n)
    al, be = cmath.exp(1j * a), cmath.exp(1j * b)
    base = sp.fibre_norm(ang, al, be)
    assert abs(sp.fibre_norm(ang, ang.q * al, be) - base) < 1e-10
    assert abs(sp.fibre_norm(ang, al, ang.q * be) - base) < 1e-10
    assert base <= 4 + 1e-12


def test_norm_examples():
    r = sp.universal_norm(RationalAngle(0, 1))
    assert r.norm == 4.0
    r = sp.universal_norm(HALF, tol=1e-9)
    assert abs(r.norm - 2 * math.sqrt(2)) <= 1e-9 and r.error_bound <= 1e-9
    a, b = sp.universal_norm(RationalAngle(1, 3)), sp.universal_norm(RationalAngle(2, 3))
    assert abs(a.norm - b.norm) <= 2e-9


def test_norm_tol_precondition():
    with pytest.raises(PreconditionError):
        sp.universal_norm(HALF, tol=1e-12)


def test_norm_budget_reported():
    r = sp.universal_norm(RationalAngle(1, 5), tol=1e-9, max_evals=500)
    assert not r.converged
    assert r.error_bound > 1e-9
    # still a valid bracket
    full = sp.universal_norm(RationalAngle(1, 5), tol=1e-9)
    assert r.norm <= full.norm + 1e-12 <= r.norm + r.error_bound + 1e-9


def test_norm_below_four_unless_trivial():
    for n in range(2, 13):
        for k in range(1, n):
            if math.gcd(k, n) == 1:
                r = sp.universal_norm(RationalAngle(k, n), tol=1e-3)
                assert r.norm + r.error_bound < 4


def test_norm_against_dense_grid():
    # independent oracle: brute-force grid over the full torus (not the fundamental domain)
    ang = RationalAngle(2, 7)
    t = np.linspace(0, 2 * math.pi, 181)
    brute = max(sp.fibre_norm(ang, cmath.exp(1j * a), cmath.exp(1j * b)) for a in t[::3] for b in t[::3])
    r = sp.universal_norm(ang, tol=1e-8)
    assert brute <= r.norm + r.error_bound + 1e-12
    assert r.norm - brute < 0.1


def test_grid_refinement_monotone():
    ang = RationalAngle(1, 5)
    prev_v, prev_e = 0.0, None
    for g in (1, 2, 4, 8, 16):
        v, e = sp.universal_norm_grid(ang, g)
        assert v >= prev_v - 1e-15
        if prev_e is not None:
            assert e == pytest.approx(prev_e / 2)
        prev_v, prev_e = v, e
    exact = sp.universal_norm(ang).norm
    assert prev_v <= exact + 1e-9 <= prev_v + prev_e


def test_dilation_constant_examples():
    assert sp.dilation_constant(RationalAngle(0, 1)).constant == 1.0
    r = sp.dilation_constant(HALF, tol=1e-6)
    assert abs(r.constant - math.sqrt(2)) < 1e-6
    assert r.constant == pytest.approx(4 / r.norm)
    assert 1 <= r.constant <= 2
    a, b = sp.dilation_constant(RationalAngle(1, 3)), sp.dilation_constant(RationalAngle(2, 3))
    assert abs(a.constant - b.constant) <= a.error_bound + b.error_bound


def test_constant_bracket():
    r = sp.dilation_constant(RationalAngle(3, 7), tol=1e-7)
    # true norm in [norm, norm + e]  ->  true constant in [constant - error_bound, constant]
    assert 4 / (r.norm + r.norm_error_bound) == pytest.approx(r.constant - r.error_bound, abs=1e-15)


def test_pair_reduces_to_difference():
    third, two_thirds = RationalAngle(1, 3), RationalAngle(2, 3)
    assert sp.dilation_constant_pair(third, third).constant == 1.0
    assert sp.dilation_constant_pair(HALF, RationalAngle(0, 1)).constant == pytest.approx(math.sqrt(2), abs=1e-6)
    assert sp.dilation_constant_pair(two_thirds, third).constant == sp.dilation_constant(third).constant


def test_transpose_check():
    assert sp.transpose_isometry_check(HALF, 3, samples=20).deviation < 1e-10
    assert sp.transpose_isometry_check(HALF, 2, samples=0).deviation == 0
    r = sp.transpose_isometry_check(RationalAngle(1, 3), 32, samples=100)
    assert r.deviation < 1e-3
    with pytest.raises(PreconditionError):
        sp.transpose_isometry_check(HALF, 0)


def test_butterfly_small():
    rows = sp.butterfly_scan(1)
    assert [(r.k, r.n) for r in rows] == [(0, 1)]
    rows = sp.butterfly_scan(2, tol=1e-7)
    assert [(r.k, r.n) for r in rows] == [(0, 1), (1, 2)]
    assert rows[1].constant == pytest.approx(math.sqrt(2), abs=1e-6)


def test_butterfly_table_and_csv():
    rows = sp.butterfly_scan(6, tol=1e-7)
    assert sp.butterfly_symmetry(rows) < 2e-7
    csv = sp.butterfly_csv(rows)
    lines = csv.split("\n")
    assert lines[0] == "k,n,theta,norm,constant,error_bound,grid_final"
    assert len(lines) == len(rows) + 2 and lines[-1] == ""
    assert all(len(l.split(",")) == 7 for l in lines[1:-1])


def test_butterfly_threads_deterministic(monkeypatch):
    monkeypatch.setenv("THREADS", "1")
    one = sp.butterfly_csv(sp.butterfly_scan(5, tol=1e-7))
    monkeypatch.setenv("THREADS", "4")
    four = sp.butterfly_csv(sp.butterfly_scan(5, tol=1e-7))
    assert one == four


def test_reduced_fractions():
    fr = sp.reduced_fractions(4)
    assert [str(a) for a in fr] == ["0/1", "1/2", "1/3", "2/3", "1/4", "3/4"]
