from fractions import Fraction

import pytest

from cmchierarchy import so4
from cmchierarchy.diffring import RHO, XI, XIBAR, DiffPoly, conjugate
from cmchierarchy.scalar import I

D = DiffPoly
zero = D()


def test_X_examples(tower):
    X = so4.build_X(tower[3])
    assert X[0][1][2] == zero
    assert X[2][0][3] == -D.z(3)
    assert X.hi == 8


def test_X_antisymmetric_and_regraded(tower):
    t = tower[4]
    X = so4.build_X(t)
    for d, m in X.coeffs.items():
        for i in range(4):
            for j in range(4):
                assert m[i][j] == -m[j][i]
    # a^5 = a[2] sits at lambda^4 with sign -1
    assert X[4][1][2] == t.a[2] * I
    assert X[6][0][3] == t.a[3]


def test_antisymmetry_enforced():
    one = D.const(1)
    bad = [[zero] * 4 for _ in range(4)]
    bad[0][1] = one
    with pytest.raises(ValueError):
        so4.So4LoopMatrix({0: bad})


def test_psi_printed_entries():
    psi = so4.build_psi()
    assert psi[RHO][0][1][2] == D.const(1)
    assert psi[XI][-1][1][3] == D.h(2) * Fraction(-1, 2)
    minus, plus = psi[XI][-1], psi[XIBAR][1]
    for i in range(4):
        for j in range(4):
            assert plus[i][j] == conjugate(minus[i][j])
    assert psi[XI].formal_conjugate()[1] == plus


def test_epsilon_table():
    assert [so4.epsilon(m) for m in range(8)] == [1, -1, -1, 1, 1, -1, -1, 1]


def test_V1_examples(tower):
    t = tower[3]
    V1 = so4.build_V(t, 1)
    assert all(v.is_zero() for r in V1[-4] for v in r)
    # b^2, c^2 enter at lambda^-3 with sign eps(1) * (-1)^1 = +1, placed as in X at lambda^1
    assert V1[-3] == so4.build_X(t)[1]
    assert V1.degrees() == [-3, -2, -1]


def test_V_bounds(tower):
    with pytest.raises(ValueError):
        so4.build_V(tower[1], 2)
    with pytest.raises(ValueError):
        so4.build_V(tower[1], -1)


def test_static_order4(tower):
    rep = so4.verify_so4(tower[4], max_order=8, max_m=2)
    assert rep.ok, rep.failures()
    kinds = {c.check for c in rep.checks}
    expected = {f"so4.static.{d}" for d in (XI, XIBAR, RHO)} | {"so4.extended", "so4.pfaffian.flow"}
    assert expected <= kinds


def test_extended_m1_and_V0(tower):
    rep = so4.verify_so4(tower[4], max_order=6, max_m=1)
    ext = [c for c in rep.checks if c.check == "so4.extended"]
    assert {c.indices[0] for c in ext} == {0, 1}
    assert all(c.residual_zero for c in ext)


def test_sign_flip_detected(tower):
    rep = so4.verify_so4(tower[4], max_order=6, max_m=0, psi=so4.build_psi(sign_flip_plus=True))
    failed = {c.check for c in rep.failures()}
    assert f"so4.static.{XIBAR}" in failed
    assert f"so4.static.{XI}" not in failed


def test_pfaffian_constant(tower):
    pf = so4.pfaffian(so4.build_X(tower[4]))
    for d in range(pf.hi + 1):
        assert all(not any(k) for k in pf[d].terms)
    assert not pf[2].is_zero()
