from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmchierarchy import hierarchy as Hy
from cmchierarchy import killing as K
from cmchierarchy.diffring import RHO, XI, XIBAR, DiffPoly
from cmchierarchy.loopalg import (LE_MINUS1, NUMERIC, LoopMatrix, WindowError, bracket, inner,
                                  project)
from cmchierarchy.scalar import GAMMA, I

D = DiffPoly
zero = D()


def test_U0(tower):
    U0, _ = Hy.u_decompose(tower[3], 0)
    assert U0.degrees() == [-1]
    assert U0[-1] == (zero, D.h2_half(1), D.h2_half(-1) * -GAMMA)


def test_U1_and_top_slot(tower):
    t = tower[3]
    U1, _ = Hy.u_decompose(t, 1)
    assert U1[-2] == (D.z(3) * Fraction(-1, 2), zero, zero)
    for m in range(4):
        assert Hy.u_decompose(t, m)[0][-2 * m - 2] == (zero, zero, zero)


def test_u_decompose_bounds(tower):
    with pytest.raises(ValueError):
        Hy.u_decompose(tower[2], 3)
    with pytest.raises(ValueError):
        Hy.u_decompose(tower[2], -1)


def test_ubar_is_conjugate_transpose(tower):
    t = tower[2]
    U = Hy.u_decompose(t, 1)[0]
    assert Hy.ubar_t(t, 1) == U.formal_conjugate().transpose()
    assert Hy.ubar_t(t, 0).degrees() == [1]


def test_aks_rhs_zero_and_window():
    Z = LoopMatrix.zero()
    assert Hy.aks_rhs(Z, 2).is_zero()
    Y = K.assemble_Y(K.build(1))
    with pytest.raises(WindowError):
        Hy.aks_rhs(Y, 2)


def test_aks_rhs_matches_t_derivative(tower):
    t = tower[3]
    Y = K.assemble_Y(t)
    for m in range(3):
        R = Hy.aks_rhs(Y, m)
        td = Hy.t_derivative(t, m)
        assert R == td.Y
        # lambda^1 (1,2) entry is 2 * d/dt_m c[0]
        assert R[1][1] == td.c[0] * 2


def test_c0_flow_consistent_with_h2_flow(tower):
    t = tower[4]
    for m in range(3):
        # c[0] = i h2^(1/2), so d c[0] = (i/2) h2^(-1/2) d h2
        expect = Hy.h2_flow(t, m) * D.h2_half(-1) * (I * Fraction(1, 2))
        assert Hy.t_derivative(t, m).c[0] == expect
        assert Hy.t_derivative(t, m).c[0] == D.h2_half(1) * t.a_ext(m + 1) * -I


def test_h2_flow_values(tower):
    t = tower[4]
    assert Hy.h2_flow(t, 0) == D.h2_half(-1) * D.h(3) * -2
    assert Hy.h2_flow(t, 1) == D.h(2) * t.a[2] * -2


def test_barred_flows_fix_U0(tower):
    t = tower[3]
    Y = K.assemble_Y(t)
    for n in range(3):
        dY = Hy.t_derivative(t, n, barred=True).Y
        U0dot = project(dY.shift(-2).scale(Fraction(1, 2) / I), LE_MINUS1)
        assert U0dot.hi is None and U0dot.is_zero()
        assert dY == bracket(Hy.ubar_t(t, n), Y)


def test_mixed_partials_of_diagonal(tower):
    t = tower[4]
    for m in range(3):
        for l in range(3):
            if m + l + 1 > 3:
                continue
            lhs = Hy.t_derivative(t, m).a[l + 1]
            rhs = Hy.t_derivative(t, l).a[m + 1]
            assert lhs == rhs


@pytest.mark.parametrize("m,l", [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (1, 2)])
def test_commuting(m, l, tower):
    rep = Hy.verify_commuting(tower[3], m, l)
    assert rep.ok, rep.failures()


def test_Y2_at_1_2(tower):
    assert Hy.verify_Y2(tower[3], 1, 2).ok


@pytest.mark.parametrize("m,n", [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1)])
def test_mixed(m, n, tower):
    rep = Hy.verify_mixed(tower[3], m, n)
    assert rep.ok, rep.failures()


def test_mixed_tampered(tower):
    # a fault in degree 1 is invisible to the minus part for any Ubar in g_{>=1}
    bump = LoopMatrix({5: (zero, D.const(1), zero)}, twisted=True)
    rep = Hy.verify_mixed(tower[3], 1, 0, tamper=bump)
    assert {c.check for c in rep.failures()} == {"mixed.plus"}


def test_tangency(tower):
    for N in range(4):
        rep = Hy.verify_tangency(tower[N])
        assert rep.ok, rep.failures()


def test_B0_gauss(tower):
    rep, coeff = Hy.verify_B0(tower[2], 0, 0)
    assert rep.ok
    R = D.const(GAMMA * GAMMA) - D.h(2) * D.hbar(2)
    assert coeff * D.h2_half(1) * D.hbar2_half(1) * Fraction(-1, 4) == R * (I * Fraction(1, 2))


def test_B0_two_routes(tower):
    for m, n in [(1, 1), (1, 0), (2, 1)]:
        rep, _ = Hy.verify_B0(tower[3], m, n)
        assert rep.ok


def test_formal_symmetry(tower):
    phi = Hy.assemble_mc(tower[3], 3)
    assert phi.labels()[:3] == [Hy.XI_L, Hy.XIBAR_L, Hy.RHO_L]
    assert phi.formal_symmetry().ok
    with pytest.raises(ValueError):
        Hy.assemble_mc(tower[2], 3)


def test_generating_series(tower):
    gs = Hy.generating_series(tower[4])
    assert gs.report.ok, gs.report.failures()
    assert set(gs.lhs) == {XI, XIBAR, RHO}
    assert all(v.is_zero() for v in gs.lhs[RHO].values())
    assert gs.lhs[XI][2] == tower[4].c[2] * (GAMMA * -2)


def test_generating_series_detects_fault(tower):
    bad = tower[3].perturbed("c", 1, D.z(3))
    assert not Hy.verify_generating_series(bad).ok


def test_finite_type_examples(tower):
    t = tower[2]
    assert Hy.finite_type_test(t, {"z3": 0}, 0)
    assert not Hy.finite_type_test(t, {"z3": 1}, 0)
    with pytest.raises(ValueError):
        Hy.finite_type_test(t, {"z2": 1}, 0)
    with pytest.raises(ValueError):
        Hy.finite_type_test(t, {"z3": 1}, 2)
    with pytest.raises(ValueError):
        Hy.finite_type_test(t, {"z3": 1}, 1)


def test_finite_type_root_on_line(tower):
    t = tower[2]
    base, direction = {"z3": 1, "z4": 1, "z5": 0}, {"z5": 1}
    coeffs = Hy.line_polynomial(t.a[2], base, direction)
    roots = np.roots(coeffs)
    assert len(roots) == 1 and abs(roots[0] - 0.625) < 1e-12
    s = roots[0]
    point = {"z3": 1, "z4": 1, "z5": s}
    assert Hy.finite_type_test(t, point, 1)
    assert not Hy.finite_type_test(t, {**point, "z5": s + 1e-3}, 1)


def test_line_polynomial_rejects_non_member(tower):
    with pytest.raises(ValueError):
        Hy.line_polynomial(D.hbar(3), {"z3": 1}, {"z3": 1})


# -- random twisted elements of g_{>=1} --------------------------------------

cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


@st.composite
def positive_twisted(draw, top=7):
    coeffs = {}
    for d in range(1, top + 1):
        if d % 2 == 0:
            coeffs[d] = (draw(cplx), 0j, 0j)
        else:
            coeffs[d] = (0j, draw(cplx), draw(cplx))
    return LoopMatrix(coeffs, None, None, twisted=True, ring=NUMERIC)


@settings(max_examples=40, deadline=None)
@given(positive_twisted(), st.integers(0, 2))
def test_aks_closure_numeric(Y, m):
    R = Hy.aks_rhs(Y, m, check=False)
    assert R.twisted and not R.parity_violations()
    assert Hy.aks_leakage(Y, m) <= 1e-12 * max([1.0] + [abs(v) for mm in Y.coeffs.values() for v in mm])
    assert all(d >= 1 for d in R.coeffs)


@st.composite
def exact_positive(draw, top=6):
    rat = st.fractions(min_value=-3, max_value=3, max_denominator=4)
    coeffs = {}
    for d in range(1, top + 1):
        if d % 2 == 0:
            coeffs[d] = (D.const(draw(rat)), zero, zero)
        else:
            coeffs[d] = (zero, D.const(draw(rat)), D.const(draw(rat)) * I)
    return LoopMatrix(coeffs, None, None, twisted=True)


@settings(max_examples=25, deadline=None)
@given(exact_positive(), st.integers(0, 2))
def test_aks_closure_exact(Y, m):
    R = Hy.aks_rhs(Y, m)
    assert all(d >= 1 for d in R.coeffs)
    # tr(Y [A, Y]) = 0: the Hamiltonians are flow invariants
    assert inner(Y, R).is_zero()
