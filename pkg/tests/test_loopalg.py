from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmchierarchy import killing as K
from cmchierarchy.diffring import DiffPoly
from cmchierarchy.loopalg import (EXACT, GE_0, GE_1, LE_0, LE_MINUS1, NUMERIC, LoopMatrix, RingMismatch,
                                  WindowError, bracket, det_series, hamiltonian, inner, project, r_apply)
from cmchierarchy.scalar import GAMMA, I

D = DiffPoly
one, zero = D.const(1), D()
H = (one, zero, zero)
E12 = (zero, one, zero)
E21 = (zero, zero, one)


def lm(coeffs, lo=None, hi=None, twisted=None):
    return LoopMatrix.from_entries(coeffs, lo, hi, twisted=twisted)


def test_project_examples():
    Y = lm({-1: E12, 2: H})
    assert project(Y, LE_MINUS1) == lm({-1: E12})
    assert project(LoopMatrix.zero(), GE_1).is_zero()
    phi = K.phi_xi()
    assert project(phi, LE_MINUS1) == phi
    for a, b in ((LE_MINUS1, GE_0), (LE_0, GE_1)):
        assert project(Y, a) + project(Y, b) == Y


def test_r_apply_examples():
    assert r_apply(lm({-1: E21})) == -lm({-1: E21})
    assert r_apply(lm({0: H})) == lm({0: H})
    assert r_apply(lm({-1: E21, 1: H}, twisted=False)) == lm({-1: tuple(-v for v in E21), 1: H}, twisted=False)
    Y = lm({-3: E12, -2: H, 1: E21, 4: H})
    assert r_apply(r_apply(Y)) == Y


def test_bracket_examples():
    assert bracket(lm({0: H}), lm({0: E12}, twisted=False)) == lm({0: (zero, D.const(2), zero)}, twisted=False)
    Y = K.assemble_Y(K.build(2))
    assert bracket(Y, Y).is_zero()
    assert bracket(lm({1: E12}), lm({1: E21})) == lm({2: H})


def test_inner_examples():
    assert inner(lm({-1: E12}), lm({1: E21})) == one
    assert inner(lm({0: H}), lm({0: H})) == D.const(2)


def test_inner_window_error():
    A = lm({1: E12}, lo=1, hi=None)
    B = lm({-1: E21}, lo=None, hi=-1)
    with pytest.raises(WindowError):
        inner(A, B)


def test_ring_mismatch():
    A = lm({1: E12})
    B = LoopMatrix({1: (0j, 1 + 0j, 0j)}, ring=NUMERIC, twisted=True)
    with pytest.raises(RingMismatch):
        bracket(A, B)


def test_det_examples():
    t0 = K.seed()
    s = det_series(K.assemble_Y(t0))
    assert s[2] == D.const(GAMMA * -4)
    assert det_series(LoopMatrix.zero())[2] == zero
    s1 = det_series(K.assemble_Y(K.build(1)))
    assert s1[4].is_zero()


def test_hamiltonian_examples():
    Y = K.assemble_Y(K.build(4))
    assert hamiltonian(Y, 0) == D.const(2 * I * GAMMA)
    for m in range(1, 4):
        assert hamiltonian(Y, m).is_zero()
    assert hamiltonian(LoopMatrix.zero(), 3) == zero
    with pytest.raises(WindowError):
        hamiltonian(Y, 10)


def test_twisted_parity_enforced():
    with pytest.raises(ValueError):
        LoopMatrix({1: (one, zero, zero)}, twisted=True)


def test_shift_and_conjugate_windows():
    Y = K.assemble_Y(K.build(1))
    W = Y.neg_conj_transpose()
    assert W.window == (-4, None)
    assert W.neg_conj_transpose() == Y
    assert Y.shift(-2).window == (None, 2)


def test_json_roundtrip():
    Y = K.assemble_Y(K.build(2))
    assert LoopMatrix.from_json(Y.to_json()) == Y


# -- random twisted exact elements ------------------------------------------

rat = st.fractions(min_value=-3, max_value=3, max_denominator=3)


@st.composite
def twisted(draw, lo=-3, hi=3):
    coeffs = {}
    for d in range(lo, hi + 1):
        if draw(st.booleans()):
            if d % 2 == 0:
                coeffs[d] = (D.const(draw(rat)), zero, zero)
            else:
                coeffs[d] = (zero, D.const(draw(rat)), D.const(draw(rat)))
    return LoopMatrix(coeffs, None, None, twisted=True)


@settings(max_examples=40, deadline=None)
@given(twisted(), twisted())
def test_inner_symmetric(A, B):
    assert inner(A, B) == inner(B, A)


@settings(max_examples=40, deadline=None)
@given(twisted(), twisted(), twisted())
def test_ad_invariance(A, B, C):
    assert (inner(bracket(C, A), B) + inner(A, bracket(C, B))).is_zero()


@settings(max_examples=30, deadline=None)
@given(twisted(), twisted(), twisted())
def test_jacobi_identity(A, B, C):
    s = bracket(A, bracket(B, C)) + bracket(B, bracket(C, A)) + bracket(C, bracket(A, B))
    assert s.is_zero()


@settings(max_examples=40, deadline=None)
@given(twisted(), twisted(), st.sampled_from([LE_MINUS1, LE_0, GE_0, GE_1]))
def test_twisted_closure(A, B, part):
    for X in (A + B, bracket(A, B), A.scale(Fraction(3, 2)), project(A, part)):
        assert X.twisted and not X.parity_violations()


@settings(max_examples=30, deadline=None)
@given(twisted(1, 6), twisted(1, 6), st.integers(2, 6), st.integers(2, 6))
def test_window_bookkeeping(A, B, ha, hb):
    """Truncated products agree with the untruncated ones inside the reported window."""
    # below-support zeros are known, so truncation from above is the only loss
    At = LoopMatrix({d: m for d, m in A.coeffs.items() if d <= ha}, None, ha, twisted=True)
    Bt = LoopMatrix({d: m for d, m in B.coeffs.items() if d <= hb}, None, hb, twisted=True)
    wide = bracket(A, B)
    narrow = bracket(At, Bt)
    assert narrow.hi is not None
    for d in range(-2, narrow.hi + 1):
        assert narrow[d] == wide[d]
    sw, sn = det_series(A), det_series(At)
    for d in range(0, sn.hi + 1):
        assert sn[d] == sw[d]


def test_numeric_mode_bracket():
    A = LoopMatrix({0: (1 + 0j, 0j, 0j)}, ring=NUMERIC, twisted=False)
    B = LoopMatrix({0: (0j, 1 + 0j, 0j)}, ring=NUMERIC, twisted=False)
    assert bracket(A, B)[0] == (0j, 2 + 0j, 0j)
    assert A.ring == NUMERIC and lm({0: H}).ring == EXACT
