import json
from fractions import Fraction

import oracle as O
import pytest
from conftest import GOLDEN
from hypothesis import given, settings
from hypothesis import strategies as st

from cmchierarchy import killing as K
from cmchierarchy.diffring import XI, XIBAR, DiffPoly, balanced_form, derive
from cmchierarchy.loopalg import det_series
from cmchierarchy.scalar import GAMMA, I

D = DiffPoly


def test_seed():
    t = K.seed()
    assert t.a[0].is_zero()
    assert t.b[0] == D.h2_half(-1) * (-I * GAMMA)
    assert t.c[0] == D.h2_half(1) * I
    assert det_series(K.assemble_Y(t))[2] == D.const(GAMMA * -4)


def test_hand_anchors(tower):
    t = tower[2]
    z3, z4, z5 = D.z(3), D.z(4), D.z(5)
    assert t.a[1] == z3
    assert t.b[1] == D.h2_half(-1) * (z4 - z3 * z3 * Fraction(5, 4)) * (I * Fraction(-1, 2))
    assert t.c[1] == D.h2_half(1) * (z4 - z3 * z3 * Fraction(7, 4)) * (I * Fraction(-1, 2) / GAMMA)
    assert t.a[2] == (z5 - z3 * z4 * 5 + z3 * z3 * z3 * Fraction(35, 8)) * (-1 / GAMMA)


def test_oracle_structure_equations():
    res = O.structure_residuals()
    assert all(O.same(v, 0) for v in res.values()), res


def test_oracle_torsion_agrees_with_closed_form():
    from cmchierarchy.diffring import torsion
    for j in range(3, 7):
        assert O.same(O.from_package(torsion(j)), O.torsion(j))


def test_package_matches_oracle(tower):
    t = tower[2]
    pairs = [(t.a[1], O.a1), (t.b[1], O.b1), (t.c[1], O.c1), (t.a[2], O.a2), (t.b[0], O.b0), (t.c[0], O.c0)]
    for p, q in pairs:
        assert O.same(O.from_package(p), q)


@pytest.mark.parametrize("n", range(4))
def test_golden(n, tower):
    data = json.loads((GOLDEN / f"tower_order{n}.json").read_text())
    assert K.KillingTower.from_json(data) == tower[n]
    assert tower[n].to_json() == data


def test_assemble_Y_examples(tower):
    Y = K.assemble_Y(tower[3])
    assert Y[0][0].is_zero()
    assert Y[1][1] == D.h2_half(1) * (2 * I)
    assert Y.twisted and Y.hi == 8
    assert Y[8][0] == tower[3].a_next * (-I)


@pytest.mark.parametrize("N", range(0, 5))
def test_structure_equations(N, tower):
    rep = K.verify_killing(tower[N])
    assert rep.ok, rep.failures()


def test_determinant_identity(tower):
    for N in range(5):
        assert K.verify_determinant(tower[N]).ok


def test_membership_and_spectral_weights(tower):
    t = tower[5]
    assert K.verify_membership(t).ok
    weights = [balanced_form(a).spectral_weight for a in t.a[1:]]
    assert weights == [1, 3, 5, 7, 9]
    assert balanced_form(t.a[2]).member


@pytest.mark.parametrize("n", range(0, 5))
def test_jacobi_fields(n, tower):
    assert K.verify_jacobi(tower[4], n).ok


def test_conservation(tower):
    t = tower[4]
    f0 = K.conservation(t, 0)
    assert f0.Q.is_zero() and f0.closed
    f1 = K.conservation(t, 1)
    half_ig = I * GAMMA * Fraction(1, 2)
    assert derive(f1.Q, XI) == derive(f1.P, XIBAR) == D.z(3) * half_ig
    assert all(K.conservation(t, n).closed for n in range(5))
    with pytest.raises(ValueError):
        K.conservation(t, 5)


def test_conjugate_tower(tower):
    t = tower[2]
    c = K.conjugate_tower(t)
    assert c.barred
    assert c.b[0] == D.hbar2_half(-1) * (I * GAMMA)
    W = K.assemble_Y(c)
    Y = K.assemble_Y(t)
    assert W == Y.neg_conj_transpose()
    assert W[-1][2] == D.hbar2_half(1) * (2 * I)
    assert K.conjugate_tower(c) == t
    assert K.verify_conjugate_killing(K.conjugate_tower(K.seed())).ok
    assert K.verify_conjugate_killing(c).ok


def test_barred_extend_commutes_with_conjugation(tower):
    c = K.extend(K.conjugate_tower(tower[1]))
    assert c == K.conjugate_tower(tower[2])


def test_tampered_c1_detected(tower):
    bad = tower[2].perturbed("c", 1, 1)
    failed = {c.check for c in K.verify_killing(bad).failures()}
    # a constant is killed by d_xi, so the c-equations alone cannot see it
    assert "killing.a_xi" in failed
    assert "killing.c_rho" in failed


@settings(max_examples=30, deadline=None)
@given(st.sampled_from("abc"), st.integers(0, 3),
       st.sampled_from([1, GAMMA, I, "z3", "z4", "h2half", "hb3"]))
def test_any_single_fault_detected(which, n, delta):
    t = K.build(3)
    if which == "a" and n == 0 and delta == 1:
        delta = "z3"
    if isinstance(delta, str):
        delta = {"z3": D.z(3), "z4": D.z(4), "h2half": D.h2_half(1), "hb3": D.hbar(3)}[delta]
    bad = t.perturbed(which, n, delta)
    assert not K.verify_killing(bad).ok


def test_tower_json_roundtrip(tower):
    t = tower[3]
    assert K.KillingTower.from_json(json.loads(t.dumps())) == t
    assert K.KillingTower.from_json(t.to_json(with_balanced=False)).dumps() == t.dumps()


def test_build_rejects_negative():
    with pytest.raises(ValueError):
        K.build(-1)
