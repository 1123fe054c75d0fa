"""AKS flows, the ``U_m`` decomposition and the identities of the extended system.

Throughout ``Y`` is the canonical formal Killing field of a tower, ``W = -conj(Y)^t``
its conjugate and

    U_m        = ((1/2i) lambda^(-2m-2) Y)_{<=-1}
    Ubar^t_n   = conj(U_n)^t = ((1/2i) lambda^(2n+2) W)_{>=1}.

The t-derivatives act on tower entries only, through

    d/dt_m Y = -[U_m, Y],      d/dtbar_n Y = [Ubar^t_n, Y],

and the same rules applied to ``W``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .diffring import RHO, XI, XIBAR, DiffPoly, balanced_form, derive
from .killing import KillingTower, assemble_Y, conjugate_tower, phi_xi, phi_xibar
from .loopalg import (EXACT, GE_0, GE_1, LE_MINUS1, LoopMatrix, WindowError, bracket, inner,
                      project, trace_product)
from .report import Check, Report, residual_check
from .scalar import GAMMA, I, Scalar

__all__ = [
    "ClosureError",
    "HierarchyForm",
    "u_decompose",
    "ubar_t",
    "aks_rhs",
    "aks_leakage",
    "t_derivative",
    "verify_commuting",
    "verify_Y2",
    "verify_mixed",
    "h2_flow",
    "verify_tangency",
    "assemble_mc",
    "verify_B0",
    "kappa",
    "generating_series",
    "verify_generating_series",
    "finite_type_test",
    "line_polynomial",
]

D = DiffPoly
_HALF_I = Scalar.coerce(1) / (2 * I)  # 1/(2i)


class ClosureError(ArithmeticError):
    """``aks_rhs`` produced components below the support of ``Y``."""


# ---------------------------------------------------------------------------
# U_m

def _check_m(t: KillingTower, m: int):
    if m < 0:
        raise ValueError("flow index must be nonnegative")
    if m > t.order:
        raise ValueError(f"index {m} exceeds tower order {t.order}")


def _u_from_Y(Y: LoopMatrix, m: int) -> Tuple[LoopMatrix, LoopMatrix]:
    S = Y.shift(-2 * m - 2).scale(_HALF_I if Y.ring == EXACT else 0.5 / 1j)
    return project(S, LE_MINUS1), project(S, GE_0)


def u_decompose(t: KillingTower, m: int) -> Tuple[LoopMatrix, LoopMatrix]:
    """``(U_m, U_(m+1))``; the second part carries its own exactness window."""
    _check_m(t, m)
    U, P = _u_from_Y(assemble_Y(t), m)
    if U.hi is not None:
        raise WindowError("U_m not fully determined")
    U.twisted = True
    return U, P


def ubar_t(t: KillingTower, n: int) -> LoopMatrix:
    """``Ubar^t_n``, the formal conjugate transpose of ``U_n``."""
    return u_decompose(t, n)[0].formal_conjugate().transpose()


# ---------------------------------------------------------------------------
# AKS right-hand side

def _lowest(Y: LoopMatrix) -> Optional[int]:
    if Y.lo is not None:
        return Y.lo
    lo, _ = Y.support()
    return lo


def _split_leak(R: LoopMatrix, floor: Optional[int]):
    kept, leak = {}, {}
    for d, m in R.coeffs.items():
        (leak if floor is not None and d < floor else kept)[d] = m
    return kept, leak


def aks_leakage(Y: LoopMatrix, m: int) -> float:
    """Largest modulus among components of ``-[U, Y]`` below the support of ``Y`` (numeric)."""
    A, _ = _u_from_Y(Y, m)
    R = -bracket(A, Y)
    _, leak = _split_leak(R, _lowest(Y))
    return max((abs(v) for mm in leak.values() for v in mm), default=0.0)


def aks_rhs(Y: LoopMatrix, m: int, check: bool = True, rtol: float = 1e-12) -> LoopMatrix:
    """``-[((1/2i) lambda^(-2m-2) Y)_{<=-1}, Y]`` with sub-window components asserted zero.

    In numeric mode the tolerance is relative to the largest coefficient of ``Y``.
    """
    if m < 0:
        raise ValueError("flow index must be nonnegative")
    if Y.hi is not None and Y.hi < 2 * m + 1:
        raise WindowError(f"window {Y.window} does not reach degree {2 * m + 1}")
    if not Y.coeffs:
        return LoopMatrix({}, Y.lo, Y.hi, Y.twisted, Y.ring)
    A, _ = _u_from_Y(Y, m)
    R = -bracket(A, Y)
    floor = _lowest(Y)
    kept, leak = _split_leak(R, floor)
    if check and leak:
        if Y.ring == EXACT:
            if any(not v.is_zero() for mm in leak.values() for v in mm):
                raise ClosureError(f"nonzero components below degree {floor}")
        else:
            scale = max((abs(v) for mm in Y.coeffs.values() for v in mm), default=1.0) or 1.0
            worst = max(abs(v) for mm in leak.values() for v in mm)
            if worst > rtol * scale:
                raise ClosureError(f"sub-window leakage {worst:.3e} exceeds tolerance")
    lo = R.lo if R.lo is not None and (floor is None or R.lo > floor) else (None if Y.lo is None else floor)
    return LoopMatrix(kept, lo, R.hi, R.twisted, R.ring, check=False)


# ---------------------------------------------------------------------------
# t-derivatives of tower entries

@dataclass
class TDerivative:
    """Derivatives of tower entries along ``t_m`` (or ``tbar_m``).

    ``Y`` is the full loop-matrix derivative; ``a``, ``b``, ``c`` hold the entries
    that fall inside its exactness window.
    """

    m: int
    barred: bool
    Y: LoopMatrix
    a: Dict[int, DiffPoly] = field(default_factory=dict)
    b: Dict[int, DiffPoly] = field(default_factory=dict)
    c: Dict[int, DiffPoly] = field(default_factory=dict)


def t_derivative(t: KillingTower, m: int, barred: bool = False) -> TDerivative:
    """Action of ``d/dt_m`` (``barred=False``) or ``d/dtbar_m`` on the tower ``t``.

    For a barred input tower the result is the derivative of ``-conj(Y)^t``; in
    that case only the entries of the loop matrix are filled in.
    """
    base = conjugate_tower(t) if t.barred else t
    _check_m(base, m)
    Y = assemble_Y(t)
    if barred:
        dY = bracket(ubar_t(base, m), Y)
    else:
        dY = -bracket(u_decompose(base, m)[0], Y)
    out = TDerivative(m, barred, dY)
    if not t.barred:
        minus_i_inv = I  # a = i * (Y_11)
        for d in range(0, (dY.hi if dY.hi is not None else 2 * t.order + 2) + 1):
            x, y, z = dY[d]
            if d % 2 == 0:
                out.a[d // 2] = x * minus_i_inv
            else:
                out.c[(d - 1) // 2] = y * Fraction(1, 2)
                out.b[(d - 1) // 2] = z * Fraction(1, 2)
    return out


def _dt_W(t: KillingTower, W: LoopMatrix, m: int) -> LoopMatrix:
    """``d/dt_m`` of ``W = -conj(Y)^t``."""
    return -bracket(u_decompose(t, m)[0], W)


# ---------------------------------------------------------------------------
# commuting identities

def _dt_U(t: KillingTower, Y: LoopMatrix, m: int, l: int) -> LoopMatrix:
    """``d/dt_m U_l`` read off from ``d/dt_m Y``."""
    dY = -bracket(u_decompose(t, m)[0], Y)
    U, _ = _u_from_Y(dY, l)
    if U.hi is not None:
        raise WindowError(f"d/dt_{m} U_{l} needs m + l <= N")
    return U


def verify_commuting(t: KillingTower, m: int, l: int) -> Report:
    """``d_m U_l - d_l U_m + [U_m, U_l] = 0`` plus the bracket identity behind it."""
    _check_m(t, m)
    _check_m(t, l)
    Y = assemble_Y(t)
    Um, Ul = u_decompose(t, m)[0], u_decompose(t, l)[0]
    res = _dt_U(t, Y, m, l) - _dt_U(t, Y, l, m) + bracket(Um, Ul)
    rep = Report([residual_check("commuting", (m, l), res)])
    rep.extend(verify_Y2(t, m, l))
    return rep


def verify_Y2(t: KillingTower, m: int, l: int) -> Report:
    """``[U_m,U_l] + [U_m,U_(l+1)] - [U_l,U_(m+1)] + [U_(m+1),U_(l+1)] = 0`` on its window."""
    Um, Pm = u_decompose(t, m)
    Ul, Pl = u_decompose(t, l)
    res = bracket(Um, Ul) + bracket(Um, Pl) - bracket(Ul, Pm) + bracket(Pm, Pl)
    return Report([residual_check("Y2", (m, l), res)])


def verify_mixed(t: KillingTower, m: int, n: int, tamper: Optional[LoopMatrix] = None) -> Report:
    """``d_m Ubar^t_n + dbar_n U_m + [U_m, Ubar^t_n]_{>=1} + [U_m, Ubar^t_n]_{<=-1} = 0``.

    ``tamper`` is added to ``Ubar^t_n`` wherever it enters (fault injection).
    """
    _check_m(t, m)
    _check_m(t, n)
    Y = assemble_Y(t)
    W = assemble_Y(conjugate_tower(t))
    Um = u_decompose(t, m)[0]
    Ub = ubar_t(t, n)
    if tamper is not None:
        Ub = Ub + tamper
    # d/dt_m Ubar^t_n = ((1/2i) lambda^(2n+2) d_m W)_{>=1}
    dW = _dt_W(t, W, m)
    dUb = project(dW.shift(2 * n + 2).scale(_HALF_I), GE_1)
    # d/dtbar_n U_m = ((1/2i) lambda^(-2m-2) [Ubar^t_n, Y])_{<=-1}
    dU = project(bracket(Ub, Y).shift(-2 * m - 2).scale(_HALF_I), LE_MINUS1)
    br = bracket(Um, Ub)
    plus = project(br, GE_1)
    minus = project(br, LE_MINUS1)
    rep = Report()
    rep.add(residual_check("mixed.plus", (m, n), dUb + plus))
    rep.add(residual_check("mixed.minus", (m, n), dU + minus))
    return rep


# ---------------------------------------------------------------------------
# h2 flow and tangency

def h2_flow(t: KillingTower, m: int) -> DiffPoly:
    """``d/dt_m h2 = -2 h2 a[m+1]``, cross-checked against two bracket routes."""
    _check_m(t, m)
    H2 = D.h(2)
    formula = H2 * t.a_ext(m + 1) * (-2)
    # route 1: [(U_(m+1))_0, U_0] at lambda^-1, (1,2)-entry is d(h2^(1/2))
    _, P = u_decompose(t, m)
    U0 = u_decompose(t, 0)[0]
    P0 = LoopMatrix({0: P[0]}, None, None, twisted=True)
    via_bracket = D.h2_half(1) * bracket(P0, U0)[-1][1] * 2
    # route 2: lambda^-1 slot of d/dt_m U_0 read off from d/dt_m Y
    via_t = D.h2_half(1) * _dt_U(t, assemble_Y(t), m, 0)[-1][1] * 2
    if not (formula == via_bracket == via_t):
        raise AssertionError(f"h2 flow routes disagree at m={m}")
    return formula


def verify_tangency(t: KillingTower) -> Report:
    """``U_0 dt_0 = lambda^-1 phi_-`` and ``-Ubar^t_0 dtbar_0 = lambda phi_+``.

    Also checks the induced derivative relations ``d/dt_0 = -2 h2^(-1/2) d_xi`` and
    ``d/dtbar_0 = -2 hb2^(-1/2) d_xibar`` on every exact degree of ``Y``.
    """
    rep = Report()
    dt0 = D.h2_half(1) * Fraction(-1, 2)
    dtb0 = D.hbar2_half(1) * Fraction(-1, 2)
    U0 = u_decompose(t, 0)[0]
    Ub0 = ubar_t(t, 0)
    rep.add(residual_check("tangency.minus", (0,), U0.scale(dt0) - phi_xi()))
    rep.add(residual_check("tangency.plus", (0,), -Ub0.scale(dtb0) - phi_xibar()))
    Y = assemble_Y(t)
    for barred, direction, factor in ((False, XI, D.h2_half(-1)), (True, XIBAR, D.hbar2_half(-1))):
        dY = t_derivative(t, 0, barred).Y
        hi = min(dY.hi, Y.hi)
        for d in range(1, hi + 1):
            lhs = dY[d]
            rhs = tuple(derive(v, direction) * factor * (-2) for v in Y[d])
            res = [u - v for u, v in zip(lhs, rhs)]
            bad = next((r for r in res if not r.is_zero()), D())
            rep.add(residual_check(f"tangency.dt0.{direction}", (d,), bad))
    return rep


# ---------------------------------------------------------------------------
# extended Maurer-Cartan form and the degree-0 equation

XI_L, XIBAR_L, RHO_L = "Xi", "XiBar", "Rho"


def T(m: int) -> str:
    return f"T({m})"


def TBar(m: int) -> str:
    return f"TBar({m})"


def _conj_label(label: str) -> str:
    if label == XI_L:
        return XIBAR_L
    if label == XIBAR_L:
        return XI_L
    if label.startswith("T("):
        return "TBar(" + label[2:]
    if label.startswith("TBar("):
        return "T(" + label[5:]
    return label


@dataclass
class HierarchyForm:
    """Coefficients of the extended form keyed by coframe label."""

    parts: Dict[str, LoopMatrix]

    def __getitem__(self, label: str) -> LoopMatrix:
        return self.parts[label]

    def labels(self):
        return list(self.parts)

    def formal_symmetry(self) -> Report:
        """``phi = -conj(phi)^t`` labelwise (the conjugate of a label's coefficient
        must equal the coefficient of the conjugate label)."""
        rep = Report()
        for label, A in self.parts.items():
            other = self.parts[_conj_label(label)]
            rep.add(residual_check("formal_symmetry", (label,), A.neg_conj_transpose() - other))
        return rep

    def to_json(self) -> dict:
        return {k: v.to_json() for k, v in self.parts.items()}


def phi_rho() -> LoopMatrix:
    return LoopMatrix({0: (D.const(I * Fraction(1, 2)), D(), D())}, twisted=True)


def assemble_mc(t: KillingTower, max_m: int) -> HierarchyForm:
    """Labels ``Xi, XiBar, Rho, T(1..max_m), TBar(1..max_m)``; ``t_0`` directions are
    absorbed into ``Xi`` and ``XiBar``."""
    if max_m > t.order:
        raise ValueError(f"max_m={max_m} exceeds tower order {t.order}")
    parts = {XI_L: phi_xi(), XIBAR_L: phi_xibar(), RHO_L: phi_rho()}
    for m in range(1, max_m + 1):
        parts[T(m)] = u_decompose(t, m)[0]
        parts[TBar(m)] = -ubar_t(t, m)
    return HierarchyForm(parts)


def kappa(t: KillingTower, m: int, n: int) -> Tuple[DiffPoly, DiffPoly]:
    """``[-Ubar^t_n, U_m]_0 = kappa H`` computed directly and via the trace pairing."""
    A = -ubar_t(t, n)
    B = u_decompose(t, m)[0]
    br = bracket(A, B)
    x, y, z = br[0]
    if not (y.is_zero() and z.is_zero()):
        raise AssertionError("degree-0 bracket is not diagonal")
    H = LoopMatrix({0: (D.const(1), D(), D())}, twisted=True)
    k2 = inner(bracket(H, A), B) * Fraction(1, 2)
    return x, k2


def verify_B0(t: KillingTower, m: int, n: int) -> Tuple[Report, DiffPoly]:
    """Degree-0 equation in the ``dtbar_n ^ dt_m`` direction.

    Returns the report and the coefficient ``2 i kappa_{mn}`` of ``dtbar_n ^ dt_m``
    in ``d rho``.  For ``m = n = 0`` the coefficient is converted to the
    ``xi ^ xibar`` direction and compared with ``R i/2``.
    """
    k1, k2 = kappa(t, m, n)
    rep = Report([residual_check("B0.kappa_two_routes", (m, n), k1 - k2)])
    coeff = k1 * (2 * I)
    if m == 0 and n == 0:
        # dtbar_0 ^ dt_0 = (1/4)(h2 hb2)^(1/2) xibar ^ xi = -(1/4)(h2 hb2)^(1/2) xi ^ xibar
        xx = coeff * D.h2_half(1) * D.hbar2_half(1) * Fraction(-1, 4)
        R = D.const(GAMMA * GAMMA) - D.h(2) * D.hbar(2)
        rep.add(residual_check("B0.gauss", (0, 0), xx - R * (I * Fraction(1, 2))))
    return rep, coeff


# ---------------------------------------------------------------------------
# conservation-law generating series

def _lambda_dlambda(A: LoopMatrix) -> LoopMatrix:
    return LoopMatrix({d: tuple(v * d for v in mm) for d, mm in A.coeffs.items()},
                      A.lo, A.hi, A.twisted, A.ring, check=False)


@dataclass
class GeneratingSeries:
    """Per direction, the lambda^(2n) coefficients of ``tr(Y phidot) + i d a``."""

    lhs: Dict[str, Dict[int, DiffPoly]]
    rhs: Dict[str, Dict[int, DiffPoly]]
    report: Report


def generating_series(t: KillingTower, n_max: Optional[int] = None) -> GeneratingSeries:
    """Coefficient identity ``tr(Y lambda d_lambda phi) + i d a = -2 gamma sum lambda^(2n) phi^n``.

    ``a`` is the series ``sum lambda^(2n) a[n]``; only the xi, xibar and rho
    directions are formed (the dt directions are dropped).
    """
    N = t.order
    if n_max is None:
        n_max = N - 1
    if n_max > N:
        raise ValueError(f"n_max={n_max} exceeds tower order {N}")
    Y = assemble_Y(t)
    dirs = {XI: phi_xi(), XIBAR: phi_xibar(), RHO: phi_rho()}
    lhs: Dict[str, Dict[int, DiffPoly]] = {}
    rhs: Dict[str, Dict[int, DiffPoly]] = {}
    rep = Report()
    m2g = GAMMA * -2
    for direction, phi in dirs.items():
        tr = trace_product(Y, _lambda_dlambda(phi))
        lhs[direction], rhs[direction] = {}, {}
        for n in range(n_max + 1):
            v = tr[2 * n] + derive(t.a[n], direction) * I
            if direction == XI:
                target = t.c[n] * m2g
            elif direction == XIBAR:
                target = t.b_ext(n - 1) * m2g
            else:
                target = D()
            lhs[direction][n], rhs[direction][n] = v, target
            rep.add(residual_check(f"series.{direction}", (n,), v - target))
    return GeneratingSeries(lhs, rhs, rep)


def verify_generating_series(t: KillingTower, n_max: Optional[int] = None) -> Report:
    return generating_series(t, n_max).report


# ---------------------------------------------------------------------------
# linear finite type

def _check_assignment(assignment: Mapping) -> Dict[int, complex]:
    out = {}
    for k, v in assignment.items():
        j = int(str(k).lstrip("z"))
        if j < 3:
            raise ValueError(f"balanced coordinates start at z3, got {k!r}")
        out[j] = complex(v)
    return out


def finite_type_test(t: KillingTower, assignment: Mapping, N0: int, gamma: float = 1.0,
                     tol: float = 1e-12) -> bool:
    """True iff ``a[N0+1]`` vanishes at the point and so does ``d/dt_N0 h2``."""
    if N0 < 0 or N0 + 1 > t.order:
        raise ValueError(f"N0={N0} needs a tower of order >= {N0 + 1}")
    z = _check_assignment(assignment)
    p = t.a[N0 + 1]
    try:
        val = p.evaluate_balanced(gamma, z)
        flow = h2_flow(t, N0).evaluate_balanced(gamma, z)
    except KeyError as exc:
        raise ValueError(f"assignment misses z{exc.args[0]}") from None
    return abs(val) <= tol and abs(flow) <= tol


def line_polynomial(p: DiffPoly, base: Mapping, direction: Mapping, gamma: float = 1.0) -> np.ndarray:
    """Coefficients (highest first) of ``s -> p(z = base + s * direction)``.

    ``p`` must lie in C[z3, z4, ...].
    """
    bf = balanced_form(p)
    if not bf.member:
        raise ValueError("polynomial is not in C[z]")
    base = _check_assignment(base)
    direction = _check_assignment(direction)
    P = np.polynomial.Polynomial
    total = P([0j])
    for (_, zs, _), c in bf.terms.items():
        term = P([c.evaluate(gamma)])
        for j, e in zs:
            term = term * P([base.get(j, 0j), direction.get(j, 0j)]) ** e
        total = total + term
    return total.coef[::-1]
