"""Canonical formal Killing field of the CMC system.

The coefficients ``a[n] = a^{2n+1}``, ``b[n] = b^{2n+2}``, ``c[n] = c^{2n+2}`` are
built by a recursion that uses only the xi-derivative and the determinant
constraint ``det Y = -4 gamma lambda^2``:

1. ``a[N+1] = (2 / (i gamma)) d_xi b[N]``;
2. ``(b[N+1], c[N+1])`` solve

   ``i h2 b + i gamma c = d_xi a[N+1]``
   ``c[0] b + b[0] c = (1/4) sum_{p+q=N+2} a[p] a[q] - sum_{p+q=N+1, 1<=p<=N} b[p] c[q]``

   whose determinant ``2 gamma h2^(1/2)`` is a unit.

All six components of the structure equations are then checked separately,
so they are consequences here rather than inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from .diffring import RHO, XI, XIBAR, DiffPoly, balanced_form, conjugate, derive, jacobi
from .loopalg import LoopMatrix, det_series
from .report import Report, residual_check
from .scalar import GAMMA, I, ONE, Scalar

__all__ = [
    "KillingTower",
    "ConservationForm",
    "RecursionError_",
    "seed",
    "extend",
    "build",
    "assemble_Y",
    "conjugate_tower",
    "verify_killing",
    "verify_jacobi",
    "conservation",
    "verify_determinant",
    "verify_membership",
    "verify_conjugate_killing",
]

D = DiffPoly
_iG = I * GAMMA
_H2 = D.h(2)
_HB2 = D.hbar(2)


class RecursionError_(RuntimeError):
    """The recursion left the half-power ring (an implementation bug, never expected)."""


@dataclass
class KillingTower:
    """Coefficients of ``Y`` up to order ``N``.

    ``barred`` marks the formal conjugate tower, whose entries are conjugates
    of the original ones; it assembles to ``-conj(Y)^t``.
    """

    a: List[DiffPoly]
    b: List[DiffPoly]
    c: List[DiffPoly]
    barred: bool = False

    @property
    def order(self) -> int:
        return len(self.b) - 1

    @property
    def a_next(self) -> DiffPoly:
        """``a[N+1]``, fixed by ``d_xi b[N]`` (or its mirror for barred towers)."""
        if self.barred:
            # conjugate of (2/(i gamma)) d_xi b  is  (2/(-i gamma)) d_xibar bbar
            return derive(self.b[-1], XIBAR) * (Fraction(2) / (-_iG))
        return derive(self.b[-1], XI) * (Fraction(2) / _iG)

    def a_ext(self, n: int) -> DiffPoly:
        if n == self.order + 1:
            return self.a_next
        if n < 0:
            return D()
        return self.a[n]

    def b_ext(self, n: int) -> DiffPoly:
        return D() if n < 0 else self.b[n]

    def c_ext(self, n: int) -> DiffPoly:
        return D() if n < 0 else self.c[n]

    def __eq__(self, other):
        if not isinstance(other, KillingTower):
            return NotImplemented
        return (self.a, self.b, self.c, self.barred) == (other.a, other.b, other.c, other.barred)

    def perturbed(self, which: str, n: int, delta) -> "KillingTower":
        """Copy with one entry shifted by ``delta`` (fault injection)."""
        a, b, c = list(self.a), list(self.b), list(self.c)
        seq = {"a": a, "b": b, "c": c}[which]
        seq[n] = seq[n] + D.coerce(delta)
        return KillingTower(a, b, c, self.barred)

    # -- serialization --------------------------------------------------
    def to_json(self, with_balanced: bool = True) -> dict:
        out = {
            "order": self.order,
            "barred": self.barred,
            "a": [p.to_json() for p in self.a],
            "b": [p.to_json() for p in self.b],
            "c": [p.to_json() for p in self.c],
        }
        if with_balanced and not self.barred:
            out["balanced"] = {
                "a": [balanced_form(p).to_json() for p in self.a],
                "h2_half_b": [balanced_form(D.h2_half(1) * p).to_json() for p in self.b],
                "h2_mhalf_c": [balanced_form(D.h2_half(-1) * p).to_json() for p in self.c],
            }
            out["spectral_weights"] = [balanced_form(p).spectral_weight for p in self.a]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "KillingTower":
        return cls([D.from_json(p) for p in data["a"]],
                   [D.from_json(p) for p in data["b"]],
                   [D.from_json(p) for p in data["c"]],
                   bool(data.get("barred", False)))

    def dumps(self, with_balanced: bool = True) -> str:
        return json.dumps(self.to_json(with_balanced), sort_keys=True, separators=(",", ":"))


@dataclass
class ConservationForm:
    """``phi^n = P xi + Q xibar`` with ``P = c[n]`` and ``Q = b[n-1]``."""

    n: int
    P: DiffPoly
    Q: DiffPoly
    closed: bool = field(default=False)

    def defect(self) -> DiffPoly:
        return derive(self.Q, XI) - derive(self.P, XIBAR)


# ---------------------------------------------------------------------------
# construction

def seed() -> KillingTower:
    """Order-0 tower: ``a^1 = 0``, ``b^2 = -i gamma h2^(-1/2)``, ``c^2 = i h2^(1/2)``."""
    return KillingTower([D()], [D.h2_half(-1) * (-_iG)], [D.h2_half(1) * I])


def _in_half_power_ring(p: DiffPoly) -> bool:
    return all(e >= 0 for k in p.terms for e in k[2:])


def extend(t: KillingTower) -> KillingTower:
    """Order ``N+1`` tower from an order ``N`` tower."""
    if t.barred:
        return conjugate_tower(extend(conjugate_tower(t)))
    N = t.order
    a_new = t.a_next
    da = derive(a_new, XI)
    a_all = t.a + [a_new]
    rhs = D()
    for p in range(0, N + 3):
        q = N + 2 - p
        if q < 0 or q > N + 1 or p > N + 1:
            continue
        rhs = rhs + a_all[p] * a_all[q]
    rhs = rhs * Fraction(1, 4)
    for p in range(1, N + 1):
        rhs = rhs - t.b[p] * t.c[N + 1 - p]
    b0, c0 = t.b[0], t.c[0]
    # Cramer on [[i h2, i gamma], [c0, b0]] (b, c)^T = (da, rhs)^T
    det = D.h2_half(1) * (2 * GAMMA)
    b_new = (da * b0 - rhs * _iG) / det
    c_new = (_H2 * I * rhs - c0 * da) / det
    for name, p in (("a", a_new), ("b", b_new), ("c", c_new)):
        if not _in_half_power_ring(p):
            raise RecursionError_(f"{name}[{N + 1}] left the half-power ring")
    return KillingTower(a_all, t.b + [b_new], t.c + [c_new])


def build(order: int) -> KillingTower:
    if order < 0:
        raise ValueError("order must be nonnegative")
    t = seed()
    for _ in range(order):
        t = extend(t)
    return t


def assemble_Y(t: KillingTower) -> LoopMatrix:
    """``Y = [[-i a, 2c], [2b, i a]]`` with window up to degree ``2N+2``.

    For a barred tower the result is ``-conj(Y)^t`` (negative degrees).
    """
    if t.barred:
        return assemble_Y(conjugate_tower(t)).neg_conj_transpose()
    N = t.order
    coeffs = {}
    zero = D()
    for n in range(N + 2):
        a = t.a_ext(n)
        coeffs[2 * n] = (a * (-I), zero, zero)
    for n in range(N + 1):
        coeffs[2 * n + 1] = (zero, t.c[n] * 2, t.b[n] * 2)
    return LoopMatrix(coeffs, None, 2 * N + 2, twisted=True)


def conjugate_tower(t: KillingTower) -> KillingTower:
    """Formal conjugate of every entry; flips the ``barred`` flag."""
    return KillingTower([conjugate(p) for p in t.a], [conjugate(p) for p in t.b],
                        [conjugate(p) for p in t.c], not t.barred)


# ---------------------------------------------------------------------------
# verification

def _structure_residuals(t: KillingTower):
    """Yield ``(name, n, residual)`` for the six scalar structure equations."""
    N = t.order
    half = Fraction(1, 2)
    for n in range(N + 1):
        yield "a_xi", n, derive(t.a[n], XI) - (t.c[n] * _iG + _H2 * t.b[n] * I)
    for n in range(N + 2):
        yield "a_xibar", n, derive(t.a_ext(n), XIBAR) - (t.b_ext(n - 1) * _iG + _HB2 * t.c_ext(n - 1) * I)
    for n in range(N + 1):
        yield "b_xi", n, derive(t.b[n], XI) - t.a_ext(n + 1) * (_iG * half)
        yield "b_xibar", n, derive(t.b[n], XIBAR) - _HB2 * t.a[n] * (I * half)
        yield "c_xi", n, derive(t.c[n], XI) - _H2 * t.a_ext(n + 1) * (I * half)
        yield "c_xibar", n, derive(t.c[n], XIBAR) - t.a[n] * (_iG * half)
    for n in range(N + 1):
        # rho-components: a has weight 0, b weight -1, c weight +1
        yield "a_rho", n, derive(t.a[n], RHO)
        yield "b_rho", n, derive(t.b[n], RHO) - t.b[n] * I
        yield "c_rho", n, derive(t.c[n], RHO) + t.c[n] * I


def verify_killing(t: KillingTower) -> Report:
    """Exact residuals of the six structure equations plus their rho-components."""
    if t.barred:
        return verify_conjugate_killing(t)
    rep = Report()
    for name, n, res in _structure_residuals(t):
        rep.add(residual_check(f"killing.{name}", (n,), res))
    return rep


def verify_conjugate_killing(t: KillingTower) -> Report:
    """Check ``d(-conj Y^t) + [phi_lambda, -conj Y^t] = 0`` componentwise.

    The xi-part of ``phi_lambda`` is ``lambda^-1 [[0, -h2/2], [gamma/2, 0]]`` and the
    xibar-part is ``lambda [[0, -gamma/2], [hb2/2, 0]]``.
    """
    from .loopalg import bracket
    W = assemble_Y(t) if t.barred else assemble_Y(conjugate_tower(t))
    rep = Report()
    for direction, phi in ((XI, phi_xi()), (XIBAR, phi_xibar())):
        br = bracket(phi, W)
        lo = W.lo
        for d in range(lo + 1, 0):
            dx = tuple(derive(v, direction) for v in W[d])
            res = tuple(u + v for u, v in zip(dx, br[d]))
            zero = all(r.is_zero() for r in res)
            rep.add(residual_check(f"conj_killing.{direction}", (d,),
                                   D() if zero else next(r for r in res if not r.is_zero())))
    return rep


def phi_xi() -> LoopMatrix:
    """xi-coefficient of ``phi_lambda``."""
    return LoopMatrix({-1: (D(), _H2 * Fraction(-1, 2), D.const(GAMMA * Fraction(1, 2)))}, twisted=True)


def phi_xibar() -> LoopMatrix:
    """xibar-coefficient of ``phi_lambda``."""
    return LoopMatrix({1: (D(), D.const(GAMMA * Fraction(-1, 2)), _HB2 * Fraction(1, 2))}, twisted=True)


def verify_jacobi(t: KillingTower, n: int) -> Report:
    if n > t.order:
        raise ValueError(f"n={n} exceeds tower order {t.order}")
    return Report([residual_check("jacobi", (n,), jacobi(t.a[n]))])


def conservation(t: KillingTower, n: int) -> ConservationForm:
    """``phi^n = c^{2n+2} xi + b^{2n} xibar`` with ``b^0 = 0``; closedness is computed."""
    if n > t.order:
        raise ValueError(f"n={n} exceeds tower order {t.order}")
    form = ConservationForm(n, t.c[n], t.b_ext(n - 1))
    form.closed = form.defect().is_zero()
    return form


def verify_determinant(t: KillingTower) -> Report:
    """``det Y = -4 gamma lambda^2`` through the window of ``det Y``."""
    Y = assemble_Y(t)
    det = det_series(Y)
    rep = Report()
    target = {2: D.const(GAMMA * -4)}
    for d in range(0, det.hi + 1):
        rep.add(residual_check("determinant", (d,), det[d] - target.get(d, D())))
    return rep


def verify_membership(t: KillingTower) -> Report:
    """``a[n]``, ``h2^(1/2) b[n]``, ``h2^(-1/2) c[n]`` lie in C[z3, z4, ...]."""
    rep = Report()
    from .report import Check
    for n in range(t.order + 1):
        for name, p in (("a", t.a[n]), ("h2^(1/2) b", D.h2_half(1) * t.b[n]),
                        ("h2^(-1/2) c", D.h2_half(-1) * t.c[n])):
            bf = balanced_form(p)
            rep.add(Check(f"membership.{name}", (n,), bf.member))
    return rep
