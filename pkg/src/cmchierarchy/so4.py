"""so(4,C) form of the Killing field, used as an independent cross-check.

X is assembled from the tower with the regraded series

    a1 = sum (-1)^n lambda^(4n)   a^(4n+1)      a3 = sum (-1)^n lambda^(4n+2) a^(4n+3)
    b2 = sum (-1)^n lambda^(4n+1) b^(4n+2)      b4 = sum (-1)^n lambda^(4n+3) b^(4n+4)

(``c`` like ``b``), so the coefficient at degree ``d`` carries the sign
``(-1)^(d // 4)`` and the superscript ``d + 1``.  Here ``a^(2n+1) = a[n]`` and
``b^(2n+2) = b[n]``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

from .diffring import RHO, XI, XIBAR, DiffPoly, conjugate, derive
from .hierarchy import t_derivative
from .killing import KillingTower
from .loopalg import WindowError, _Graded, _product_window
from .report import Report, residual_check
from .scalar import GAMMA, I

__all__ = [
    "So4LoopMatrix",
    "build_X",
    "build_psi",
    "build_V",
    "epsilon",
    "pfaffian",
    "verify_so4",
]

D = DiffPoly
Mat4 = Tuple[Tuple[DiffPoly, ...], ...]
_Z = D()


def _zero4() -> list:
    return [[_Z] * 4 for _ in range(4)]


def _freeze(m) -> Mat4:
    return tuple(tuple(r) for r in m)


def _is_zero4(m: Mat4) -> bool:
    return all(v.is_zero() for r in m for v in r)


class So4LoopMatrix(_Graded):
    """Antisymmetric 4x4 Laurent series in lambda over the differential ring."""

    def __init__(self, coeffs: Dict[int, Mat4], lo: Optional[int] = None, hi: Optional[int] = None,
                 check: bool = True):
        self.lo, self.hi = lo, hi
        self.coeffs = {d: _freeze(m) for d, m in coeffs.items() if self.known(d) and not _is_zero4(m)}
        if check:
            for d, m in self.coeffs.items():
                for i in range(4):
                    for j in range(i, 4):
                        if not (m[i][j] + m[j][i]).is_zero():
                            raise ValueError(f"not antisymmetric at degree {d}, entry ({i + 1},{j + 1})")

    def __getitem__(self, d: int) -> Mat4:
        if not self.known(d):
            raise WindowError(f"degree {d} outside window {self.window}")
        return self.coeffs.get(d) or _freeze(_zero4())

    def degrees(self):
        return sorted(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def _combine(self, other: "So4LoopMatrix", sign: int) -> "So4LoopMatrix":
        from .loopalg import _max_opt, _min_opt
        out = {}
        for d in set(self.coeffs) | set(other.coeffs):
            a, b = self[d] if self.known(d) else None, other[d] if other.known(d) else None
            if a is None or b is None:
                continue
            out[d] = [[a[i][j] + b[i][j] * sign for j in range(4)] for i in range(4)]
        return So4LoopMatrix(out, _max_opt(self.lo, other.lo), _min_opt(self.hi, other.hi), check=False)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.map_entries(lambda v: -v)

    def map_entries(self, fn: Callable) -> "So4LoopMatrix":
        return So4LoopMatrix({d: [[fn(v) for v in r] for r in m] for d, m in self.coeffs.items()},
                             self.lo, self.hi, check=False)

    def formal_conjugate(self) -> "So4LoopMatrix":
        return So4LoopMatrix({-d: [[conjugate(v) for v in r] for r in m] for d, m in self.coeffs.items()},
                             None if self.hi is None else -self.hi,
                             None if self.lo is None else -self.lo, check=False)

    def to_json(self) -> dict:
        return {"ring": "exact", "window": [self.lo, self.hi],
                "coeffs": {str(d): [[v.to_json() for v in r] for r in self.coeffs[d]]
                           for d in self.degrees()}}


def bracket4(A: So4LoopMatrix, B: So4LoopMatrix) -> So4LoopMatrix:
    lo, hi = _product_window(A, B)
    out: Dict[int, list] = {}
    for i, P in A.coeffs.items():
        for j, Q in B.coeffs.items():
            d = i + j
            if (lo is not None and d < lo) or (hi is not None and d > hi):
                continue
            acc = out.setdefault(d, _zero4())
            for r in range(4):
                for s in range(r + 1, 4):
                    v = D()
                    for k in range(4):
                        if P[r][k] and Q[k][s]:
                            v = v + P[r][k] * Q[k][s]
                        if Q[r][k] and P[k][s]:
                            v = v - Q[r][k] * P[k][s]
                    if v:
                        acc[r][s] = acc[r][s] + v
                        acc[s][r] = acc[s][r] - v
    return So4LoopMatrix(out, lo, hi, check=False)


def _derive4(X: So4LoopMatrix, direction: str) -> So4LoopMatrix:
    return X.map_entries(lambda v: derive(v, direction))


# ---------------------------------------------------------------------------
# assembly from components

def _place(a1=_Z, a3=_Z, b2=_Z, b4=_Z, c2=_Z, c4=_Z) -> list:
    m = _zero4()

    def put(i, j, v):
        m[i][j] = v
        m[j][i] = -v
    put(0, 1, (c2 + b4) * I)
    put(0, 2, -(c2 - b4))
    put(0, 3, -a3)
    put(1, 2, a1 * (-I))
    put(1, 3, (b2 + c4) * (-I))
    put(2, 3, -(b2 - c4))
    return m


def _assemble(components: Dict[str, Dict[int, DiffPoly]], lo=None, hi=None) -> So4LoopMatrix:
    degrees = set()
    for series in components.values():
        degrees |= set(series)
    out = {}
    for d in degrees:
        out[d] = _place(**{k: s.get(d, _Z) for k, s in components.items()})
    return So4LoopMatrix(out, lo, hi, check=False)


def _entry(kind: str, k: int, a, b, c) -> DiffPoly:
    """Superscript access ``a^k``, ``b^k``, ``c^k`` with ``a^-1 = b^0 = c^0 = 0``."""
    if kind == "a":
        if k % 2 != 1:
            raise ValueError(f"a^{k} has even superscript")
        n = (k - 1) // 2
        return _Z if n < 0 else a(n)
    if k % 2 != 0:
        raise ValueError(f"{kind}^{k} has odd superscript")
    n = (k - 2) // 2
    return _Z if n < 0 else (b if kind == "b" else c)(n)


def _components_from_entries(a, b, c, hi: int) -> Dict[str, Dict[int, DiffPoly]]:
    comps = {k: {} for k in ("a1", "a3", "b2", "b4", "c2", "c4")}
    for d in range(0, hi + 1):
        sign = -1 if (d // 4) % 2 else 1
        r = d % 4
        if r == 0:
            comps["a1"][d] = _entry("a", d + 1, a, b, c) * sign
        elif r == 2:
            comps["a3"][d] = _entry("a", d + 1, a, b, c) * sign
        else:
            slot = "2" if r == 1 else "4"
            comps["b" + slot][d] = _entry("b", d + 1, a, b, c) * sign
            comps["c" + slot][d] = _entry("c", d + 1, a, b, c) * sign
    return comps


def build_X(t: KillingTower) -> So4LoopMatrix:
    """X through degree ``2N+2`` (its top diagonal uses ``a[N+1]``)."""
    hi = 2 * t.order + 2
    comps = _components_from_entries(t.a_ext, t.b.__getitem__, t.c.__getitem__, hi)
    return _assemble(comps, None, hi)


def build_psi(sign_flip_plus: bool = False) -> Dict[str, So4LoopMatrix]:
    """``{xi: lambda^-1 psi_-, xibar: lambda psi_+, rho: psi_0}`` as printed.

    ``sign_flip_plus`` negates the (1,2) entry pair of ``psi_+`` (fault injection).
    """
    g = D.const(GAMMA)
    ig = D.const(GAMMA * I)
    h2, hb2 = D.h(2), D.hbar(2)
    half = Fraction(1, 2)
    minus = [[_Z, -g, ig, _Z],
             [g, _Z, _Z, -h2],
             [-ig, _Z, _Z, h2 * (-I)],
             [_Z, h2, h2 * I, _Z]]
    plus = [[_Z, -g, -ig, _Z],
            [g, _Z, _Z, -hb2],
            [ig, _Z, _Z, hb2 * I],
            [_Z, hb2, hb2 * (-I), _Z]]
    plus = [[v * half for v in r] for r in plus]
    minus = [[v * half for v in r] for r in minus]
    if sign_flip_plus:
        plus[0][1], plus[1][0] = -plus[0][1], -plus[1][0]
    one = D.const(1)
    zero_ = [[_Z, _Z, _Z, _Z], [_Z, _Z, one, _Z], [_Z, -one, _Z, _Z], [_Z, _Z, _Z, _Z]]
    return {
        XI: So4LoopMatrix({-1: minus}),
        XIBAR: So4LoopMatrix({1: plus}),
        RHO: So4LoopMatrix({0: zero_}),
    }


def epsilon(m: int) -> int:
    return {0: 1, 1: -1, 2: -1, 3: 1}[m % 4]


def build_V(t: KillingTower, m: int) -> So4LoopMatrix:
    """``V_m`` from the parity-split formulas (``a^-1 = 0``)."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    need = m + 1  # highest superscript used is 2m+1 (a), 2m+2 (b, c)
    if need - 1 > t.order:
        raise ValueError(f"V_{m} needs tower order >= {m}")
    eps = epsilon(m)
    sh = 2 * m + 2
    comps = {k: {} for k in ("a1", "a3", "b2", "b4", "c2", "c4")}

    def add(name, deg, kind, k, sign):
        v = _entry(kind, k, t.a_ext, t.b.__getitem__, t.c.__getitem__) * (eps * sign)
        comps[name][deg] = comps[name].get(deg, _Z) + v

    if m % 2 == 0:
        for j in range(0, m // 2 + 1):
            s = -1 if j % 2 else 1
            add("a1", 4 * j - 2 - sh, "a", 4 * j - 1, s)
            add("a3", 4 * j - sh, "a", 4 * j + 1, s)
            add("b2", 4 * j - 1 - sh, "b", 4 * j, s)
            add("b4", 4 * j + 1 - sh, "b", 4 * j + 2, s)
            add("c2", 4 * j - 1 - sh, "c", 4 * j, s)
            add("c4", 4 * j + 1 - sh, "c", 4 * j + 2, s)
    else:
        for j in range(1, (m + 1) // 2 + 1):
            s = -1 if j % 2 else 1
            add("a1", 4 * j - 4 - sh, "a", 4 * j - 3, s)
            add("a3", 4 * j - 2 - sh, "a", 4 * j - 1, s)
            add("b2", 4 * j - 3 - sh, "b", 4 * j - 2, s)
            add("b4", 4 * j - 1 - sh, "b", 4 * j, s)
            add("c2", 4 * j - 3 - sh, "c", 4 * j - 2, s)
            add("c4", 4 * j - 1 - sh, "c", 4 * j, s)
    return _assemble(comps)


def pfaffian(X: So4LoopMatrix, Z: Optional[So4LoopMatrix] = None):
    """Pfaffian series of X, or its polarization ``d/ds Pf(X + s Z)`` at ``s = 0``."""
    from .loopalg import Series
    pairs = ((0, 1, 2, 3, 1), (0, 2, 1, 3, -1), (0, 3, 1, 2, 1))
    A, B = (X, X) if Z is None else (X, Z)
    lo, hi = _product_window(A, B)
    out: Dict[int, DiffPoly] = {}
    for i, P in A.coeffs.items():
        for j, Q in B.coeffs.items():
            d = i + j
            if (lo is not None and d < lo) or (hi is not None and d > hi):
                continue
            v = D()
            for p, q, r, s, sg in pairs:
                if Z is None:
                    v = v + P[p][q] * Q[r][s] * sg
                else:
                    v = v + (P[p][q] * Q[r][s] + Q[p][q] * P[r][s]) * sg
            out[d] = out.get(d, D()) + v
    return Series(out, lo, hi)


# ---------------------------------------------------------------------------
# verification

def _dt_X(t: KillingTower, m: int) -> So4LoopMatrix:
    td = t_derivative(t, m)
    hi = td.Y.hi
    comps = _components_from_entries(lambda n: td.a[n], lambda n: td.b[n], lambda n: td.c[n], hi)
    return _assemble(comps, None, hi)


def verify_so4(t: KillingTower, max_order: int = 8, max_m: int = 2,
               psi: Optional[Dict[str, So4LoopMatrix]] = None) -> Report:
    """Static check ``dX + [psi, X] = 0`` per direction through ``max_order``, the
    extended check ``dX/dt_m + [V_m, X] = 0`` for ``1 <= m <= max_m``, and constancy
    of the Pfaffian series."""
    psi = psi or build_psi()
    X = build_X(t)
    rep = Report()
    for direction in (XI, XIBAR, RHO):
        res = _derive4(X, direction) + bracket4(psi[direction], X)
        top = min(max_order, res.hi)
        if top < max_order:
            raise WindowError(f"tower order {t.order} reaches only degree {top} in direction {direction}")
        for d in range(0, top + 1):
            m4 = res[d]
            bad = next((v for r in m4 for v in r if not v.is_zero()), D())
            rep.add(residual_check(f"so4.static.{direction}", (d,), bad))
    for m in range(0, max_m + 1):
        res = _dt_X(t, m) + bracket4(build_V(t, m), X)
        for d in range(1, res.hi + 1):
            m4 = res[d]
            bad = next((v for r in m4 for v in r if not v.is_zero()), D())
            rep.add(residual_check("so4.extended", (m, d), bad))
    # Pfaffian: constant coefficients, and killed by every available derivation
    pf = pfaffian(X)
    for d in range(0, pf.hi + 1):
        v = pf[d]
        ok = not any(any(k) for k in v.terms)
        rep.add(residual_check("so4.pfaffian.constant", (d,), D() if ok else v))
    for m in range(0, max_m + 1):
        dpf = pfaffian(X, _dt_X(t, m))
        for d in range(0, dpf.hi + 1):
            rep.add(residual_check("so4.pfaffian.flow", (m, d), dpf[d]))
    return rep
