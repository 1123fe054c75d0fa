"""Twisted loop algebra over sl(2): truncated Laurent series of traceless 2x2 matrices.

Each coefficient ``[[x, y], [z, -x]]`` is stored as the triple ``(x, y, z)``,
so tracelessness holds by construction.  Entries are :class:`DiffPoly`
(``ring="exact"``) or Python complex numbers (``ring="numeric"``).

Every series carries a window ``(lo, hi)`` of degrees where its stored
coefficients are authoritative; ``None`` means the window is unbounded on that
side, i.e. every degree beyond the stored support is known to vanish.  A
series coming from a truncated positive-degree object such as ``Y`` has
``lo=None`` and finite ``hi``; its formal conjugate has finite ``lo`` and
``hi=None``.  Arithmetic computes output windows pessimistically and never
reports a coefficient outside the window.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Iterable, Optional, Tuple

from .diffring import DiffPoly, conjugate as conj_poly, scalar_from_json
from .scalar import I, Scalar

__all__ = [
    "WindowError",
    "RingMismatch",
    "LoopMatrix",
    "Series",
    "project",
    "r_apply",
    "bracket",
    "inner",
    "trace_product",
    "det_series",
    "hamiltonian",
    "LE_MINUS1",
    "GE_0",
    "GE_1",
    "LE_0",
]

LE_MINUS1 = "le_minus1"
GE_0 = "ge_0"
GE_1 = "ge_1"
LE_0 = "le_0"

EXACT = "exact"
NUMERIC = "numeric"

Window = Tuple[Optional[int], Optional[int]]


class WindowError(ValueError):
    """A requested coefficient lies outside the known window."""


class RingMismatch(TypeError):
    """Operands live over different coefficient rings."""


def _zero(ring: str):
    return DiffPoly() if ring == EXACT else 0j


def _const(ring: str, c):
    """Coerce a constant (int, Fraction, Scalar, complex) into the ring's scalars."""
    if ring == EXACT:
        return Scalar.coerce(c) if not isinstance(c, complex) else Scalar.const(c)
    if isinstance(c, Scalar):
        if c.num and any(k for k in c.num):
            raise TypeError("gamma-dependent constant in numeric mode")
        return c.evaluate(1.0)
    return complex(c)


def _scale(entry, c):
    return entry * c


class _Graded:
    """Shared window bookkeeping for matrix- and scalar-valued series."""

    coeffs: Dict[int, object]
    lo: Optional[int]
    hi: Optional[int]

    @property
    def window(self) -> Window:
        return (self.lo, self.hi)

    def known(self, d: int) -> bool:
        return (self.lo is None or d >= self.lo) and (self.hi is None or d <= self.hi)

    def support(self) -> Tuple[Optional[int], Optional[int]]:
        if not self.coeffs:
            return None, None
        return min(self.coeffs), max(self.coeffs)

    def _zero_below(self) -> Optional[float]:
        """Threshold t such that every degree < t is known to vanish (None: not available)."""
        if self.lo is not None:
            return None
        v, _ = self.support()
        cands = []
        if v is not None:
            cands.append(v)
        if self.hi is not None:
            cands.append(self.hi + 1)
        return min(cands) if cands else float("inf")

    def _zero_above(self) -> Optional[float]:
        """Threshold t such that every degree > t is known to vanish."""
        if self.hi is not None:
            return None
        _, t = self.support()
        cands = []
        if t is not None:
            cands.append(t)
        if self.lo is not None:
            cands.append(self.lo - 1)
        return max(cands) if cands else float("-inf")


def _product_window(A: _Graded, B: _Graded) -> Window:
    his, los = [], []
    for P, Q in ((A, B), (B, A)):
        if P.hi is not None:
            zb = Q._zero_below()
            if zb is None:
                raise WindowError("product of a series truncated above with one truncated below is undefined")
            his.append(P.hi + zb)
        if P.lo is not None:
            za = Q._zero_above()
            if za is None:
                raise WindowError("product of a series truncated below with one truncated above is undefined")
            los.append(P.lo + za)
    hi = min(his) if his else None
    lo = max(los) if los else None
    if hi is not None and hi != float("inf"):
        hi = int(hi)
    elif hi == float("inf"):
        hi = None
    if lo is not None and lo != float("-inf"):
        lo = int(lo)
    elif lo == float("-inf"):
        lo = None
    return lo, hi


class Series(_Graded):
    """Scalar-valued truncated Laurent series (determinants, traces)."""

    def __init__(self, coeffs: Dict[int, object], lo: Optional[int], hi: Optional[int], ring: str = EXACT):
        self.ring = ring
        self.lo = lo
        self.hi = hi
        self.coeffs = {d: v for d, v in coeffs.items() if v and self.known(d)}

    def __getitem__(self, d: int):
        if not self.known(d):
            raise WindowError(f"degree {d} outside window {self.window}")
        return self.coeffs.get(d, _zero(self.ring))

    def degrees(self) -> Iterable[int]:
        return sorted(self.coeffs)

    def __repr__(self):
        body = ", ".join(f"{d}: {self.coeffs[d]}" for d in sorted(self.coeffs))
        return f"Series({{{body}}}, window={self.window})"


class LoopMatrix(_Graded):
    """Truncated sl(2)-valued Laurent series in the spectral parameter."""

    def __init__(self, coeffs: Dict[int, Tuple[object, object, object]], lo: Optional[int] = None,
                 hi: Optional[int] = None, twisted: bool = False, ring: str = EXACT, check: bool = True):
        self.ring = ring
        self.lo = lo
        self.hi = hi
        clean = {}
        for d, m in coeffs.items():
            if not self.known(d):
                continue
            x, y, z = m
            if x or y or z:
                clean[d] = (x, y, z)
        self.coeffs = clean
        self.twisted = twisted
        if twisted and check:
            bad = self.parity_violations()
            if bad:
                raise ValueError(f"twisted parity violated at degrees {bad}")

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, ring: str = EXACT, twisted: bool = True) -> "LoopMatrix":
        return cls({}, None, None, twisted=twisted, ring=ring)

    @classmethod
    def from_entries(cls, coeffs: Dict[int, Tuple], lo=None, hi=None, twisted=None, ring=EXACT) -> "LoopMatrix":
        """Build from full 2x2 coefficients ``[[a, b], [c, -a]]`` or triples."""
        conv = {}
        for d, m in coeffs.items():
            if len(m) == 2:
                (a, b), (c, e) = m
                if ring == EXACT:
                    a, b, c, e = (DiffPoly.coerce(v) for v in (a, b, c, e))
                    if not (a + e).is_zero():
                        raise ValueError(f"coefficient at degree {d} is not traceless")
                else:
                    a, b, c, e = (complex(v) for v in (a, b, c, e))
                    if a + e != 0:
                        raise ValueError(f"coefficient at degree {d} is not traceless")
                conv[d] = (a, b, c)
            else:
                x, y, z = m
                if ring == EXACT:
                    x, y, z = (DiffPoly.coerce(v) for v in (x, y, z))
                else:
                    x, y, z = (complex(v) for v in (x, y, z))
                conv[d] = (x, y, z)
        out = cls(conv, lo, hi, twisted=False, ring=ring)
        if twisted is None:
            twisted = not out.parity_violations()
        out.twisted = twisted
        if twisted and out.parity_violations():
            raise ValueError("twisted parity violated")
        return out

    # -- access ---------------------------------------------------------
    def __getitem__(self, d: int) -> Tuple[object, object, object]:
        if not self.known(d):
            raise WindowError(f"degree {d} outside window {self.window}")
        z = _zero(self.ring)
        return self.coeffs.get(d, (z, z, z))

    def matrix(self, d: int):
        x, y, z = self[d]
        return ((x, y), (z, -x))

    def degrees(self):
        return sorted(self.coeffs)

    def parity_violations(self):
        bad = []
        for d, (x, y, z) in self.coeffs.items():
            if d % 2 == 0 and (y or z):
                bad.append(d)
            elif d % 2 != 0 and x:
                bad.append(d)
        return sorted(bad)

    def is_zero(self) -> bool:
        return not self.coeffs

    def _check_ring(self, other: "LoopMatrix"):
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    def __eq__(self, other):
        if not isinstance(other, LoopMatrix):
            return NotImplemented
        return (self.ring == other.ring and self.window == other.window
                and self.coeffs == other.coeffs)

    def equal_on(self, other: "LoopMatrix", degrees: Iterable[int]) -> bool:
        return all(self[d] == other[d] for d in degrees)

    # -- linear structure -----------------------------------------------
    def _combine(self, other: "LoopMatrix", sign: int) -> "LoopMatrix":
        self._check_ring(other)
        lo = _max_opt(self.lo, other.lo)
        hi = _min_opt(self.hi, other.hi)
        out = dict(self.coeffs)
        for d, (x, y, z) in other.coeffs.items():
            if d in out:
                a, b, c = out[d]
                out[d] = (a + x, b + y, c + z) if sign > 0 else (a - x, b - y, c - z)
            else:
                out[d] = (x, y, z) if sign > 0 else (-x, -y, -z)
        return LoopMatrix(out, lo, hi, twisted=self.twisted and other.twisted, ring=self.ring, check=False)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return LoopMatrix({d: (-x, -y, -z) for d, (x, y, z) in self.coeffs.items()},
                          self.lo, self.hi, self.twisted, self.ring, check=False)

    def scale(self, c) -> "LoopMatrix":
        """Multiply by a constant or, in exact mode, by a ring element."""
        if self.ring == EXACT and isinstance(c, DiffPoly):
            k = c
        else:
            k = _const(self.ring, c)
        return LoopMatrix({d: (x * k, y * k, z * k) for d, (x, y, z) in self.coeffs.items()},
                          self.lo, self.hi, self.twisted, self.ring, check=False)

    def shift(self, k: int) -> "LoopMatrix":
        """Intertwining map ``sigma_k``: multiply by ``lambda**k``."""
        return LoopMatrix({d + k: m for d, m in self.coeffs.items()},
                          None if self.lo is None else self.lo + k,
                          None if self.hi is None else self.hi + k,
                          twisted=self.twisted and k % 2 == 0, ring=self.ring, check=False)

    def map_entries(self, fn: Callable) -> "LoopMatrix":
        return LoopMatrix({d: (fn(x), fn(y), fn(z)) for d, (x, y, z) in self.coeffs.items()},
                          self.lo, self.hi, self.twisted, self.ring, check=False)

    def restrict(self, lo: Optional[int], hi: Optional[int]) -> "LoopMatrix":
        """Shrink the window (never widen it)."""
        return LoopMatrix(self.coeffs, _max_opt(self.lo, lo), _min_opt(self.hi, hi),
                          self.twisted, self.ring, check=False)

    def transpose(self) -> "LoopMatrix":
        return LoopMatrix({d: (x, z, y) for d, (x, y, z) in self.coeffs.items()},
                          self.lo, self.hi, self.twisted, self.ring, check=False)

    def formal_conjugate(self) -> "LoopMatrix":
        """Formal conjugation: entries conjugated and ``lambda -> 1/lambda``."""
        if self.ring == EXACT:
            f = conj_poly
        else:
            f = lambda v: v.conjugate()  # noqa: E731
        return LoopMatrix({-d: (f(x), f(y), f(z)) for d, (x, y, z) in self.coeffs.items()},
                          None if self.hi is None else -self.hi,
                          None if self.lo is None else -self.lo,
                          self.twisted, self.ring, check=False)

    def neg_conj_transpose(self) -> "LoopMatrix":
        """``-conj(A)^t``."""
        return -self.formal_conjugate().transpose()

    # -- serialization --------------------------------------------------
    def to_json(self) -> dict:
        def enc(v):
            if self.ring == EXACT:
                return v.to_json()
            return [v.real, v.imag]
        coeffs = {}
        for d in self.degrees():
            x, y, z = self.coeffs[d]
            coeffs[str(d)] = [[enc(x), enc(y)], [enc(z), enc(-x)]]
        return {"ring": self.ring, "twisted": self.twisted, "window": [self.lo, self.hi], "coeffs": coeffs}

    @classmethod
    def from_json(cls, data: dict) -> "LoopMatrix":
        ring = data.get("ring", EXACT)

        def dec(v):
            if ring == EXACT:
                return DiffPoly.from_json(v)
            return complex(v[0], v[1])
        coeffs = {}
        for d, m in data["coeffs"].items():
            (a, b), (c, e) = m
            coeffs[int(d)] = ((dec(a), dec(b)), (dec(c), dec(e)))
        lo, hi = data["window"]
        return cls.from_entries(coeffs, lo, hi, twisted=data.get("twisted", None), ring=ring)

    def __repr__(self):
        body = ", ".join(f"{d}: {self.matrix(d)}" for d in self.degrees())
        return f"LoopMatrix({{{body}}}, window={self.window}, twisted={self.twisted})"


def _max_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _min_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# ---------------------------------------------------------------------------
# degree projections and the R-matrix

def project(Y: LoopMatrix, part: str) -> LoopMatrix:
    """Degree filter onto one side of a splitting of the loop algebra."""
    if part == LE_MINUS1:
        keep = lambda d: d <= -1  # noqa: E731
        lo, hi = Y.lo, (None if Y.hi is None or Y.hi >= -1 else Y.hi)
    elif part == LE_0:
        keep = lambda d: d <= 0  # noqa: E731
        lo, hi = Y.lo, (None if Y.hi is None or Y.hi >= 0 else Y.hi)
    elif part == GE_0:
        keep = lambda d: d >= 0  # noqa: E731
        lo, hi = (None if Y.lo is None or Y.lo <= 0 else Y.lo), Y.hi
    elif part == GE_1:
        keep = lambda d: d >= 1  # noqa: E731
        lo, hi = (None if Y.lo is None or Y.lo <= 1 else Y.lo), Y.hi
    else:
        raise ValueError(f"unknown part {part!r}")
    return LoopMatrix({d: m for d, m in Y.coeffs.items() if keep(d)}, lo, hi,
                      Y.twisted, Y.ring, check=False)


def r_apply(Y: LoopMatrix) -> LoopMatrix:
    """R-matrix ``-pi_{<=-1} + pi_{>=0}``."""
    return LoopMatrix({d: (m if d >= 0 else tuple(-v for v in m)) for d, m in Y.coeffs.items()},
                      Y.lo, Y.hi, Y.twisted, Y.ring, check=False)


# ---------------------------------------------------------------------------
# products

def bracket(A: LoopMatrix, B: LoopMatrix) -> LoopMatrix:
    """Commutator ``AB - BA`` with a pessimistic exactness window."""
    A._check_ring(B)
    lo, hi = _product_window(A, B)
    out: Dict[int, list] = {}
    for i, (x, y, z) in A.coeffs.items():
        for j, (x2, y2, z2) in B.coeffs.items():
            d = i + j
            if (lo is not None and d < lo) or (hi is not None and d > hi):
                continue
            cx = y * z2 - z * y2
            cy = (x * y2 - y * x2) * 2
            cz = (z * x2 - x * z2) * 2
            acc = out.get(d)
            if acc is None:
                out[d] = [cx, cy, cz]
            else:
                acc[0] = acc[0] + cx
                acc[1] = acc[1] + cy
                acc[2] = acc[2] + cz
    return LoopMatrix({d: tuple(v) for d, v in out.items()}, lo, hi,
                      twisted=A.twisted and B.twisted, ring=A.ring, check=False)


def _bilinear_series(A: LoopMatrix, B: LoopMatrix, form) -> Series:
    A._check_ring(B)
    lo, hi = _product_window(A, B)
    out: Dict[int, object] = {}
    for i, m1 in A.coeffs.items():
        for j, m2 in B.coeffs.items():
            d = i + j
            if (lo is not None and d < lo) or (hi is not None and d > hi):
                continue
            v = form(m1, m2)
            out[d] = v if d not in out else out[d] + v
    return Series(out, lo, hi, A.ring)


def trace_product(A: LoopMatrix, B: LoopMatrix) -> Series:
    """The series ``tr(A B)``."""
    return _bilinear_series(A, B, lambda m1, m2: m1[0] * m2[0] * 2 + m1[1] * m2[2] + m1[2] * m2[1])


def inner(A: LoopMatrix, B: LoopMatrix):
    """Residue pairing ``Res_{lambda=0} tr(A B)``."""
    s = trace_product(A, B)
    if not s.known(0):
        raise WindowError(f"degree 0 of tr(AB) not determined (window {s.window})")
    return s[0]


def det_series(Y: LoopMatrix) -> Series:
    """``det Y = -x^2 - y z`` coefficientwise."""
    return _bilinear_series(Y, Y, lambda m1, m2: -(m1[0] * m2[0]) - m1[1] * m2[2])


def hamiltonian(Y: LoopMatrix, m: int):
    """``H_m = -(1/2i)(1/2) Res(lambda^(-2m-2) tr Y^2) = (i/4) [tr Y^2]_{2m+2}``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    s = trace_product(Y, Y)
    d = 2 * m + 2
    if not s.known(d):
        raise WindowError(f"degree {d} of tr(Y^2) not determined (window {s.window})")
    c = _const(Y.ring, I * Fraction(1, 4)) if Y.ring == EXACT else 0.25j
    return s[d] * c
