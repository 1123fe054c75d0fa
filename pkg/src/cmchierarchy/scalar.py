"""Exact coefficient field: Gaussian rationals with the structure constant gamma adjoined.

A :class:`Scalar` is a rational function of ``gamma`` whose coefficients lie in
Q(i).  Internally it is stored as a Laurent polynomial numerator together with a
monic polynomial denominator that has a nonzero constant term and shares no
factor with the numerator.  That form is unique, so equality is structural.
In practice the recursion only ever divides by ``2`` and powers of ``gamma``,
which keeps the denominator trivial; the general path exists for completeness.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Tuple, Union

__all__ = ["GaussQ", "Scalar", "ZERO", "ONE", "I", "GAMMA"]

Number = Union[int, Fraction]


class GaussQ:
    """Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re: Number = 0, im: Number = 0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    @classmethod
    def coerce(cls, x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(x)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if not isinstance(other, GaussQ):
            try:
                other = GaussQ.coerce(other)
            except TypeError:
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, o: "GaussQ") -> "GaussQ":
        return GaussQ(self.re + o.re, self.im + o.im)

    def __sub__(self, o: "GaussQ") -> "GaussQ":
        return GaussQ(self.re - o.re, self.im - o.im)

    def __neg__(self) -> "GaussQ":
        return GaussQ(-self.re, -self.im)

    def __mul__(self, o: "GaussQ") -> "GaussQ":
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b and not d:
            return GaussQ(a * c, 0)
        return GaussQ(a * c - b * d, a * d + b * c)

    def inverse(self) -> "GaussQ":
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("Gaussian rational zero has no inverse")
        return GaussQ(self.re / n, -self.im / n)

    def __truediv__(self, o: "GaussQ") -> "GaussQ":
        return self * o.inverse()

    def conjugate(self) -> "GaussQ":
        return GaussQ(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*i)"


_Q0 = GaussQ(0)
_Q1 = GaussQ(1)

# Dense polynomials in gamma: tuples of GaussQ, index = degree, no trailing zeros.
Poly = Tuple[GaussQ, ...]


def _trim(p) -> Poly:
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return tuple(p)


def _pmul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [_Q0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if not a:
            continue
        for j, b in enumerate(q):
            if b:
                out[i + j] = out[i + j] + a * b
    return _trim(out)


def _pdivmod(p: Poly, q: Poly) -> Tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    lead_inv = q[-1].inverse()
    quot = [_Q0] * max(len(p) - len(q) + 1, 0)
    while len(r) >= len(q) and r:
        coef = r[-1] * lead_inv
        shift = len(r) - len(q)
        quot[shift] = coef
        for k, b in enumerate(q):
            r[shift + k] = r[shift + k] - coef * b
        r = list(_trim(r))
    return _trim(quot), tuple(r)


def _monic(p: Poly) -> Poly:
    inv = p[-1].inverse()
    return tuple(c * inv for c in p)


def _pgcd(p: Poly, q: Poly) -> Poly:
    while q:
        p, q = q, _pdivmod(p, q)[1]
    return _monic(p) if p else ()


class Scalar:
    """Element of Q(i)(gamma) in canonical reduced form.

    ``num`` maps gamma exponents (possibly negative) to nonzero Gaussian
    rationals; ``den`` is a monic dense polynomial with ``den[0] != 0``.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Dict[int, GaussQ], den: Poly = (_Q1,), _reduced: bool = False):
        if not _reduced:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # -- construction ---------------------------------------------------
    @classmethod
    def const(cls, x) -> "Scalar":
        q = GaussQ.coerce(x)
        return cls({0: q} if q else {}, (_Q1,), _reduced=True)

    @classmethod
    def gamma_power(cls, k: int, coeff=1) -> "Scalar":
        q = GaussQ.coerce(coeff)
        return cls({k: q} if q else {}, (_Q1,), _reduced=True)

    @classmethod
    def coerce(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        return cls.const(x)

    @classmethod
    def from_polys(cls, num: Iterable, den: Iterable) -> "Scalar":
        """Build ``num(gamma)/den(gamma)`` from dense coefficient lists."""
        n = {k: GaussQ.coerce(c) for k, c in enumerate(num) if GaussQ.coerce(c)}
        d = _trim(GaussQ.coerce(c) for c in den)
        if not d:
            raise ZeroDivisionError("zero denominator")
        return cls(n, d)

    # -- predicates -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    __bool__ = lambda self: bool(self.num)  # noqa: E731

    def is_laurent(self) -> bool:
        return len(self.den) == 1

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((tuple(sorted(self.num.items())), self.den))
        return self._hash

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other) -> "Scalar":
        other = Scalar.coerce(other)
        if len(self.den) == 1 and len(other.den) == 1:
            out = dict(self.num)
            for k, v in other.num.items():
                s = out.get(k)
                if s is None:
                    out[k] = v
                else:
                    s = s + v
                    if s:
                        out[k] = s
                    else:
                        del out[k]
            return Scalar(out, (_Q1,), _reduced=True)
        # general: a/d1 + b/d2 = (a*d2 + b*d1)/(d1*d2)
        n = _laurent_add(_laurent_mul_poly(self.num, other.den), _laurent_mul_poly(other.num, self.den))
        return Scalar(n, _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        return Scalar({k: -v for k, v in self.num.items()}, self.den, _reduced=True)

    def __sub__(self, other) -> "Scalar":
        return self + (-Scalar.coerce(other))

    def __rsub__(self, other) -> "Scalar":
        return Scalar.coerce(other) - self

    def __mul__(self, other) -> "Scalar":
        other = Scalar.coerce(other)
        if not self.num or not other.num:
            return ZERO
        if len(self.den) == 1 and len(other.den) == 1:
            if len(self.num) == 1 and len(other.num) == 1:
                (k1, v1), = self.num.items()
                (k2, v2), = other.num.items()
                return Scalar({k1 + k2: v1 * v2}, (_Q1,), _reduced=True)
            out: Dict[int, GaussQ] = {}
            for k1, v1 in self.num.items():
                for k2, v2 in other.num.items():
                    k = k1 + k2
                    s = out.get(k)
                    out[k] = v1 * v2 if s is None else s + v1 * v2
            return Scalar({k: v for k, v in out.items() if v}, (_Q1,), _reduced=True)
        return Scalar(_laurent_mul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if not self.num:
            raise ZeroDivisionError("Scalar zero has no inverse")
        lo = min(self.num)
        hi = max(self.num)
        dense = tuple(self.num.get(k, _Q0) for k in range(lo, hi + 1))
        # (gamma^lo * dense)^-1 = den * gamma^-lo / dense
        return Scalar({k - lo: c for k, c in enumerate(self.den) if c}, dense)

    def __truediv__(self, other) -> "Scalar":
        return self * Scalar.coerce(other).inverse()

    def __rtruediv__(self, other) -> "Scalar":
        return Scalar.coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "Scalar":
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def conjugate(self) -> "Scalar":
        """Formal conjugation: i -> -i with gamma fixed."""
        return Scalar({k: v.conjugate() for k, v in self.num.items()},
                      tuple(c.conjugate() for c in self.den), _reduced=True)

    # -- evaluation / export --------------------------------------------
    def evaluate(self, gamma) -> complex:
        g = complex(gamma)
        n = sum(complex(v) * g ** k for k, v in self.num.items())
        d = sum(complex(c) * g ** k for k, c in enumerate(self.den))
        return n / d

    def substitute(self, gamma: Fraction) -> "Scalar":
        """Exact specialization gamma -> rational value; result is gamma-free."""
        g = GaussQ(Fraction(gamma))
        def ev(pairs):
            acc = _Q0
            for k, c in pairs:
                p = _Q1
                base = g if k >= 0 else g.inverse()
                for _ in range(abs(k)):
                    p = p * base
                acc = acc + c * p
            return acc
        n = ev(self.num.items())
        d = ev(enumerate(self.den))
        return Scalar.const(n / d)

    def as_polys(self) -> Tuple[Poly, Poly]:
        """Numerator and denominator as ordinary dense polynomials in gamma."""
        if not self.num:
            return (), (_Q1,)
        lo = min(self.num)
        shift = -lo if lo < 0 else 0
        num = _trim(self.num.get(k - shift, _Q0) for k in range(max(self.num) + shift + 1))
        den = (_Q0,) * shift + self.den
        return num, den

    def __repr__(self):
        if not self.num:
            return "0"
        parts = []
        for k in sorted(self.num):
            v = self.num[k]
            g = "" if k == 0 else ("g" if k == 1 else f"g^{k}")
            parts.append(f"{v}*{g}" if g else f"{v}")
        s = " + ".join(parts)
        if len(self.den) > 1:
            s = f"({s})/({self.den})"
        return s


def _laurent_mul(a: Dict[int, GaussQ], b: Dict[int, GaussQ]) -> Dict[int, GaussQ]:
    out: Dict[int, GaussQ] = {}
    for k1, v1 in a.items():
        for k2, v2 in b.items():
            k = k1 + k2
            out[k] = out.get(k, _Q0) + v1 * v2
    return {k: v for k, v in out.items() if v}


def _laurent_mul_poly(a: Dict[int, GaussQ], p: Poly) -> Dict[int, GaussQ]:
    return _laurent_mul(a, {k: c for k, c in enumerate(p) if c})


def _laurent_add(a: Dict[int, GaussQ], b: Dict[int, GaussQ]) -> Dict[int, GaussQ]:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, _Q0) + v
    return {k: v for k, v in out.items() if v}


def _reduce(num: Dict[int, GaussQ], den: Poly) -> Tuple[Dict[int, GaussQ], Poly]:
    num = {k: v for k, v in num.items() if v}
    den = _trim(den)
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return {}, (_Q1,)
    # pull gamma factors out of the denominator into negative exponents
    shift = 0
    while not den[0]:
        den = den[1:]
        shift += 1
    if shift:
        num = {k - shift: v for k, v in num.items()}
    if len(den) > 1:
        lo = min(num)
        dense = tuple(num.get(k, _Q0) for k in range(lo, max(num) + 1))
        g = _pgcd(dense, den)
        if len(g) > 1:
            dense = _pdivmod(dense, g)[0]
            den = _pdivmod(den, g)[0]
        lead = den[-1]
        if lead != _Q1:
            inv = lead.inverse()
            den = tuple(c * inv for c in den)
            dense = tuple(c * inv for c in dense)
        num = {k + lo: c for k, c in enumerate(dense) if c}
    elif den[0] != _Q1:
        inv = den[0].inverse()
        num = {k: v * inv for k, v in num.items()}
        den = (_Q1,)
    return num, den


ZERO = Scalar({}, (_Q1,), _reduced=True)
ONE = Scalar({0: _Q1}, (_Q1,), _reduced=True)
I = Scalar({0: GaussQ(0, 1)}, (_Q1,), _reduced=True)
GAMMA = Scalar({1: _Q1}, (_Q1,), _reduced=True)
