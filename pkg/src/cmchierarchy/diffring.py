"""Differential polynomial ring of the prolonged CMC system.

Generators are the formal square roots ``h2^(1/2)``, ``hb2^(1/2)`` (with
arbitrary integer exponents) and ``h_j``, ``hb_j`` for ``j >= 3`` (with
nonnegative exponents).  Barred generators are independent of the unbarred
ones.  A monomial is keyed by the exponent vector

    (h2 half-steps, hb2 half-steps, e3, eb3, e4, eb4, ...)

with trailing zeros stripped.  Coefficients are :class:`~cmchierarchy.scalar.Scalar`.

The two derivations ``derive(f, XI)`` and ``derive(f, XIBAR)`` return the
covariant components of ``df`` in the convention

    df + i*w(f)*rho = f_xi * xi + f_xibar * xibar,

where ``w`` is the rho-weight read off the exponents: ``w(h_j) = j``,
``w(hb_j) = -j``, ``w(h2^(1/2)) = 1``, ``w(hb2^(1/2)) = -1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from .scalar import GAMMA, ONE, ZERO, GaussQ, Scalar

__all__ = [
    "XI",
    "XIBAR",
    "RHO",
    "WeightError",
    "DiffPoly",
    "BalancedForm",
    "derive",
    "torsion",
    "torsion_coefficient",
    "jacobi",
    "conjugate",
    "balanced_form",
    "curvature_defect",
]

XI = "xi"
XIBAR = "xibar"
RHO = "rho"

Key = Tuple[int, ...]
_UNIT: Key = (0, 0)


class WeightError(ValueError):
    """Raised when an operation needs a weight-homogeneous input and gets something else."""


def _strip(key) -> Key:
    key = list(key)
    while len(key) > 2 and key[-1] == 0:
        key.pop()
    return tuple(key)


def _kmul(a: Key, b: Key) -> Key:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, e in enumerate(b):
        out[i] += e
    # exponents of h_j are nonnegative, so only cancellation at the h2 slots can occur
    return _strip(out) if len(out) > 2 and out[-1] == 0 else tuple(out)


def _slot(j: int, barred: bool) -> int:
    return 2 * (j - 3) + (3 if barred else 2)


def _key_weight(key: Key) -> int:
    w = key[0] - key[1]
    for idx in range(2, len(key)):
        j = 3 + (idx - 2) // 2
        w += j * key[idx] if idx % 2 == 0 else -j * key[idx]
    return w


def _key_conj(key: Key) -> Key:
    out = [key[1], key[0]]
    for idx in range(2, len(key), 2):
        e = key[idx]
        eb = key[idx + 1] if idx + 1 < len(key) else 0
        out += [eb, e]
    return _strip(out)


def _sort_key(key: Key):
    # graded lex: total exponent first, then the vector itself
    return (sum(key), key)


class DiffPoly:
    """Immutable element of the differential polynomial ring."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Key, Scalar]] = None, _clean: bool = False):
        if terms is None:
            terms = {}
        elif not _clean:
            terms = {_strip(k): Scalar.coerce(v) for k, v in terms.items()}
            terms = {k: v for k, v in terms.items() if v}
        self.terms: Dict[Key, Scalar] = terms
        self._hash = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def const(cls, c) -> "DiffPoly":
        c = Scalar.coerce(c)
        return cls({_UNIT: c} if c else {}, _clean=True)

    @classmethod
    def monomial(cls, key: Iterable[int], coeff=ONE) -> "DiffPoly":
        return cls({_strip(tuple(key)): Scalar.coerce(coeff)})

    @classmethod
    def h(cls, j: int) -> "DiffPoly":
        """The generator ``h_j``; ``j = 2`` gives ``h2``."""
        if j == 2:
            return cls.h2_half(2)
        if j < 2:
            raise ValueError(f"h_{j} is not a generator")
        key = [0] * (_slot(j, False) + 1)
        key[_slot(j, False)] = 1
        return cls({tuple(key): ONE}, _clean=True)

    @classmethod
    def hbar(cls, j: int) -> "DiffPoly":
        if j == 2:
            return cls.hbar2_half(2)
        if j < 2:
            raise ValueError(f"hb_{j} is not a generator")
        key = [0] * (_slot(j, True) + 1)
        key[_slot(j, True)] = 1
        return cls({tuple(key): ONE}, _clean=True)

    @classmethod
    def h2_half(cls, p: int = 1) -> "DiffPoly":
        """``h2^(p/2)``."""
        return cls({(p, 0): ONE}, _clean=True)

    @classmethod
    def hbar2_half(cls, q: int = 1) -> "DiffPoly":
        return cls({(0, q): ONE}, _clean=True)

    @classmethod
    def z(cls, j: int) -> "DiffPoly":
        """Balanced coordinate ``z_j = h2^(-j/2) h_j``."""
        return cls.h2_half(-j) * cls.h(j)

    @classmethod
    def zbar(cls, j: int) -> "DiffPoly":
        return cls.hbar2_half(-j) * cls.hbar(j)

    @classmethod
    def gamma(cls) -> "DiffPoly":
        return cls.const(GAMMA)

    @classmethod
    def coerce(cls, x) -> "DiffPoly":
        if isinstance(x, DiffPoly):
            return x
        return cls.const(x)

    # -- basic protocol -------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, DiffPoly):
            try:
                other = DiffPoly.coerce(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def items(self) -> List[Tuple[Key, Scalar]]:
        """Terms in canonical order."""
        return sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0]))

    def __add__(self, other) -> "DiffPoly":
        other = DiffPoly.coerce(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = out.get(k)
            if s is None:
                out[k] = v
            else:
                s = s + v
                if s:
                    out[k] = s
                else:
                    del out[k]
        return DiffPoly(out, _clean=True)

    __radd__ = __add__

    def __neg__(self) -> "DiffPoly":
        return DiffPoly({k: -v for k, v in self.terms.items()}, _clean=True)

    def __sub__(self, other) -> "DiffPoly":
        return self + (-DiffPoly.coerce(other))

    def __rsub__(self, other) -> "DiffPoly":
        return DiffPoly.coerce(other) - self

    def __mul__(self, other) -> "DiffPoly":
        if not isinstance(other, DiffPoly):
            c = Scalar.coerce(other)
            if not c:
                return DiffPoly()
            return DiffPoly({k: v * c for k, v in self.terms.items()}, _clean=True)
        if not self.terms or not other.terms:
            return DiffPoly()
        out: Dict[Key, Scalar] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = _kmul(k1, k2)
                p = v1 * v2
                s = out.get(k)
                out[k] = p if s is None else s + p
        return DiffPoly({k: v for k, v in out.items() if v}, _clean=True)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "DiffPoly":
        """Division by a Scalar or by a single-term DiffPoly (a unit of the ring)."""
        if isinstance(other, DiffPoly):
            if len(other.terms) != 1:
                raise ZeroDivisionError("only monomials are invertible in the ring")
            (k, v), = other.terms.items()
            if any(e for e in k[2:]):
                raise ZeroDivisionError("h_j (j >= 3) is not invertible")
            inv = DiffPoly({(-k[0], -k[1]): v.inverse()}, _clean=True)
            return self * inv
        return self * Scalar.coerce(other).inverse()

    def __pow__(self, n: int) -> "DiffPoly":
        if n < 0:
            return DiffPoly.const(ONE) / (self ** (-n))
        out = DiffPoly.const(ONE)
        for _ in range(n):
            out = out * self
        return out

    # -- gradings -------------------------------------------------------
    def weights(self) -> set:
        return {_key_weight(k) for k in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.weights()) <= 1

    def weight(self) -> Optional[int]:
        """rho-weight; ``None`` for zero.  Raises :class:`WeightError` if mixed."""
        ws = self.weights()
        if not ws:
            return None
        if len(ws) > 1:
            raise WeightError(f"not weight-homogeneous: weights {sorted(ws)}")
        return next(iter(ws))

    # -- maps -----------------------------------------------------------
    def map_coefficients(self, fn) -> "DiffPoly":
        return DiffPoly({k: fn(v) for k, v in self.terms.items()})

    def substitute_gamma(self, value) -> "DiffPoly":
        return self.map_coefficients(lambda c: c.substitute(Fraction(value)))

    def evaluate(self, gamma, h2_half=1.0, hb2_half=1.0,
                 h: Optional[Mapping[int, complex]] = None,
                 hb: Optional[Mapping[int, complex]] = None) -> complex:
        """Numeric value at the given point.  Missing generators raise KeyError."""
        h = h or {}
        hb = hb or {}
        cache: Dict[Key, complex] = {}
        total = 0j
        for k, c in self.terms.items():
            val = complex(h2_half) ** k[0] * complex(hb2_half) ** k[1]
            for idx in range(2, len(k)):
                e = k[idx]
                if e:
                    j = 3 + (idx - 2) // 2
                    val *= (h[j] if idx % 2 == 0 else hb[j]) ** e
            total += c.evaluate(gamma) * val
        return total

    def evaluate_balanced(self, gamma, z: Mapping[int, complex],
                          zb: Optional[Mapping[int, complex]] = None,
                          h2_half=1.0, hb2_half=1.0) -> complex:
        """Evaluate with ``h_j = h2^(j/2) z_j`` (and barred mirror)."""
        s = complex(h2_half)
        sb = complex(hb2_half)
        h = {j: s ** j * complex(v) for j, v in z.items()}
        hb = {j: sb ** j * complex(v) for j, v in (zb or {}).items()}
        return self.evaluate(gamma, h2_half=s, hb2_half=sb, h=h, hb=hb)

    # -- text -----------------------------------------------------------
    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*{_key_str(k)}" for k, c in self.items())

    def to_json(self) -> list:
        out = []
        for k, c in self.items():
            hs, hbs = {}, {}
            for idx in range(2, len(k)):
                if k[idx]:
                    j = 3 + (idx - 2) // 2
                    (hs if idx % 2 == 0 else hbs)[str(j)] = k[idx]
            out.append({"coeff": scalar_to_json(c), "h2h": k[0], "hb2h": k[1], "h": hs, "hb": hbs})
        return out

    @classmethod
    def from_json(cls, data: list) -> "DiffPoly":
        terms = {}
        for t in data:
            n = 2
            for d in (t.get("h", {}), t.get("hb", {})):
                for j in d:
                    n = max(n, _slot(int(j), True) + 1)
            key = [0] * n
            key[0] = int(t["h2h"])
            key[1] = int(t["hb2h"])
            for j, e in t.get("h", {}).items():
                key[_slot(int(j), False)] = int(e)
            for j, e in t.get("hb", {}).items():
                key[_slot(int(j), True)] = int(e)
            k = _strip(key)
            c = scalar_from_json(t["coeff"])
            terms[k] = terms.get(k, ZERO) + c
        return cls(terms)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def _key_str(k: Key) -> str:
    parts = []
    if k[0]:
        parts.append(f"h2^({Fraction(k[0], 2)})")
    if k[1]:
        parts.append(f"hb2^({Fraction(k[1], 2)})")
    for idx in range(2, len(k)):
        if k[idx]:
            j = 3 + (idx - 2) // 2
            name = f"h{j}" if idx % 2 == 0 else f"hb{j}"
            parts.append(name if k[idx] == 1 else f"{name}^{k[idx]}")
    return "*".join(parts) if parts else "1"


def _q_str(q: GaussQ) -> List[str]:
    return [str(q.re), str(q.im)]


def scalar_to_json(c: Scalar) -> dict:
    num, den = c.as_polys()
    return {"gamma": [_q_str(q) for q in num], "gamma_den": [_q_str(q) for q in den]}


def scalar_from_json(d: dict) -> Scalar:
    def q(pair):
        return GaussQ(Fraction(pair[0]), Fraction(pair[1]))
    return Scalar.from_polys([q(p) for p in d["gamma"]], [q(p) for p in d["gamma_den"]])


# ---------------------------------------------------------------------------
# torsion and derivations

def torsion_coefficient(j: int, s: int) -> Fraction:
    """Coefficient ``a_{js} = (j+s+2)/2 * (j-1)! / ((j-s-2)! (s+2)!)``."""
    return Fraction(j + s + 2, 2) * Fraction(factorial(j - 1), factorial(j - s - 2) * factorial(s + 2))


def _xi_power_R(s: int) -> DiffPoly:
    # d_xi^s R with R = gamma^2 - h2 hb2
    out = -(DiffPoly.h(2 + s) * DiffPoly.hbar(2))
    if s == 0:
        out = out + DiffPoly.const(GAMMA * GAMMA)
    return out


@lru_cache(maxsize=None)
def torsion(j: int) -> DiffPoly:
    """``T_j``, the xibar-derivative of ``h_j``."""
    if j < 2:
        raise ValueError(f"torsion T_{j} undefined for j < 2")
    if j == 2:
        return DiffPoly()
    k = j - 1
    out = DiffPoly()
    for s in range(k - 1):
        out = out + DiffPoly.h(k - s) * _xi_power_R(s) * torsion_coefficient(k, s)
    return out


@lru_cache(maxsize=None)
def _torsion_bar(j: int) -> DiffPoly:
    return conjugate(torsion(j))


def _shift(key: Key, idx: int, delta: int) -> list:
    out = list(key)
    if idx >= len(out):
        out += [0] * (idx + 1 - len(out))
    out[idx] += delta
    return out


@lru_cache(maxsize=None)
def _derive_monomial(key: Key, direction: str) -> DiffPoly:
    bar = direction == XIBAR
    out = DiffPoly()
    acc: Dict[Key, Scalar] = {}

    def add(k, c):
        k = _strip(k)
        acc[k] = acc.get(k, ZERO) + c

    # square-root slot that differentiates "straight" in this direction
    p = key[1] if bar else key[0]
    if p:
        k = _shift(key, 1 if bar else 0, -2)
        k = _shift(k, _slot(3, bar), 1)
        add(k, Scalar.const(Fraction(p, 2)))
    for idx in range(2, len(key)):
        e = key[idx]
        if not e:
            continue
        j = 3 + (idx - 2) // 2
        barred = idx % 2 == 1
        if barred == bar:
            # d h_j = h_{j+1} in its own direction
            k = _shift(key, idx, -1)
            k = _shift(k, _slot(j + 1, barred), 1)
            add(k, Scalar.const(e))
        else:
            rest = DiffPoly.monomial(_shift(key, idx, -1), Scalar.const(e))
            t = _torsion_bar(j) if barred else torsion(j)
            out = out + rest * t
    return out + DiffPoly({k: v for k, v in acc.items() if v}, _clean=True)


def derive(f: DiffPoly, direction: str) -> DiffPoly:
    """Component of ``df`` along ``xi``, ``xibar`` or ``rho``.

    The rho-component is ``-i w f`` summed over homogeneous parts.
    """
    if direction == RHO:
        from .scalar import I
        return DiffPoly({k: c * I * (-_key_weight(k)) for k, c in f.terms.items() if _key_weight(k)},
                        _clean=True)
    if direction not in (XI, XIBAR):
        raise ValueError(f"unknown direction {direction!r}")
    out: Dict[Key, Scalar] = {}
    for k, c in f.terms.items():
        for k2, c2 in _derive_monomial(k, direction).terms.items():
            p = c * c2
            s = out.get(k2)
            out[k2] = p if s is None else s + p
    return DiffPoly({k: v for k, v in out.items() if v}, _clean=True)


def conjugate(f: DiffPoly) -> DiffPoly:
    """Formal conjugation: h_j <-> hb_j, i -> -i, gamma fixed."""
    return DiffPoly({_key_conj(k): c.conjugate() for k, c in f.terms.items()}, _clean=True)


_R_PLUS = DiffPoly.const(GAMMA * GAMMA) + DiffPoly.h(2) * DiffPoly.hbar(2)


def jacobi(f: DiffPoly) -> DiffPoly:
    """Jacobi operator ``d_xi d_xibar + (gamma^2 + h2 hb2)/2`` on weight-zero input."""
    w = f.weight()
    if w not in (None, 0):
        raise WeightError(f"Jacobi operator needs weight 0, got {w}")
    return derive(derive(f, XIBAR), XI) + _R_PLUS * f * Fraction(1, 2)


def curvature_defect(f: DiffPoly) -> DiffPoly:
    """``[d_xi, d_xibar] f + (w/2) R f``; vanishes identically on homogeneous ``f``.

    Follows from ``d rho = R (i/2) xi ^ xibar`` and ``d xi = i rho ^ xi``.
    """
    w = f.weight() or 0
    R = DiffPoly.const(GAMMA * GAMMA) - DiffPoly.h(2) * DiffPoly.hbar(2)
    comm = derive(derive(f, XIBAR), XI) - derive(derive(f, XI), XIBAR)
    return comm + R * f * Fraction(w, 2)


# ---------------------------------------------------------------------------
# balanced coordinates

@dataclass
class BalancedForm:
    """``h2^(h2_half/2) hb2^(hbar2_half/2) * sum(coeff * (h2 hb2)^(r/2) * z^e * zb^eb)``.

    ``terms`` is keyed by ``(r, z_exponents, zb_exponents)`` where the exponent
    entries are sorted ``(j, e)`` pairs and ``r`` counts half-powers of ``h2 hb2``.
    """

    h2_half: int
    hbar2_half: int
    terms: Dict[Tuple[int, tuple, tuple], Scalar] = field(default_factory=dict)

    @property
    def member(self) -> bool:
        """True iff the element lies in C[z3, z4, ...]."""
        if self.h2_half or self.hbar2_half:
            return False
        return all(r == 0 and not zb for (r, _, zb) in self.terms)

    @property
    def spectral_weights(self) -> set:
        return {sum(e * (j - 2) for j, e in z) - sum(e * (j - 2) for j, e in zb)
                for (_, z, zb) in self.terms}

    @property
    def spectral_weight(self) -> Optional[int]:
        ws = self.spectral_weights
        return next(iter(ws)) if len(ws) == 1 else None

    def to_json(self) -> dict:
        terms = []
        for (r, z, zb), c in sorted(self.terms.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
            terms.append({"coeff": scalar_to_json(c), "r_half": r,
                          "z": {str(j): e for j, e in z}, "zb": {str(j): e for j, e in zb}})
        return {"h2_half": self.h2_half, "hbar2_half": self.hbar2_half, "member": self.member,
                "spectral_weight": self.spectral_weight, "terms": terms}


def balanced_form(f: DiffPoly) -> BalancedForm:
    """Rewrite ``f`` in balanced coordinates; ``f`` must be weight-homogeneous."""
    f.weight()
    rows = []
    for k, c in f.terms.items():
        p, q = k[0], k[1]
        z, zb = [], []
        for idx in range(2, len(k)):
            e = k[idx]
            if e:
                j = 3 + (idx - 2) // 2
                if idx % 2 == 0:
                    p += j * e
                    z.append((j, e))
                else:
                    q += j * e
                    zb.append((j, e))
        rows.append((p, q, tuple(z), tuple(zb), c))
    if not rows:
        return BalancedForm(0, 0, {})
    P = min(r[0] for r in rows)
    Q = min(r[1] for r in rows)
    terms = {}
    for p, q, z, zb, c in rows:
        terms[(p - P, z, zb)] = terms.get((p - P, z, zb), ZERO) + c
    return BalancedForm(P, Q, {k: v for k, v in terms.items() if v})
