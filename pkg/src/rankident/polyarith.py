"""Exact sparse multivariate polynomials over the rationals.

Monomials are plain tuples of non-negative ints (one slot per ring variable),
coefficients are ``gmpy2.mpq``.  Everything here is immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import gmpy2
from gmpy2 import mpq

Rat = type(mpq(0))
Monomial = tuple

__all__ = [
    "Rat",
    "rat",
    "rat_str",
    "StructuralError",
    "Ring",
    "MonomialOrder",
    "LEX",
    "GREVLEX",
    "block_order",
    "cmp_monomials",
    "Polynomial",
    "RationalFunction",
    "normal_form",
    "s_polynomial",
    "mono_mul",
    "mono_div",
    "mono_divides",
    "mono_lcm",
]


class StructuralError(ValueError):
    """Raised on arity/ring mismatches and other malformed inputs."""


def rat(value) -> Rat:
    """Coerce ints, Fractions, mpq and ``"p/q"`` strings to an exact rational."""
    if isinstance(value, Rat):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            if int(den) == 0:
                raise ZeroDivisionError(f"zero denominator in {value!r}")
            return mpq(int(num), int(den))
        return mpq(int(text))
    if isinstance(value, float):
        raise TypeError("floating point values are not accepted as exact rationals")
    if gmpy2.is_integer(value):
        return mpq(value)
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def rat_str(value: Rat) -> str:
    """``"num/den"`` (or ``"num"`` for integers)."""
    value = rat(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# -- monomials ---------------------------------------------------------------

def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def mono_div(a: Monomial, b: Monomial) -> Monomial:
    out = tuple(x - y for x, y in zip(a, b))
    if any(e < 0 for e in out):
        raise StructuralError(f"{b} does not divide {a}")
    return out


def mono_divides(b: Monomial, a: Monomial) -> bool:
    """True when ``b | a``."""
    return all(y <= x for x, y in zip(a, b))


def mono_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x if x > y else y for x, y in zip(a, b))


# -- rings -------------------------------------------------------------------

@dataclass(frozen=True)
class Ring:
    """Ordered variable names; ``block_split`` marks ``[x-block | t-block]``."""

    names: tuple[str, ...]
    block_split: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            raise StructuralError(f"duplicate variable names in {self.names}")
        if self.block_split is not None and not 0 <= self.block_split <= len(self.names):
            raise StructuralError("block_split out of range")

    @classmethod
    def blocks(cls, xs: Sequence[str], ts: Sequence[str]) -> "Ring":
        return cls(tuple(xs) + tuple(ts), len(xs))

    @property
    def arity(self) -> int:
        return len(self.names)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise StructuralError(f"unknown variable {name!r}") from None

    @property
    def x_names(self) -> tuple[str, ...]:
        return self.names if self.block_split is None else self.names[: self.block_split]

    @property
    def t_names(self) -> tuple[str, ...]:
        return () if self.block_split is None else self.names[self.block_split:]

    @property
    def is_parametric(self) -> bool:
        return bool(self.t_names)

    def restrict(self, keep: Iterable[str]) -> "Ring":
        """Sub-ring on ``keep`` (original order preserved, blocks recomputed)."""
        keep = set(keep)
        names = tuple(n for n in self.names if n in keep)
        if self.block_split is None:
            return Ring(names)
        xs = sum(1 for n in self.x_names if n in keep)
        return Ring(names, xs)

    def default_order(self) -> "MonomialOrder":
        return block_order() if self.block_split is not None else LEX

    def zero(self) -> "Polynomial":
        return Polynomial(self, {})

    def one(self) -> "Polynomial":
        return Polynomial.constant(self, 1)

    def var(self, name: str) -> "Polynomial":
        return Polynomial.variable(self, name)

    def gens(self) -> list["Polynomial"]:
        return [self.var(n) for n in self.names]


# -- orders ------------------------------------------------------------------

def _lex_key(m):
    return m


def _grevlex_key(m):
    return (sum(m),) + tuple(-e for e in reversed(m))


_INNER = {"lex": _lex_key, "grevlex": _grevlex_key}


@dataclass(frozen=True)
class MonomialOrder:
    """``lex``, ``grevlex`` or ``block`` (x-block first, t-block on ties).

    ``key(ring)`` returns a function mapping a monomial to a flat int tuple
    that sorts ascending with the order.
    """

    kind: str = "lex"
    inner_x: str = "lex"
    inner_t: str = "lex"

    def __post_init__(self):
        if self.kind not in ("lex", "grevlex", "block"):
            raise StructuralError(f"unknown order kind {self.kind!r}")
        if self.inner_x not in _INNER or self.inner_t not in _INNER:
            raise StructuralError("inner orders must be lex or grevlex")

    @property
    def is_block(self) -> bool:
        return self.kind == "block"

    def key(self, ring: Ring | None = None) -> Callable[[Monomial], tuple]:
        if self.kind == "lex":
            return _lex_key
        if self.kind == "grevlex":
            return _grevlex_key
        if ring is None or ring.block_split is None:
            raise StructuralError("block order needs a ring with block_split set")
        k = ring.block_split
        kx, kt = _INNER[self.inner_x], _INNER[self.inner_t]
        return lambda m: kx(m[:k]) + kt(m[k:])

    def __str__(self) -> str:
        if self.kind == "block":
            return f"block({self.inner_x},{self.inner_t})"
        return self.kind


LEX = MonomialOrder("lex")
GREVLEX = MonomialOrder("grevlex")


def block_order(inner_x: str = "lex", inner_t: str = "lex") -> MonomialOrder:
    return MonomialOrder("block", inner_x, inner_t)


def cmp_monomials(m1: Monomial, m2: Monomial, order: MonomialOrder, ring: Ring | None = None) -> int:
    """-1, 0 or 1 as ``m1`` is less than, equal to or greater than ``m2``."""
    if len(m1) != len(m2):
        raise StructuralError(f"arity mismatch: {len(m1)} vs {len(m2)}")
    if ring is not None and len(m1) != ring.arity:
        raise StructuralError("monomial arity does not match ring")
    if order.is_block and ring is None:
        raise StructuralError("block order comparison needs the ring")
    key = order.key(ring)
    a, b = key(m1), key(m2)
    return (a > b) - (a < b)


# -- polynomials -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Polynomial:
    ring: Ring
    terms: Mapping[Monomial, Rat] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        n = self.ring.arity
        for m, c in self.terms.items():
            if len(m) != n:
                raise StructuralError(f"monomial {m} has wrong arity for ring of {n} variables")
            c = rat(c)
            if c:
                clean[tuple(m)] = c
        object.__setattr__(self, "terms", clean)

    # constructors
    @classmethod
    def constant(cls, ring: Ring, c) -> "Polynomial":
        return cls(ring, {(0,) * ring.arity: rat(c)})

    @classmethod
    def variable(cls, ring: Ring, name: str, power: int = 1) -> "Polynomial":
        exps = [0] * ring.arity
        exps[ring.index(name)] = power
        return cls(ring, {tuple(exps): mpq(1)})

    @classmethod
    def _raw(cls, ring: Ring, terms: dict) -> "Polynomial":
        # trusted fast path: terms already clean
        obj = object.__new__(cls)
        object.__setattr__(obj, "ring", ring)
        object.__setattr__(obj, "terms", terms)
        return obj

    # basic queries
    @property
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Rat:
        if not self.is_constant():
            raise StructuralError("polynomial is not constant")
        return self.terms.get((0,) * self.ring.arity, mpq(0))

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def degree_in(self, name: str) -> int:
        i = self.ring.index(name)
        return max((m[i] for m in self.terms), default=-1)

    def variables(self) -> set[str]:
        used = set()
        for m in self.terms:
            used.update(self.ring.names[i] for i, e in enumerate(m) if e)
        return used

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)) or isinstance(other, Rat):
            other = Polynomial.constant(self.ring, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.ring, frozenset(self.terms.items())))

    # ordering-dependent views
    def sorted_terms(self, order: MonomialOrder | None = None) -> list[tuple[Monomial, Rat]]:
        order = order or self.ring.default_order()
        key = order.key(self.ring)
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, order: MonomialOrder | None = None) -> tuple[Monomial, Rat]:
        if not self.terms:
            raise StructuralError("zero polynomial has no leading term")
        order = order or self.ring.default_order()
        key = order.key(self.ring)
        m = max(self.terms, key=key)
        return m, self.terms[m]

    def lm(self, order=None) -> Monomial:
        return self.leading_term(order)[0]

    def lc(self, order=None) -> Rat:
        return self.leading_term(order)[1]

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.ring != self.ring:
                raise StructuralError("ring mismatch")
            return other
        return Polynomial.constant(self.ring, rat(other))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial._raw(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = rat(other)
            if not c:
                return self.ring.zero()
            return Polynomial._raw(self.ring, {m: c * v for m, v in self.terms.items()})
        other = self._coerce(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Polynomial._raw(self.ring, {m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise StructuralError("negative exponent")
        result, base = self.ring.one(), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def mul_term(self, mono: Monomial, coeff) -> "Polynomial":
        coeff = rat(coeff)
        if not coeff:
            return self.ring.zero()
        return Polynomial._raw(
            self.ring, {tuple(a + b for a, b in zip(m, mono)): c * coeff for m, c in self.terms.items()}
        )

    def monic(self, order=None) -> "Polynomial":
        return self * (1 / self.lc(order))

    def primitive(self, order=None) -> "Polynomial":
        """Scale to coprime integer coefficients with positive leading coefficient."""
        if not self.terms:
            return self
        den = 1
        for c in self.terms.values():
            den = gmpy2.lcm(den, c.denominator)
        num = 0
        for c in self.terms.values():
            num = gmpy2.gcd(num, (c * den).numerator)
        scale = mpq(den, num)
        if self.lc(order) < 0:
            scale = -scale
        return self * scale

    # substitution
    def evaluate(self, assignment: Mapping[str, object]) -> "Polynomial":
        """Substitute exact rationals; result lives in the ring of unassigned variables."""
        if not assignment:
            return self
        idx = {}
        for name, value in assignment.items():
            idx[self.ring.index(name)] = rat(value)
        keep = [i for i in range(self.ring.arity) if i not in idx]
        sub = self.ring.restrict(self.ring.names[i] for i in keep)
        powers: dict = {}
        out: dict = {}
        for m, c in self.terms.items():
            v = c
            for i, val in idx.items():
                e = m[i]
                if e:
                    key = (i, e)
                    pw = powers.get(key)
                    if pw is None:
                        pw = powers[key] = val ** e
                    v = v * pw
                    if not v:
                        break
            if v:
                nm = tuple(m[i] for i in keep)
                out[nm] = out.get(nm, 0) + v
        return Polynomial._raw(sub, {m: c for m, c in out.items() if c})

    def __call__(self, **assignment) -> "Polynomial":
        return self.evaluate(assignment)

    def to_ring(self, ring: Ring) -> "Polynomial":
        """Re-embed into a ring containing all variables that occur here."""
        if ring == self.ring:
            return self
        pos = []
        for i, name in enumerate(self.ring.names):
            pos.append(ring.index(name) if name in ring._index else None)
        out = {}
        for m, c in self.terms.items():
            exps = [0] * ring.arity
            for i, e in enumerate(m):
                if e:
                    if pos[i] is None:
                        raise StructuralError(f"variable {self.ring.names[i]!r} missing from target ring")
                    exps[pos[i]] = e
            out[tuple(exps)] = c
        return Polynomial._raw(ring, out)

    def coefficients_in_x(self) -> dict[Monomial, "Polynomial"]:
        """Group terms by x-monomial; values are polynomials over the t-block."""
        k = self.ring.block_split
        if k is None:
            raise StructuralError("ring has no block split")
        tring = Ring(self.ring.t_names)
        groups: dict = {}
        for m, c in self.terms.items():
            groups.setdefault(m[:k], {})[m[k:]] = c
        return {xm: Polynomial._raw(tring, ts) for xm, ts in groups.items()}

    # rendering
    def render(self, order: MonomialOrder | None = None) -> str:
        """Canonical text: descending terms, explicit ``*``, ``^`` for powers."""
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms(order):
            mono = "*".join(
                n if e == 1 else f"{n}^{e}" for n, e in zip(self.ring.names, m) if e
            )
            neg = c < 0
            a = -c if neg else c
            if not mono:
                body = rat_str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{rat_str(a)}*{mono}"
            if not parts:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append(("- " if neg else "+ ") + body)
        return " ".join(parts)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"Polynomial({self.render()!r})"


# -- rational functions (for solution templates) -----------------------------

@dataclass(frozen=True, eq=False)
class RationalFunction:
    """``num/den`` with no cancellation; only used to describe closed-form solutions."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ZeroDivisionError("zero denominator")
        if self.num.ring != self.den.ring:
            raise StructuralError("ring mismatch")

    @classmethod
    def of(cls, p) -> "RationalFunction":
        if isinstance(p, RationalFunction):
            return p
        return cls(p, p.ring.one())

    @property
    def ring(self) -> Ring:
        return self.num.ring

    def _lift(self, other):
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, Polynomial):
            return RationalFunction.of(other)
        return RationalFunction.of(Polynomial.constant(self.ring, rat(other)))

    def __add__(self, other):
        o = self._lift(other)
        if self.den == o.den:
            return RationalFunction(self.num + o.num, self.den)
        return RationalFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return RationalFunction(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        return RationalFunction(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def evaluate(self, assignment: Mapping[str, object]) -> Rat:
        den = self.den.evaluate(assignment)
        num = self.num.evaluate(assignment)
        if not (den.is_constant() and num.is_constant()):
            raise StructuralError("assignment leaves free variables")
        d = den.constant_value()
        if not d:
            raise ZeroDivisionError("denominator vanishes at this point")
        return num.constant_value() / d

    def render(self, order=None) -> str:
        if self.den == self.ring.one():
            return self.num.render(order)
        return f"({self.num.render(order)})/({self.den.render(order)})"

    def __str__(self) -> str:
        return self.render()


# -- division ----------------------------------------------------------------

def normal_form(p: Polynomial, divisors: Sequence[Polynomial], order: MonomialOrder | None = None,
                with_quotients: bool = False):
    """Multivariate division remainder (full reduction).

    With ``with_quotients`` returns ``(remainder, quotients)`` such that
    ``p == remainder + sum(q_i * d_i)``.
    """
    order = order or p.ring.default_order()
    divisors = [d for d in divisors]
    if any(d.is_zero for d in divisors):
        raise StructuralError("zero divisor in normal_form")
    for d in divisors:
        if d.ring != p.ring:
            raise StructuralError("ring mismatch")
    key = order.key(p.ring)
    leads = [d.leading_term(order) for d in divisors]
    quotients = [dict() for _ in divisors]
    rest = dict(p.terms)
    remainder = {}
    while rest:
        m = max(rest, key=key)
        c = rest[m]
        for i, (lm, lc) in enumerate(leads):
            if mono_divides(lm, m):
                q = mono_div(m, lm)
                f = c / lc
                if with_quotients:
                    quotients[i][q] = quotients[i].get(q, 0) + f
                for dm, dc in divisors[i].terms.items():
                    nm = tuple(a + b for a, b in zip(dm, q))
                    v = rest.get(nm, 0) - f * dc
                    if v:
                        rest[nm] = v
                    else:
                        rest.pop(nm, None)
                break
        else:
            remainder[m] = c
            del rest[m]
    r = Polynomial._raw(p.ring, remainder)
    if with_quotients:
        return r, [Polynomial(p.ring, q) for q in quotients]
    return r


def s_polynomial(p: Polynomial, q: Polynomial, order: MonomialOrder | None = None) -> Polynomial:
    if p.is_zero or q.is_zero:
        raise StructuralError("S-polynomial of a zero polynomial")
    if p.ring != q.ring:
        raise StructuralError("ring mismatch")
    order = order or p.ring.default_order()
    mp, cp = p.leading_term(order)
    mq, cq = q.leading_term(order)
    lcm = mono_lcm(mp, mq)
    return p.mul_term(mono_div(lcm, mp), 1 / cp) - q.mul_term(mono_div(lcm, mq), 1 / cq)
