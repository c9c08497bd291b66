"""Buchberger's algorithm (Gebauer–Möller criteria) and Bad-set extraction.

Internally monomials are packed into integers (see ``_Packing``) so the inner
division loop only does int arithmetic and ``mpq`` (or modular int) updates.
"""

from __future__ import annotations

import heapq
import itertools
from bisect import bisect_left
from operator import mul
import logging
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from gmpy2 import mpq

from .polyarith import (
    MonomialOrder,
    Polynomial,
    Rat,
    Ring,
    StructuralError,
    rat,
)

log = logging.getLogger(__name__)

__all__ = [
    "Limits",
    "GroebnerBasis",
    "GroebnerTimeout",
    "BadSet",
    "buchberger",
    "groebner",
    "reduce_basis",
    "is_groebner_basis",
    "extract_bad_set",
    "avoids_bad_set",
]


@dataclass(frozen=True)
class Limits:
    """Resource limits for one Buchberger run (``None`` = unbounded)."""

    max_pairs: int | None = None
    max_seconds: float | None = None
    max_terms: int | None = None   # total terms over all basis elements ever stored

    def __post_init__(self):
        if self.max_pairs is not None and self.max_pairs <= 0:
            raise ValueError("max_pairs must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError("max_seconds must be positive")
        if self.max_terms is not None and self.max_terms <= 0:
            raise ValueError("max_terms must be positive")


@dataclass(frozen=True)
class GroebnerBasis:
    ring: Ring
    order: MonomialOrder
    elements: tuple[Polynomial, ...]
    reduced: bool = False
    pair_count: int = 0
    wall_seconds: float = 0.0
    modulus: int | None = None

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def leading_monomials(self) -> list[tuple]:
        return [g.lm(self.order) for g in self.elements]

    def normal_form(self, p: Polynomial) -> Polynomial:
        return _normal_form(p, self.elements, self.order, self.modulus)

    def contains(self, p: Polynomial) -> bool:
        """Ideal membership (valid because this is a Gröbner basis)."""
        return self.normal_form(p).is_zero

    def is_unit_ideal(self) -> bool:
        return any(g.is_constant() and not g.is_zero for g in self.elements)

    def render(self) -> list[str]:
        return [g.render(self.order) for g in self.elements]


@dataclass(frozen=True)
class GroebnerTimeout:
    """Returned instead of a basis when a resource limit is hit."""

    ring: Ring
    order: MonomialOrder
    partial: tuple[Polynomial, ...]
    pending_pairs: int
    pair_count: int
    wall_seconds: float
    reason: str

    @property
    def timed_out(self) -> bool:
        return True


@dataclass(frozen=True)
class BadSet:
    parameter_ring: Ring
    polys: tuple[Polynomial, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.polys)

    def __len__(self):
        return len(self.polys)

    def render(self) -> list[str]:
        return [p.render() for p in self.polys]


# -- packed monomial kernel ----------------------------------------------------
#
# Inside the algorithm a monomial is a pair of ints: ``E`` packs the exponents
# into fixed-width bit fields (one spare guard bit per field makes divisibility
# a single subtraction) and ``K`` is a linear integer functional that sorts
# exactly like the monomial order, so ``K(m*q) == K(m) + K(q)``.  Term maps are
# ``dict`` objects keyed by ``K``; the packing keeps a ``K -> E`` side table.

_FIELD = 16                  # bits per exponent field, top bit is the guard (unpack assumes 16)
_MAX_EXP = (1 << (_FIELD - 1)) - 1


class _Packing:
    def __init__(self, ring: Ring, order: MonomialOrder):
        n = ring.arity
        self.n = n
        self.guard = sum(1 << (_FIELD * i + _FIELD - 1) for i in range(n))
        self.ones = self.guard >> (_FIELD - 1)      # lowest bit of every field
        self.nbytes = max(1, n) * _FIELD // 8
        self.weights = self._weights(ring, order)
        self.mono: dict[int, int] = {}

    @staticmethod
    def _inner(kind: str, n: int, base: int) -> list[int]:
        if kind == "lex":
            return [base ** (n - 1 - i) for i in range(n)]
        # (deg, -e_{n-1}, ..., -e_0) read as balanced base-``base`` digits
        return [base ** n - base ** i for i in range(n)]

    def _weights(self, ring: Ring, order: MonomialOrder) -> list[int]:
        n = ring.arity
        base = 1 << (_FIELD + max(n, 1).bit_length() + 2)
        if order.kind != "block":
            return self._inner(order.kind, n, base)
        k = ring.block_split
        wx = self._inner(order.inner_x, k, base)
        wt = self._inner(order.inner_t, n - k, base)
        shift = 2 * base ** (n - k + 1)   # dominates any t-part difference
        return [w * shift for w in wx] + wt

    def pack(self, m: tuple) -> tuple[int, int]:
        e = 0
        for i, v in enumerate(m):
            if v > _MAX_EXP:
                raise OverflowError(f"exponent {v} exceeds {_MAX_EXP}")
            e |= v << (_FIELD * i)
        k = sum(map(mul, self.weights, m))
        self.mono[k] = e
        return k, e

    def unpack(self, e: int) -> tuple:
        return tuple(memoryview(e.to_bytes(self.nbytes, "little")).cast("H"))

    def key_of(self, m: tuple) -> int:
        return sum(map(mul, self.weights, m))

    def terms_in(self, terms: Mapping[tuple, object], modulus: int | None = None) -> dict:
        out = {}
        for m, c in terms.items():
            k, _ = self.pack(m)
            out[k] = c
        if modulus is not None:
            out = _to_modular(out, modulus)
        return out

    def terms_out(self, terms: Mapping[int, object]) -> dict:
        mono = self.mono
        return {self.unpack(mono[k]): (c if isinstance(c, Rat) else mpq(c)) for k, c in terms.items()}

    def divides(self, a: int, b: int) -> bool:
        """Packed ``a | b``."""
        g = self.guard
        return ((b | g) - a) & g == g

    def lcm(self, a: int, b: int) -> tuple[int, int]:
        g = self.guard
        ge = (((a | g) - b) & g) >> (_FIELD - 1)   # 1 in every field where a >= b
        take_a = ge * ((1 << _FIELD) - 1)
        e = (a & take_a) | (b & ~take_a)
        k = sum(map(mul, self.weights, self.unpack(e)))
        self.mono[k] = e
        return k, e


class _Reducer:
    __slots__ = ("k", "e", "supp", "lc", "tail", "terms", "sugar", "deg", "tail_max")

    def __init__(self, terms: dict, k: int, packing: _Packing, sugar: int):
        self.terms = terms
        self.k = k
        self.e = e = packing.mono[k]
        exps = packing.unpack(e)
        self.supp = sum(1 << i for i, v in enumerate(exps) if v)
        self.deg = sum(exps)
        self.lc = terms[k]
        mono = packing.mono
        self.tail = [(m, mono[m], c) for m, c in terms.items() if m != k]
        self.sugar = sugar
        # field-wise maximum of the tail exponents: a cheap "could x divide a tail term" filter
        g, full = packing.guard, (1 << _FIELD) - 1
        top = 0
        for _, te, _ in self.tail:
            take = ((((top | g) - te) & g) >> (_FIELD - 1)) * full
            top = (top & take) | (te & ~take)
        self.tail_max = top


def _monic(terms: dict, lm: int, modulus: int | None = None) -> dict:
    if modulus is None:
        inv = 1 / terms[lm]
        return {m: c * inv for m, c in terms.items()}
    inv = pow(int(terms[lm]), -1, modulus)
    return {m: int(c) * inv % modulus for m, c in terms.items()}


def _reducer_list(polys, packing: _Packing, modulus: int | None = None) -> list[_Reducer]:
    out = []
    for p in polys:
        if p.is_zero:
            continue
        terms = packing.terms_in(p.terms, modulus)
        if not terms:
            continue
        lm = max(terms)
        out.append(_Reducer(_monic(terms, lm, modulus), lm, packing, p.total_degree()))
    return out


def _reduce(terms: dict, reducers: Sequence[_Reducer], packing: _Packing,
            modulus: int | None = None, find=None) -> dict:
    """Full normal form of ``terms`` modulo monic ``reducers`` (mutates ``terms``).

    With ``modulus`` all coefficients are ints reduced modulo that prime.
    ``find(k, e)``, when given, replaces the linear divisor search over
    ``reducers`` and returns a reducer whose leading monomial divides ``e``.
    """
    if not terms or not (reducers or find):
        return terms
    remainder: dict = {}
    heap = [-k for k in terms]
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    mono = packing.mono
    g = packing.guard
    red = [(r.e, r.k, r.tail) for r in reducers] if find is None else ()
    while heap:
        k = -pop(heap)
        c = terms.pop(k, None)
        if c is None:
            continue  # stale heap entry (cancelled or already handled)
        e = mono[k]
        if find is not None:
            r = find(k, e)
            if r is None:
                remainder[k] = c
                continue
            re, rk, tail = r.e, r.k, r.tail
        else:
            eg = e | g
            for re, rk, tail in red:
                if (eg - re) & g == g:
                    break
            else:
                remainder[k] = c
                continue
        qe, qk = e - re, k - rk
        for tk, te, tc in tail:
            nk = tk + qk
            old = terms.get(nk)
            if old is None:
                v = -c * tc
                if modulus is not None:
                    v %= modulus
                terms[nk] = v
                if nk not in mono:
                    ne = te + qe
                    if ne & g:
                        raise OverflowError("exponent overflow in packed monomial")
                    mono[nk] = ne
                push(heap, -nk)
            else:
                v = old - c * tc
                if modulus is not None:
                    v %= modulus
                if v:
                    terms[nk] = v
                else:
                    del terms[nk]
    return remainder


def _spoly(f: _Reducer, g: _Reducer, packing: _Packing, modulus: int | None = None) -> dict:
    """S-polynomial of two monic reducers."""
    lk, le = packing.lcm(f.e, g.e)
    mono = packing.mono
    out: dict = {}
    for r, sign in ((f, 1), (g, -1)):
        qk, qe = lk - r.k, le - r.e
        for tk, te, tc in r.tail:
            nk = tk + qk
            if nk not in mono:
                mono[nk] = te + qe
            v = out.get(nk, 0) + sign * tc
            if modulus is not None:
                v %= modulus
            if v:
                out[nk] = v
            else:
                out.pop(nk, None)
    return out


def _to_modular(terms, modulus: int) -> dict:
    out = {}
    for m, c in terms.items():
        c = rat(c)
        den = int(c.denominator) % modulus
        if den == 0:
            raise ZeroDivisionError(f"denominator divisible by {modulus}")
        v = int(c.numerator) * pow(den, -1, modulus) % modulus
        if v:
            out[m] = v
    return out


def _divides(b: tuple, a: tuple) -> bool:
    return all(y <= x for x, y in zip(a, b))


def _leading(terms: Mapping[tuple, object], key) -> tuple:
    return max(terms, key=key)


def _to_poly(ring: Ring, terms: dict) -> Polynomial:
    return Polynomial._raw(ring, terms)


def _check_ring(generators: Sequence[Polynomial], order: MonomialOrder) -> Ring:
    if not generators:
        raise StructuralError("buchberger needs at least one generator")
    ring = generators[0].ring
    for g in generators:
        if g.ring != ring:
            raise StructuralError("generators live in different rings")
    if order.is_block and ring.block_split is None:
        raise StructuralError("block order requires a ring with block_split")
    return ring


# -- Buchberger ---------------------------------------------------------------

class _CriticalPairs:
    """Pair queue over leading monomials with the Gebauer–Möller criteria.

    ``leads`` holds one record per basis element ever added; a record only
    needs ``e`` (packed leading monomial), ``supp``, ``sugar`` and ``deg``.
    ``active`` lists (ascending) the indices of the current minimal generating set.
    """

    def __init__(self, packing: _Packing, selection: str = "normal"):
        if selection not in ("normal", "sugar"):
            raise ValueError(f"unknown selection strategy {selection!r}")
        self.packing = packing
        self.selection = selection
        self.leads: list = []
        self.active: list[int] = []
        self.active_set: set[int] = set()
        self.heap: list = []          # (sugar or 0, lcm key, counter, i, j, lcm)
        self._counter = 0

    def __len__(self) -> int:
        return len(self.heap)

    def pop(self) -> tuple[int, int, int]:
        first, _, _, i, j, _ = heapq.heappop(self.heap)
        return first, i, j

    def _push(self, i: int, j: int, lk: int, le: int):
        fi, fj = self.leads[i], self.leads[j]
        d = sum(self.packing.unpack(le))
        sugar = max(fi.sugar - fi.deg, fj.sugar - fj.deg) + d
        first = sugar if self.selection == "sugar" else 0
        heapq.heappush(self.heap, (first, lk, self._counter, i, j, le))
        self._counter += 1

    def add(self, lead) -> int:
        """Register a new basis element and update pairs; returns its index."""
        leads, active = self.leads, self.active
        guard, lcm = self.packing.guard, self.packing.lcm
        leads.append(lead)
        h_idx = len(leads) - 1
        he, hsupp = lead.e, lead.supp
        cand = []
        for g in active:
            lk, le = lcm(he, leads[g].e)
            cand.append((g, lk, le, not (hsupp & leads[g].supp)))
        # criteria M and F on the new pairs
        kept = []
        for idx, (g, lk, le, copr) in enumerate(cand):
            if copr:
                kept.append((g, lk, le, True))
                continue
            leg = le | guard
            dominated = False
            for jdx, (g2, lk2, le2, copr2) in enumerate(cand):
                if jdx != idx and (leg - le2) & guard == guard and (le2 != le or jdx < idx or copr2):
                    dominated = True
                    break
            if not dominated:
                kept.append((g, lk, le, False))
        # chain criterion on the old pairs
        if self.heap:
            survivors = []
            for entry in self.heap:
                le = entry[5]
                if ((le | guard) - he) & guard == guard:
                    if lcm(leads[entry[3]].e, he)[1] != le and lcm(leads[entry[4]].e, he)[1] != le:
                        continue
                survivors.append(entry)
            if len(survivors) != len(self.heap):
                heapq.heapify(survivors)
                self.heap = survivors
        # product criterion: coprime pairs only served to eliminate others above
        for g, lk, le, copr in kept:
            if not copr:
                self._push(g, h_idx, lk, le)
        active[:] = [g for g in active if ((leads[g].e | guard) - he) & guard != guard]
        active.append(h_idx)
        self.active_set = set(active)
        return h_idx


def _elapsed_reason(limits: Limits, processed: int, start: float, terms: int = 0) -> str | None:
    if limits.max_terms is not None and terms > limits.max_terms:
        return f"max_terms={limits.max_terms} exceeded"
    if limits.max_pairs is not None and processed >= limits.max_pairs:
        return f"max_pairs={limits.max_pairs} reached"
    if limits.max_seconds is not None and time.monotonic() - start > limits.max_seconds:
        return f"max_seconds={limits.max_seconds} exceeded"
    return None


def buchberger(generators: Sequence[Polynomial], order: MonomialOrder, limits: Limits | None = None,
               selection: str = "normal", interreduce: bool = True,
               modulus: int | None = None) -> GroebnerBasis | GroebnerTimeout:
    """Gröbner basis of ``generators`` under ``order``.

    ``selection`` is ``"normal"`` (smallest lcm first, the default) or
    ``"sugar"`` (smallest sugar degree first); both give the same reduced basis.
    With ``interreduce`` the active basis is kept tail-reduced, which keeps
    rational coefficients small.  On hitting a limit returns a
    :class:`GroebnerTimeout` with the partial basis.  With ``modulus`` (a prime)
    the computation runs over that finite field; coefficients whose denominator
    vanishes modulo it raise ``ZeroDivisionError``.
    """
    generators = list(generators)
    ring = _check_ring(generators, order)
    limits = limits or Limits()
    packing = _Packing(ring, order)
    guard = packing.guard
    start = time.monotonic()
    pairs = _CriticalPairs(packing, selection)
    basis: list[_Reducer] = pairs.leads    # every element ever added (pairs index into this)
    active = pairs.active
    # monomial key -> (basis index of a divisor, or -1 with the basis length at lookup time)
    divisor_cache: dict[int, tuple[int, int]] = {}

    def find(k: int, e: int):
        hit = divisor_cache.get(k)
        first = 0
        if hit is not None:
            idx, gen = hit
            if idx >= 0:
                if idx in pairs.active_set:
                    return basis[idx]
            else:
                first = gen  # older elements were already checked
        eg = e | guard
        pos = bisect_left(active, first) if first else 0
        for idx in itertools.islice(active, pos, None):
            if (eg - basis[idx].e) & guard == guard:
                divisor_cache[k] = (idx, 0)
                return basis[idx]
        divisor_cache[k] = (-1, len(basis))
        return None

    stored = 0

    def add(terms: dict, sugar: int):
        nonlocal stored
        stored += len(terms)
        lm = max(terms)
        new = pairs.add(_Reducer(_monic(terms, lm, modulus), lm, packing, sugar))
        if interreduce:
            # keep the active set tail-reduced: smaller coefficients in later reductions
            ne = basis[new].e
            for g in active:
                if g == new:
                    continue
                r = basis[g]
                if ((r.tail_max | guard) - ne) & guard != guard:
                    continue
                if any(((te | guard) - ne) & guard == guard for _, te, _ in r.tail):
                    tail = _reduce({tk: tc for tk, _, tc in r.tail}, (), packing, modulus, find)
                    tail[r.k] = r.lc
                    basis[g] = _Reducer(tail, r.k, packing, r.sugar)

    # seed with the inputs, smallest leading monomial first
    seeds = []
    for g in generators:
        if not g.is_zero:
            terms = packing.terms_in(g.terms, modulus)
            if terms:
                seeds.append((max(terms), terms, g.total_degree()))
    seeds.sort(key=lambda s: s[0])
    for _, terms, deg in seeds:
        terms = _reduce(terms, (), packing, modulus, find)
        if terms:
            add(terms, deg)

    def export(indices) -> tuple[Polynomial, ...]:
        return tuple(_to_poly(ring, packing.terms_out(basis[i].terms)) for i in indices)

    processed = 0
    while pairs:
        reason = _elapsed_reason(limits, processed, start, stored)
        if reason:
            log.info("buchberger stopped: %s (%d pairs pending)", reason, len(pairs))
            return GroebnerTimeout(ring, order, export(active), len(pairs), processed,
                                   time.monotonic() - start, reason)
        sugar, i, j = pairs.pop()
        processed += 1
        s = _spoly(basis[i], basis[j], packing, modulus)
        if not s:
            continue
        h = _reduce(s, (), packing, modulus, find)
        if h:
            hdeg = max(sum(packing.unpack(packing.mono[k])) for k in h)  # sugar bookkeeping
            add(h, max(sugar, hdeg))
        if processed % 500 == 0:
            log.debug("pairs processed=%d pending=%d basis=%d", processed, len(pairs), len(active))

    return GroebnerBasis(ring, order, export(active), False, processed, time.monotonic() - start, modulus)


def _normal_form(p: Polynomial, elements: Sequence[Polynomial], order: MonomialOrder,
                 modulus: int | None = None) -> Polynomial:
    packing = _Packing(p.ring, order)
    reds = _reducer_list(elements, packing, modulus)
    terms = _reduce(packing.terms_in(p.terms, modulus), reds, packing, modulus)
    return _to_poly(p.ring, packing.terms_out(terms))


def reduce_basis(gb: GroebnerBasis) -> GroebnerBasis:
    """Minimal, inter-reduced, content-normalized basis sorted by leading monomial."""
    order, ring, mod = gb.order, gb.ring, gb.modulus
    packing = _Packing(ring, order)
    reds = _reducer_list(gb.elements, packing, mod)
    minimal: list[_Reducer] = []
    while reds:
        reds.sort(key=lambda r: r.k)
        minimal, redundant = [], []
        for r in reds:
            (redundant if any(packing.divides(q.e, r.e) for q in minimal) else minimal).append(r)
        # an element with a divisible leading monomial is dropped only if it reduces to zero;
        # on a Groebner basis it always does, on other inputs the remainder is kept
        leftovers = []
        for r in redundant:
            rest = _reduce(dict(r.terms), minimal, packing, mod)
            if rest:
                lm = max(rest)
                leftovers.append(_Reducer(_monic(rest, lm, mod), lm, packing, r.sugar))
        if not leftovers:
            break
        reds = minimal + leftovers
    out = []
    for idx, r in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1:]
        tail = _reduce({tk: tc for tk, _, tc in r.tail}, others, packing, mod)
        tail[r.k] = 1
        poly = _to_poly(ring, packing.terms_out(tail))
        out.append(poly if mod else poly.primitive(order))
    key = order.key(ring)
    out.sort(key=lambda p: key(_leading(p.terms, key)), reverse=True)
    return GroebnerBasis(ring, order, tuple(out), True, gb.pair_count, gb.wall_seconds, mod)


def groebner(generators: Sequence[Polynomial], order: MonomialOrder, limits: Limits | None = None,
             modulus: int | None = None) -> GroebnerBasis | GroebnerTimeout:
    """``buchberger`` followed by ``reduce_basis`` (timeouts pass through)."""
    res = buchberger(generators, order, limits, modulus=modulus)
    if isinstance(res, GroebnerTimeout):
        return res
    return reduce_basis(res)


def is_groebner_basis(elements: Sequence[Polynomial], order: MonomialOrder,
                      modulus: int | None = None) -> bool:
    """Check every S-polynomial reduces to zero (Buchberger's criterion)."""
    elements = [e for e in elements if not e.is_zero]
    if not elements:
        return True
    packing = _Packing(_check_ring(elements, order), order)
    reds = _reducer_list(elements, packing, modulus)
    for a in range(len(reds)):
        for b in range(a + 1, len(reds)):
            if not (reds[a].supp & reds[b].supp):
                continue
            s = _spoly(reds[a], reds[b], packing, modulus)
            if _reduce(s, reds, packing, modulus):
                return False
    return True


# -- Bad sets ----------------------------------------------------------------

def _scalar_normal(p: Polynomial) -> Polynomial:
    return p.primitive(MonomialOrder("grevlex"))


def extract_bad_set(gb: GroebnerBasis) -> BadSet:
    """Non-constant t-coefficients of the basis elements viewed as polynomials in x."""
    if not gb.order.is_block:
        raise StructuralError("Bad-set extraction needs a block order with x > t")
    ring = gb.ring
    if ring.block_split is None:
        raise StructuralError("ring has no block split")
    tring = Ring(ring.t_names)
    seen: dict = {}
    for g in gb.elements:
        for coeff in g.coefficients_in_x().values():
            if coeff.is_constant():
                continue
            norm = _scalar_normal(coeff)
            h = frozenset(norm.terms.items())
            if h not in seen:
                seen[h] = norm
    polys = sorted(seen.values(), key=lambda p: (p.total_degree(), len(p), p.render()))
    return BadSet(tring, tuple(polys))


@dataclass(frozen=True)
class Avoids:
    pass


@dataclass(frozen=True)
class Hits:
    poly: Polynomial


def avoids_bad_set(point: Mapping[str, object], bad: BadSet) -> Avoids | Hits:
    missing = [n for n in bad.parameter_ring.names if n not in point]
    if missing:
        raise StructuralError(f"witness does not assign {', '.join(missing)}")
    assignment = {n: rat(point[n]) for n in bad.parameter_ring.names}
    for h in bad.polys:
        if h.evaluate(assignment).constant_value() == 0:
            return Hits(h)
    return Avoids()


__all__ += ["Avoids", "Hits"]
