"""Gröbner bases modulo word-size primes, and their lift back to the rationals.

The finite-field engine reuses the pair queue of :mod:`rankident.groebner` but
keeps polynomials as dense numpy term arrays: row ``i`` of ``M`` is the
``i``-th monomial (largest first) stored as ``[order vector | exponents]`` and
``C[i]`` its coefficient in ``[0, p)``.  The order vector is a linear image of
the exponents whose lexicographic comparison *is* the monomial order, so
multiplying monomials is row addition.  The inner loops (S-polynomials and full
reduction as sorted merges) are compiled with numba when it is importable and
otherwise fall back to the dictionary engine in :mod:`rankident.groebner`.

:func:`multimodular_groebner` runs the engine for several primes, combines the
reduced bases by Chinese remaindering, rebuilds rational coefficients and
verifies the candidate over Q (Buchberger's criterion plus every input reducing
to zero).  Primes whose leading-monomial sets disagree are discarded.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq

from . import groebner as gbm
from .groebner import GroebnerBasis, GroebnerTimeout, Limits
from .polyarith import MonomialOrder, Polynomial, Ring, StructuralError

log = logging.getLogger(__name__)

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


__all__ = [
    "HAVE_NUMBA",
    "DEFAULT_PRIMES_FROM",
    "ModularFailure",
    "modular_groebner",
    "multimodular_groebner",
    "rational_reconstruction",
    "lift_is_verified",
    "compute_basis",
    "ENGINES",
]

DEFAULT_PRIMES_FROM = 2 ** 31      # primes are taken downward from here; p^2 must fit in int64


class ModularFailure(RuntimeError):
    """The multi-modular lift did not produce a verified basis."""


# -- compiled kernels ----------------------------------------------------------

@njit(cache=True)
def _combine(aM, aC, qa, ca, bM, bC, qb, cb, p, m):
    """Sorted merge of ``ca*x^qa*a + cb*x^qb*b`` (inputs sorted descending)."""
    la, lb, w = aM.shape[0], bM.shape[0], aM.shape[1]
    outM = np.empty((la + lb, w), np.int32)
    outC = np.empty(la + lb, np.int64)
    i = 0
    j = 0
    k = 0
    while i < la or j < lb:
        side = 0
        if i >= la:
            side = -1
        elif j >= lb:
            side = 1
        else:
            for t in range(m):
                va = aM[i, t] + qa[t]
                vb = bM[j, t] + qb[t]
                if va != vb:
                    side = 1 if va > vb else -1
                    break
        if side > 0:
            for t in range(w):
                outM[k, t] = aM[i, t] + qa[t]
            outC[k] = aC[i] * ca % p
            i += 1
            k += 1
        elif side < 0:
            for t in range(w):
                outM[k, t] = bM[j, t] + qb[t]
            outC[k] = bC[j] * cb % p
            j += 1
            k += 1
        else:
            v = (aC[i] * ca + bC[j] * cb) % p
            if v != 0:
                for t in range(w):
                    outM[k, t] = aM[i, t] + qa[t]
                outC[k] = v
                k += 1
            i += 1
            j += 1
    return outM[:k], outC[:k]


@njit(cache=True)
def _support_mask(row, m, n):
    mask = 0
    for t in range(n):
        if row[m + t] > 0:
            mask |= 1 << t
    return mask


@njit(cache=True)
def _find_divisor(row, SM, off, supp, act, m, n):
    """First ``a`` in ``act`` whose leading monomial divides ``row`` (or -1)."""
    rm = _support_mask(row, m, n)
    for a in act:
        if supp[a] & ~rm:
            continue
        lead = off[a]
        ok = True
        for t in range(m, m + n):
            if SM[lead, t] > row[t]:
                ok = False
                break
        if ok:
            return a
    return -1


@njit(cache=True)
def _stream_cmp(x, y, hM, SM, s_pos, s_shift, m):
    """Compare the current monomials of streams ``x`` and ``y`` (stream 0 reads ``hM``)."""
    for t in range(m):
        if x == 0:
            vx = hM[s_pos[0], t]
        else:
            vx = SM[s_pos[x], t] + s_shift[x, t]
        if y == 0:
            vy = hM[s_pos[0], t]
        else:
            vy = SM[s_pos[y], t] + s_shift[y, t]
        if vx != vy:
            return 1 if vx > vy else -1
    return 0


@njit(cache=True)
def _heap_push(heap, size, s, hM, SM, s_pos, s_shift, m):
    heap[size] = s
    i = size
    while i > 0:
        parent = (i - 1) // 2
        if _stream_cmp(heap[i], heap[parent], hM, SM, s_pos, s_shift, m) > 0:
            heap[i], heap[parent] = heap[parent], heap[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(heap, size, hM, SM, s_pos, s_shift, m):
    top = heap[0]
    size -= 1
    heap[0] = heap[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        big = left
        if left + 1 < size and _stream_cmp(heap[left + 1], heap[left], hM, SM, s_pos, s_shift, m) > 0:
            big = left + 1
        if _stream_cmp(heap[big], heap[i], hM, SM, s_pos, s_shift, m) > 0:
            heap[i], heap[big] = heap[big], heap[i]
            i = big
        else:
            break
    return top, size


@njit(cache=True)
def _reduce_kernel(hM, hC, SM, SC, off, ln, supp, act, p, m, n):
    """Full normal form of ``h`` by the monic store polynomials ``act``.

    Heap division: every multiple ``c * x^q * tail(g)`` subtracted so far is a
    stream, and a max-heap over the streams' current monomials yields the terms
    of ``h - sum`` in decreasing order without materializing the sum.
    """
    w = hM.shape[1]
    cap = 64
    s_pos = np.empty(cap, np.int64)
    s_end = np.empty(cap, np.int64)
    s_coef = np.empty(cap, np.int64)
    s_shift = np.zeros((cap, w), np.int32)
    heap = np.empty(cap, np.int64)
    s_pos[0] = 0
    s_end[0] = hM.shape[0]
    s_coef[0] = 1
    nstreams = 1
    size = 0
    if hM.shape[0] > 0:
        size = _heap_push(heap, size, 0, hM, SM, s_pos, s_shift, m)
    remM = np.empty((max(hM.shape[0], 8), w), np.int32)
    remC = np.empty(max(hM.shape[0], 8), np.int64)
    nr = 0
    row = np.empty(w, np.int32)
    popped = np.empty(cap, np.int64)
    while size > 0:
        s = heap[0]
        if s == 0:
            for t in range(w):
                row[t] = hM[s_pos[0], t]
        else:
            for t in range(w):
                row[t] = SM[s_pos[s], t] + s_shift[s, t]
        acc = 0
        npop = 0
        while size > 0:
            s = heap[0]
            same = True
            for t in range(m):
                if s == 0:
                    v = hM[s_pos[0], t]
                else:
                    v = SM[s_pos[s], t] + s_shift[s, t]
                if v != row[t]:
                    same = False
                    break
            if not same:
                break
            s, size = _heap_pop(heap, size, hM, SM, s_pos, s_shift, m)
            if s == 0:
                acc = (acc + hC[s_pos[0]]) % p
            else:
                acc = (acc + s_coef[s] * SC[s_pos[s]]) % p
            popped[npop] = s
            npop += 1
        for k in range(npop):
            s = popped[k]
            s_pos[s] += 1
            if s_pos[s] < s_end[s]:
                size = _heap_push(heap, size, s, hM, SM, s_pos, s_shift, m)
        if acc == 0:
            continue
        a = _find_divisor(row, SM, off, supp, act, m, n)
        if a < 0:
            if nr == remM.shape[0]:
                grownM = np.empty((2 * nr, w), np.int32)
                grownC = np.empty(2 * nr, np.int64)
                grownM[:nr] = remM
                grownC[:nr] = remC
                remM, remC = grownM, grownC
            remM[nr] = row
            remC[nr] = acc
            nr += 1
            continue
        if ln[a] == 1:
            continue
        if nstreams == s_pos.shape[0]:
            cap = 2 * nstreams
            s_pos = _grow1(s_pos, cap)
            s_end = _grow1(s_end, cap)
            s_coef = _grow1(s_coef, cap)
            s_shift = _grow2(s_shift, cap)
            heap = _grow1(heap, cap)
            popped = _grow1(popped, cap)
        s = nstreams
        nstreams += 1
        lead = off[a]
        s_pos[s] = lead + 1
        s_end[s] = lead + ln[a]
        s_coef[s] = p - acc
        for t in range(w):
            s_shift[s, t] = row[t] - SM[lead, t]
        size = _heap_push(heap, size, s, hM, SM, s_pos, s_shift, m)
    return remM[:nr].copy(), remC[:nr].copy()


@njit(cache=True)
def _merge_reduce_kernel(hM, hC, SM, SC, off, ln, supp, act, p, m, n):
    """Full normal form of ``h``; each division step is one sorted merge."""
    w = hM.shape[1]
    remM = np.empty((max(hM.shape[0], 8), w), np.int32)
    remC = np.empty(max(hM.shape[0], 8), np.int64)
    nr = 0
    zero = np.zeros(w, np.int32)
    while hM.shape[0] > 0:
        a = _find_divisor(hM[0], SM, off, supp, act, m, n)
        if a < 0:
            if nr == remM.shape[0]:
                remM = _grow2(remM, 2 * nr)
                remC = _grow1(remC, 2 * nr)
            remM[nr] = hM[0]
            remC[nr] = hC[0]
            nr += 1
            hM = hM[1:]
            hC = hC[1:]
            continue
        lead = off[a]
        end = lead + ln[a]
        q = hM[0] - SM[lead]
        c = hC[0]
        hM, hC = _combine(hM[1:], hC[1:], zero, 1, SM[lead + 1:end], SC[lead + 1:end], q, p - c, p, m)
    return remM[:nr].copy(), remC[:nr].copy()


@njit(cache=True)
def _grow1(arr, cap):
    out = np.empty(cap, arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True)
def _grow2(arr, cap):
    out = np.zeros((cap, arr.shape[1]), arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True)
def _spoly_kernel(SM, SC, off, ln, i, j, lcm_row, p, m):
    """S-polynomial of the monic store polynomials ``i`` and ``j``."""
    fa, fb = off[i], off[i] + ln[i]
    ga, gb = off[j], off[j] + ln[j]
    qf = lcm_row - SM[fa]
    qg = lcm_row - SM[ga]
    return _combine(SM[fa + 1:fb], SC[fa + 1:fb], qf, 1, SM[ga + 1:gb], SC[ga + 1:gb], qg, p - 1, p, m)


@njit(cache=True)
def _row_divides(a, b, m, n):
    for t in range(m, m + n):
        if a[t] > b[t]:
            return False
    return True


@njit(cache=True)
def _lcm_row(a, b, out, A, m, n):
    """``out = lcm(a, b)`` including its order vector ``A @ exps``."""
    for t in range(n):
        out[m + t] = max(a[m + t], b[m + t])
    for s in range(m):
        acc = 0
        for t in range(n):
            acc += A[s, t] * out[m + t]
        out[s] = acc


@njit(cache=True)
def _same_exponents(a, b, m, n):
    for t in range(m, m + n):
        if a[t] != b[t]:
            return False
    return True


@njit(cache=True)
def _update_pairs(L, supp, act, h, Pi, Pj, Plcm, alive, nP, A, m, n):
    """Gebauer–Möller update for the new lead ``L[h]``.

    Kills old pairs by the chain criterion, appends the surviving new pairs at
    ``nP`` (the caller guarantees room for ``len(act)`` more) and returns the
    new pair count together with the new active index array.
    """
    w = m + n
    hrow = L[h]
    tmp = np.empty(w, np.int32)
    for k in range(nP):
        if not alive[k]:
            continue
        if not _row_divides(hrow, Plcm[k], m, n):
            continue
        _lcm_row(L[Pi[k]], hrow, tmp, A, m, n)
        if _same_exponents(tmp, Plcm[k], m, n):
            continue
        _lcm_row(L[Pj[k]], hrow, tmp, A, m, n)
        if _same_exponents(tmp, Plcm[k], m, n):
            continue
        alive[k] = False
    c = act.shape[0]
    C = np.empty((c, w), np.int32)
    coprime = np.empty(c, np.bool_)
    for a in range(c):
        _lcm_row(L[act[a]], hrow, C[a], A, m, n)
        coprime[a] = (supp[act[a]] & supp[h]) == 0
    for a in range(c):
        if coprime[a]:
            continue
        dominated = False
        for b in range(c):
            if b != a and _row_divides(C[b], C[a], m, n):
                if coprime[b] or b < a or not _same_exponents(C[a], C[b], m, n):
                    dominated = True
                    break
        if not dominated:
            Pi[nP] = act[a]
            Pj[nP] = h
            Plcm[nP] = C[a]
            alive[nP] = True
            nP += 1
    keep = np.empty(c + 1, np.int64)
    nk = 0
    for a in range(c):
        if not _row_divides(hrow, L[act[a]], m, n):
            keep[nk] = act[a]
            nk += 1
    keep[nk] = h
    return nP, keep[: nk + 1].copy()


@njit(cache=True)
def _pop_smallest(Plcm, alive, nP, m):
    """Index of the live pair with the smallest lcm (first on ties), or -1."""
    best = -1
    for k in range(nP):
        if not alive[k]:
            continue
        if best < 0:
            best = k
            continue
        for t in range(m):
            if Plcm[k, t] != Plcm[best, t]:
                if Plcm[k, t] < Plcm[best, t]:
                    best = k
                break
    if best >= 0:
        alive[best] = False
    return best


# -- term arrays ---------------------------------------------------------------

class _Layout:
    """Maps exponent tuples to ``[order vector | exponents]`` rows for an order."""

    def __init__(self, ring: Ring, order: MonomialOrder):
        n = ring.arity
        if n > 62:
            raise StructuralError("the modular engine supports at most 62 variables")
        if order.kind == "block":
            k = ring.block_split
            blocks = [(order.inner_x, 0, k), (order.inner_t, k, n)]
        else:
            blocks = [(order.kind, 0, n)]
        rows = []
        for kind, lo, hi in blocks:
            if kind == "lex":
                for i in range(lo, hi):
                    rows.append([1 if c == i else 0 for c in range(n)])
            else:  # grevlex: total degree, then reversed negated exponents
                rows.append([1 if lo <= c < hi else 0 for c in range(n)])
                for i in reversed(range(lo, hi)):
                    rows.append([-1 if c == i else 0 for c in range(n)])
        self.n = n
        self.m = len(rows)
        self.matrix = np.array(rows, dtype=np.int64).reshape(self.m, n)

    def rows(self, exps: np.ndarray) -> np.ndarray:
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.n)
        return np.hstack([exps @ self.matrix.T, exps]).astype(np.int32)

    def to_arrays(self, terms: dict) -> tuple[np.ndarray, np.ndarray]:
        """Sorted (descending) term arrays of a ``{exponent tuple: int}`` map."""
        if not terms:
            return np.empty((0, self.m + self.n), np.int32), np.empty(0, np.int64)
        monos = list(terms)
        M = self.rows(np.array(monos))
        idx = np.lexsort(M[:, : self.m].T[::-1])[::-1]
        C = np.array([terms[monos[i]] for i in idx], dtype=np.int64)
        return np.ascontiguousarray(M[idx]), C

    def exponents(self, row) -> tuple:
        return tuple(int(v) for v in row[self.m:])


def _modular_terms(p: Polynomial, modulus: int) -> dict:
    return gbm._to_modular(p.terms, modulus)


def _monic_arrays(M, C, modulus):
    inv = pow(int(C[0]), -1, modulus)
    return M, C * inv % modulus


# -- finite-field Buchberger ---------------------------------------------------

_REDUCE = _merge_reduce_kernel


class _Store:
    """All basis polynomials in one pair of growable arrays (``off``/``ln`` index them)."""

    def __init__(self, width: int):
        self.M = np.empty((1024, width), np.int32)
        self.C = np.empty(1024, np.int64)
        self.off = np.empty(64, np.int64)
        self.ln = np.empty(64, np.int64)
        self.supp = np.empty(64, np.int64)
        self.count = 0
        self.rows = 0

    def append(self, M: np.ndarray, C: np.ndarray, n: int) -> int:
        need = self.rows + M.shape[0]
        if need > self.M.shape[0]:
            cap = max(need, 2 * self.M.shape[0])
            self.M = _grow2(self.M, cap)
            self.C = _grow1(self.C, cap)
        if self.count == self.off.shape[0]:
            cap = 2 * self.count
            self.off, self.ln, self.supp = (_grow1(a, cap) for a in (self.off, self.ln, self.supp))
        idx = self.count
        self.M[self.rows:need] = M
        self.C[self.rows:need] = C
        self.off[idx] = self.rows
        self.ln[idx] = M.shape[0]
        lead = M[0, M.shape[1] - n:]
        self.supp[idx] = sum(1 << i for i, v in enumerate(lead) if v)
        self.rows = need
        self.count += 1
        return idx

    def get(self, idx: int) -> tuple[np.ndarray, np.ndarray]:
        a = self.off[idx]
        b = a + self.ln[idx]
        return self.M[a:b], self.C[a:b]


def modular_groebner(generators: Sequence[Polynomial], order: MonomialOrder, modulus: int,
                     limits: Limits | None = None) -> GroebnerBasis | GroebnerTimeout:
    """Reduced Gröbner basis of the generators reduced modulo the prime ``modulus``.

    Pairs are selected by the normal strategy.  Coefficients of the returned
    polynomials are integers in ``[0, modulus)`` and the basis is monic.
    Raises ``ZeroDivisionError`` when an input denominator vanishes modulo
    ``modulus``.
    """
    if not HAVE_NUMBA:
        return gbm.groebner(generators, order, limits, modulus=modulus)
    if modulus >= 2 ** 31:
        raise ValueError("modulus must be below 2**31 so products fit in 64 bits")
    generators = list(generators)
    ring = gbm._check_ring(generators, order)
    limits = limits or Limits()
    layout = _Layout(ring, order)
    m, n, p = layout.m, layout.n, modulus
    w = m + n
    A = layout.matrix.astype(np.int64)
    start = time.monotonic()
    table = _PairTable(w)
    store = _Store(w)
    leads = np.empty((16, w), np.int32)
    act = np.empty(0, np.int64)

    def reduce(M, C, among=None):
        among = act if among is None else among
        if M.shape[0] == 0 or among.shape[0] == 0:
            return M, C
        return _REDUCE(M, C, store.M, store.C, store.off, store.ln, store.supp, among, p, m, n)

    def add(M, C):
        nonlocal act, leads
        M, C = _monic_arrays(M, C, p)
        idx = store.append(M, C, n)
        if idx == leads.shape[0]:
            leads = _grow2(leads, 2 * idx)
        leads[idx] = M[0]
        table.reserve(act.shape[0])
        table.size, act = _update_pairs(leads, store.supp, act, idx, table.i, table.j, table.lcm,
                                        table.alive, table.size, A, m, n)
        table.maybe_compact()

    processed = 0
    try:
        seeds = []
        for g in generators:
            terms = _modular_terms(g, p)
            if terms:
                M, C = layout.to_arrays(terms)
                seeds.append((tuple(M[0, :m]), M, C))
        seeds.sort(key=lambda s: s[0])
        for _, M, C in seeds:
            M, C = reduce(M, C)
            if M.shape[0]:
                add(M, C)

        while True:
            reason = gbm._elapsed_reason(limits, processed, start, store.rows)
            if reason:
                partial = tuple(_to_poly(ring, layout, *store.get(g)) for g in act)
                return GroebnerTimeout(ring, order, partial, table.live(), processed,
                                       time.monotonic() - start, reason)
            k = _pop_smallest(table.lcm, table.alive, table.size, m)
            if k < 0:
                break
            processed += 1
            M, C = _spoly_kernel(store.M, store.C, store.off, store.ln, table.i[k], table.j[k],
                                 table.lcm[k], p, m)
            if M.shape[0] == 0:
                continue
            M, C = reduce(M, C)
            if M.shape[0]:
                add(M, C)
            if processed % 1000 == 0:
                log.debug("mod %d: pairs=%d pending=%d basis=%d", p, processed, table.live(), act.shape[0])
    except MemoryError:
        # intermediate expressions outgrew memory (typical for lex on larger systems)
        store = table = None
        return GroebnerTimeout(ring, order, (), 0, processed, time.monotonic() - start, "memory exhausted")

    # the active leads are already minimal; tail-reduce every element by the others
    final = []
    for g in act:
        M, C = store.get(g)
        tM, tC = reduce(M[1:].copy(), C[1:].copy(), act[act != g])
        final.append((tuple(M[0, :m]), np.vstack([M[:1], tM]), np.concatenate([C[:1], tC])))
    final.sort(key=lambda f: f[0], reverse=True)
    polys = tuple(_to_poly(ring, layout, M, C) for _, M, C in final)
    return GroebnerBasis(ring, order, polys, True, processed, time.monotonic() - start, p)


class _PairTable:
    """Growable arrays of critical pairs ``(i, j, lcm row, alive)``."""

    def __init__(self, width: int, capacity: int = 256):
        self.i = np.empty(capacity, np.int64)
        self.j = np.empty(capacity, np.int64)
        self.lcm = np.empty((capacity, width), np.int32)
        self.alive = np.zeros(capacity, np.bool_)
        self.size = 0

    def reserve(self, extra: int):
        need = self.size + extra
        cap = self.i.shape[0]
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        for name in ("i", "j", "lcm", "alive"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], old.dtype)
            new[: self.size] = old[: self.size]
            setattr(self, name, new)

    def live(self) -> int:
        return int(self.alive[: self.size].sum())

    def maybe_compact(self):
        if self.size < 4096:
            return
        keep = np.flatnonzero(self.alive[: self.size])
        if len(keep) * 2 > self.size:
            return
        for name in ("i", "j", "lcm", "alive"):
            arr = getattr(self, name)
            arr[: len(keep)] = arr[keep]
        self.size = len(keep)


def _to_poly(ring: Ring, layout: _Layout, M, C) -> Polynomial:
    return Polynomial._raw(ring, {layout.exponents(M[i]): mpq(int(C[i])) for i in range(M.shape[0])})


# -- lifting to Q --------------------------------------------------------------

def rational_reconstruction(a: int, modulus: int) -> mpq | None:
    """The fraction ``r/s`` with ``r = a*s (mod modulus)`` and ``|r|, s <= sqrt(modulus/2)``.

    Returns ``None`` when no such fraction exists.
    """
    a %= modulus
    bound = gmpy2.isqrt(modulus // 2)
    r0, r1 = modulus, a
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound or gmpy2.gcd(r1, s1) != 1:
        return None
    return mpq(r1, s1)


def _lead_signature(gb: GroebnerBasis) -> tuple:
    return tuple(g.lm(gb.order) for g in gb.elements)


def _crt(residues: list[dict], moduli: list[int]) -> tuple[list[dict], int]:
    """Combine per-prime coefficient maps (same supports) into one modulus."""
    combined = [dict(r) for r in residues[0]]
    big = moduli[0]
    for res, p in zip(residues[1:], moduli[1:]):
        inv = pow(big, -1, p)
        for target, poly in zip(combined, res):
            for mono in set(target) | set(poly):
                x = target.get(mono, 0)
                y = poly.get(mono, 0)
                target[mono] = x + big * ((y - x) * inv % p)
        big *= p
    return combined, big


def _reconstruct(combined: list[dict], modulus: int, ring: Ring) -> list[Polynomial] | None:
    out = []
    for terms in combined:
        lifted = {}
        for mono, v in terms.items():
            if v % modulus == 0:
                continue
            q = rational_reconstruction(int(v), modulus)
            if q is None:
                return None
            lifted[mono] = q
        out.append(Polynomial._raw(ring, lifted))
    return out


def lift_is_verified(candidate: Sequence[Polynomial], generators: Sequence[Polynomial],
                     order: MonomialOrder) -> bool:
    """Exact check over Q: ``candidate`` is a Gröbner basis containing every generator."""
    if not gbm.is_groebner_basis(candidate, order):
        return False
    return all(gbm._normal_form(f, candidate, order).is_zero for f in generators)


@dataclass(frozen=True)
class MultimodularReport:
    primes_used: tuple[int, ...]
    primes_rejected: tuple[int, ...]
    wall_seconds: float


def multimodular_groebner(generators: Sequence[Polynomial], order: MonomialOrder,
                          limits: Limits | None = None, max_primes: int | None = None,
                          first_prime: int = DEFAULT_PRIMES_FROM,
                          ) -> tuple[GroebnerBasis | GroebnerTimeout, MultimodularReport]:
    """Reduced Gröbner basis over Q via modular images, verified exactly.

    The time limit in ``limits`` covers the whole run; primes are added
    until the lift verifies or the time is up (a timeout result is
    returned then).  Raises :class:`ModularFailure` when ``max_primes``
    images do not yield a verified lift.
    """
    generators = list(generators)
    ring = gbm._check_ring(generators, order)
    limits = limits or Limits()
    start = time.monotonic()
    used: list[int] = []
    rejected: list[int] = []
    images: list[list[dict]] = []
    signature = None
    previous = None
    p = int(first_prime)
    tried = 0
    while max_primes is None or tried < max_primes:
        p = int(gmpy2.prev_prime(p)) if p > 2 else 2
        tried += 1
        remaining = None
        if limits.max_seconds is not None:
            remaining = limits.max_seconds - (time.monotonic() - start)
            if remaining <= 0:
                elapsed = time.monotonic() - start
                report = MultimodularReport(tuple(used), tuple(rejected), elapsed)
                return GroebnerTimeout(ring, order, (), 0, 0, elapsed,
                                       f"max_seconds={limits.max_seconds} exceeded after {len(used)} primes"), report
        try:
            image = modular_groebner(generators, order, p, Limits(limits.max_pairs, remaining, limits.max_terms))
        except ZeroDivisionError:
            rejected.append(p)
            continue
        if isinstance(image, GroebnerTimeout):
            report = MultimodularReport(tuple(used), tuple(rejected), time.monotonic() - start)
            return image, report
        sig = _lead_signature(image)
        if signature is not None and sig != signature:
            # an unlucky prime changes the leading monomials; keep the majority so far
            log.info("prime %d disagrees on leading monomials", p)
            if len(used) > 1:
                rejected.append(p)
                continue
            rejected.extend(used)
            used, images = [], []
        signature = sig
        used.append(p)
        images.append([{m: int(c) for m, c in g.terms.items()} for g in image.elements])
        combined, big = _crt(images, used)
        candidate = _reconstruct(combined, big, ring)
        if candidate is None:
            continue
        # wait until the lift is stable under one more prime before paying for verification
        if previous is None or [c.terms for c in candidate] != [c.terms for c in previous]:
            previous = candidate
            continue
        if lift_is_verified(candidate, generators, order):
            basis = gbm.reduce_basis(GroebnerBasis(ring, order, tuple(candidate), False,
                                                   image.pair_count, time.monotonic() - start))
            report = MultimodularReport(tuple(used), tuple(rejected), time.monotonic() - start)
            return basis, report
        log.info("lift from %d primes failed verification; adding primes", len(used))
    raise ModularFailure(f"no verified lift after {tried} primes ({len(rejected)} rejected)")


# -- engine selection ----------------------------------------------------------

ENGINES = ("auto", "exact", "modular")


def compute_basis(generators: Sequence[Polynomial], order: MonomialOrder, limits: Limits | None = None,
                  engine: str = "auto", exact_seconds: float = 60.0,
                  ) -> tuple[GroebnerBasis | GroebnerTimeout, str]:
    """Reduced Gröbner basis over Q plus the name of the method that produced it.

    ``"exact"`` is Buchberger over Q; ``"modular"`` is the verified
    multi-modular lift; ``"auto"`` runs the exact engine for at most
    ``exact_seconds`` and then switches to the lift for the remaining time.
    Returned method names are ``"exact"`` and ``"modular-lift"``.
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}")
    limits = limits or Limits()
    start = time.monotonic()
    if engine in ("exact", "auto"):
        budget = limits.max_seconds
        if engine == "auto":
            budget = exact_seconds if budget is None else min(budget, exact_seconds)
        res = gbm.groebner(generators, order, Limits(limits.max_pairs, budget, limits.max_terms))
        if engine == "exact" or not isinstance(res, GroebnerTimeout):
            return res, "exact"
        log.info("exact engine stopped after %.1fs; switching to the modular lift", res.wall_seconds)
    remaining = None
    if limits.max_seconds is not None:
        remaining = limits.max_seconds - (time.monotonic() - start)
        if remaining <= 0:
            return res, "exact"
    try:
        lifted, report = multimodular_groebner(generators, order, Limits(None, remaining))
    except ModularFailure as exc:
        log.warning("modular lift failed: %s", exc)
        ring = gbm._check_ring(list(generators), order)
        return GroebnerTimeout(ring, order, (), 0, 0, time.monotonic() - start, str(exc)), "modular-lift"
    log.info("modular lift used %d primes (%d rejected)", len(report.primes_used), len(report.primes_rejected))
    return lifted, "modular-lift"
