"""Polynomial systems for two-component mixtures of ranking models.

Four families are covered: BTL (pairwise), MNL over 3-item slates, MNL over
2- and 3-item slates, and Plackett–Luce via top-two marginals.  Each can be
built with the mixing weight known (a fixed rational) or unknown (an extra
unknown ``p`` and parameter ``p1``).

Convention: the first component ``a`` (unknowns ``x``) carries weight ``p1``,
the second ``b`` (unknowns ``y``) carries ``1 - p1``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from gmpy2 import mpq

from .polyarith import Polynomial, Rat, RationalFunction, Ring, StructuralError, rat

__all__ = [
    "FAMILIES",
    "ModelKind",
    "MixtureParams",
    "EtaVector",
    "ParametricSystem",
    "DegenerateParameters",
    "InductionStep",
    "eta",
    "pl_top_two",
    "build_system",
    "known_solutions",
    "induction_step_matrix",
    "nonidentifiable_family",
    "random_params",
    "random_rational",
]

FAMILIES = ("btl", "mnl3", "mnl23", "pl")

# smallest n for which the listed equation subsets are generically identifying
_MIN_N = {
    ("btl", True): 5, ("btl", False): 5,
    ("mnl3", True): 4, ("mnl3", False): 4,
    ("mnl23", True): 3, ("mnl23", False): 4,
    ("pl", True): 3, ("pl", False): 4,
}

HALF = mpq(1, 2)


class DegenerateParameters(ValueError):
    """Parameters for which the solution templates collide or are undefined."""


@dataclass(frozen=True)
class ModelKind:
    family: str
    known_p: Rat | None = None   # None means the mixing weight is unknown

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise StructuralError(f"unknown model family {self.family!r}; choose from {FAMILIES}")
        if self.known_p is not None:
            p = rat(self.known_p)
            if not 0 < p < 1:
                raise StructuralError("known mixing weight must lie strictly between 0 and 1")
            object.__setattr__(self, "known_p", p)

    @classmethod
    def known(cls, family: str, p1) -> "ModelKind":
        return cls(family, rat(p1))

    @classmethod
    def unknown(cls, family: str) -> "ModelKind":
        return cls(family, None)

    @property
    def is_known(self) -> bool:
        return self.known_p is not None

    @property
    def min_n(self) -> int:
        return _MIN_N[(self.family, self.is_known)]

    @property
    def normalized_first(self) -> bool:
        """BTL/MNL fix the first score of each component to 1; PL uses sum-to-one."""
        return self.family != "pl"

    @property
    def label(self) -> str:
        if self.is_known:
            p = self.known_p
            return f"{self.family}-known-{p.numerator}_{p.denominator}"
        return f"{self.family}-unknown"

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class MixtureParams:
    a: tuple
    b: tuple
    p1: Rat

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(rat(v) for v in self.a))
        object.__setattr__(self, "b", tuple(rat(v) for v in self.b))
        object.__setattr__(self, "p1", rat(self.p1))
        if len(self.a) != len(self.b):
            raise StructuralError("a and b must have the same length")

    @property
    def n(self) -> int:
        return len(self.a)

    def swapped(self) -> "MixtureParams":
        return MixtureParams(self.b, self.a, 1 - self.p1)

    def validate(self, kind: ModelKind) -> "MixtureParams":
        if not 0 < self.p1 < 1:
            raise StructuralError("p1 must lie strictly between 0 and 1")
        if kind.is_known and self.p1 != kind.known_p:
            raise StructuralError(f"p1={self.p1} disagrees with the known weight {kind.known_p}")
        if any(v <= 0 for v in self.a + self.b):
            raise StructuralError("scores must be positive")
        if kind.normalized_first:
            if self.a[0] != 1 or self.b[0] != 1:
                raise StructuralError("BTL/MNL scores must be normalized to a1 = b1 = 1")
        else:
            if sum(self.a) != 1 or sum(self.b) != 1:
                raise StructuralError("Plackett-Luce scores must sum to one in each component")
        return self

    def assignment(self) -> dict[str, Rat]:
        out = {f"a{i + 1}": v for i, v in enumerate(self.a)}
        out.update({f"b{i + 1}": v for i, v in enumerate(self.b)})
        out["p1"] = self.p1
        return out


# -- choice probabilities ------------------------------------------------------

@dataclass(frozen=True)
class EtaVector:
    """Exact choice probabilities.

    ``pairwise[(i, j)]``: i preferred to j.  ``triplet[(i, j, k)]``: i chosen
    from the slate {i, j, k} (j < k).  ``listwise[perm]``: probability of the
    full ranking.  ``top_two[(i, j)]``: i ranked first and j second.
    Items are 1-based.
    """

    pairwise: dict = field(default_factory=dict)
    triplet: dict = field(default_factory=dict)
    listwise: dict = field(default_factory=dict)
    top_two: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"pairwise": self.pairwise, "triplet": self.triplet,
                "listwise": self.listwise, "top_two": self.top_two}


def _slate_prob(scores, item, slate):
    return scores[item] / sum(scores[s] for s in slate)


def _mix_choice(params: MixtureParams, item, slate):
    a, b, p = params.a, params.b, params.p1
    return p * _slate_prob(a, item, slate) + (1 - p) * _slate_prob(b, item, slate)


def pl_top_two(scores: Sequence, first: int, second: int) -> Rat:
    """P(first ranked first, second ranked second) for a single PL component (0-based, sum-to-one)."""
    total = sum(scores)
    return scores[first] * scores[second] / (total * (total - scores[first]))


def _pl_ranking(scores, perm):
    prob = mpq(1)
    rest = sum(scores)
    for item in perm:
        prob *= scores[item] / rest
        rest -= scores[item]
    return prob


def eta(params: MixtureParams, kind: ModelKind, listwise_max_n: int = 7) -> EtaVector:
    params.validate(kind)
    n, p = params.n, params.p1
    pairwise, triplet, listwise, top_two = {}, {}, {}, {}
    if kind.family in ("btl", "mnl23"):
        for i, j in itertools.permutations(range(n), 2):
            pairwise[(i + 1, j + 1)] = _mix_choice(params, i, (i, j))
    if kind.family in ("mnl3", "mnl23"):
        for i in range(n):
            for j, k in itertools.combinations([m for m in range(n) if m != i], 2):
                triplet[(i + 1, j + 1, k + 1)] = _mix_choice(params, i, (i, j, k))
    if kind.family == "pl":
        for i, j in itertools.permutations(range(n), 2):
            top_two[(i + 1, j + 1)] = p * pl_top_two(params.a, i, j) + (1 - p) * pl_top_two(params.b, i, j)
        if n <= listwise_max_n:
            for perm in itertools.permutations(range(n)):
                listwise[tuple(q + 1 for q in perm)] = (
                    p * _pl_ranking(params.a, perm) + (1 - p) * _pl_ranking(params.b, perm)
                )
    return EtaVector(pairwise, triplet, listwise, top_two)


# -- systems -------------------------------------------------------------------

@dataclass(frozen=True)
class ParametricSystem:
    """Generators in Q[t][x] plus closed-form solutions in terms of the parameters.

    ``templates`` maps every x-variable to a :class:`RationalFunction` over
    ``param_ring``.  ``fixed`` holds parameter values baked into the
    generators (e.g. a1 = b1 = 1, or the known mixing weight).
    """

    system_id: str
    ring: Ring
    generators: tuple[Polynomial, ...]
    expected_count: int
    templates: tuple[dict, ...] = ()
    kind: ModelKind | None = None
    n: int | None = None
    fixed: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def var_names(self) -> tuple[str, ...]:
        return self.ring.x_names

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.ring.t_names

    @property
    def param_ring(self) -> Ring:
        return Ring(self.ring.t_names)

    def witness(self, params: MixtureParams | Mapping) -> dict[str, Rat]:
        """Restrict a full parameter assignment to this system's t-variables."""
        full = params.assignment() if isinstance(params, MixtureParams) else {k: rat(v) for k, v in params.items()}
        missing = [t for t in self.param_names if t not in full]
        if missing:
            raise StructuralError(f"witness misses {', '.join(missing)}")
        for name, value in self.fixed.items():
            if name in full and full[name] != value:
                raise StructuralError(f"{name} must equal {value} for this system")
        return {t: full[t] for t in self.param_names}

    def instantiate(self, point: MixtureParams | Mapping) -> list[Polynomial]:
        w = self.witness(point)
        return [g.evaluate(w) for g in self.generators]

    def solutions_at(self, point: MixtureParams | Mapping) -> list[dict[str, Rat]]:
        """Evaluate every template at a parameter point (raises on a vanishing denominator)."""
        w = self.witness(point)
        return [{v: f.evaluate(w) for v, f in tpl.items()} for tpl in self.templates]


class _Builder:
    """Variable/parameter bookkeeping shared by the family-specific builders."""

    def __init__(self, kind: ModelKind, n: int, x_names: list[str]):
        self.kind, self.n = kind, n
        first = 2 if kind.normalized_first else 1
        t_names = [f"a{i}" for i in range(first, n + 1)] + [f"b{i}" for i in range(first, n + 1)]
        if not kind.is_known:
            t_names.append("p1")
        self.ring = Ring.blocks(x_names, t_names)
        self.pring = Ring(tuple(t_names))
        self.fixed = {}
        if kind.normalized_first:
            self.fixed.update(a1=mpq(1), b1=mpq(1))
        if kind.is_known:
            self.fixed["p1"] = kind.known_p

    def var(self, name):
        return self.ring.var(name)

    def param(self, name, ring=None):
        ring = ring or self.ring
        if name in self.fixed:
            return Polynomial.constant(ring, self.fixed[name])
        return ring.var(name)

    def scores(self, ring=None):
        a = [self.param(f"a{i}", ring) for i in range(1, self.n + 1)]
        b = [self.param(f"b{i}", ring) for i in range(1, self.n + 1)]
        return a, b, self.param("p1", ring)

    def unknowns(self):
        x = [self.var(f"x{i}") for i in range(1, self.n + 1)]
        y = [self.var(f"y{i}") for i in range(1, self.n + 1)]
        p = self.var("p") if not self.kind.is_known else Polynomial.constant(self.ring, self.kind.known_p)
        return x, y, p


def _rf(p) -> RationalFunction:
    return RationalFunction.of(p)


def _identity_template(bld: _Builder, extra: Callable[[list, list, object], dict] | None = None,
                       swap: bool = False) -> dict:
    a, b, p1 = bld.scores(bld.pring)
    if swap:
        a, b, p1 = b, a, 1 - p1
    tpl = {f"x{i + 1}": _rf(a[i]) for i in range(bld.n)}
    tpl.update({f"y{i + 1}": _rf(b[i]) for i in range(bld.n)})
    if not bld.kind.is_known:
        tpl["p"] = _rf(p1)
    if extra:
        tpl.update(extra(a, b, p1))
    return tpl


def _btl_pair_eq(xi, xj, yi, yj, c, d, p):
    # d * (p x_i/(x_i+x_j) + (1-p) y_i/(y_i+y_j)) = c, denominators cleared
    return c * (xi + xj) * (yi + yj) - d * (p * xi * (yi + yj) + (1 - p) * (xi + xj) * yi)


def _btl(kind: ModelKind, n: int, full: bool):
    x_names = [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]
    if not kind.is_known:
        x_names += ["t23", "h15", "h23", "p"]
    bld = _Builder(kind, n, x_names)
    x, y, p = bld.unknowns()
    a, b, p1 = bld.scores()
    gens = [x[0] - 1, y[0] - 1]
    for i, j in itertools.combinations(range(n), 2):
        c = a[i] * b[i] + p1 * a[i] * b[j] + (1 - p1) * a[j] * b[i]
        d = (a[i] + a[j]) * (b[i] + b[j])
        if kind.is_known:
            gens.append(_btl_pair_eq(x[i], x[j], y[i], y[j], c, d, p))
        else:
            # same equation, regrouped by the monomials x_i y_i, x_i y_j, x_j y_i, x_j y_j
            cc = p1 * a[i] * (b[i] + b[j]) + (1 - p1) * b[i] * (a[i] + a[j])
            gens.append((cc - d) * x[i] * y[i] + (cc - p * d) * x[i] * y[j]
                        + (cc - (1 - p) * d) * x[j] * y[i] + cc * x[j] * y[j])
    templates = []
    notes = []
    if kind.is_known:
        pa, pb, pp1 = bld.scores(bld.pring)
        templates.append(_identity_template(bld))
        # two zero-padded solutions of the cleared system that the rational one excludes
        eta1 = []
        for j in range(1, n):
            c = pa[0] * pb[0] + pp1 * pa[0] * pb[j] + (1 - pp1) * pa[j] * pb[0]
            d = (pa[0] + pa[j]) * (pb[0] + pb[j])
            eta1.append((c, d))
        zero = _rf(bld.pring.zero())
        spur_x = {"x1": _rf(pa[0]), "y1": _rf(pb[0])}
        spur_y = {"x1": _rf(pa[0]), "y1": _rf(pb[0])}
        for j, (c, d) in zip(range(2, n + 1), eta1):
            # x = e_1: eta_{1j} = p1 + (1-p1) y1/(y1+yj)  ->  yj = (1-eta)/(eta-p1)
            spur_x[f"x{j}"] = zero
            spur_x[f"y{j}"] = RationalFunction(d - c, c - pp1 * d)
            spur_y[f"y{j}"] = zero
            spur_y[f"x{j}"] = RationalFunction(d - c, c - (1 - pp1) * d)
        templates += [spur_x, spur_y]
        notes.append("two zero-padded templates solve the denominator-cleared system only; "
                     "the original rational equations exclude them")
        expected = 3
        if kind.known_p == HALF:
            templates.append(_identity_template(bld, swap=True))
            expected = 4
    else:
        def aux(a_, b_, p_):
            return {"t23": 1 / (_rf(a_[1]) + a_[2]), "h15": 1 / (_rf(b_[0]) + b_[4]),
                    "h23": 1 / (_rf(b_[1]) + b_[2])}
        gens += [bld.var("t23") * (x[1] + x[2]) - 1, bld.var("h15") * (y[0] + y[4]) - 1,
                 bld.var("h23") * (y[1] + y[2]) - 1]
        templates = [_identity_template(bld, aux), _identity_template(bld, aux, swap=True)]
        expected = 2
    return bld, gens, templates, expected, notes


def _mnl_slate_eq(i, slate, x, y, a, b, p, p1):
    sx = sum((x[s] for s in slate[1:]), x[slate[0]])
    sy = sum((y[s] for s in slate[1:]), y[slate[0]])
    sa = sum((a[s] for s in slate[1:]), a[slate[0]])
    sb = sum((b[s] for s in slate[1:]), b[slate[0]])
    return (p * x[i] * sy + (1 - p) * y[i] * sx) * sb * sa - (p1 * a[i] * sb + (1 - p1) * b[i] * sa) * sx * sy


def _mnl3(kind: ModelKind, n: int, full: bool):
    x_names = [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]
    if not kind.is_known:
        x_names += ["p", "t123", "t124", "h123", "h124"]
    bld = _Builder(kind, n, x_names)
    x, y, p = bld.unknowns()
    a, b, p1 = bld.scores()
    gens = [x[0] - 1, y[0] - 1]
    for slate in itertools.combinations(range(n), 3):
        chosen = slate if full else slate[:2]
        for i in chosen:
            gens.append(_mnl_slate_eq(i, slate, x, y, a, b, p, p1))
    if kind.is_known:
        templates = [_identity_template(bld)]
        expected = 1
        if kind.known_p == HALF:
            templates.append(_identity_template(bld, swap=True))
            expected = 2
    else:
        def aux(a_, b_, p_):
            return {"t123": 1 / (_rf(a_[0]) + a_[1] + a_[2]), "t124": 1 / (_rf(a_[0]) + a_[1] + a_[3]),
                    "h123": 1 / (_rf(b_[0]) + b_[1] + b_[2]), "h124": 1 / (_rf(b_[0]) + b_[1] + b_[3])}
        gens += [(x[0] + x[1] + x[2]) * bld.var("t123") - 1, (x[0] + x[1] + x[3]) * bld.var("t124") - 1,
                 (y[0] + y[1] + y[2]) * bld.var("h123") - 1, (y[0] + y[1] + y[3]) * bld.var("h124") - 1]
        templates = [_identity_template(bld, aux), _identity_template(bld, aux, swap=True)]
        expected = 2
    return bld, gens, templates, expected, []


def _mnl23(kind: ModelKind, n: int, full: bool):
    x_names = [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]
    if not kind.is_known:
        x_names += ["p"]
    bld = _Builder(kind, n, x_names)
    x, y, p = bld.unknowns()
    a, b, p1 = bld.scores()
    gens = [x[0] - 1, y[0] - 1]
    for slate in itertools.combinations(range(n), 2):
        for i in (slate if full else slate[:1]):
            gens.append(_mnl_slate_eq(i, slate, x, y, a, b, p, p1))
    slates3 = itertools.combinations(range(n), 3) if full else ((0, 1, k) for k in range(2, n))
    for slate in slates3:
        for i in (slate if full else slate[:2]):
            gens.append(_mnl_slate_eq(i, slate, x, y, a, b, p, p1))
    if kind.is_known and kind.known_p != HALF:
        templates, expected = [_identity_template(bld)], 1
    else:
        templates = [_identity_template(bld), _identity_template(bld, swap=True)]
        expected = 2
    return bld, gens, templates, expected, []


def _pl_pairs(kind: ModelKind, n: int, full: bool):
    if full:
        return [(k, i) for k in range(n) for i in range(n) if i != k]
    pairs = [(k, i) for k in range(min(n, 3)) for i in range(n) if i != k]
    if not kind.is_known:
        pairs += [(3, 0), (3, 1)]
    return pairs


def _pl(kind: ModelKind, n: int, full: bool):
    x_names = [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]
    if not kind.is_known:
        x_names += ["p"]
    x_names += [f"t{i}" for i in range(1, n + 1)] + [f"h{i}" for i in range(1, n + 1)]
    bld = _Builder(kind, n, x_names)
    x, y, p = bld.unknowns()
    a, b, p1 = bld.scores()
    gens = []
    for k, i in _pl_pairs(kind, n, full):
        lhs = (p1 * a[k] * a[i] * (1 - b[k]) + (1 - p1) * b[k] * b[i] * (1 - a[k])) * (1 - x[k]) * (1 - y[k])
        rhs = (1 - a[k]) * (1 - b[k]) * (p * x[k] * x[i] * (1 - y[k]) + (1 - p) * y[k] * y[i] * (1 - x[k]))
        gens.append(lhs - rhs)
    gens += [bld.var(f"t{i}") * (1 - x[i - 1]) - 1 for i in range(1, n + 1)]
    gens += [bld.var(f"h{i}") * (1 - y[i - 1]) - 1 for i in range(1, n + 1)]

    def aux(a_, b_, p_):
        out = {f"t{i + 1}": 1 / (1 - _rf(a_[i])) for i in range(n)}
        out.update({f"h{i + 1}": 1 / (1 - _rf(b_[i])) for i in range(n)})
        return out
    if kind.is_known and kind.known_p != HALF:
        templates, expected = [_identity_template(bld, aux)], 1
    else:
        templates = [_identity_template(bld, aux), _identity_template(bld, aux, swap=True)]
        expected = 2
    return bld, gens, templates, expected, []


_BUILDERS = {"btl": _btl, "mnl3": _mnl3, "mnl23": _mnl23, "pl": _pl}


def build_system(kind: ModelKind, n: int, instantiate_at: MixtureParams | None = None, full: bool = False):
    """Parametric system for ``kind`` on ``n`` items, or its specialization at ``instantiate_at``.

    ``full`` switches from the minimal certified equation subset to every
    available slate/ranking equation.
    """
    if n < kind.min_n:
        raise StructuralError(
            f"{kind.label} needs n >= {kind.min_n} (smaller n is not generically identifiable "
            f"with these equations); got n={n}")
    bld, gens, templates, expected, notes = _BUILDERS[kind.family](kind, n, full)
    sid = f"{kind.label}-n{n}" + ("-full" if full else "")
    system = ParametricSystem(sid, bld.ring, tuple(gens), expected, tuple(templates), kind, n,
                              dict(bld.fixed), tuple(notes))
    if instantiate_at is not None:
        instantiate_at.validate(kind)
        return system.instantiate(instantiate_at)
    return system


def known_solutions(kind: ModelKind, params: MixtureParams, n: int | None = None) -> list[dict[str, Rat]]:
    """Exact solutions of the instantiated system predicted by the templates.

    Raises :class:`DegenerateParameters` when a template is undefined or two
    templates coincide.
    """
    params.validate(kind)
    if not kind.is_known and params.p1 == HALF:
        raise DegenerateParameters("p1 = 1/2 with unknown weight: identity and swap are not separated")
    system = build_system(kind, n or params.n)
    try:
        sols = system.solutions_at(params)
    except ZeroDivisionError as exc:
        raise DegenerateParameters(f"template denominator vanishes: {exc}") from None
    keys = [tuple(sorted(s.items())) for s in sols]
    if len(set(keys)) != len(keys):
        raise DegenerateParameters("two solution templates coincide at these parameters")
    return sols


# -- induction steps -------------------------------------------------------------

@dataclass(frozen=True)
class InductionStep:
    """2x2 linear system ``matrix @ (u, v) = rhs`` for the new item's two scores."""

    matrix: tuple[tuple[Rat, Rat], tuple[Rat, Rat]]
    rhs: tuple[Rat, Rat]
    expected: tuple[Rat, Rat]
    branch: str

    @property
    def det(self) -> Rat:
        (m00, m01), (m10, m11) = self.matrix
        return m00 * m11 - m01 * m10

    @property
    def degenerate(self) -> bool:
        return self.det == 0

    def solve(self) -> tuple[Rat, Rat]:
        d = self.det
        if d == 0:
            raise DegenerateParameters("singular induction step")
        (m00, m01), (m10, m11) = self.matrix
        r0, r1 = self.rhs
        return ((r0 * m11 - m01 * r1) / d, (m00 * r1 - r0 * m10) / d)

    @property
    def consistent(self) -> bool:
        return not self.degenerate and self.solve() == self.expected


def _eliminate_xy(rows):
    """Rows ``alpha*uv + beta*u + gamma*v + delta = 0``; cancel ``uv`` against the first row."""
    a1, b1, c1, d1 = rows[0]
    out_m, out_r = [], []
    for ak, bk, ck, dk in rows[1:]:
        out_m.append((a1 * bk - ak * b1, a1 * ck - ak * c1))
        out_r.append(-(a1 * dk - ak * d1))
    return out_m, out_r


def _eliminate_chain(rows):
    """Cancel ``uv`` between consecutive rows: ``a_{k+1} row_k - a_k row_{k+1}``."""
    out_m, out_r = [], []
    for (a1, b1, c1, d1), (a2, b2, c2, d2) in zip(rows, rows[1:]):
        out_m.append((a2 * b1 - a1 * b2, a2 * c1 - a1 * c2))
        out_r.append(-(a2 * d1 - a1 * d2))
    return out_m, out_r


def _slate_row(eta_val, others_u, others_v, ui, vi, p):
    """Bilinear row in the new item's (u, v) for ``eta = p*ui/(U+u) + (1-p)*vi/(V+v)``."""
    U, V = others_u, others_v
    return (eta_val,
            eta_val * V - (1 - p) * vi,
            eta_val * U - p * ui,
            eta_val * U * V - p * ui * V - (1 - p) * vi * U)


def induction_step_matrix(kind: ModelKind, params: MixtureParams, n: int | None = None,
                          branch: str = "identity") -> InductionStep:
    """Linear system for the scores of item ``n`` given items ``1..n-1`` are already recovered.

    ``branch="swapped"`` (unknown weight only) solves along the component-swapped
    solution ``(b, a, 1 - p1)``; the expected extension is then ``(b_n, a_n)``.
    """
    n = n or params.n
    if n > params.n:
        raise StructuralError("n exceeds the number of items in params")
    if n <= kind.min_n:
        raise StructuralError(f"induction starts above the base case n={kind.min_n}")
    if branch not in ("identity", "swapped"):
        raise StructuralError("branch must be 'identity' or 'swapped'")
    if branch == "swapped" and kind.is_known and kind.known_p != HALF:
        raise StructuralError("the swapped branch needs an unknown (or uniform) mixing weight")
    truth = MixtureParams(params.a[:n], params.b[:n], params.p1) if kind.family != "pl" else params
    # the observable probabilities always come from the true parameters
    A, B, P = truth.a, truth.b, truth.p1
    # the recovered items 1..n-1 (and weight) along the chosen branch
    u_prev, v_prev, q = (A, B, P) if branch == "identity" else (B, A, 1 - P)
    nn = n - 1  # 0-based index of the new item

    def mix(item, slate):
        return P * A[item] / sum(A[s] for s in slate) + (1 - P) * B[item] / sum(B[s] for s in slate)

    if kind.family in ("btl", "mnl23"):
        rows = [_slate_row(mix(i, (i, nn)), u_prev[i], v_prev[i], u_prev[i], v_prev[i], q) for i in range(3)]
        if kind.family == "btl":
            m, r = _eliminate_xy(rows)
        else:
            m, r = _eliminate_chain(rows)
    elif kind.family == "mnl3":
        rows = []
        for i, j in ((0, 1), (0, 2), (1, 2)):
            rows.append(_slate_row(mix(i, (i, j, nn)), u_prev[i] + u_prev[j], v_prev[i] + v_prev[j],
                                   u_prev[i], v_prev[i], q))
        m, r = _eliminate_xy(rows)
    else:  # Plackett-Luce: lead item k already recovered, new item second -> linear directly
        m, r = [], []
        for k in (1, 2):
            ck = q * u_prev[k] * (1 - v_prev[k])
            dk = (1 - q) * v_prev[k] * (1 - u_prev[k])
            top = P * pl_top_two(A, k, nn) + (1 - P) * pl_top_two(B, k, nn)
            m.append((ck, dk))
            r.append(top * (1 - u_prev[k]) * (1 - v_prev[k]))
    expected = (A[nn], B[nn]) if branch == "identity" else (B[nn], A[nn])
    return InductionStep((tuple(m[0]), tuple(m[1])), (r[0], r[1]), expected, branch)


# -- non-identifiable example and random draws ----------------------------------

def nonidentifiable_family(n: int, t) -> tuple[MixtureParams, MixtureParams]:
    """Two distinct uniform BTL mixtures with identical pairwise probabilities.

    Family one scores items 1, 2 by (t, t) and (1/t, 1/t); family two by
    (t, 1/t) and (1/t, t); all other items score 1.  Both are rescaled so the
    first score of each component is 1.
    """
    t = rat(t)
    if n < 3:
        raise StructuralError("need at least 3 items")
    if t <= 0:
        raise StructuralError("t must be positive")
    if t == 1:
        raise StructuralError("t = 1 makes the two parameterizations coincide")
    ones = (mpq(1),) * (n - 2)

    def normalized(a, b):
        return MixtureParams(tuple(v / a[0] for v in a), tuple(v / b[0] for v in b), HALF)

    first = normalized((t, t) + ones, (1 / t, 1 / t) + ones)
    second = normalized((t, 1 / t) + ones, (1 / t, t) + ones)
    return first, second


def random_rational(rng: random.Random, bound: int = 1000, positive: bool = True) -> Rat:
    num = rng.randint(1, bound)
    den = rng.randint(1, bound)
    value = mpq(num, den)
    if not positive and rng.random() < 0.5:
        value = -value
    return value


def random_params(kind: ModelKind, n: int, rng: random.Random, bound: int = 1000) -> MixtureParams:
    """Random valid parameters with numerators/denominators at most ``bound``."""
    if kind.is_known:
        p1 = kind.known_p
    else:
        while True:
            num, den = rng.randint(1, bound - 1), bound
            p1 = mpq(num, den)
            if p1 != HALF:
                break
    a = [random_rational(rng, bound) for _ in range(n)]
    b = [random_rational(rng, bound) for _ in range(n)]
    if kind.normalized_first:
        a[0] = b[0] = mpq(1)
    else:
        sa, sb = sum(a), sum(b)
        a = [v / sa for v in a]
        b = [v / sb for v in b]
    return MixtureParams(tuple(a), tuple(b), p1)
