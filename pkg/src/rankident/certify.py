"""End-to-end identifiability certificates, the reference witness suite and the induction audit.

A certificate runs three stages at a witness parameter point:

1. every solution template satisfies the generators exactly, at the witness
   and at seeded random draws, and the templates are pairwise distinct;
2. a Gröbner basis of the parametric system under a block order (x > t)
   yields the Bad set, which the witness must avoid;
3. the system instantiated at the witness is zero-dimensional of degree ℓ.

Stage 2 is the expensive one; when it runs out of time the certificate falls
back to the instantiated computation alone and is labelled ``witness`` level.
"""

from __future__ import annotations

import json
import logging
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from .groebner import BadSet, GroebnerTimeout, Hits, Limits, avoids_bad_set, extract_bad_set
from .modular import ENGINES, compute_basis
from .models import (
    DegenerateParameters,
    MixtureParams,
    ModelKind,
    ParametricSystem,
    build_system,
    induction_step_matrix,
    random_params,
    random_rational,
)
from .polyarith import GREVLEX, Rat, StructuralError, block_order, rat, rat_str
from .variety import instance_basis, is_zero_dimensional, standard_monomials

log = logging.getLogger(__name__)

__all__ = [
    "SCHEMA_VERSION",
    "CertifyConfig",
    "Assumption1",
    "Assumption2",
    "Verdict",
    "ResourceUsage",
    "Certificate",
    "certify",
    "WitnessCase",
    "REFERENCE_CASES",
    "SuiteRow",
    "SuiteReport",
    "run_paper_suite",
    "AuditFailure",
    "AuditReport",
    "induction_audit",
]

SCHEMA_VERSION = 1

IDENTIFIABLE = "GenericallyIdentifiable"
INCONCLUSIVE = "Inconclusive"
REFUTED = "Refuted"

# mixing weights for which the known-weight systems were originally worked out
_REFERENCE_KNOWN_P = {"btl": rat("7/10"), "mnl3": rat("3/10"), "mnl23": rat("7/10"), "pl": rat("7/10")}


@dataclass(frozen=True)
class CertifyConfig:
    """Knobs for :func:`certify` (times in seconds, ``None`` = unbounded)."""

    parametric_seconds: float | None = 300.0
    instance_seconds: float | None = 300.0
    exact_seconds: float = 30.0          # exact-over-Q budget before the modular lift takes over
    engine: str = "auto"
    extra_draws: int = 20
    draw_bound: int = 1000
    seed: int = 0
    parametric: bool = True              # False skips stage 2 (witness-level certificate)
    block_inner: str = "grevlex"

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.extra_draws < 0:
            raise ValueError("extra_draws must be non-negative")
        if self.block_inner not in ("lex", "grevlex"):
            raise ValueError("block_inner must be 'lex' or 'grevlex'")


@dataclass(frozen=True)
class Assumption1:
    templates_verified: int
    template_count: int
    draws: int
    all_distinct: bool
    detail: str | None = None

    @property
    def passed(self) -> bool:
        return self.all_distinct and self.template_count > 0 and self.templates_verified == self.template_count


@dataclass(frozen=True)
class Assumption2:
    bad_set_size: int | None = None
    bad_set: tuple[str, ...] | None = None
    witness_avoids: bool | None = None
    zero_dimensional: bool | None = None
    degree: int | None = None
    parametric_status: str = "skipped"      # "done" | "timeout" | "skipped"
    parametric_method: str | None = None
    instance_status: str = "skipped"        # "done" | "timeout" | "skipped"
    instance_method: str | None = None


@dataclass(frozen=True)
class Verdict:
    status: str
    count: int | None = None
    reason: str | None = None
    level: str | None = None                # "parametric" or "witness" for passes

    def label(self) -> str:
        if self.status == IDENTIFIABLE:
            return f"{IDENTIFIABLE}({self.count})"
        return f"{self.status}({self.reason})"


@dataclass(frozen=True)
class ResourceUsage:
    pair_count: int = 0
    wall_seconds: float = 0.0


@dataclass(frozen=True)
class Certificate:
    system_id: str
    witness: dict
    expected_count: int
    assumption1: Assumption1
    assumption2: Assumption2
    verdict: Verdict
    resource_usage: ResourceUsage
    notes: tuple[str, ...] = ()

    @property
    def exit_code(self) -> int:
        return {IDENTIFIABLE: 0, REFUTED: 1}.get(self.verdict.status, 2)

    def to_dict(self, timings: bool = False) -> dict:
        usage = asdict(self.resource_usage)
        if not timings:
            usage["wall_seconds"] = None   # keeps reports byte-identical across runs
        a1 = asdict(self.assumption1)
        a2 = asdict(self.assumption2)
        if a2["bad_set"] is not None:
            a2["bad_set"] = list(a2["bad_set"])
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "certificate",
            "system_id": self.system_id,
            "witness": {k: rat_str(v) for k, v in self.witness.items()},
            "expected_count": self.expected_count,
            "assumption1": a1,
            "assumption2": a2,
            "verdict": asdict(self.verdict),
            "resource_usage": usage,
            "notes": list(self.notes),
        }

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True) + "\n"


# -- stage 1 -------------------------------------------------------------------

def _full_point(template_values: Mapping[str, Rat], witness: Mapping[str, Rat]) -> dict:
    point = dict(witness)
    point.update(template_values)
    return point


def _satisfies(system: ParametricSystem, point: Mapping[str, Rat]) -> bool:
    names = system.ring.names
    for g in system.generators:
        if g.evaluate({k: point[k] for k in names}).constant_value() != 0:
            return False
    return True


def _random_witness(system: ParametricSystem, rng: random.Random, bound: int) -> dict[str, Rat]:
    return {t: random_rational(rng, bound) for t in system.param_names}


def _check_templates(system: ParametricSystem, witness: Mapping[str, Rat], config: CertifyConfig) -> Assumption1:
    templates = system.templates
    if not templates:
        return Assumption1(0, 0, 0, False, "system has no solution templates")
    rng = random.Random(config.seed)
    points = [dict(witness)]
    redraws = 0
    while len(points) < config.extra_draws + 1 and redraws < 10 * (config.extra_draws + 1):
        draw = _random_witness(system, rng, config.draw_bound)
        try:
            values = system.solutions_at(draw)
        except ZeroDivisionError:
            redraws += 1
            continue
        if len({tuple(sorted(v.items())) for v in values}) != len(values):
            redraws += 1   # templates meet on a measure-zero set; draw again
            continue
        points.append(draw)
    ok = [True] * len(templates)
    distinct = True
    detail = None
    for idx, point in enumerate(points):
        where = "at the witness" if idx == 0 else f"at draw {idx}"
        try:
            values = system.solutions_at(point)
        except ZeroDivisionError:
            ok = [False] * len(templates)
            detail = f"a template is undefined {where}"
            continue
        if len({tuple(sorted(v.items())) for v in values}) != len(values):
            distinct = False
            detail = f"templates coincide {where}"
        for k, vals in enumerate(values):
            if ok[k] and not _satisfies(system, _full_point(vals, point)):
                ok[k] = False
                detail = f"template {k} fails a generator {where}"
    if redraws:
        log.debug("%d random draws were degenerate and replaced", redraws)
    return Assumption1(sum(ok), len(templates), len(points) - 1, distinct, detail)


# -- certify -------------------------------------------------------------------

def _clean_witness(system: ParametricSystem, witness: Mapping[str, object]) -> dict[str, Rat]:
    values = {k: rat(v) for k, v in witness.items()}
    missing = [t for t in system.param_names if t not in values]
    if missing:
        raise StructuralError(f"witness does not assign {', '.join(missing)}")
    return {t: values[t] for t in system.param_names}


def _notes_for(system: ParametricSystem, a1: Assumption1) -> list[str]:
    notes = list(system.notes)
    notes.append(f"templates verified at the witness and {a1.draws} random draws")
    kind = system.kind
    if kind is not None and kind.is_known and kind.known_p != _REFERENCE_KNOWN_P[kind.family]:
        notes.append("mixing weight differs from the reference value; procedure replicated, not reference-checked")
    return notes


def certify(system: ParametricSystem, witness: Mapping[str, object],
            config: CertifyConfig | None = None) -> Certificate:
    """Run the three certification stages for ``system`` at ``witness``."""
    config = config or CertifyConfig()
    witness = _clean_witness(system, witness)
    ell = system.expected_count
    start = time.monotonic()
    pairs = 0

    a1 = _check_templates(system, witness, config)
    notes = _notes_for(system, a1)

    def finish(a2: Assumption2, verdict: Verdict) -> Certificate:
        usage = ResourceUsage(pairs, round(time.monotonic() - start, 3))
        return Certificate(system.system_id, witness, ell, a1, a2, verdict, usage, tuple(notes))

    failed_at_witness = not a1.passed and a1.detail is not None and a1.detail.endswith("at the witness")
    if not a1.passed and not failed_at_witness:
        return finish(Assumption2(), Verdict(INCONCLUSIVE, reason=f"assumption 1: {a1.detail}"))

    # stage 2: parametric basis and Bad set (also diagnoses a witness where templates break down)
    a2 = Assumption2()
    bad: BadSet | None = None
    if config.parametric and system.param_names:
        order = block_order(config.block_inner, config.block_inner)
        gb, method = compute_basis(system.generators, order, Limits(max_seconds=config.parametric_seconds),
                                   config.engine, config.exact_seconds)
        pairs += gb.pair_count
        if isinstance(gb, GroebnerTimeout):
            a2 = Assumption2(parametric_status="timeout", parametric_method=method)
            notes.append(f"parametric basis not finished ({gb.reason}); witness-level check only")
        else:
            bad = extract_bad_set(gb)
            hit = avoids_bad_set(witness, bad)
            a2 = Assumption2(len(bad), tuple(bad.render()), not isinstance(hit, Hits),
                             parametric_status="done", parametric_method=method)
            if isinstance(hit, Hits):
                return finish(a2, Verdict(INCONCLUSIVE, reason=f"witness hits Bad set: {hit.poly.render()} = 0"))
    elif config.parametric:
        a2 = Assumption2(0, (), True, parametric_status="done", parametric_method="exact")

    if failed_at_witness:
        return finish(a2, Verdict(INCONCLUSIVE, reason=f"assumption 1: {a1.detail}"))

    # stage 3: the instantiated system
    instance = system.instantiate(witness)
    gb, method = instance_basis(instance, Limits(max_seconds=config.instance_seconds),
                                config.engine, config.exact_seconds)
    pairs += gb.pair_count
    if isinstance(gb, GroebnerTimeout):
        a2 = _replace(a2, instance_status="timeout", instance_method=method)
        return finish(a2, Verdict(INCONCLUSIVE, reason=f"instantiated basis: {gb.reason}"))
    zero_dim = is_zero_dimensional(gb)
    deg = len(standard_monomials(gb)) if zero_dim else None
    a2 = _replace(a2, zero_dimensional=zero_dim, degree=deg, instance_status="done", instance_method=method)
    if method != "exact":
        notes.append("instantiated basis from the verified modular lift")
    level = "parametric" if a2.witness_avoids else "witness"
    if zero_dim and deg == ell:
        return finish(a2, Verdict(IDENTIFIABLE, ell, level=level))
    found = f"degree {deg}" if zero_dim else "positive dimension"
    if a2.witness_avoids:
        return finish(a2, Verdict(REFUTED, reason=f"expected degree {ell}, found {found}"))
    return finish(a2, Verdict(INCONCLUSIVE, reason=f"expected degree {ell}, found {found}; "
                                                   "Bad-set avoidance not established"))


def _replace(a2: Assumption2, **changes) -> Assumption2:
    data = asdict(a2)
    data.update(changes)
    return Assumption2(**data)


# -- reference suite -------------------------------------------------------------

@dataclass(frozen=True)
class WitnessCase:
    case_id: str
    kind: ModelKind
    params: MixtureParams
    expected_dim: int
    expected_degree: int

    @property
    def n(self) -> int:
        return self.params.n


def _case(case_id, kind, a, b, p1, degree) -> WitnessCase:
    return WitnessCase(case_id, kind, MixtureParams(tuple(map(rat, a)), tuple(map(rat, b)), rat(p1)), 0, degree)


REFERENCE_CASES: tuple[WitnessCase, ...] = (
    _case("btl-known-n5", ModelKind.known("btl", "7/10"), (1, 2, 3, 4, 5), (1, 8, 9, 3, 2), "7/10", 3),
    _case("btl-unknown-n5", ModelKind.unknown("btl"), (1, 2, 3, 4, 5), (1, 8, 9, 3, 2), "3/10", 2),
    _case("mnl3-known-n4", ModelKind.known("mnl3", "3/10"), (1, 2, 3, 4), (1, 5, 4, 2), "3/10", 1),
    _case("mnl3-unknown-n4", ModelKind.unknown("mnl3"), (1, 2, 3, 4), (1, 5, 4, 2), "7/10", 2),
    _case("pl-known-n4", ModelKind.known("pl", "7/10"), ("1/10", "2/10", "3/10", "4/10"),
          ("1/20", "7/20", "9/20", "3/20"), "7/10", 1),
    _case("pl-unknown-n4", ModelKind.unknown("pl"), ("1/10", "2/10", "3/10", "4/10"),
          ("1/20", "14/20", "2/20", "3/20"), "7/10", 2),
    _case("mnl23-known-n3", ModelKind.known("mnl23", "7/10"), (1, 2, 3), (1, 5, 4), "7/10", 1),
    _case("mnl23-unknown-n4", ModelKind.unknown("mnl23"), (1, 2, 3, 4), (1, 5, 4, 2), "7/10", 2),
)


@dataclass(frozen=True)
class SuiteRow:
    system_id: str
    expected: dict
    computed: dict
    match: bool
    runtime: float
    method: str | None
    parametric: str
    verdict: str


@dataclass(frozen=True)
class SuiteReport:
    rows: tuple[SuiteRow, ...]

    @property
    def all_match(self) -> bool:
        return all(r.match for r in self.rows)

    def to_dict(self, timings: bool = False) -> dict:
        rows = []
        for r in self.rows:
            d = asdict(r)
            if not timings:
                d["runtime"] = None
            rows.append(d)
        return {"schema_version": SCHEMA_VERSION, "kind": "suite", "rows": rows, "all_match": self.all_match}

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True) + "\n"


def run_case(case: WitnessCase, config: CertifyConfig) -> SuiteRow:
    """Certify one reference case and compare its dimension/degree with the expected pair."""
    start = time.monotonic()
    system = build_system(case.kind, case.n)
    cert = certify(system, system.witness(case.params), config)
    a2 = cert.assumption2
    if a2.zero_dimensional is None:
        computed = {"dim": None, "degree": None}
    else:
        computed = {"dim": 0 if a2.zero_dimensional else None, "degree": a2.degree}
    expected = {"dim": case.expected_dim, "degree": case.expected_degree}
    return SuiteRow(case.case_id, expected, computed, computed == expected,
                    round(time.monotonic() - start, 3), a2.instance_method,
                    a2.parametric_status, cert.verdict.label())


def _run_case_star(args):
    return run_case(*args)


def run_paper_suite(config: CertifyConfig | None = None, cases: Sequence[WitnessCase] = REFERENCE_CASES,
                    workers: int | None = None) -> SuiteReport:
    """Certify every reference case (one process per case); rows sorted by system id."""
    config = config or CertifyConfig(parametric_seconds=60.0)
    workers = workers or min(len(cases), os.cpu_count() or 1)
    jobs = [(case, config) for case in cases]
    if workers <= 1:
        rows = [run_case(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_case_star, jobs))
    return SuiteReport(tuple(sorted(rows, key=lambda r: r.system_id)))


# -- induction audit -------------------------------------------------------------

@dataclass(frozen=True)
class AuditFailure:
    n: int
    trial: int
    branch: str
    params: dict
    reason: str


@dataclass
class AuditReport:
    kind: str
    n_range: tuple[int, int]
    trials: int
    successes: int = 0
    degenerate: int = 0
    failures: list[AuditFailure] = field(default_factory=list)

    @property
    def attempted(self) -> int:
        """Trials counted in the failure rate (degenerate draws excluded)."""
        return self.successes + len(self.failures)

    @property
    def failure_rate(self) -> float:
        return len(self.failures) / self.attempted if self.attempted else 0.0


def _is_degenerate(params: MixtureParams) -> bool:
    return params.a == params.b


def induction_audit(kind: ModelKind, n_max: int, trials: int = 100, seed: int = 0,
                    bound: int = 1000, draws: Sequence[MixtureParams] | None = None) -> AuditReport:
    """Check the induction step from ``n - 1`` to ``n`` items on random parameters.

    A trial succeeds when the step's 2x2 determinant is non-zero and its unique
    solution equals the true scores of the new item (along the swapped branch
    too, for unknown weights).  ``draws`` overrides the random parameters.
    """
    lo = kind.min_n + 1
    if n_max < lo:
        raise StructuralError(f"n_max must exceed the base case n={kind.min_n}")
    rng = random.Random(seed)
    report = AuditReport(kind.label, (lo, n_max), trials)
    branches = ("identity",) if kind.is_known and kind.known_p != rat("1/2") else ("identity", "swapped")
    for n in range(lo, n_max + 1):
        for trial in range(trials):
            params = draws[trial] if draws is not None else random_params(kind, n_max, rng, bound)
            if _is_degenerate(params):
                report.degenerate += 1
                continue
            failed = None
            for branch in branches:
                try:
                    step = induction_step_matrix(kind, params, n, branch)
                except DegenerateParameters as exc:
                    failed = (branch, str(exc))
                    break
                if step.degenerate:
                    failed = (branch, "singular 2x2 step")
                    break
                if step.solve() != step.expected:
                    failed = (branch, f"extension {tuple(map(rat_str, step.solve()))} "
                                      f"!= truth {tuple(map(rat_str, step.expected))}")
                    break
            if failed is None:
                report.successes += 1
            else:
                point = {"a": [rat_str(v) for v in params.a], "b": [rat_str(v) for v in params.b],
                         "p1": rat_str(params.p1)}
                report.failures.append(AuditFailure(n, trial, failed[0], point, failed[1]))
                log.warning("induction failure %s n=%d trial=%d: %s", kind.label, n, trial, failed[1])
    return report
