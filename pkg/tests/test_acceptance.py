"""Acceptance criteria, one test (and one summary line) each.

Tolerances and time budgets are pinned below.  The stretch tier (criterion 3)
runs only with ``RANKIDENT_STRETCH=1``; a timeout there is reported, not failed.
Criterion 8 is advisory: it prints its outcome but never fails the run.
"""

import os
import random
import time

import pytest
from gmpy2 import mpq

from rankident.certify import REFERENCE_CASES, induction_audit
from rankident.dsl import ParseError, parse_system, render_system_file, system_from_text, system_to_text
from rankident.groebner import Avoids, GroebnerTimeout, Limits, avoids_bad_set, extract_bad_set, groebner
from rankident.models import (
    FAMILIES,
    DegenerateParameters,
    ModelKind,
    build_system,
    eta,
    known_solutions,
    nonidentifiable_family,
    random_params,
)
from rankident.modular import compute_basis, modular_groebner
from rankident.polyarith import GREVLEX, LEX, Ring, block_order, cmp_monomials, s_polynomial
from rankident.variety import (
    SolveConfig,
    instance_basis,
    permute_variables,
    solve_numeric,
    summarize,
    verify_exact_solution,
)

from conftest import DATA, random_poly

TOY_SECONDS = 1.0
WITNESS_SECONDS = 300.0
STRETCH_SECONDS = 1800.0
TEMPLATE_DRAWS = 100
TEMPLATE_SECONDS = 30.0
NONIDENT_SECONDS = 1.0
AUDIT_TRIALS = 100
AUDIT_MIN_SUCCESSES = 99
AUDIT_SECONDS = 120.0
PROPERTY_SECONDS = 120.0
RESIDUAL_TOL = 1e-9
TEMPLATE_TOL = 1e-7

CASES = {c.case_id: c for c in REFERENCE_CASES}
KINDS = [(c.case_id, c.kind, c.n) for c in REFERENCE_CASES]

_bases: dict = {}


def _witness_basis(case):
    """Grevlex basis of the instantiated reference system, computed once per run."""
    if case.case_id not in _bases:
        instance = build_system(case.kind, case.n, instantiate_at=case.params)
        start = time.monotonic()
        gb, method = instance_basis(instance, Limits(max_seconds=WITNESS_SECONDS), exact_seconds=30.0)
        _bases[case.case_id] = (instance, gb, method, time.monotonic() - start)
    return _bases[case.case_id]


# -- 1 -------------------------------------------------------------------------------

def test_criterion_1_toy_basis_and_bad_set(acceptance):
    start = time.monotonic()
    system = system_from_text((DATA / "toy.sys").read_text())
    gb = groebner(system.generators, block_order("grevlex", "grevlex"))
    bad = extract_bad_set(gb)
    elapsed = time.monotonic() - start
    rendered = sorted(g.render() for g in gb)
    ok = (rendered == ["2*x2*t - x2 + 2", "x1 + 2*t - 1"] and bad.render() == ["2*t - 1"]
          and elapsed < TOY_SECONDS)
    acceptance(1, "PASS" if ok else "FAIL",
               f"basis {rendered}, Bad set {bad.render()}, {elapsed:.3f}s (< {TOY_SECONDS}s)")
    assert ok


# -- 2 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_2_witness_dimension_and_degree(acceptance):
    rows, ok = [], True
    for case in REFERENCE_CASES:
        _, gb, method, elapsed = _witness_basis(case)
        if isinstance(gb, GroebnerTimeout):
            rows.append(f"{case.case_id}: timeout")
            ok = False
            continue
        summary = summarize(gb)
        good = (summary.zero_dimensional and case.expected_dim == 0
                and summary.degree == case.expected_degree and elapsed < WITNESS_SECONDS)
        ok &= good
        rows.append(f"{case.case_id}: deg {summary.degree}/{case.expected_degree} {elapsed:.1f}s {method}")
    acceptance(2, "PASS" if ok else "FAIL", f"8 witnesses, each < {WITNESS_SECONDS:.0f}s; " + "; ".join(rows))
    assert ok


# -- 3 -------------------------------------------------------------------------------

@pytest.mark.stretch
@pytest.mark.skipif(os.environ.get("RANKIDENT_STRETCH") != "1", reason="set RANKIDENT_STRETCH=1")
@pytest.mark.parametrize("case_id", ["pl-known-n4", "btl-known-n5"])
def test_criterion_3_parametric_bad_sets(case_id, acceptance):
    case = CASES[case_id]
    system = build_system(case.kind, case.n)
    start = time.monotonic()
    gb, method = compute_basis(system.generators, block_order("grevlex", "grevlex"),
                               Limits(max_seconds=STRETCH_SECONDS))
    elapsed = time.monotonic() - start
    if isinstance(gb, GroebnerTimeout):
        acceptance(3, "TIMEOUT", f"{case_id}: parametric basis stopped after {elapsed:.0f}s ({gb.reason})")
        return
    bad = extract_bad_set(gb)
    avoids = isinstance(avoids_bad_set(system.witness(case.params), bad), Avoids)
    acceptance(3, "PASS" if avoids else "FAIL",
               f"{case_id}: Bad set of {len(bad.render())} factors via {method} in {elapsed:.0f}s, "
               f"witness avoids it: {avoids}")
    assert avoids


# -- 4 -------------------------------------------------------------------------------

def test_criterion_4_templates_over_random_draws(acceptance):
    rng = random.Random(4)
    start = time.monotonic()
    ok, rows = True, []
    for case_id, kind, n in KINDS:
        system = build_system(kind, n)
        verified = redrawn = 0
        while verified < TEMPLATE_DRAWS:
            params = random_params(kind, n, rng)
            try:
                sols = known_solutions(kind, params)
            except DegenerateParameters:
                redrawn += 1
                continue
            instance = system.instantiate(params)
            ok &= all(verify_exact_solution(instance, s) for s in sols)
            if not kind.is_known:
                ok &= len(sols) == 2
            verified += 1
        rows.append(f"{case_id} {len(system.templates)} templates" + (f" ({redrawn} redrawn)" if redrawn else ""))
    elapsed = time.monotonic() - start
    ok &= elapsed < TEMPLATE_SECONDS
    acceptance(4, "PASS" if ok else "FAIL",
               f"{TEMPLATE_DRAWS} draws per kind in {elapsed:.1f}s (< {TEMPLATE_SECONDS:.0f}s); " + "; ".join(rows))
    assert ok


# -- 5 -------------------------------------------------------------------------------

def test_criterion_5_nonidentifiable_family(acceptance):
    kind = ModelKind.unknown("btl")
    start = time.monotonic()
    ok = True
    for n in (3, 5, 8):
        for t in (2, 3, mpq(7, 2)):
            first, second = nonidentifiable_family(n, t)
            ok &= first != second and first != second.swapped()
            ok &= eta(first, kind) == eta(second, kind)
    elapsed = time.monotonic() - start
    ok &= elapsed < NONIDENT_SECONDS
    acceptance(5, "PASS" if ok else "FAIL",
               f"n in (3, 5, 8) x t in (2, 3, 7/2): distinct parameters, equal choice probabilities, "
               f"{elapsed:.3f}s (< {NONIDENT_SECONDS}s)")
    assert ok


# -- 6 -------------------------------------------------------------------------------

def test_criterion_6_induction_audit(acceptance):
    start = time.monotonic()
    ok, rows = True, []
    for case_id, kind, _ in KINDS:
        report = induction_audit(kind, kind.min_n + 3, trials=AUDIT_TRIALS, seed=6)
        for n in range(kind.min_n + 1, kind.min_n + 4):
            failed = [f for f in report.failures if f.n == n]
            for f in failed:
                print(f"  audit failure {kind.label} n={f.n} trial={f.trial} {f.branch}: {f.reason} {f.params}")
            ok &= AUDIT_TRIALS - len(failed) >= AUDIT_MIN_SUCCESSES
        rows.append(f"{kind.label} {report.successes}/{report.attempted}")
    elapsed = time.monotonic() - start
    ok &= elapsed < AUDIT_SECONDS
    acceptance(6, "PASS" if ok else "FAIL",
               f">= {AUDIT_MIN_SUCCESSES}/{AUDIT_TRIALS} per n up to base+3, {elapsed:.1f}s "
               f"(< {AUDIT_SECONDS:.0f}s); " + "; ".join(rows))
    assert ok


# -- 7 -------------------------------------------------------------------------------

# Variable orders in which a lex basis of the witness system fits the term budget
# (the generator order, or p and the auxiliary variables ranked first).
LEX_ORDERS = {
    "btl-known-n5": "generator",
    "mnl3-known-n4": "generator",
    "mnl23-known-n3": "generator",
    "mnl23-unknown-n4": "reversed",
    "mnl3-unknown-n4": "p-aux-first",
}
LEX_PRIME = 2147483629
LEX_LIMITS = Limits(max_seconds=60, max_terms=3_000_000)


def _lex_ring_order(names, how):
    if how == "generator":
        return names
    if how == "reversed":
        return names[::-1]
    aux = [v for v in names if v[0] in "th"]
    return ("p", *aux, *[v for v in names if v[0] in "xy"])


def _check_spolys(rng):
    ring = Ring(("x", "y", "z"))
    for _ in range(300):
        f, g = random_poly(ring, rng, terms=4), random_poly(ring, rng, terms=4)
        if f.is_zero or g.is_zero:
            continue
        for order in (LEX, GREVLEX):
            s = s_polynomial(f, g, order)
            if s.is_zero:
                continue
            lcm = tuple(max(a, b) for a, b in zip(f.lm(order), g.lm(order)))
            if cmp_monomials(s.lm(order), lcm, order) != -1 or s_polynomial(g, f, order) != -s:
                return False
    return True


def _check_eta(rng):
    for family in FAMILIES:
        kind = ModelKind.unknown(family)
        for _ in range(30):
            n = rng.randint(3, 5)
            e = eta(random_params(kind, n, rng), kind)
            if any(e.pairwise[(i, j)] + e.pairwise[(j, i)] != 1 for i, j in e.pairwise):
                return False
            slates = {}
            for (i, j, k), v in e.triplet.items():
                key = tuple(sorted((i, j, k)))
                slates[key] = slates.get(key, 0) + v
            if any(total != 1 for total in slates.values()):
                return False
            if e.listwise and sum(e.listwise.values()) != 1:
                return False
            if e.top_two and sum(e.top_two.values()) != 1:
                return False
    return True


def _check_parser(rng):
    for family in FAMILIES:
        for kind in (ModelKind.unknown(family), ModelKind.known(family, "7/10")):
            sf = parse_system(system_to_text(build_system(kind, kind.min_n + 1)))
            if parse_system(render_system_file(sf)) != sf:
                return False
    alphabet = "xyt12 +-*/^()=:\n#eqsolvarpm"
    for _ in range(2000):
        text = "system: s\nparams: t\nvars: x1 x2\n" + "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        try:
            parse_system(text)
        except ParseError:
            pass
    for _ in range(500):
        try:
            parse_system(bytes(rng.randrange(256) for _ in range(rng.randint(0, 80))))
        except ParseError:
            pass
    return True


@pytest.mark.slow
def test_criterion_7_property_suites(acceptance):
    rng = random.Random(7)
    start = time.monotonic()
    checks = {"S-polynomials": _check_spolys(rng), "choice-probability identities": _check_eta(rng),
              "parser round-trip and fuzz": _check_parser(rng)}
    compared, skipped, same = [], [], True
    for case in REFERENCE_CASES:
        how = LEX_ORDERS.get(case.case_id)
        if how is None:
            skipped.append(case.case_id)
            continue
        instance = build_system(case.kind, case.n, instantiate_at=case.params)
        ring_order = _lex_ring_order(instance[0].ring.names, how)
        polys = permute_variables(instance, ring_order)
        lex = modular_groebner(polys, LEX, LEX_PRIME, LEX_LIMITS)
        grevlex = modular_groebner(polys, GREVLEX, LEX_PRIME, LEX_LIMITS)
        if isinstance(lex, GroebnerTimeout) or isinstance(grevlex, GroebnerTimeout):
            skipped.append(case.case_id)
            continue
        same &= summarize(lex).degree == summarize(grevlex).degree == case.expected_degree
        compared.append(case.case_id)
    checks["lex vs grevlex degree"] = same
    elapsed = time.monotonic() - start
    ok = all(checks.values()) and elapsed < PROPERTY_SECONDS
    status = "FAIL" if not ok else ("PARTIAL" if skipped else "PASS")
    acceptance(7, status,
               ", ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items())
               + f"; lex compared mod p on {len(compared)}/8 witnesses"
               + (f" (lex exceeds the term budget on {', '.join(skipped)})" if skipped else "")
               + f"; {elapsed:.1f}s (< {PROPERTY_SECONDS:.0f}s)")
    assert ok


# -- 8 (advisory) ----------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_8_numeric_cross_check(acceptance):
    rows, ok = [], True
    for case in REFERENCE_CASES:
        instance, gb, _, _ = _witness_basis(case)
        if isinstance(gb, GroebnerTimeout):
            rows.append(f"{case.case_id}: no basis")
            ok = False
            continue
        sols = solve_numeric(instance, SolveConfig(tolerance=RESIDUAL_TOL), gb=gb)
        worst = max(s.residual for s in sols)
        truths = known_solutions(case.kind, case.params)
        matched = all(any(all(abs(s.assignment[k] - float(v)) <= TEMPLATE_TOL for k, v in t.items()) for s in sols)
                      for t in truths)
        good = worst <= RESIDUAL_TOL and len(sols) == summarize(gb).degree and matched
        ok &= good
        rows.append(f"{case.case_id}: {len(sols)} pts, residual {worst:.1e}, templates {'matched' if matched else 'MISSED'}")
    acceptance(8, "PASS" if ok else "ADVISORY",
               f"residual <= {RESIDUAL_TOL:g}, template match <= {TEMPLATE_TOL:g}; " + "; ".join(rows))
