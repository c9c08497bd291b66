"""Command-line interface: ``rankident {gen,groebner,badset,certify,suite,solve}``.

Results go to stdout, diagnostics to stderr.  Exit codes: 0 success or a
passing verdict, 1 refuted, 2 inconclusive (including timeouts), 3 usage or
parse errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .certify import REFERENCE_CASES, CertifyConfig, certify, run_paper_suite
from .dsl import ParseError, parse_assignments, parse_system, system_to_text
from .groebner import GroebnerTimeout, Limits, extract_bad_set
from .modular import ENGINES, compute_basis
from .models import FAMILIES, ModelKind, ParametricSystem, build_system
from .polyarith import GREVLEX, LEX, Polynomial, RationalFunction, Ring, StructuralError, block_order, rat
from .variety import NumericSolveError, SolveConfig, solve_numeric

log = logging.getLogger("rankident")

EXIT_OK, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
TIMEOUT_ENV = "RANKIDENT_TIMEOUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; the contract here is 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_timeout() -> float | None:
    raw = os.environ.get(TIMEOUT_ENV)
    if not raw:
        return 300.0
    try:
        value = float(raw)
    except ValueError:
        raise UsageError(f"{TIMEOUT_ENV} must be a number of seconds, got {raw!r}") from None
    return value if value > 0 else None


def _timeout(args) -> float | None:
    return args.timeout if args.timeout is not None else _default_timeout()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_system(path: str) -> ParametricSystem:
    return parse_system(_read(path)).to_system()


def _write_report(path: str | None, text: str):
    if path is None:
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _order_for(name: str, system: ParametricSystem):
    if name == "lex":
        return LEX
    if name == "grevlex":
        return GREVLEX
    if not system.param_names:
        raise UsageError("block order needs a system with a params block")
    return block_order("grevlex", "grevlex")


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    kind = ModelKind.known(args.model, args.known_p) if args.known_p else ModelKind.unknown(args.model)
    system = build_system(kind, args.n, full=args.full)
    if args.params:
        values = parse_assignments(_read(args.params))
        system = _instantiate_file_system(system, values)
    sys.stdout.write(system_to_text(system))
    return EXIT_OK


def _instantiate_file_system(system: ParametricSystem, values) -> ParametricSystem:
    """Substitute every parameter; the result has an empty params block."""
    witness = system.witness(values)
    gens = tuple(g.evaluate(witness) for g in system.generators)
    ring = system.ring.restrict(system.var_names)
    gens = tuple(Polynomial(ring, {m[: ring.arity]: c for m, c in g.terms.items()}) for g in gens)
    templates = []
    for values_at in system.solutions_at(witness):
        templates.append({v: RationalFunction.of(Polynomial.constant(Ring(()), c)) for v, c in values_at.items()})
    return ParametricSystem(system.system_id + "-at-witness", ring, gens, system.expected_count,
                            tuple(templates), system.kind, system.n, {}, system.notes)


def cmd_groebner(args) -> int:
    system = _load_system(args.file)
    order = _order_for(args.order, system)
    gb, method = compute_basis(system.generators, order, Limits(max_seconds=_timeout(args)), args.engine)
    if isinstance(gb, GroebnerTimeout):
        print(f"groebner: stopped ({gb.reason})", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    log.info("basis of %d elements via %s", len(gb), method)
    for line in gb.render():
        print(line)
    return EXIT_OK


def cmd_badset(args) -> int:
    system = _load_system(args.file)
    if not system.param_names:
        raise UsageError("badset needs a system with a params block")
    gb, method = compute_basis(system.generators, block_order("grevlex", "grevlex"),
                               Limits(max_seconds=_timeout(args)), args.engine)
    if isinstance(gb, GroebnerTimeout):
        print(f"badset: parametric basis stopped ({gb.reason})", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    for line in extract_bad_set(gb).render():
        print(line)
    return EXIT_OK


def cmd_certify(args) -> int:
    system = _load_system(args.file)
    witness = parse_assignments(_read(args.witness))
    if args.expected is not None:
        system = ParametricSystem(system.system_id, system.ring, system.generators, args.expected,
                                  system.templates, system.kind, system.n, system.fixed, system.notes)
    elif not system.expected_count:
        raise UsageError("no expected count: pass --expected or add an 'expect:' line")
    timeout = _timeout(args)
    config = CertifyConfig(parametric_seconds=timeout, instance_seconds=timeout, engine=args.engine,
                           extra_draws=args.draws, seed=args.seed, parametric=not args.no_parametric)
    cert = certify(system, witness, config)
    text = cert.to_json(timings=args.timings)
    _write_report(args.report, text)
    a2 = cert.assumption2
    print(f"system: {cert.system_id}")
    print(f"templates verified: {cert.assumption1.templates_verified}/{cert.assumption1.template_count} "
          f"(witness + {cert.assumption1.draws} draws), distinct: {cert.assumption1.all_distinct}")
    if a2.parametric_status == "done":
        print(f"Bad set ({a2.bad_set_size}): " + ("; ".join(a2.bad_set) if a2.bad_set else "empty"))
        print(f"witness avoids Bad set: {a2.witness_avoids}")
    else:
        print(f"parametric stage: {a2.parametric_status}")
    if a2.instance_status == "done":
        print(f"zero-dimensional: {a2.zero_dimensional}, degree: {a2.degree}")
    print(f"verdict: {cert.verdict.label()}" + (f" [{cert.verdict.level} level]" if cert.verdict.level else ""))
    return cert.exit_code


def cmd_suite(args) -> int:
    if not args.paper:
        raise UsageError("suite currently needs --paper (the built-in reference witness cases)")
    timeout = _timeout(args)
    config = CertifyConfig(parametric_seconds=args.parametric_timeout, instance_seconds=timeout,
                           engine=args.engine, seed=args.seed, parametric=args.parametric_timeout > 0)
    report = run_paper_suite(config, REFERENCE_CASES, workers=args.workers)
    _write_report(args.report, report.to_json(timings=args.timings))
    for row in report.rows:
        exp, got = row.expected, row.computed
        print(f"{row.system_id:18s} expected (dim {exp['dim']}, deg {exp['degree']})  "
              f"computed (dim {got['dim']}, deg {got['degree']})  "
              f"{'match' if row.match else 'MISMATCH'}  {row.runtime:8.2f}s  {row.method}  "
              f"parametric: {row.parametric}")
    return EXIT_OK if report.all_match else EXIT_INCONCLUSIVE


def cmd_solve(args) -> int:
    system = _load_system(args.file)
    gens = list(system.generators)
    if system.param_names:
        if not args.witness:
            raise UsageError("the system has parameters; pass --witness FILE")
        gens = system.instantiate(parse_assignments(_read(args.witness)))
    try:
        sols = solve_numeric(gens, SolveConfig(tolerance=args.tol))
    except NumericSolveError as exc:
        print(f"solve: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    names = system.var_names
    for k, sol in enumerate(sols, start=1):
        coords = ", ".join(f"{v} = {_fmt_complex(sol.assignment[v])}" for v in names)
        print(f"[{k}] residual {sol.residual:.2e}: {coords}")
    return EXIT_OK


def _fmt_complex(z) -> str:
    if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)):
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}j"


# -- wiring ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankident", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def timeout_arg(p):
        p.add_argument("--timeout", type=float, default=None,
                       help=f"seconds per basis computation (default ${TIMEOUT_ENV} or 300)")

    def engine_arg(p):
        p.add_argument("--engine", choices=ENGINES, default="auto",
                       help="exact Buchberger over Q, the verified modular lift, or exact-then-lift")

    p = sub.add_parser("gen", help="emit the polynomial system of a mixture model as DSL")
    p.add_argument("--model", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True, help="number of items")
    p.add_argument("--known-p", type=rat, default=None, metavar="RAT", help="known mixing weight p1")
    p.add_argument("--params", metavar="FILE", help="assignment file; emit the system at these parameters")
    p.add_argument("--full", action="store_true", help="all equations instead of the minimal subset")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("groebner", help="print the reduced Gröbner basis of a DSL system")
    p.add_argument("file")
    p.add_argument("--order", choices=("lex", "grevlex", "block"), default="grevlex")
    timeout_arg(p)
    engine_arg(p)
    p.set_defaults(func=cmd_groebner)

    p = sub.add_parser("badset", help="print the Bad set of a parametric DSL system")
    p.add_argument("file")
    timeout_arg(p)
    engine_arg(p)
    p.set_defaults(func=cmd_badset)

    p = sub.add_parser("certify", help="certify generic identifiability at a witness point")
    p.add_argument("file")
    p.add_argument("--witness", required=True, metavar="FILE")
    p.add_argument("--expected", type=int, default=None, metavar="L", help="expected number of solutions")
    p.add_argument("--report", metavar="OUT.json")
    p.add_argument("--seed", type=int, default=0, help="seed for the template draws")
    p.add_argument("--draws", type=int, default=20, help="extra random template draws")
    p.add_argument("--no-parametric", action="store_true", help="skip the Bad-set stage")
    p.add_argument("--timings", action="store_true", help="include wall-clock times in the report")
    timeout_arg(p)
    engine_arg(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("suite", help="run the built-in reference witness cases")
    p.add_argument("--paper", action="store_true", help="the reference witness cases (required)")
    p.add_argument("--report", metavar="OUT.json")
    p.add_argument("--parametric-timeout", type=float, default=60.0,
                   help="seconds for each Bad-set attempt (0 skips them)")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timings", action="store_true")
    timeout_arg(p)
    engine_arg(p)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("solve", help="numerically solve an instantiated system")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--witness", metavar="FILE", help="parameter values for a parametric file")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except (UsageError, StructuralError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


def cli_main(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
