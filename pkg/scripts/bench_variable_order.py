"""Time one modular grevlex basis per reference witness in several variable orders.

Dimension and degree do not depend on the variable order, but run time does;
this is the measurement behind ranking the auxiliary variables first.
Usage: python scripts/bench_variable_order.py [--seconds 300] [CASE_ID ...]
"""

import argparse
import time

from rankident.certify import REFERENCE_CASES
from rankident.groebner import GroebnerTimeout, Limits
from rankident.models import build_system
from rankident.modular import modular_groebner
from rankident.polyarith import GREVLEX
from rankident.variety import permute_variables, summarize

PRIME = 2147483629


def orders(names):
    aux = [v for v in names if v[0] in "th"]
    rest = [v for v in names if v not in aux]
    yield "generator", names
    yield "reversed", names[::-1]
    yield "aux-first", tuple(aux + rest)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("cases", nargs="*")
    parser.add_argument("--seconds", type=float, default=300.0)
    args = parser.parse_args()
    for case in REFERENCE_CASES:
        if args.cases and case.case_id not in args.cases:
            continue
        instance = build_system(case.kind, case.n, instantiate_at=case.params)
        for label, names in orders(instance[0].ring.names):
            start = time.monotonic()
            gb = modular_groebner(permute_variables(instance, names), GREVLEX, PRIME,
                                  Limits(max_seconds=args.seconds))
            outcome = gb.reason if isinstance(gb, GroebnerTimeout) else f"degree {summarize(gb).degree}"
            print(f"{case.case_id:18s} {label:10s} {outcome:28s} {time.monotonic() - start:8.1f}s", flush=True)


if __name__ == "__main__":
    main()
