"""Attempt the parametric Bad sets of the larger reference systems under a time ceiling.

Usage: python scripts/stretch_badsets.py [--seconds 1800] [--out stretch.json] [CASE_ID ...]
A run that hits the ceiling is reported as a timeout, not as a failure.
"""

import argparse
import json
import logging
import time

from rankident.certify import REFERENCE_CASES
from rankident.groebner import Avoids, GroebnerTimeout, Limits, avoids_bad_set, extract_bad_set
from rankident.models import build_system
from rankident.modular import ENGINES, compute_basis
from rankident.polyarith import block_order

DEFAULT_CASES = ("pl-known-n4", "btl-known-n5")


def attempt(case, seconds: float, engine: str) -> dict:
    system = build_system(case.kind, case.n)
    start = time.monotonic()
    gb, method = compute_basis(system.generators, block_order("grevlex", "grevlex"),
                               Limits(max_seconds=seconds), engine)
    row = {"case": case.case_id, "method": method, "seconds": round(time.monotonic() - start, 1)}
    if isinstance(gb, GroebnerTimeout):
        row.update(status="timeout", reason=gb.reason, partial_size=len(gb.partial))
        return row
    bad = extract_bad_set(gb)
    row.update(status="done", basis_size=len(gb), bad_set=bad.render(),
               witness_avoids=isinstance(avoids_bad_set(system.witness(case.params), bad), Avoids))
    return row


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("cases", nargs="*", default=list(DEFAULT_CASES))
    parser.add_argument("--seconds", type=float, default=1800.0)
    parser.add_argument("--engine", choices=ENGINES, default="auto")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s: %(message)s")
    by_id = {c.case_id: c for c in REFERENCE_CASES}
    rows = []
    for case_id in args.cases:
        row = attempt(by_id[case_id], args.seconds, args.engine)
        print(json.dumps(row), flush=True)
        rows.append(row)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
