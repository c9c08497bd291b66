import random

import pytest
from gmpy2 import mpq
from hypothesis import settings

from rankident.polyarith import Polynomial, Ring

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

DATA = __import__("pathlib").Path(__file__).parent / "data"


def random_poly(ring: Ring, rng: random.Random, terms: int = 3, max_exp: int = 2, bound: int = 5) -> Polynomial:
    out = {}
    for _ in range(terms):
        m = tuple(rng.randint(0, max_exp) for _ in range(ring.arity))
        out[m] = mpq(rng.randint(-bound, bound), rng.randint(1, 3))
    return Polynomial(ring, out)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def xyz():
    return Ring(("x", "y", "z"))


@pytest.fixture
def toy_text():
    return (DATA / "toy.sys").read_text()


# -- acceptance report -----------------------------------------------------------------
# Each acceptance criterion records one line; they are printed together at the end of the run.

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    def record(number: int, status: str, detail: str):
        line = f"criterion {number}: {status:8s} {detail}"
        _ACCEPTANCE.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
