import random

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from rankident import groebner as gbm
from rankident.groebner import GroebnerTimeout, Limits
from rankident.modular import (
    DEFAULT_PRIMES_FROM,
    ENGINES,
    compute_basis,
    lift_is_verified,
    modular_groebner,
    multimodular_groebner,
    rational_reconstruction,
)
from rankident.models import ModelKind, MixtureParams, build_system
from rankident.polyarith import GREVLEX, LEX, Polynomial, Ring, block_order

from conftest import random_poly

P = 2147483647  # 2^31 - 1


@given(st.integers(-10 ** 4, 10 ** 4), st.integers(1, 10 ** 4))
def test_rational_reconstruction_roundtrip(num, den):
    value = mpq(num, den)
    image = int(value.numerator) * pow(int(value.denominator), -1, P) % P
    assert rational_reconstruction(image, P) == value


@given(st.integers(0, 10 ** 6))
def test_rational_reconstruction_is_consistent(a):
    modulus = 1000003
    value = rational_reconstruction(a, modulus)
    if value is None:
        return
    bound = (modulus // 2) ** 0.5
    assert abs(value.numerator) <= bound and value.denominator <= bound
    assert (int(value.numerator) - a * int(value.denominator)) % modulus == 0


def _system(seed, coeff_bound=5):
    rng = random.Random(seed)
    R = Ring(("x", "y", "z"))
    return [p for p in (random_poly(R, rng, terms=3, max_exp=2, bound=coeff_bound) for _ in range(3))
            if not p.is_zero]


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("order", [GREVLEX, LEX], ids=["grevlex", "lex"])
def test_modular_engine_matches_reference_mod_p(seed, order):
    gens = _system(seed)
    fast = modular_groebner(gens, order, P, Limits(max_seconds=30))
    slow = gbm.groebner(gens, order, Limits(max_seconds=30), modulus=P)
    if isinstance(fast, GroebnerTimeout) or isinstance(slow, GroebnerTimeout):
        pytest.skip("too slow for a unit test")
    assert fast.modulus == P
    assert set(fast) == set(slow)


@pytest.mark.parametrize("seed", range(8))
def test_multimodular_lift_equals_exact(seed):
    gens = _system(seed, coeff_bound=10 ** 6)
    exact = gbm.groebner(gens, GREVLEX, Limits(max_seconds=30))
    if isinstance(exact, GroebnerTimeout):
        pytest.skip("too slow for a unit test")
    lifted, report = multimodular_groebner(gens, GREVLEX, Limits(max_seconds=60))
    assert not isinstance(lifted, GroebnerTimeout)
    assert set(lifted) == set(exact)
    assert report.primes_used and all(p < DEFAULT_PRIMES_FROM for p in report.primes_used)


def test_lift_needs_several_primes_for_large_coefficients():
    R = Ring(("x", "y"))
    x, y = R.gens()
    big = mpq(10 ** 30 + 7, 3 ** 40)
    gens = [x - big, y ** 2 - x * y + mpq(1, 10 ** 25)]
    lifted, report = multimodular_groebner(gens, LEX)
    assert len(report.primes_used) >= 3
    assert set(lifted) == set(gbm.groebner(gens, LEX))


def test_lift_verification_rejects_wrong_candidate():
    R = Ring(("x", "y"))
    x, y = R.gens()
    gens = [x ** 2 - 2, y - x]
    good = list(gbm.groebner(gens, LEX))
    assert lift_is_verified(good, gens, LEX)
    assert not lift_is_verified([x ** 2 - 3, y - x], gens, LEX)
    # a Groebner basis of a smaller ideal: y - x does not reduce to zero
    assert not lift_is_verified([x ** 2 - 2, x * y - 2, y ** 2 - 2], gens, LEX)


def test_block_orders_supported():
    R = Ring.blocks(["x1", "x2"], ["t"])
    x1, x2, t = R.gens()
    gens = [x1 * x2 - 2, t * x1 * x2 + x1 - 1]
    lifted, _ = multimodular_groebner(gens, block_order())
    assert set(lifted) == set(gbm.groebner(gens, block_order()))


@pytest.mark.parametrize("engine", ENGINES)
def test_compute_basis_engines_agree(engine):
    kind = ModelKind.known("mnl3", "3/10")
    params = MixtureParams((1, 2, 3, 4), (1, 5, 4, 2), "3/10")
    gens = build_system(kind, 4, instantiate_at=params)
    gb, method = compute_basis(gens, GREVLEX, Limits(max_seconds=120), engine)
    assert method == ("modular-lift" if engine == "modular" else "exact")
    reference = gbm.groebner(gens, GREVLEX)
    assert set(gb) == set(reference)


def test_compute_basis_rejects_unknown_engine():
    R = Ring(("x",))
    with pytest.raises(ValueError):
        compute_basis([R.var("x")], LEX, engine="f4")


def test_modular_term_limit_stops_run():
    R = Ring(("x", "y", "z"))
    x, y, z = R.gens()
    gens = [x ** 3 + y * z - 1, y ** 3 + x * z - 2, z ** 3 + x * y - 3]
    res = modular_groebner(gens, LEX, P, Limits(max_terms=10))
    assert isinstance(res, GroebnerTimeout) and "max_terms" in res.reason
    lifted, _ = multimodular_groebner(gens, LEX, Limits(max_terms=10))
    assert isinstance(lifted, GroebnerTimeout)
