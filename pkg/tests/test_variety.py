import random

import pytest
from gmpy2 import mpq

from rankident.groebner import GroebnerTimeout, Limits, groebner
from rankident.models import MixtureParams, ModelKind, build_system, known_solutions
from rankident.polyarith import GREVLEX, LEX, Ring, StructuralError, block_order
from rankident.variety import (
    SolveConfig,
    NumericSolveError,
    degree,
    instance_basis,
    permute_variables,
    is_zero_dimensional,
    reverse_variables,
    solve_numeric,
    standard_monomials,
    summarize,
    verify_exact_solution,
)

R = Ring(("x", "y"))
x, y = R.gens()


def test_point_ideal_is_zero_dimensional():
    assert is_zero_dimensional(groebner([x - 1, y - 2], GREVLEX))


def test_union_of_lines_is_not():
    gb = groebner([x * y], GREVLEX)
    assert not is_zero_dimensional(gb)
    with pytest.raises(StructuralError):
        degree(gb)
    assert summarize(gb).degree is None


def test_double_root():
    (u,) = Ring(("u",)).gens()
    assert degree(groebner([u ** 2], GREVLEX)) == 2


@pytest.mark.parametrize("k", range(1, 6))
def test_multiplicity(k):
    (u,) = Ring(("u",)).gens()
    assert degree(groebner([u ** k], LEX)) == k


def test_parametric_ring_rejected():
    Rp = Ring.blocks(["x"], ["t"])
    xp, t = Rp.gens()
    with pytest.raises(StructuralError):
        is_zero_dimensional(groebner([xp - t], block_order()))


def test_standard_monomials_staircase():
    gb = groebner([x ** 2, y ** 2, x * y], GREVLEX)
    assert sorted(standard_monomials(gb)) == [(0, 0), (0, 1), (1, 0)]


def test_unit_ideal_has_degree_zero():
    assert degree(groebner([x, x - 1], GREVLEX)) == 0


def test_degree_is_order_invariant(rng):
    for _ in range(10):
        a, b = rng.randint(1, 5), rng.randint(-5, 5)
        gens = [x ** 2 + a * y - 3, y ** 2 - b * x + 1]
        assert degree(groebner(gens, LEX)) == degree(groebner(gens, GREVLEX))


def test_reversed_ring_keeps_degree():
    gens = [x ** 3 - y, y ** 2 - x + 1]
    rev = reverse_variables(gens)
    assert rev[0].ring.names == ("y", "x")
    assert degree(groebner(rev, GREVLEX)) == degree(groebner(gens, GREVLEX)) == 6


def test_instance_basis_on_witness():
    kind = ModelKind.known("mnl23", "7/10")
    params = MixtureParams((1, 2, 3), (1, 5, 4), "7/10")
    gb, method = instance_basis(build_system(kind, 3, instantiate_at=params), Limits(max_seconds=60))
    assert method == "exact" and summarize(gb).degree == 1


# -- exact and numeric solutions -------------------------------------------------------

def test_verify_btl_unknown_templates():
    kind = ModelKind.unknown("btl")
    params = MixtureParams((1, 2, 3, 4, 5), (1, 8, 9, 3, 2), "3/10")
    system = build_system(kind, 5)
    instance = system.instantiate(params)
    identity, swap = known_solutions(kind, params)
    assert identity["t23"] == 1 / (params.a[1] + params.a[2])
    assert swap["p"] == 1 - params.p1
    assert verify_exact_solution(instance, identity)
    assert verify_exact_solution(instance, swap)
    rng = random.Random(0)
    point = {v: mpq(rng.randint(1, 99), rng.randint(1, 99)) for v in system.var_names}
    assert not verify_exact_solution(instance, point)
    with pytest.raises(StructuralError):
        verify_exact_solution(instance, {"x1": 1})


def test_solve_numeric_hand_example():
    sols = solve_numeric([x ** 2 - 1, y - x])
    pts = sorted((round(s.assignment["x"].real), round(s.assignment["y"].real)) for s in sols)
    assert pts == [(-1, -1), (1, 1)]
    assert all(s.residual <= 1e-9 for s in sols)


def test_solve_numeric_counts_distinct_points():
    sols = solve_numeric([x ** 2 - 2 * x + 1, y ** 2 - 4])
    assert len(sols) == 2  # x = 1 is a double root


def test_solve_numeric_positive_dimensional():
    with pytest.raises(NumericSolveError):
        solve_numeric([x * y])


def test_solve_numeric_matches_templates():
    kind = ModelKind.unknown("mnl23")
    params = MixtureParams((1, 2, 3, 4), (1, 5, 4, 2), "7/10")
    instance = build_system(kind, 4, instantiate_at=params)
    gb, _ = instance_basis(instance, Limits(max_seconds=120))
    assert not isinstance(gb, GroebnerTimeout)
    sols = solve_numeric(instance, SolveConfig(), gb=gb)
    truths = known_solutions(kind, params)
    assert len(sols) == len(truths) == degree(gb)
    for truth in truths:
        assert any(all(abs(s.assignment[k] - float(v)) < 1e-7 for k, v in truth.items()) for s in sols)


def test_permute_variables():
    gens = [x ** 2 - y, y ** 3 - 1]
    perm = permute_variables(gens, ("y", "x"))
    assert perm == reverse_variables(gens)
    assert perm[0].evaluate({"x": 2, "y": 4}) == 0
    assert degree(groebner(perm, LEX)) == degree(groebner(gens, LEX)) == 6
    with pytest.raises(StructuralError):
        permute_variables(gens, ("x", "z"))
