import random

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from rankident.models import (
    FAMILIES,
    DegenerateParameters,
    MixtureParams,
    ModelKind,
    build_system,
    eta,
    induction_step_matrix,
    known_solutions,
    nonidentifiable_family,
    pl_top_two,
    random_params,
)
from rankident.polyarith import StructuralError
from rankident.variety import verify_exact_solution

KINDS = [ModelKind.known(f, p) for f, p in (("btl", "7/10"), ("mnl3", "3/10"), ("mnl23", "7/10"), ("pl", "7/10"))]
KINDS += [ModelKind.unknown(f) for f in FAMILIES]
KIND_IDS = [k.label for k in KINDS]


def _check_eta_identities(e, n):
    for v in list(e.pairwise.values()) + list(e.triplet.values()) + list(e.top_two.values()):
        assert 0 < v < 1
    for (i, j), v in e.pairwise.items():
        assert v + e.pairwise[(j, i)] == 1
    for (i, j, k), v in e.triplet.items():
        a, b = sorted((i, k)), sorted((i, j))
        assert v + e.triplet[(j, *a)] + e.triplet[(k, *b)] == 1
    if e.listwise:
        assert sum(e.listwise.values()) == 1
    if e.top_two:
        assert sum(e.top_two.values()) == 1


# -- eta -----------------------------------------------------------------------

def test_equal_components_collapse():
    a = (1, 3, mpq(1, 2))
    e = eta(MixtureParams(a, a, "1/3"), ModelKind.unknown("btl"))
    for (i, j), v in e.pairwise.items():
        assert v == mpq(a[i - 1]) / (a[i - 1] + a[j - 1])


def test_pairwise_hand_value():
    e = eta(MixtureParams((1, 2), (1, 8), "1/2"), ModelKind.unknown("btl"))
    assert e.pairwise[(1, 2)] == mpq(2, 9)


def test_pl_top_two_formula():
    theta = (mpq(1, 10), mpq(2, 10), mpq(3, 10), mpq(4, 10))
    assert pl_top_two(theta, 2, 3) == theta[2] * theta[3] / (1 - theta[2])
    e = eta(MixtureParams(theta, theta, "7/10"), ModelKind.known("pl", "7/10"))
    first_then_second = sum(v for perm, v in e.listwise.items() if perm[:2] == (3, 4))
    assert e.top_two[(3, 4)] == first_then_second


def test_invalid_normalization_rejected():
    with pytest.raises(StructuralError):
        eta(MixtureParams((2, 1, 1), (1, 1, 1), "1/3"), ModelKind.unknown("btl"))
    with pytest.raises(StructuralError):
        eta(MixtureParams((1, 1, 1), (1, 1, 1), "1/3"), ModelKind.unknown("pl"))


@pytest.mark.parametrize("kind", KINDS, ids=KIND_IDS)
def test_eta_normalization_on_random_draws(kind):
    rng = random.Random(7)
    for _ in range(200 // len(KINDS) + 1):
        params = random_params(kind, kind.min_n, rng)
        _check_eta_identities(eta(params, kind), params.n)


@given(st.integers(1, 50), st.integers(1, 50), st.integers(0, 10 ** 6))
def test_scaling_invariance(num, den, seed):
    kind = ModelKind.unknown("mnl23")
    params = random_params(kind, 4, random.Random(seed))
    c = mpq(num, den)
    scaled = tuple(v * c for v in params.a)
    renormalized = MixtureParams(tuple(v / scaled[0] for v in scaled), params.b, params.p1)
    assert eta(renormalized, kind) == eta(params, kind)


@pytest.mark.parametrize("family", FAMILIES)
def test_swap_symmetry(family):
    kind = ModelKind.unknown(family)
    rng = random.Random(11)
    for _ in range(10):
        params = random_params(kind, kind.min_n, rng)
        assert eta(params, kind) == eta(params.swapped(), kind)


# -- systems ---------------------------------------------------------------------

def test_btl_unknown_structure():
    system = build_system(ModelKind.unknown("btl"), 5)
    aux = [v for v in system.var_names if v[0] in "th"]
    assert sorted(aux) == ["h15", "h23", "t23"]
    assert system.expected_count == 2
    assert "p" in system.var_names and "p1" in system.param_names


@pytest.mark.parametrize("kind,count", [(ModelKind.known("btl", "7/10"), 3), (ModelKind.known("pl", "7/10"), 1),
                                        (ModelKind.known("mnl3", "3/10"), 1), (ModelKind.unknown("pl"), 2),
                                        (ModelKind.known("mnl3", "1/2"), 2), (ModelKind.known("btl", "1/2"), 4)])
def test_expected_counts(kind, count):
    # a uniform weight adds the component swap; the BTL relaxation adds two padded solutions
    assert build_system(kind, kind.min_n).expected_count == count


@pytest.mark.parametrize("kind", KINDS, ids=KIND_IDS)
def test_below_minimum_rejected(kind):
    with pytest.raises(StructuralError, match="needs n >="):
        build_system(kind, kind.min_n - 1)


@pytest.mark.parametrize("kind", KINDS, ids=KIND_IDS)
def test_generators_grouped_by_x_have_t_coefficients(kind):
    system = build_system(kind, kind.min_n)
    for g in system.generators:
        for coeff in g.coefficients_in_x().values():
            assert coeff.ring.names == system.param_names


@pytest.mark.parametrize("kind", KINDS, ids=KIND_IDS)
def test_instantiated_primary_template_vanishes(kind):
    rng = random.Random(5)
    for _ in range(10):
        params = random_params(kind, kind.min_n, rng)
        instance = build_system(kind, kind.min_n, instantiate_at=params)
        sols = known_solutions(kind, params)
        assert verify_exact_solution(instance, sols[0])


def test_full_systems_keep_solutions():
    kind = ModelKind.unknown("mnl3")
    params = random_params(kind, 4, random.Random(2))
    full = build_system(kind, 4, full=True)
    assert len(full.generators) > len(build_system(kind, 4).generators)
    for sol in full.solutions_at(params):
        assert verify_exact_solution(full.instantiate(params), sol)


# -- known solutions --------------------------------------------------------------

def test_btl_unknown_identity_and_swap():
    params = MixtureParams((1, 2, 3, 4, 5), (1, 8, 9, 3, 2), "3/10")
    sols = known_solutions(ModelKind.unknown("btl"), params)
    assert len(sols) == 2
    assert [sols[0][f"x{i}"] for i in range(1, 6)] == list(params.a) and sols[0]["p"] == params.p1
    assert [sols[1][f"x{i}"] for i in range(1, 6)] == list(params.b) and sols[1]["p"] == 1 - params.p1


def test_btl_known_relaxation_has_three_solutions():
    params = MixtureParams((1, 2, 3, 4, 5), (1, 8, 9, 3, 2), "7/10")
    sols = known_solutions(ModelKind.known("btl", "7/10"), params)
    assert len(sols) == 3
    # the two extra solutions put zeros on one component
    assert all(s["x2"] == 0 for s in sols[1:2]) and all(s["y2"] == 0 for s in sols[2:3])


def test_unknown_weight_half_is_degenerate():
    params = MixtureParams((1, 2, 3, 4, 5), (1, 8, 9, 3, 2), "1/2")
    with pytest.raises(DegenerateParameters):
        known_solutions(ModelKind.unknown("btl"), params)


# -- induction steps --------------------------------------------------------------

def test_btl_known_step_recovers_truth():
    kind = ModelKind.known("btl", "7/10")
    rng = random.Random(3)
    for _ in range(20):
        params = random_params(kind, 6, rng)
        step = induction_step_matrix(kind, params, 6)
        assert not step.degenerate
        assert step.solve() == (params.a[5], params.b[5])


def test_pl_unknown_swapped_branch():
    kind = ModelKind.unknown("pl")
    params = random_params(kind, 6, random.Random(4))
    step = induction_step_matrix(kind, params, 6, branch="swapped")
    assert step.consistent and step.solve() == (params.b[5], params.a[5])


def test_pl_equal_components_flagged():
    kind = ModelKind.unknown("pl")
    theta = (mpq(1, 15), mpq(2, 15), mpq(3, 15), mpq(4, 15), mpq(5, 15))
    step = induction_step_matrix(kind, MixtureParams(theta, theta, "7/10"), 5)
    assert step.degenerate
    with pytest.raises(DegenerateParameters):
        step.solve()


def test_induction_rejects_base_case():
    kind = ModelKind.known("btl", "7/10")
    params = random_params(kind, 6, random.Random(1))
    with pytest.raises(StructuralError):
        induction_step_matrix(kind, params, 5)
    with pytest.raises(StructuralError):
        induction_step_matrix(kind, params, 6, branch="swapped")


# -- non-identifiable family --------------------------------------------------------

@pytest.mark.parametrize("n,t", [(3, 2), (5, 3)])
def test_nonidentifiable_pairs(n, t):
    first, second = nonidentifiable_family(n, t)
    kind = ModelKind.unknown("btl")
    assert first != second
    assert eta(first, kind).pairwise == eta(second, kind).pairwise


def test_nonidentifiable_rejects_t_one():
    with pytest.raises(StructuralError):
        nonidentifiable_family(3, 1)
