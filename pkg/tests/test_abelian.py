import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from abelia import fixtures as fx
from abelia.abelian import (AbelianGroup, Character, EmbeddingTriple, GroupMap, all_characters,
                            brute_force_embeddings, build_master_embedding, character_function,
                            enumerate_group_embeddings, finitize_circle_embedding, groups_of_order,
                            groups_up_to, injective_homomorphisms, is_linear_reduction, is_saturated,
                            solve_integer_embeddings)
from abelia.dist_core import TripleDistribution
from abelia.errors import ArgumentError, ResourceError, SearchFailure

from conftest import dists

Z = AbelianGroup.from_orders


def test_group_normalization_and_counts():
    assert Z([6]).factors == (2, 3)
    assert Z([4, 2]).factors == (2, 4)
    with pytest.raises(ArgumentError):
        AbelianGroup((6,))
    # number of Abelian groups of order n = product of partition numbers of the exponents
    assert [len(groups_of_order(n)) for n in (1, 2, 4, 8, 12, 16)] == [1, 1, 2, 3, 2, 5]
    assert sum(len(groups_of_order(n)) for n in range(1, 7)) == len(groups_up_to(6))


@given(st.sampled_from([(2,), (3,), (2, 2), (4,), (2, 3)]), st.data())
def test_characters_are_homomorphisms(orders, data):
    H = Z(orders)
    chis = all_characters(H)
    assert len(chis) == H.order
    chi = data.draw(st.sampled_from(chis))
    a, b = (data.draw(st.sampled_from(H.elements())) for _ in range(2))
    assert abs(chi(H.add(a, b)) - chi(a) * chi(b)) < 1e-12
    assert abs(abs(chi(a)) - 1) < 1e-12


def test_character_orthogonality():
    H = Z([2, 3])
    for c1, c2 in itertools.product(all_characters(H), repeat=2):
        s = sum(c1(a) * c2(a).conjugate() for a in H.elements()) / H.order
        assert abs(s - (c1 == c2)) < 1e-12


def test_character_function_values():
    H = Z([3])
    sig = GroupMap(H, {"a": (0,), "b": (1,), "c": (2,)})
    v = character_function(Character(H, (1,)), sig)
    assert abs(v[1] - complex(-0.5, math.sqrt(3) / 2)) < 1e-12


def test_integer_embedding_examples():
    assert solve_integer_embeddings(fx.cyclic_equation(3)).trivial_only
    rep = solve_integer_embeddings(fx.three_atom())
    assert not rep.trivial_only
    b = rep.basis[0]
    pattern = (b.sigma["1"], b.gamma["1"], b.phi["1"])
    assert pattern in {(1, -1, -1), (-1, 1, 1)}
    assert solve_integer_embeddings(fx.full_support(2)).trivial_only


def test_enumeration_examples():
    d = fx.cyclic_equation(3)
    es = enumerate_group_embeddings(d, Z([3]))
    assert len(es) == 3
    for e in es:
        c = e.sigma("1")[0]
        assert all(e.sigma(str(k)) == ((c * k) % 3,) for k in range(3))
        assert all(e.gamma(str(k)) == ((c * k) % 3,) for k in range(3))
    triv = enumerate_group_embeddings(d, AbelianGroup.trivial())
    assert len(triv) == 1 and triv[0].is_trivial
    assert all(e.is_trivial for e in enumerate_group_embeddings(fx.full_support(2), Z([2])))


def test_enumeration_budget():
    with pytest.raises(ResourceError):
        enumerate_group_embeddings(fx.three_atom(), Z([2, 2]), budget=1)


@given(dists, st.sampled_from([(2,), (3,), (4,), (2, 2)]))
def test_enumeration_matches_brute_force(d, orders):
    H = Z(orders)
    fast = enumerate_group_embeddings(d, H)
    assert {e.key() for e in fast} == {e.key() for e in brute_force_embeddings(d, H)}
    assert all(e.is_valid(d) for e in fast)
    assert fast[0].is_trivial


def _scaled(e, H, k):
    return EmbeddingTriple(*(GroupMap(H, {s: (k * m(s)[0],) for s in m.domain}) for m in e.maps))


def test_linear_reduction_examples():
    d = fx.three_atom()
    e2 = next(e for e in enumerate_group_embeddings(d, Z([2])) if not e.is_trivial)
    e4 = _scaled(e2, Z([4]), 2)
    assert e4.is_valid(d)
    assert is_linear_reduction(e2, e4)
    assert not is_linear_reduction(e4, e2)
    assert is_linear_reduction(e2, e2)
    c = fx.cyclic_equation(3)
    e3 = enumerate_group_embeddings(c, Z([3]))
    assert not is_linear_reduction(e3[1], e3[0])


def test_injective_homomorphisms_count():
    # injective maps Z2 → Z2×Z2 pick any of 3 nonzero elements
    assert len(injective_homomorphisms(Z([2]), Z([2, 2]))) == 3
    assert injective_homomorphisms(Z([4]), Z([2, 2])) == ()


def test_master_examples():
    m = build_master_embedding(fx.cyclic_equation(3), 6)
    assert len(m.components) == 1 and m.components[0].group.factors == (3,)
    assert is_saturated(m).overall and m.verify_master
    assert build_master_embedding(fx.full_support(2), 8).is_trivial
    m3 = build_master_embedding(fx.three_atom(), 4)
    assert {c.group.factors for c in m3.components} == {(2,), (3,), (4,)}


def test_saturation_predicate():
    m = build_master_embedding(fx.partial_image(), 6)
    assert not is_saturated(m).overall
    assert is_saturated(build_master_embedding(fx.full_support(2), 4)).overall


@given(dists)
def test_master_components_are_valid_and_capture(d):
    m = build_master_embedding(d, 6)
    assert m.verify_master
    assert all(c.is_valid(d) for c in m.components)
    assert m.bundle.is_valid(d)
    for c in m.components:
        for mp in c.maps:
            assert c.group.zero in mp.image


def test_finitize_examples():
    d = fx.cyclic_equation(3)
    thirds = {str(k): k / 3 for k in range(3)}
    e = finitize_circle_embedding(d, thirds, thirds, thirds)
    assert e.group.factors == (3,) and e.is_valid(d)
    zero = {str(k): 0.0 for k in range(3)}
    e0 = finitize_circle_embedding(d, zero, zero, zero)
    assert e0.group.order == 1 and e0.is_trivial
    noisy = {str(k): k / 3 + 1e-9 * (-1) ** k for k in range(3)}
    e = finitize_circle_embedding(d, noisy, noisy, noisy, tol=1e-6)
    assert e.group.factors == (3,) and e.is_valid(d)
    assert len(e.sigma.image) == 3


def test_finitize_search_failure():
    d = fx.cyclic_equation(3)
    thirds = {str(k): k / 3 for k in range(3)}
    with pytest.raises(SearchFailure):
        finitize_circle_embedding(d, thirds, thirds, thirds, max_q=2)
    bad = {str(k): 0.1 for k in range(3)}
    with pytest.raises(ArgumentError):
        finitize_circle_embedding(d, bad, bad, bad)
