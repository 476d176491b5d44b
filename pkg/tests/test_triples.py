from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwscheme import triples
from pwscheme.parameters import expected_parameters, krein_zero_triples
from pwscheme.pipeline import lemma2_relations, lemma2_space

label = triples.parse_label


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_label_round_trip(l, m, n):
    idx = triples.unknown_index(l, m, n)
    assert idx == (l - 1) * 16 + (m - 1) * 4 + (n - 1)
    assert triples.unknown_label(idx) == f"[{l} {m} {n}]"
    assert label(f"[{l} {m} {n}]") == idx


def test_class_out_of_range():
    with pytest.raises(ValueError):
        triples.build_system(expected_parameters(3).p, 3, 5, 3)


def test_krein_rows_need_Q():
    with pytest.raises(ValueError):
        triples.build_system(expected_parameters(3).p, 3, 3, 3, krein=True)


def test_row_counts():
    par = expected_parameters(5)
    system = triples.build_system(par.p, 3, 3, 3, symmetry=True, krein=True, Q=par.Q,
                                  krein_triples=krein_zero_triples())
    assert system.count("sum") == 48
    assert system.count("krein") == len(krein_zero_triples()) == 22
    assert system.n_unknowns == 64


@pytest.mark.parametrize("r", [5, 7, 11])
def test_relations_before_pairing(r):
    par = expected_parameters(r)
    space, prop = lemma2_space(par.p, par.Q)
    assert space.dimension == 4
    before = prop.space_before("pair")
    assert before.dimension == 1
    assert all(lemma2_relations(before).values())
    # the relations are not trivial: [1 3 1] still varies on this space
    assert label("[1 3 1]") not in before.pinned


@pytest.mark.parametrize("r", [3, 5, 7, 11])
def test_propagation_pins_zero(r):
    par = expected_parameters(r)
    _, prop = lemma2_space(par.p, par.Q)
    final = prop.space.pinned
    assert final[label("[1 3 3]")] == 0
    assert final[label("[2 3 3]")] == 0
    assert all(v >= 0 for v in final.values())


def test_degenerate_r3_pins_in_sign_stage():
    par = expected_parameters(3)
    _, prop = lemma2_space(par.p, par.Q)
    first_rule, first = prop.stages[0]
    assert first_rule == "sign"
    assert {label("[1 3 3]"), label("[2 3 3]")} <= set(first)


def test_final_space_is_bruteforce_profile(lab3):
    _, prop = lemma2_space(lab3.p, lab3.params.Q)
    profiles, _, total = triples.bruteforce_profiles(lab3.scheme, 3, 3, 3)
    assert total == 1440 and len(profiles) == 1
    assert prop.space.dimension == 0
    assert prop.space.particular == triples.as_unknown_vector(profiles[0])


@pytest.mark.parametrize("abc", [(1, 1, 2), (1, 3, 2), (2, 2, 2), (2, 3, 1), (3, 3, 3), (1, 2, 3)])
def test_bruteforce_satisfies_every_row(lab3, abc):
    par = lab3.params
    system = triples.build_system(lab3.p, *abc, symmetry=False, krein=True, Q=par.Q,
                                  krein_triples=krein_zero_triples())
    profiles, _, total = triples.bruteforce_profiles(lab3.scheme, *abc)
    assert total > 0
    for prof in profiles:
        assert system.satisfied_by(triples.as_unknown_vector(prof))


def test_profiles_agree_with_single_count(lab3):
    x, y, u = next(triples.triangles(lab3.scheme, 3, 3, 3))
    counts = triples.triple_numbers_bruteforce(lab3.scheme, x, y, u)
    profiles, _, _ = triples.bruteforce_profiles(lab3.scheme, 3, 3, 3)
    assert np.array_equal(counts, profiles[0])


def test_swap_maps_solutions(lab3):
    # swapping the first two vertices of a triangle swaps the first two indices
    scheme = lab3.scheme
    x, y, u = next(triples.triangles(scheme, 1, 2, 2))
    a = triples.triple_numbers_bruteforce(scheme, x, y, u)
    b = triples.triple_numbers_bruteforce(scheme, y, x, u)
    assert np.array_equal(a.transpose(1, 0, 2), b)
    system = triples.build_system(lab3.p, 1, 2, 2, symmetry=True)
    assert system.satisfied_by(triples.as_unknown_vector(a))


def test_symmetry_maps():
    assert triples.symmetry_maps(1, 2, 3) == []
    assert triples.symmetry_maps(1, 2, 2) == [(1, 0, 2)]
    assert len(triples.symmetry_maps(3, 3, 3)) == 5


def test_json_rationals():
    par = expected_parameters(5)
    space, prop = lemma2_space(par.p, par.Q)
    doc = prop.space.to_json()
    assert doc["triple"] == [3, 3, 3]
    assert doc["pinned"]["[1 3 3]"] == "0/1"
    assert all(Fraction(v) >= 0 for v in doc["pinned"].values())
    dep = space.to_json()["dependencies"]
    assert all("/" in d["constant"] for d in dep)


def test_negative_constant_contradiction():
    par = expected_parameters(3)
    system = triples.build_system(par.p, 3, 3, 3)
    # force a count negative through an extra row
    bad = system.with_pins({label("[1 1 1]"): Fraction(-1)})
    with pytest.raises(triples.NonnegativityContradiction):
        triples.nonneg_propagate(triples.solve(bad))
