import random

import pytest

from pwscheme import reconstruction as R
from pwscheme.incidence import IncidenceStructure, connecting_pairs, verify_gq_axioms
from pwscheme.isomorphism import BUDGET_EXCEEDED, ISOMORPHIC, NON_ISOMORPHIC, find_isomorphism
from pwscheme.report import Record


def test_counts_and_tags(lab3):
    rec = lab3.reconstruction
    s = rec.structure
    assert (s.n_points, s.n_lines) == (112, 280)
    assert s.point_tags.count("i") == 72 and s.point_tags.count("ii") == 40
    assert s.line_tags.count("a") == 240 and s.line_tags.count("b") == 40
    for j in range(240):
        assert len(s.lines[j]) == 4 and s.lines[j][-1] >= 72
    doc = rec.to_json()
    assert doc["tags"]["points"][:1] == ["i"] and doc["n_points"] == 112


def test_axioms_sub_involution(lab3):
    rec = lab3.reconstruction
    assert R.check_axioms(rec).values["order"] == (3, 9)
    assert R.check_subquadrangle(rec).values["order"] == (3, 3)
    inv = R.check_involution(rec)
    assert inv.passed and inv.values == {"moved_points": 72, "fixed_points": 40}


def test_connections_match_direct_search(lab3):
    rec = lab3.reconstruction
    s = rec.structure
    through = s.lines_through()
    rng = random.Random(0)
    for _ in range(300):
        x = rng.randrange(s.n_points)
        L = rng.randrange(s.n_lines)
        if L in through[x]:
            continue
        case, y, M = R.predicted_connection(rec, x, L)
        assert connecting_pairs(s, x, L, through) == [(y, M)], case


def test_connection_cases_all_exercised(lab3):
    rec = R.check_connections(lab3.reconstruction)
    assert rec.passed
    assert all(rec.values[c] > 0 for c in R.CASES)


def test_natural_isomorphism(lab3):
    w = R.natural_isomorphism(lab3.model, lab3.reconstruction)
    assert sorted(w.point_map[p] for p in lab3.reconstruction.sub_points) == lab3.model.sub_points
    doc = w.to_json()
    assert doc["method"] == "natural" and len(doc["point_map"]) == 112


def test_natural_isomorphism_needs_labels(lab3):
    from pwscheme import cliques as K
    from pwscheme.scheme import AssociationScheme

    bare = AssociationScheme(lab3.scheme.relations, 4)
    cs = K.maximal_cliques(bare)
    cc = K.congruence_classes(cs)
    rec = R.reconstruct(cs, cc, K.partition_set(cs, cc))
    with pytest.raises(R.NaturalMapUnavailable):
        R.natural_isomorphism(lab3.model, rec)
    # the structure is still certified by search
    assert find_isomorphism(rec.structure, lab3.model.gq.structure()).status == ISOMORPHIC


def test_dropped_partition_names_axiom_i(lab3):
    parts = R.drop_partition(lab3.partitions, 0)
    rec = R.reconstruct(lab3.cliques, lab3.classes, parts)
    report = verify_gq_axioms(rec.structure)
    assert report.violated("i")
    witness = report.violations[0]
    assert witness.axiom == "i" and witness.point is not None


def test_failed_prerequisite_blocks():
    with pytest.raises(R.MissingPrerequisite):
        R.reconstruct(None, None, None, [Record("hypothesis1", False)])


def test_isomorphism_relabelled(lab3):
    s = lab3.model.gq.structure()
    perm = list(range(s.n_points))
    random.Random(3).shuffle(perm)
    t = IncidenceStructure(s.n_points, [tuple(perm[p] for p in L) for L in reversed(s.lines)])
    res = find_isomorphism(s, t)
    assert res.status == ISOMORPHIC
    for j, L in enumerate(s.lines):
        assert {res.point_map[p] for p in L} == set(t.lines[res.line_map[j]])


def test_isomorphism_negative_and_budget(lab3):
    sub = lab3.model.sub.structure()
    dual = IncidenceStructure(sub.n_lines, [tuple(ls) for ls in sub.lines_through()])
    assert find_isomorphism(sub, dual, budget=5).status == BUDGET_EXCEEDED
    # Q(4,3) is not self-dual: the complete search says so
    assert find_isomorphism(sub, dual, budget=100_000).status == NON_ISOMORPHIC
    grid = IncidenceStructure(4, [(0, 1), (2, 3), (0, 2), (1, 3)])
    path = IncidenceStructure(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert find_isomorphism(grid, path).status == ISOMORPHIC
    star = IncidenceStructure(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
    assert find_isomorphism(grid, star).status == NON_ISOMORPHIC
    assert find_isomorphism(grid, IncidenceStructure(5, grid.lines)).status == NON_ISOMORPHIC
