import itertools

import pytest

from pwscheme.geometry import (GeometryError, QuadraticForm, build_elliptic_quadric_gq, build_model,
                               ovoid_intersection_profile)
from pwscheme.incidence import IncidenceStructure, connecting_pairs, verify_gq_axioms


def grid(n):
    """The n x n grid: a GQ of order (n-1, 1)."""
    pts = {(i, j): k for k, (i, j) in enumerate(itertools.product(range(n), repeat=2))}
    rows = [tuple(pts[i, j] for j in range(n)) for i in range(n)]
    cols = [tuple(pts[i, j] for i in range(n)) for j in range(n)]
    return IncidenceStructure(n * n, rows + cols)


def test_counts_q3(lab3):
    gq, sub = lab3.model.gq, lab3.model.sub
    assert (len(gq.points), len(gq.lines)) == (112, 280)
    assert (len(sub.points), len(sub.lines)) == (40, 40)
    assert len(lab3.model.outer) == 72


@pytest.mark.parametrize("q", [3, 5])
def test_orders_from_axioms(q, lab3, lab5):
    model = (lab3 if q == 3 else lab5).model
    assert verify_gq_axioms(model.gq.structure()).order == (q, q * q)
    assert verify_gq_axioms(model.sub.structure()).order == (q, q)


def test_points_are_singular_and_sorted(lab3):
    form = QuadraticForm.elliptic(3)
    pts = lab3.model.gq.points
    assert list(pts) == sorted(pts)
    assert all(form.evaluate(p) == 0 for p in pts)


def test_lines_totally_singular(lab3):
    form = QuadraticForm.elliptic(3)
    gq = lab3.model.gq
    for L in gq.lines:
        for a, b in itertools.combinations(L, 2):
            assert form.polar(gq.points[a], gq.points[b]) == 0


def test_json_ids(lab3):
    doc = lab3.model.to_json()
    assert doc["q"] == 3
    assert len(doc["points"]) == 112
    assert doc["sub_points"] == sorted(doc["sub_points"])
    assert all(doc["points"][p][4] == 0 for p in doc["sub_points"])
    assert build_model(3).to_json() == doc


def test_every_ovoid_doubly_subtended(lab3):
    model = lab3.model
    anti = model.antipodes
    assert len(anti) == 72
    for x in model.outer:
        assert anti[x] != x and anti[anti[x]] == x
        assert model.involution(x) == anti[x]
        ov = model.subtended_ovoid(x)
        assert len(ov.carrier) == 3 * 3 + 1
        assert ov.carrier == model.subtended_ovoid(anti[x]).carrier
    assert all(model.involution(p) == p for p in model.sub_points)


def test_subtended_ovoid_is_ovoid(lab3):
    model = lab3.model
    sub = model.sub
    ov = model.subtended_ovoid(model.outer[0]).carrier
    for L in sub.lines:
        assert len(ov & set(L)) == 1


def test_ovoid_intersections(lab3):
    assert ovoid_intersection_profile(lab3.model) is None


def test_subtended_ovoid_rejects_inner_point(lab3):
    with pytest.raises(GeometryError):
        lab3.model.subtended_ovoid(lab3.model.sub_points[0])


@pytest.mark.parametrize("q", [1, 2, 4, 9, 11])
def test_rejects_bad_q(q):
    with pytest.raises(GeometryError):
        build_elliptic_quadric_gq(q)


def test_bound_is_respected():
    with pytest.raises(GeometryError, match="bound"):
        build_elliptic_quadric_gq(5, bound=3)


def test_grid_is_gq():
    assert verify_gq_axioms(grid(3)).order == (2, 1)


def test_axiom_witnesses():
    g = grid(3)
    broken = IncidenceStructure(g.n_points, g.lines[:-1])
    rep = verify_gq_axioms(broken)
    assert rep.violated("i")
    assert rep.first_violation.point is not None
    triangle = IncidenceStructure(3, [(0, 1), (1, 2), (0, 2)])
    rep = verify_gq_axioms(triangle)
    assert rep.violated("iii")


def test_connecting_pairs_unique_in_gq(lab3):
    s = lab3.model.sub.structure()
    through = s.lines_through()
    for x in range(0, s.n_points, 7):
        for L in range(s.n_lines):
            if L not in through[x]:
                assert len(connecting_pairs(s, x, L, through)) == 1


def test_incidence_json_round_trip():
    g = IncidenceStructure(4, [(0, 1), (2, 3)], ["i"] * 4, ["a", "b"])
    assert IncidenceStructure.from_json(g.to_json()).to_json() == g.to_json()


def test_substructure_relabels():
    g = grid(3)
    sub, order = g.substructure([0, 1, 2], [0])
    assert order == [0, 1, 2]
    assert sub.lines == [(0, 1, 2)]
