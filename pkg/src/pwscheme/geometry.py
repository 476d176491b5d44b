"""The elliptic quadric quadrangle Q(5,q) and its parabolic section Q(4,q).

Points of Q(5,q) are the singular points of

    x0*x1 + x2*x3 + a*x4^2 + b*x5^2

in PG(5,q), where ``a*x4^2 + b*x5^2`` is anisotropic.  The hyperplane
``x4 = 0`` cuts out a parabolic quadric Q(4,q), a subquadrangle of order
``(q, q)``, and the sign change of ``x4`` is an involution fixing it pointwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .field import canonical, is_prime, is_square, projective_points
from .incidence import IncidenceStructure

log = logging.getLogger(__name__)

DEFAULT_Q_BOUND = 7
HYPERPLANE_COORD = 4


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticForm:
    """``x0*x1 + x2*x3 + a*x4^2 + b*x5^2`` over GF(q)."""

    q: int
    a: int
    b: int

    @classmethod
    def elliptic(cls, q: int) -> "QuadraticForm":
        # anisotropic binary part needs -b/a to be a non-square
        b = next(b for b in range(1, q) if not is_square(-b, q))
        return cls(q, 1, b)

    @property
    def polar_matrix(self) -> np.ndarray:
        """Gram matrix of the associated bilinear form ``f(x+y)-f(x)-f(y)``."""
        g = np.zeros((6, 6), dtype=np.int64)
        g[0, 1] = g[1, 0] = 1
        g[2, 3] = g[3, 2] = 1
        g[4, 4] = 2 * self.a
        g[5, 5] = 2 * self.b
        return g % self.q

    def evaluate(self, x: Sequence[int]) -> int:
        return (x[0] * x[1] + x[2] * x[3] + self.a * x[4] ** 2 + self.b * x[5] ** 2) % self.q

    def polar(self, x: Sequence[int], y: Sequence[int]) -> int:
        return int(np.asarray(x) @ self.polar_matrix @ np.asarray(y)) % self.q

    def binary_part_anisotropic(self) -> bool:
        return all((self.a * u * u + self.b * v * v) % self.q for u in range(self.q) for v in range(self.q)
                   if (u, v) != (0, 0))

    def section_nondegenerate(self, coord: int = HYPERPLANE_COORD) -> bool:
        keep = [i for i in range(6) if i != coord]
        g = self.polar_matrix[np.ix_(keep, keep)]
        return _det_mod(g, self.q) != 0


def _det_mod(m: np.ndarray, q: int) -> int:
    a = [[int(v) % q for v in row] for row in m]
    n = len(a)
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c] % q
        inv = pow(a[c][c], -1, q)
        for i in range(c + 1, n):
            f = a[i][c] * inv % q
            if f:
                a[i] = [(x - f * y) % q for x, y in zip(a[i], a[c])]
    return det % q


@dataclass
class GeneralizedQuadrangle:
    """A point-line geometry with coordinates attached to its points."""

    q: int
    points: List[Tuple[int, ...]]
    lines: List[Tuple[int, ...]]
    order: Tuple[int, int]

    @cached_property
    def index(self) -> Dict[Tuple[int, ...], int]:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def lines_through(self) -> List[List[int]]:
        out: List[List[int]] = [[] for _ in self.points]
        for j, L in enumerate(self.lines):
            for p in L:
                out[p].append(j)
        return out

    @cached_property
    def line_of_pair(self) -> Dict[Tuple[int, int], int]:
        out = {}
        for j, L in enumerate(self.lines):
            for a in L:
                for b in L:
                    if a < b:
                        out[a, b] = j
        return out

    def collinear(self, x: int, y: int) -> bool:
        """True for distinct points on a common line."""
        if x == y:
            return False
        return (min(x, y), max(x, y)) in self.line_of_pair

    def structure(self) -> IncidenceStructure:
        return IncidenceStructure(len(self.points), list(self.lines))


def _check_q(q: int, bound: int) -> None:
    if not isinstance(q, int) or not is_prime(q):
        raise GeometryError(f"q={q} is not prime")
    if q == 2:
        raise GeometryError("q=2 is not supported (the construction needs q >= 3)")
    if q > bound:
        raise GeometryError(f"q={q} exceeds the enumeration bound {bound}")


def _lines_from_collinearity(points: List[Tuple[int, ...]], gram: np.ndarray, q: int,
                             form) -> List[Tuple[int, ...]]:
    coords = np.array(points, dtype=np.int64)
    polar = (coords @ gram @ coords.T) % q
    index = {p: i for i, p in enumerate(points)}
    on_line: Dict[Tuple[int, int], int] = {}
    lines: Dict[Tuple[int, ...], None] = {}
    n = len(points)
    for x in range(n):
        for y in np.nonzero(polar[x] == 0)[0].tolist():
            if y <= x or (x, y) in on_line:
                continue
            px, py = points[x], points[y]
            span = {y}
            for lam in range(q):
                v = canonical([a + lam * b for a, b in zip(px, py)], q)
                if form(v) != 0:
                    raise GeometryError(f"span of points {x},{y} is not totally singular")
                span.add(index[v])
            key = tuple(sorted(span))
            lines[key] = None
            for a in key:
                for b in key:
                    if a < b:
                        on_line[a, b] = 1
    return sorted(lines)


def build_elliptic_quadric_gq(q: int, bound: int = DEFAULT_Q_BOUND) -> GeneralizedQuadrangle:
    """Enumerate Q(5,q): the singular points and totally singular lines.

    The order ``(q, q^2)`` is certified by the point and line counts and by
    the per-point and per-line degrees; the full axiom check lives in
    :func:`pwscheme.incidence.verify_gq_axioms`.
    """
    _check_q(q, bound)
    form = QuadraticForm.elliptic(q)
    if not form.binary_part_anisotropic():
        raise GeometryError(f"binary part of {form} is isotropic")
    pts = [p for p in projective_points(6, q) if form.evaluate(p) == 0]
    if len(pts) != (q + 1) * (q ** 3 + 1):
        raise GeometryError(f"{len(pts)} singular points; the form is not elliptic")
    lines = _lines_from_collinearity(pts, form.polar_matrix, q, form.evaluate)
    s, t = q, q * q
    gq = GeneralizedQuadrangle(q, pts, lines, (s, t))
    if len(lines) != (t + 1) * (s * t + 1):
        raise GeometryError(f"found {len(lines)} lines, expected {(t + 1) * (s * t + 1)}")
    if any(len(L) != s + 1 for L in lines) or any(len(ls) != t + 1 for ls in gq.lines_through):
        raise GeometryError("line or point degrees do not match order (q, q^2)")
    log.info("built Q(5,%d): %d points, %d lines", q, len(pts), len(lines))
    return gq


@dataclass(frozen=True)
class Ovoid:
    """The subquadrangle points collinear with an outer point (sub ids)."""

    carrier: FrozenSet[int]
    subtender: int


@dataclass
class QuadrangleModel:
    """Q(5,q) with its hyperplane section, plus subtended-ovoid bookkeeping.

    ``sub_points[i]`` and ``sub_lines[j]`` give the ids in ``gq`` of point
    ``i`` and line ``j`` of ``sub``.  ``outer`` lists the remaining points of
    ``gq`` in id order.
    """

    gq: GeneralizedQuadrangle
    sub: GeneralizedQuadrangle
    sub_points: List[int]
    sub_lines: List[int]
    outer: List[int] = field(init=False)

    def __post_init__(self):
        inside = set(self.sub_points)
        self.outer = [p for p in range(len(self.gq.points)) if p not in inside]

    @property
    def q(self) -> int:
        return self.gq.q

    @cached_property
    def _sub_position(self) -> Dict[int, int]:
        return {p: i for i, p in enumerate(self.sub_points)}

    @cached_property
    def _outer_position(self) -> Dict[int, int]:
        return {p: i for i, p in enumerate(self.outer)}

    @cached_property
    def ovoid_matrix(self) -> np.ndarray:
        """0/1 matrix, rows = outer points (in ``outer`` order), cols = sub points."""
        form = QuadraticForm.elliptic(self.q)
        coords = np.array(self.gq.points, dtype=np.int64)
        polar = (coords[self.outer] @ form.polar_matrix @ coords[self.sub_points].T) % self.q
        return (polar == 0).astype(np.int64)

    def is_outer(self, x: int) -> bool:
        return x not in self._sub_position

    def subtended_ovoid(self, x: int) -> Ovoid:
        if not self.is_outer(x):
            raise GeometryError(f"point {x} lies in the subquadrangle")
        row = self.ovoid_matrix[self._outer_position[x]]
        return Ovoid(frozenset(np.nonzero(row)[0].tolist()), x)

    @cached_property
    def antipodes(self) -> Dict[int, int]:
        """Map each outer point to the other subtender of its ovoid."""
        groups: Dict[bytes, List[int]] = {}
        for k, x in enumerate(self.outer):
            groups.setdefault(self.ovoid_matrix[k].tobytes(), []).append(x)
        out = {}
        for members in groups.values():
            if len(members) != 2:
                raise GeometryError(f"ovoid subtended by {len(members)} points {members}; not doubly subtended")
            a, b = members
            out[a], out[b] = b, a
        return out

    def antipode(self, x: int) -> int:
        if not self.is_outer(x):
            raise GeometryError(f"point {x} lies in the subquadrangle")
        return self.antipodes[x]

    def involution(self, x: int) -> int:
        """Image of point ``x`` under the sign change of the hyperplane coordinate."""
        v = list(self.gq.points[x])
        v[HYPERPLANE_COORD] = -v[HYPERPLANE_COORD]
        return self.gq.index[canonical(v, self.q)]

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "q": self.q,
            "points": [list(p) for p in self.gq.points],
            "lines": [list(L) for L in self.gq.lines],
            "sub_points": list(self.sub_points),
            "sub_lines": list(self.sub_lines),
        }


def build_parabolic_subgq(gq: GeneralizedQuadrangle) -> QuadrangleModel:
    """Cut ``gq`` with the hyperplane ``x4 = 0`` and embed the section.

    Every line of ``gq`` must meet the hyperplane in a full line or exactly one
    point; this is checked here.
    """
    q = gq.q
    form = QuadraticForm.elliptic(q)
    if not form.section_nondegenerate():
        raise GeometryError("the hyperplane section is degenerate")
    inside = [i for i, p in enumerate(gq.points) if p[HYPERPLANE_COORD] == 0]
    inside_set = set(inside)
    sub_lines = []
    for j, L in enumerate(gq.lines):
        k = sum(p in inside_set for p in L)
        if k == len(L):
            sub_lines.append(j)
        elif k != 1:
            raise GeometryError(f"line {j} meets the hyperplane in {k} points")
    pos = {p: i for i, p in enumerate(inside)}
    sub_coords = [tuple(c for k, c in enumerate(gq.points[p]) if k != HYPERPLANE_COORD) for p in inside]
    sub_line_pts = [tuple(sorted(pos[p] for p in gq.lines[j])) for j in sub_lines]
    s, t = q, q
    sub = GeneralizedQuadrangle(q, sub_coords, sub_line_pts, (s, t))
    if len(sub_coords) != (s + 1) * (s * t + 1) or len(sub_line_pts) != (t + 1) * (s * t + 1):
        raise GeometryError("hyperplane section does not have the size of a GQ of order (q, q)")
    if any(len(ls) != t + 1 for ls in sub.lines_through):
        raise GeometryError("hyperplane section is not of order (q, q)")
    return QuadrangleModel(gq, sub, inside, sub_lines)


def build_model(q: int, bound: int = DEFAULT_Q_BOUND) -> QuadrangleModel:
    return build_parabolic_subgq(build_elliptic_quadric_gq(q, bound))


def ovoid_intersection_profile(model: QuadrangleModel) -> Optional[str]:
    """Check the intersection sizes of subtended ovoids against collinearity.

    Returns ``None`` when every pair of distinct outer points behaves as
    expected, otherwise a description of the first offending pair.
    """
    r = model.q
    ov = model.ovoid_matrix
    inter = ov @ ov.T
    outer = model.outer
    for a, x in enumerate(outer):
        xp = model.antipode(x)
        for b in range(a + 1, len(outer)):
            y = outer[b]
            k = int(inter[a, b])
            if y == xp:
                want = r * r + 1
            elif model.gq.collinear(x, y) or model.gq.collinear(xp, y):
                want = 1
            else:
                want = r + 1
            if k != want:
                return f"outer points {x},{y}: |O_x & O_y| = {k}, expected {want}"
    return None
