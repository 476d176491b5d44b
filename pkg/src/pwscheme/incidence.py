"""Finite point-line incidence structures and the generalized quadrangle axioms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse


@dataclass
class IncidenceStructure:
    """Points ``0..n_points-1`` and lines given as tuples of point ids."""

    n_points: int
    lines: List[Tuple[int, ...]]
    point_tags: Optional[List[str]] = None
    line_tags: Optional[List[str]] = None

    def __post_init__(self):
        self.lines = [tuple(sorted(L)) for L in self.lines]

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    def incidence_matrix(self) -> sparse.csr_array:
        """Sparse 0/1 matrix with rows indexed by points and columns by lines."""
        rows = [p for L in self.lines for p in L]
        cols = [j for j, L in enumerate(self.lines) for _ in L]
        data = np.ones(len(rows), dtype=np.int64)
        return sparse.csr_array((data, (rows, cols)), shape=(self.n_points, self.n_lines))

    def lines_through(self) -> List[List[int]]:
        out: List[List[int]] = [[] for _ in range(self.n_points)]
        for j, L in enumerate(self.lines):
            for p in L:
                out[p].append(j)
        return out

    def substructure(self, points: Sequence[int], lines: Sequence[int]) -> Tuple["IncidenceStructure", List[int]]:
        """Induced structure on the given points and lines, relabelled ``0..``.

        Returns the structure and the list mapping new point ids to old ones.
        """
        order = sorted(points)
        relabel = {p: i for i, p in enumerate(order)}
        new_lines = []
        for j in lines:
            new_lines.append(tuple(relabel[p] for p in self.lines[j] if p in relabel))
        return IncidenceStructure(len(order), new_lines), order

    def to_json(self) -> dict:
        doc = {"format_version": 1, "n_points": self.n_points, "lines": [list(L) for L in self.lines]}
        if self.point_tags is not None:
            doc["tags"] = {"points": self.point_tags, "lines": self.line_tags}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "IncidenceStructure":
        tags = doc.get("tags") or {}
        return cls(doc["n_points"], [tuple(L) for L in doc["lines"]], tags.get("points"), tags.get("lines"))


@dataclass
class AxiomViolation:
    axiom: str
    point: Optional[int]
    line: Optional[int]
    detail: str

    def to_json(self) -> dict:
        return {"axiom": self.axiom, "point": self.point, "line": self.line, "detail": self.detail}


@dataclass
class AxiomReport:
    """Outcome of :func:`verify_gq_axioms`.

    ``violations`` holds at most one witness per axiom, listed in axiom order.
    ``order`` is set only when every axiom holds.
    """

    order: Optional[Tuple[int, int]]
    violations: List[AxiomViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first_violation(self) -> Optional[AxiomViolation]:
        return self.violations[0] if self.violations else None

    def violated(self, axiom: str) -> bool:
        return any(v.axiom == axiom for v in self.violations)

    def to_json(self) -> dict:
        return {
            "order": list(self.order) if self.order else None,
            "violations": [v.to_json() for v in self.violations],
        }


def _first_offdiag_above(mat: sparse.csr_array, bound: int) -> Optional[Tuple[int, int, int]]:
    coo = sparse.triu(mat, k=1).tocoo()
    bad = np.nonzero(coo.data > bound)[0]
    if bad.size == 0:
        return None
    keys = sorted(zip(coo.row[bad].tolist(), coo.col[bad].tolist(), coo.data[bad].tolist()))
    return keys[0]


def verify_gq_axioms(structure: IncidenceStructure) -> AxiomReport:
    """Check axioms (i)-(iii) of a generalized quadrangle exhaustively.

    Axiom (iii) is checked for every non-incident point-line pair ``(x, L)``:
    the number of pairs ``(y, M)`` with ``x I M I y I L`` must be exactly one.
    A structure whose points lie on a single line each (``t = 0``) or whose
    lines carry a single point (``s = 0``) is reported as degenerate under
    axiom (i) or (ii).
    """
    violations: List[AxiomViolation] = []
    if structure.n_points == 0 or structure.n_lines == 0:
        return AxiomReport(None, [AxiomViolation("i", None, None, "structure has no points or no lines")])

    N = structure.incidence_matrix()
    point_deg = np.asarray(N.sum(axis=1)).ravel()
    line_deg = np.asarray(N.sum(axis=0)).ravel()

    # axiom (i)
    t1 = int(point_deg[0])
    odd = np.nonzero(point_deg != t1)[0]
    col = (N @ N.T).tocsr()
    if odd.size:
        x = int(odd[0])
        lines = structure.lines_through()[x]
        violations.append(AxiomViolation("i", x, lines[0] if lines else None,
                                         f"point {x} lies on {int(point_deg[x])} lines, point 0 on {t1}"))
    elif t1 < 2:
        violations.append(AxiomViolation("i", 0, structure.lines_through()[0][0] if t1 else None,
                                         f"degenerate: every point lies on {t1} line(s)"))
    else:
        hit = _first_offdiag_above(col, 1)
        if hit:
            x, y, k = hit
            violations.append(AxiomViolation("i", x, None, f"points {x} and {y} share {k} lines"))

    # axiom (ii)
    s1 = int(line_deg[0])
    odd = np.nonzero(line_deg != s1)[0]
    if odd.size:
        j = int(odd[0])
        violations.append(AxiomViolation("ii", structure.lines[j][0] if structure.lines[j] else None, j,
                                         f"line {j} has {int(line_deg[j])} points, line 0 has {s1}"))
    elif s1 < 2:
        violations.append(AxiomViolation("ii", None, 0, f"degenerate: every line has {s1} point(s)"))
    else:
        hit = _first_offdiag_above((N.T @ N).tocsr(), 1)
        if hit:
            a, b, k = hit
            violations.append(AxiomViolation("ii", None, a, f"lines {a} and {b} share {k} points"))

    # axiom (iii): count[x, L] = sum over y on L of #lines through x and y
    col = col - sparse.diags_array(col.diagonal()).tocsr()
    count = (col @ N).toarray()
    incident = N.toarray().astype(bool)
    bad = np.argwhere((~incident) & (count != 1))
    if bad.size:
        x, j = (int(v) for v in bad[0])
        violations.append(AxiomViolation("iii", x, j,
                                         f"{int(count[x, j])} connecting pairs (y, M) for point {x} and line {j}"))

    order = None if violations else (s1 - 1, t1 - 1)
    return AxiomReport(order, violations)


def connecting_pairs(structure: IncidenceStructure, x: int, line: int,
                     lines_through: Optional[List[List[int]]] = None) -> List[Tuple[int, int]]:
    """All ``(y, M)`` with ``x I M I y I L``, by direct search."""
    if lines_through is None:
        lines_through = structure.lines_through()
    out = []
    for y in structure.lines[line]:
        if y == x:
            continue
        for M in lines_through[x]:
            if M != line and y in structure.lines[M]:
                out.append((y, M))
    return out


def point_line_maps_preserve(a: IncidenceStructure, b: IncidenceStructure,
                             point_map: Dict[int, int], line_map: Dict[int, int]) -> Optional[str]:
    """Return ``None`` if the maps form an isomorphism ``a -> b``, else a reason."""
    if sorted(point_map.values()) != list(range(b.n_points)) or len(point_map) != a.n_points:
        return "point map is not a bijection"
    if sorted(line_map.values()) != list(range(b.n_lines)) or len(line_map) != a.n_lines:
        return "line map is not a bijection"
    for j, L in enumerate(a.lines):
        image = tuple(sorted(point_map[p] for p in L))
        if image != b.lines[line_map[j]]:
            return f"line {j} is not mapped onto line {line_map[j]}"
    return None
