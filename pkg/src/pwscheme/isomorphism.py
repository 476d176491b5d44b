"""Backtracking isomorphism search for incidence structures.

Both structures are turned into bipartite point-line graphs and refined
jointly, so colour ids mean the same thing on both sides.  Points start
from an invariant (number of lines, multiset of common-line counts with
collinear points); vertices are individualised one at a time and the
refinement is rerun.  The search is complete up to a node budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .incidence import IncidenceStructure, point_line_maps_preserve

ISOMORPHIC = "isomorphic"
NON_ISOMORPHIC = "non_isomorphic"
BUDGET_EXCEEDED = "budget_exceeded"


@dataclass
class SearchResult:
    status: str
    point_map: Optional[Dict[int, int]] = None
    line_map: Optional[Dict[int, int]] = None
    nodes: int = 0

    def to_json(self) -> dict:
        doc = {"status": self.status, "nodes": self.nodes}
        if self.point_map is not None:
            doc["point_map"] = [self.point_map[p] for p in sorted(self.point_map)]
            doc["line_map"] = [self.line_map[l] for l in sorted(self.line_map)]
        return doc


def _graph(s: IncidenceStructure) -> List[List[int]]:
    """Adjacency lists: points ``0..n-1``, line ``j`` at ``n + j``."""
    adj: List[List[int]] = [[] for _ in range(s.n_points + s.n_lines)]
    for j, L in enumerate(s.lines):
        for p in L:
            adj[p].append(s.n_points + j)
            adj[s.n_points + j].append(p)
    return adj


def _invariants(s: IncidenceStructure) -> List[tuple]:
    through = s.lines_through()
    out: List[tuple] = []
    for x in range(s.n_points):
        shared: Dict[int, int] = {}
        for j in through[x]:
            for y in s.lines[j]:
                if y != x:
                    shared[y] = shared.get(y, 0) + 1
        out.append(("p", len(through[x]), tuple(sorted(shared.values()))))
    out.extend(("l", len(L)) for L in s.lines)
    return out


def _padded(adj: List[List[int]]) -> np.ndarray:
    """Neighbour table padded with ``-1`` to the maximum degree."""
    width = max((len(nbrs) for nbrs in adj), default=0)
    table = np.full((len(adj), width), -1, dtype=np.int64)
    for v, nbrs in enumerate(adj):
        table[v, :len(nbrs)] = nbrs
    return table


def _rank_rows(keys: np.ndarray) -> np.ndarray:
    """Dense lexicographic rank of each row (equal rows share a rank)."""
    order = np.lexsort(keys.T[::-1])
    ordered = keys[order]
    fresh = np.ones(len(keys), dtype=bool)
    fresh[1:] = (ordered[1:] != ordered[:-1]).any(axis=1)
    ranks = np.empty(len(keys), dtype=np.int64)
    ranks[order] = np.cumsum(fresh) - 1
    return ranks


def _refine(table: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """Equitable refinement of a colouring, with canonical colour numbering.

    A vertex's signature is its colour followed by the sorted colours of
    its neighbours; signatures are ranked lexicographically, so equal
    signatures get equal colours on both sides of the joint graph.
    """
    missing = table < 0
    n_colors = len(np.unique(colors))
    while True:
        nbr = np.where(missing, -1, colors[table])
        keys = np.hstack((colors[:, None], np.sort(nbr, axis=1)))
        colors = _rank_rows(keys)
        count = int(colors.max()) + 1
        if count == n_colors:
            return colors
        n_colors = count


def find_isomorphism(a: IncidenceStructure, b: IncidenceStructure, budget: int = 10_000) -> SearchResult:
    """Search for an incidence-preserving bijection ``a -> b``.

    ``budget`` caps the number of search nodes; exceeding it yields
    ``budget_exceeded`` rather than a verdict.
    """
    if (a.n_points, a.n_lines) != (b.n_points, b.n_lines):
        return SearchResult(NON_ISOMORPHIC)
    size = a.n_points + a.n_lines
    adj = _graph(a)
    adj += [[w + size for w in nbrs] for nbrs in _graph(b)]
    table = _padded(adj)
    inv = _invariants(a) + _invariants(b)
    ranking = {v: i for i, v in enumerate(sorted(set(inv)))}
    nodes = 0

    def search(colors: np.ndarray) -> Tuple[Optional[np.ndarray], bool]:
        """Returns (colouring with singleton cells, budget_hit)."""
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            return None, True
        colors = _refine(table, colors)
        k = int(colors.max()) + 1
        left = np.bincount(colors[:size], minlength=k)
        if not np.array_equal(left, np.bincount(colors[size:], minlength=k)):
            return None, False
        if (left <= 1).all():
            return colors, False
        open_cells = np.nonzero(left > 1)[0]
        # branching on points splits a quadrangle much faster than on lines
        point_cells = np.intersect1d(open_cells, colors[:a.n_points])
        if point_cells.size:
            open_cells = point_cells
        cell = open_cells[np.argmin(left[open_cells])]
        v = int(np.argmax(colors[:size] == cell))
        fresh = k
        for w in (np.nonzero(colors[size:] == cell)[0] + size).tolist():
            trial = colors.copy()
            trial[v] = trial[w] = fresh
            found, hit = search(trial)
            if found is not None or hit:
                return found, hit
        return None, False

    found, hit = search(np.array([ranking[v] for v in inv], dtype=np.int64))
    if found is None:
        return SearchResult(BUDGET_EXCEEDED if hit else NON_ISOMORPHIC, nodes=nodes)
    where = {int(found[w]): w - size for w in range(size, 2 * size)}
    full = {v: where[int(found[v])] for v in range(size)}
    pmap = {p: full[p] for p in range(a.n_points)}
    lmap = {j: full[a.n_points + j] - b.n_points for j in range(a.n_lines)}
    if point_line_maps_preserve(a, b, pmap, lmap):
        # a discrete equitable colouring always induces an isomorphism; guard anyway
        return SearchResult(NON_ISOMORPHIC, nodes=nodes)
    return SearchResult(ISOMORPHIC, pmap, lmap, nodes)
