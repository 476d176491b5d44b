"""Rebuild a quadrangle from the clique structure of a scheme and certify it.

Points are the scheme vertices (type ``"i"``) followed by the congruence
classes (type ``"ii"``); lines are the cliques, each extended by its class
(type ``"a"``), followed by the partitions (type ``"b"``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cliques import CliqueSystem, CongruenceClasses, Partitions
from .geometry import QuadrangleModel
from .incidence import IncidenceStructure, point_line_maps_preserve, verify_gq_axioms
from .report import Record


class MissingPrerequisite(RuntimeError):
    pass


@dataclass
class Reconstruction:
    structure: IncidenceStructure
    cliques: CliqueSystem
    classes: CongruenceClasses
    partitions: List[Tuple[int, ...]]

    @property
    def n_vertices(self) -> int:
        return self.cliques.scheme.size

    def class_point(self, t: int) -> int:
        return self.n_vertices + t

    def partition_line(self, k: int) -> int:
        return len(self.cliques) + k

    @cached_property
    def sub_points(self) -> List[int]:
        return [self.class_point(t) for t in range(len(self.classes))]

    @cached_property
    def sub_lines(self) -> List[int]:
        return [self.partition_line(k) for k in range(len(self.partitions))]

    @cached_property
    def partition_index(self) -> Dict[Tuple[int, int], int]:
        """Partition containing an unordered pair of classes."""
        out = {}
        for k, p in enumerate(self.partitions):
            for i, a in enumerate(p):
                for b in p[i + 1:]:
                    out[(a, b)] = k
        return out

    @cached_property
    def clique_in_class(self) -> List[Dict[int, int]]:
        """For each vertex, class id -> the clique through it in that class."""
        cs, cc = self.cliques, self.classes
        out = []
        for x in range(self.n_vertices):
            seen: Dict[int, int] = {}
            for c in cs.through[x].tolist():
                t = int(cc.clique_class[c])
                if t in seen:
                    raise ValueError(f"vertex {x} lies on two cliques of class {t}")
                seen[t] = c
            out.append(seen)
        return out

    @cached_property
    def class_sets(self) -> List[frozenset]:
        return [frozenset(p.tolist()) for p in self.classes.points]

    def to_json(self) -> dict:
        return self.structure.to_json()


def reconstruct(cs: CliqueSystem, cc: CongruenceClasses, parts: Partitions,
                prerequisites: Sequence[Record] = ()) -> Reconstruction:
    """Assemble the two-sorted incidence structure.

    ``prerequisites`` are the hypothesis records the construction relies
    on; any failing record, or any disjoint class pair without a partition,
    raises :class:`MissingPrerequisite`.
    """
    failed = [rec.check for rec in prerequisites if not rec.passed]
    if failed:
        raise MissingPrerequisite(f"prerequisite checks failed: {', '.join(failed)}")
    if parts.failures:
        raise MissingPrerequisite(f"{len(parts.failures)} disjoint class pairs determine no partition")
    n = cs.scheme.size
    lines = [tuple(c) + (n + int(cc.clique_class[cid]),) for cid, c in enumerate(cs.cliques)]
    lines += [tuple(n + t for t in p) for p in parts.partitions]
    point_tags = ["i"] * n + ["ii"] * len(cc)
    line_tags = ["a"] * len(cs) + ["b"] * len(parts.partitions)
    structure = IncidenceStructure(n + len(cc), lines, point_tags, line_tags)
    return Reconstruction(structure, cs, cc, list(parts.partitions))


def drop_partition(parts: Partitions, k: int = 0) -> Partitions:
    """Copy of ``parts`` without partition ``k`` (a negative control)."""
    kept = parts.partitions[:k] + parts.partitions[k + 1:]
    return Partitions(kept, parts.results)


def check_axioms(rec: Reconstruction) -> Record:
    r = rec.cliques.r
    report = verify_gq_axioms(rec.structure)
    values = {"points": rec.structure.n_points, "lines": rec.structure.n_lines,
              "order": report.order, "expected_order": (r, r * r)}
    witness = [v.to_json() for v in report.violations] or None
    return Record("reconstructed_axioms", report.ok and report.order == (r, r * r), witness, values)


def check_subquadrangle(rec: Reconstruction) -> Record:
    r = rec.cliques.r
    sub, _ = rec.structure.substructure(rec.sub_points, rec.sub_lines)
    report = verify_gq_axioms(sub)
    values = {"points": sub.n_points, "lines": sub.n_lines, "order": report.order, "expected_order": (r, r)}
    witness = [v.to_json() for v in report.violations] or None
    return Record("reconstructed_subquadrangle", report.ok and report.order == (r, r), witness, values)


def involution_maps(rec: Reconstruction) -> Tuple[Dict[int, int], Dict[int, int]]:
    """Point and line maps induced by the antipode (classes and partitions fixed)."""
    cs = rec.cliques
    n = rec.n_vertices
    pmap = {x: int(cs.antipode[x]) for x in range(n)}
    pmap.update({p: p for p in rec.sub_points})
    lmap = {c: int(cs.clique_antipode[c]) for c in range(len(cs))}
    lmap.update({l: l for l in rec.sub_lines})
    return pmap, lmap


def check_involution(rec: Reconstruction) -> Record:
    """The antipode is an involutory automorphism fixing the subquadrangle pointwise."""
    cs, cc = rec.cliques, rec.classes
    anti = cs.clique_antipode
    split = np.nonzero(cc.clique_class != cc.clique_class[anti])[0]
    if split.size:
        c = int(split[0])
        return Record("involution", False, {"clique": c, "antipodal_clique": int(anti[c]),
                                            "reason": "antipodal cliques lie in different classes"})
    pmap, lmap = involution_maps(rec)
    reason = point_line_maps_preserve(rec.structure, rec.structure, pmap, lmap)
    if reason:
        return Record("involution", False, {"reason": reason})
    moved = sum(pmap[x] != x for x in range(rec.n_vertices))
    involutory = all(pmap[pmap[x]] == x for x in pmap)
    ok = involutory and moved == rec.n_vertices
    return Record("involution", ok, None if ok else {"moved": moved, "involutory": involutory},
                  {"moved_points": moved, "fixed_points": len(rec.sub_points)})


CASES = ("vertex_in_class", "vertex_off_class", "vertex_partition",
         "class_meets_class", "class_misses_class", "class_partition")


def predicted_connection(rec: Reconstruction, point: int, line: int) -> Tuple[str, int, int]:
    """The connecting pair ``(y, M)`` for a non-incident pair, by the case analysis.

    Returns ``(case, y, M)`` using structure ids; raises :class:`ValueError`
    when the case analysis has no unique answer.
    """
    cs, cc = rec.cliques, rec.classes
    rel = cs.scheme.relations
    n, k = rec.n_vertices, len(cs)
    if point < n:
        x = point
        if line < k:
            t = int(cc.clique_class[line])
            if x in rec.class_sets[t]:
                return "vertex_in_class", rec.class_point(t), rec.clique_in_class[x][t]
            ys = [y for y in cs.cliques[line] if rel[x, y] == 3]
            if len(ys) != 1:
                raise ValueError(f"vertex {x} has {len(ys)} class-3 neighbours on clique {line}")
            return "vertex_off_class", ys[0], int(cs.edge[x, ys[0]])
        hits = [t for t in rec.partitions[line - k] if x in rec.class_sets[t]]
        if len(hits) != 1:
            raise ValueError(f"vertex {x} lies in {len(hits)} classes of partition {line - k}")
        t = hits[0]
        return "vertex_partition", rec.class_point(t), rec.clique_in_class[x][t]
    t = point - n
    if line < k:
        tc = int(cc.clique_class[line])
        if cc.overlaps[t, tc]:
            zs = [z for z in cs.cliques[line] if z in rec.class_sets[t]]
            if len(zs) != 1:
                raise ValueError(f"class {t} meets clique {line} in {len(zs)} points")
            return "class_meets_class", zs[0], rec.clique_in_class[zs[0]][t]
        pk = rec.partition_index[(min(t, tc), max(t, tc))]
        return "class_misses_class", rec.class_point(tc), rec.partition_line(pk)
    others = [u for u in rec.partitions[line - k] if not cc.overlaps[t, u]]
    if len(others) != 1:
        raise ValueError(f"class {t} is disjoint from {len(others)} classes of partition {line - k}")
    u = others[0]
    pk = rec.partition_index[(min(t, u), max(t, u))]
    return "class_partition", rec.class_point(u), rec.partition_line(pk)


def check_connections(rec: Reconstruction, points: Optional[Sequence[int]] = None) -> Record:
    """Every non-incident pair is joined by the pair the case analysis predicts.

    Validity of the predicted ``(y, M)`` is checked directly; together with
    axiom (iii) it is then the unique connecting pair.
    """
    s = rec.structure
    line_sets = [set(L) for L in s.lines]
    through = s.lines_through()
    counts = dict.fromkeys(CASES, 0)
    for x in (range(s.n_points) if points is None else points):
        on = set(through[x])
        for L in range(s.n_lines):
            if L in on:
                continue
            try:
                case, y, M = predicted_connection(rec, x, L)
            except (ValueError, KeyError, StopIteration) as exc:
                return Record("connections", False, {"point": x, "line": L, "reason": str(exc)}, counts)
            if not (y in line_sets[L] and x in line_sets[M] and y in line_sets[M] and M != L):
                return Record("connections", False, {"point": x, "line": L, "case": case,
                                                     "predicted": (y, M)}, counts)
            counts[case] += 1
    return Record("connections", True, None, counts)


@dataclass
class IsomorphismWitness:
    point_map: Dict[int, int]
    line_map: Dict[int, int]
    method: str

    def to_json(self) -> dict:
        return {"method": self.method,
                "point_map": [self.point_map[p] for p in sorted(self.point_map)],
                "line_map": [self.line_map[l] for l in sorted(self.line_map)]}


class NaturalMapUnavailable(ValueError):
    pass


def natural_isomorphism(model: QuadrangleModel, rec: Reconstruction) -> IsomorphismWitness:
    """Vertices go to their source points, a class to the subquadrangle point on its source lines.

    Raises :class:`NaturalMapUnavailable` when the scheme does not carry
    source labels or the class map is not well defined, and
    :class:`ValueError` when the map is not an isomorphism onto the source
    with the subquadrangle onto the subquadrangle.
    """
    labels = rec.cliques.scheme.labels
    if labels is None:
        raise NaturalMapUnavailable("scheme vertices carry no source labels")
    gq = model.gq
    sub = set(model.sub_points)
    cs, cc = rec.cliques, rec.classes
    pmap = {v: int(labels[v]) for v in range(rec.n_vertices)}
    lmap: Dict[int, int] = {}
    for c, members in enumerate(cs.cliques):
        a, b = (pmap[v] for v in members[:2])
        lmap[c] = gq.line_of_pair[(min(a, b), max(a, b))]
    for t, group in enumerate(cc.cliques):
        images = set()
        for c in group:
            on_sub = [p for p in gq.lines[lmap[c]] if p in sub]
            if len(on_sub) != 1:
                raise NaturalMapUnavailable(f"source line of clique {c} meets the subquadrangle in {len(on_sub)} points")
            images.add(on_sub[0])
        if len(images) != 1:
            raise NaturalMapUnavailable(f"cliques of class {t} point at subquadrangle points {sorted(images)}")
        pmap[rec.class_point(t)] = images.pop()
    for k, p in enumerate(rec.partitions):
        a, b = (pmap[rec.class_point(t)] for t in p[:2])
        lmap[rec.partition_line(k)] = gq.line_of_pair[(min(a, b), max(a, b))]
    reason = point_line_maps_preserve(rec.structure, gq.structure(), pmap, lmap)
    if reason:
        raise ValueError(reason)
    if {pmap[p] for p in rec.sub_points} != sub:
        raise ValueError("classes are not mapped onto the subquadrangle points")
    if {lmap[l] for l in rec.sub_lines} != set(model.sub_lines):
        raise ValueError("partitions are not mapped onto the subquadrangle lines")
    return IsomorphismWitness(pmap, lmap, "natural")


def check_natural_isomorphism(model: QuadrangleModel, rec: Reconstruction) -> Record:
    try:
        witness = natural_isomorphism(model, rec)
    except (NaturalMapUnavailable, ValueError) as exc:
        return Record("natural_isomorphism", False, {"reason": str(exc)})
    return Record("natural_isomorphism", True, None,
                  {"points": len(witness.point_map), "lines": len(witness.line_map),
                   "class_images": [witness.point_map[p] for p in rec.sub_points]})
