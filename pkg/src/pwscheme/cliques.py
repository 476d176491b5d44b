"""Maximal {0,3}-cliques and the structures built from them.

Every function here works on an abstract :class:`AssociationScheme` with
four classes; nothing refers back to a geometric model.  Structural
failures raise :class:`CharacterizationError` carrying a small witness,
while the ``check_*`` functions return report records instead.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import isqrt
from typing import Any, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .report import Record
from .scheme import AssociationScheme

log = logging.getLogger(__name__)


class CharacterizationError(ValueError):
    """The scheme violates a structural consequence of the PW parameters."""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


def _packed(mask: np.ndarray) -> np.ndarray:
    """Rows of a boolean matrix packed into ``uint64`` words."""
    n, m = mask.shape
    words = -(-m // 64)
    padded = np.zeros((n, words * 64), dtype=bool)
    padded[:, :m] = mask
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


@dataclass
class CliqueSystem:
    """The maximal {0,3}-cliques of a scheme.

    ``edge[x, y]`` is the clique through the class-3 pair ``(x, y)`` (-1 for
    other pairs), ``through[x]`` the sorted clique ids on ``x``, and
    ``antipode[x]`` the unique class-4 partner of ``x``.
    """

    scheme: AssociationScheme
    cliques: List[Tuple[int, ...]]
    edge: np.ndarray
    through: List[np.ndarray]
    antipode: np.ndarray

    @property
    def r(self) -> int:
        return len(self.cliques[0])

    def __len__(self) -> int:
        return len(self.cliques)

    @cached_property
    def members(self) -> np.ndarray:
        return np.array(self.cliques, dtype=np.int64)

    @cached_property
    def index(self) -> Dict[Tuple[int, ...], int]:
        return {c: i for i, c in enumerate(self.cliques)}

    @cached_property
    def membership(self) -> sparse.csr_array:
        k, r = self.members.shape
        data = np.ones(k * r, dtype=np.int64)
        return sparse.csr_array((data, (np.repeat(np.arange(k), r), self.members.ravel())),
                                shape=(k, self.scheme.size))

    @cached_property
    def clique_antipode(self) -> np.ndarray:
        return np.array([antipodal_clique(self, c) for c in range(len(self))], dtype=np.int64)

    def to_json(self) -> dict:
        return {"r": self.r, "cliques": [list(c) for c in self.cliques]}


def vertex_antipodes(scheme: AssociationScheme) -> np.ndarray:
    rel = scheme.relations
    counts = (rel == 4).sum(axis=1)
    bad = np.nonzero(counts != 1)[0]
    if bad.size:
        x = int(bad[0])
        raise CharacterizationError(f"vertex {x} has {counts[x]} class-4 partners, expected 1", x)
    return np.argmax(rel == 4, axis=1)


def maximal_cliques(scheme: AssociationScheme) -> CliqueSystem:
    """Close every class-3 pair ``(x,y)`` to ``{x,y}`` plus its common class-3 neighbours.

    Raises :class:`CharacterizationError` if some closure is not a clique,
    if two closures overlap in a class-3 pair, or if sizes differ.
    """
    rel = scheme.relations
    n = scheme.size
    a3 = rel == 3
    edge = np.full((n, n), -1, dtype=np.int64)
    found: List[Tuple[int, ...]] = []
    for x in range(n):
        for y in np.nonzero(a3[x, x + 1:])[0] + x + 1:
            y = int(y)
            if edge[x, y] >= 0:
                continue
            common = np.nonzero(a3[x] & a3[y])[0]
            members = np.sort(np.concatenate(([x, y], common)))
            block = rel[np.ix_(members, members)]
            off = block != 3
            np.fill_diagonal(off, False)
            if off.any():
                i, j = np.argwhere(off)[0]
                a, b = int(members[i]), int(members[j])
                raise CharacterizationError(
                    f"closure of class-3 pair ({x},{y}) is not a clique: "
                    f"({a},{b}) is in class {rel[a, b]}", (x, y, a, b))
            sub = edge[np.ix_(members, members)]
            clash = np.argwhere(sub >= 0)
            if clash.size:
                i, j = clash[0]
                raise CharacterizationError(
                    f"class-3 pair ({members[i]},{members[j]}) lies in two clique closures",
                    (int(members[i]), int(members[j])))
            block_ids = np.full((len(members), len(members)), len(found))
            np.fill_diagonal(block_ids, -1)
            edge[np.ix_(members, members)] = block_ids
            found.append(tuple(int(v) for v in members))
    if not found:
        raise CharacterizationError("class 3 is empty; there are no cliques")
    sizes = {len(c) for c in found}
    if len(sizes) != 1:
        small = min(found, key=len)
        raise CharacterizationError(f"cliques have different sizes {sorted(sizes)}", small)
    order = sorted(range(len(found)), key=lambda i: found[i])
    renumber = np.empty(len(found) + 1, dtype=np.int64)
    renumber[np.array(order)] = np.arange(len(found))
    renumber[-1] = -1
    edge = renumber[edge]
    cliques = [found[i] for i in order]
    through: List[List[int]] = [[] for _ in range(n)]
    for cid, c in enumerate(cliques):
        for v in c:
            through[v].append(cid)
    log.info("found %d cliques of size %d", len(cliques), len(cliques[0]))
    return CliqueSystem(scheme, cliques, edge, [np.array(t, dtype=np.int64) for t in through],
                        vertex_antipodes(scheme))


def antipodal_clique(cs: CliqueSystem, cid: int) -> int:
    image = tuple(sorted(int(cs.antipode[v]) for v in cs.cliques[cid]))
    try:
        return cs.index[image]
    except KeyError:
        raise CharacterizationError(f"antipodal image of clique {cid} is not a clique", (cid, image)) from None


def delta_T(cs: CliqueSystem, cid: int) -> Tuple[np.ndarray, np.ndarray]:
    """``(delta, T)``: vertices in class 2 to all of the clique, and ``delta`` plus both cliques."""
    members = cs.members[cid]
    delta = np.nonzero(np.all(cs.scheme.relations[:, members] == 2, axis=1))[0]
    twin = cs.members[cs.clique_antipode[cid]]
    return delta, np.sort(np.concatenate((delta, members, twin)))


def lambda_mu(cs: CliqueSystem, x: int, y: int) -> Tuple[List[int], List[int]]:
    """Cliques on ``x`` that ``y`` is class-3 related to, and those inside ``R_2(y)``."""
    rel = cs.scheme.relations
    if rel[x, y] != 2:
        raise ValueError(f"({x},{y}) is in class {rel[x, y]}, not 2")
    lam, mu = [], []
    for cid in cs.through[x].tolist():
        row = rel[y, cs.members[cid]]
        if (row == 3).any():
            lam.append(cid)
        if (row == 2).all():
            mu.append(cid)
    return lam, mu


def sunflower_check(ground: Iterable[Hashable], sets: Sequence[Iterable[Hashable]]) -> Hashable:
    """Common element of ``r`` sets of size ``r+1`` on ``r^2+1`` points meeting pairwise once."""
    ground = set(ground)
    family = [set(s) for s in sets]
    r = len(family)
    if r < 2:
        raise ValueError("need at least two sets")
    if len(ground) != r * r + 1:
        raise ValueError(f"ground set has {len(ground)} elements, expected r^2+1 = {r * r + 1}")
    for i, s in enumerate(family):
        if len(s) != r + 1:
            raise ValueError(f"set {i} has {len(s)} elements, expected r+1 = {r + 1}")
        if not s <= ground:
            raise ValueError(f"set {i} is not inside the ground set")
    for i in range(r):
        for j in range(i + 1, r):
            if len(family[i] & family[j]) != 1:
                raise ValueError(f"sets {i} and {j} meet in {len(family[i] & family[j])} elements, expected 1")
    if set().union(*family) != ground:
        raise ValueError("the sets do not cover the ground set")
    common = set.intersection(*family)
    if len(common) != 1:
        raise CharacterizationError("sets satisfying the hypotheses have no common element", sets)
    return common.pop()


@dataclass
class CongruenceClasses:
    """Classes of mutually congruent cliques.

    ``clique_class[c]`` is the class of clique ``c``; ``points[t]`` is the
    sorted vertex set of class ``t``.  Classes are numbered by their
    smallest clique id.
    """

    cliques: List[List[int]]
    points: List[np.ndarray]
    clique_class: np.ndarray

    def __len__(self) -> int:
        return len(self.cliques)

    @cached_property
    def indicator(self) -> np.ndarray:
        n = int(max(p.max() for p in self.points)) + 1
        out = np.zeros((len(self), n), dtype=bool)
        for t, pts in enumerate(self.points):
            out[t, pts] = True
        return out

    @cached_property
    def overlaps(self) -> np.ndarray:
        ind = self.indicator.astype(np.int64)
        return ind @ ind.T

    def to_json(self) -> dict:
        return {"classes": [{"cliques": c, "points": p.tolist()} for c, p in zip(self.cliques, self.points)]}


def clique_contacts(cs: CliqueSystem) -> sparse.csr_array:
    """Number of class-3 pairs between each two cliques."""
    m = cs.membership
    a3 = sparse.csr_array(cs.scheme.adjacency(3))
    return (m @ a3 @ m.T).tocsr()


def congruence_classes(cs: CliqueSystem) -> CongruenceClasses:
    """Group cliques with no class-3 pair between them.

    Raises :class:`CharacterizationError` if congruence is not transitive
    or if a class is not ``T_C`` for its cliques.
    """
    k = len(cs)
    contacts = clique_contacts(cs).toarray()
    congruent = contacts == 0
    np.fill_diagonal(congruent, True)
    _, labels = connected_components(sparse.csr_array(congruent), directed=False)
    groups: Dict[int, List[int]] = {}
    for c in range(k):
        groups.setdefault(int(labels[c]), []).append(c)
    ordered = sorted(groups.values(), key=lambda g: g[0])
    clique_class = np.empty(k, dtype=np.int64)
    points = []
    for t, group in enumerate(ordered):
        g = np.array(group)
        block = congruent[np.ix_(g, g)]
        if not block.all():
            i, j = np.argwhere(~block)[0]
            a, b = int(g[i]), int(g[j])
            path = _congruence_path(congruent, a, b)
            raise CharacterizationError(f"congruence is not transitive: cliques {path} chain "
                                        f"but {a} and {b} share a class-3 pair", path)
        clique_class[g] = t
        pts = np.unique(cs.members[g].ravel())
        _, T = delta_T(cs, group[0])
        if not np.array_equal(pts, T):
            raise CharacterizationError(f"class of clique {group[0]} has {len(pts)} points but "
                                        f"T_C has {len(T)}", group[0])
        points.append(pts)
    return CongruenceClasses([list(g) for g in ordered], points, clique_class)


def _congruence_path(congruent: np.ndarray, a: int, b: int) -> List[int]:
    middle = np.nonzero(congruent[a] & congruent[b])[0]
    if middle.size:
        return [a, int(middle[0]), b]
    return [a, b]


def disjoint_cliques(cs: CliqueSystem, cc: CongruenceClasses, t: int, x: int) -> List[int]:
    """Cliques through ``x`` that miss class ``t``; raises unless there are ``r+1``."""
    inside = cc.indicator[t]
    if inside[x]:
        raise ValueError(f"vertex {x} lies in class {t}")
    out = [int(c) for c in cs.through[x] if not inside[cs.members[c]].any()]
    if len(out) != cs.r + 1:
        raise CharacterizationError(f"{len(out)} cliques through {x} miss class {t}, expected {cs.r + 1}",
                                    (t, x))
    return out


def exact_eigenvalues_2x2(m) -> Optional[Tuple[Fraction, Fraction]]:
    """Rational eigenvalues of a 2x2 matrix in decreasing order, or ``None``."""
    a, b = Fraction(m[0][0]), Fraction(m[0][1])
    c, d = Fraction(m[1][0]), Fraction(m[1][1])
    tr, det = a + d, a * d - b * c
    disc = tr * tr - 4 * det
    if disc < 0:
        return None
    num, den = disc.numerator, disc.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    root = Fraction(rn, rd)
    return (tr + root) / 2, (tr - root) / 2


def expected_quotients(r: int) -> Tuple[List[List[int]], List[List[int]]]:
    b1 = [[r - 1, r ** 3 - r ** 2], [r * r - r, (r - 1) * (r * r - r + 1)]]
    b2 = [[r * (r * r - r - 2), r * r * (r * r - 3 * r + 2)],
          [r * (r * r - 3 * r + 2), r * (r ** 3 - 3 * r * r + 4 * r - 4)]]
    return b1, b2


@dataclass
class Quotient:
    matrix: List[List[Fraction]]
    eigenvalues: Optional[Tuple[Fraction, Fraction]]
    irregular: Optional[Tuple[int, int, int]]  # (vertex, block, row sum) of a deviating row


def quotient_matrix(scheme: AssociationScheme, inside: np.ndarray, cls: int) -> Quotient:
    """Average row sums of ``A_cls`` over the partition ``{T, X \\ T}``."""
    adj = scheme.adjacency(cls)
    parts = [np.nonzero(inside)[0], np.nonzero(~inside)[0]]
    matrix = []
    irregular = None
    for a, rows in enumerate(parts):
        row = []
        for b, cols in enumerate(parts):
            sums = adj[np.ix_(rows, cols)].sum(axis=1)
            row.append(Fraction(int(sums.sum()), len(rows)))
            odd = np.nonzero(sums != sums[0])[0]
            if odd.size and irregular is None:
                irregular = (int(rows[odd[0]]), b, int(sums[odd[0]]))
        matrix.append(row)
    return Quotient(matrix, exact_eigenvalues_2x2(matrix), irregular)


def quotient_matrices(cs: CliqueSystem, cc: CongruenceClasses, t: int) -> Tuple[Quotient, Quotient]:
    inside = cc.indicator[t]
    return quotient_matrix(cs.scheme, inside, 1), quotient_matrix(cs.scheme, inside, 2)


@dataclass
class ThetaResult:
    pair: Tuple[int, int]
    outside: np.ndarray
    theta: np.ndarray  # (len(outside), 3)
    partition: Optional[Tuple[int, ...]]
    failure: Optional[Tuple[str, Any]]


def theta_profiles(cs: CliqueSystem, cc: CongruenceClasses, t1: int, t2: int) -> ThetaResult:
    """Counts of cliques through each outside vertex meeting ``T1 u T2`` in 0, 1, 2 points.

    When every outside vertex has a clique avoiding both classes, the
    classes of those cliques together with ``t1, t2`` form a partition of
    the vertex set, returned as a sorted tuple of class ids.
    """
    if cc.overlaps[t1, t2]:
        raise ValueError(f"classes {t1} and {t2} intersect")
    union = cc.indicator[t1] | cc.indicator[t2]
    hits = cs.membership @ union.astype(np.int64)
    outside = np.nonzero(~union)[0]
    theta = np.zeros((len(outside), 3), dtype=np.int64)
    zero_clique = np.full(len(outside), -1, dtype=np.int64)
    for k, x in enumerate(outside.tolist()):
        through = cs.through[x]
        h = hits[through]
        if h.max(initial=0) > 2:
            return ThetaResult((t1, t2), outside, theta, None,
                               ("clique meets the union in more than two points", (x, int(through[h.argmax()]))))
        theta[k] = np.bincount(h, minlength=3)
        free = through[h == 0]
        if free.size:
            zero_clique[k] = free[0]
    if (theta[:, 0] == 0).any():
        x = int(outside[np.argmax(theta[:, 0] == 0)])
        return ThetaResult((t1, t2), outside, theta, None, ("no clique through the vertex avoids both classes", x))
    if (theta[:, 0] > 1).any():
        x = int(outside[np.argmax(theta[:, 0] > 1)])
        return ThetaResult((t1, t2), outside, theta, None, ("several cliques through the vertex avoid both classes", x))
    classes = sorted({t1, t2} | set(cc.clique_class[zero_clique].tolist()))
    cover = cc.indicator[classes].sum(axis=0)
    if (cover != 1).any():
        x = int(np.argmax(cover != 1))
        return ThetaResult((t1, t2), outside, theta, None,
                           ("induced classes do not partition the vertices", (x, int(cover[x]))))
    return ThetaResult((t1, t2), outside, theta, tuple(classes), None)


def disjoint_class_pairs(cc: CongruenceClasses) -> List[Tuple[int, int]]:
    rows, cols = np.nonzero(np.triu(cc.overlaps == 0, k=1))
    return list(zip(rows.tolist(), cols.tolist()))


@dataclass
class Partitions:
    partitions: List[Tuple[int, ...]]
    results: List[ThetaResult]

    def __len__(self) -> int:
        return len(self.partitions)

    @property
    def failures(self) -> List[ThetaResult]:
        return [res for res in self.results if res.failure]

    def to_json(self) -> dict:
        return {"partitions": [list(p) for p in self.partitions]}


def partition_set(cs: CliqueSystem, cc: CongruenceClasses, threads: int = 1) -> Partitions:
    """Theta profiles for every disjoint pair of classes and the deduplicated partitions."""
    pairs = disjoint_class_pairs(cc)
    job = lambda pair: theta_profiles(cs, cc, *pair)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, pairs))
    else:
        results = [job(p) for p in pairs]
    found = sorted({res.partition for res in results if res.partition is not None})
    return Partitions(found, results)


# ---------------------------------------------------------------------------
# report-producing checks


def check_clique_cover(cs: CliqueSystem) -> Record:
    """Each class-3 pair on one clique of size ``r``; ``r^2+1`` cliques on every vertex."""
    scheme = cs.scheme
    r = cs.r
    n3 = scheme.valencies[3]
    per_vertex = np.array([len(t) for t in cs.through])
    expected_through = n3 // max(r - 1, 1)
    values = {"cliques": len(cs), "size": r, "per_vertex": sorted(set(per_vertex.tolist()))}
    a3 = scheme.relations == 3
    uncovered = np.argwhere(a3 & (cs.edge < 0))
    if uncovered.size:
        return Record("clique_cover", False, tuple(uncovered[0].tolist()), values)
    odd = np.nonzero(per_vertex != expected_through)[0]
    if odd.size or n3 % max(r - 1, 1):
        x = int(odd[0]) if odd.size else 0
        return Record("clique_cover", False, {"vertex": x, "cliques": int(per_vertex[x])}, values)
    values["closure_size"] = r - 2
    return Record("clique_cover", True, None, values)


def check_antipodal_cliques(cs: CliqueSystem) -> Record:
    rel = cs.scheme.relations
    anti = cs.clique_antipode
    for c in range(len(cs)):
        if anti[anti[c]] != c:
            return Record("antipodal_cliques", False, {"clique": c, "reason": "not an involution"})
        C, D = cs.members[c], cs.members[anti[c]]
        if np.intersect1d(C, D).size:
            return Record("antipodal_cliques", False, {"clique": c, "reason": "meets its antipodal clique"})
        block = rel[np.ix_(C, D)]
        expected = np.where(cs.antipode[C][:, None] == D[None, :], 4, 1)
        if not np.array_equal(block, expected):
            return Record("antipodal_cliques", False, {"clique": c, "reason": "cross relations not 1 except antipodes"})
    return Record("antipodal_cliques", True, None, {"pairs": len(cs) // 2})


def check_delta_structure(cs: CliqueSystem) -> Record:
    """Size of ``T_C``, degrees inside ``Delta_C``, antipode closure and one-neighbour contacts."""
    rel = cs.scheme.relations
    r = cs.r
    m = cs.membership
    c3 = m @ cs.scheme.adjacency(3)
    c1 = m @ cs.scheme.adjacency(1)
    t_size = r ** 3 - r ** 2
    for c in range(len(cs)):
        delta, T = delta_T(cs, c)
        witness = {"clique": c}
        if len(T) != t_size or len(np.unique(T)) != len(T):
            return Record("delta_structure", False, {**witness, "T_size": len(T)})
        sub = rel[np.ix_(delta, delta)]
        d1, d3 = (sub == 1).sum(axis=1), (sub == 3).sum(axis=1)
        if (d1 != r - 1).any() or (d3 != r - 1).any():
            k = int(np.argmax((d1 != r - 1) | (d3 != r - 1)))
            return Record("delta_structure", False, {**witness, "vertex": int(delta[k]),
                                                     "degrees": (int(d1[k]), int(d3[k]))})
        if not np.isin(cs.antipode[delta], delta).all():
            return Record("delta_structure", False, {**witness, "reason": "Delta_C not closed under antipodes"})
        in_c = np.zeros(cs.scheme.size, dtype=bool)
        in_c[cs.members[c]] = True
        touching = (c3[c] > 0) & ~in_c
        if touching.sum() != r ** 3 * (r - 1):
            return Record("delta_structure", False, {**witness, "touching": int(touching.sum())})
        bad = touching & ((c3[c] != 1) | (c1[c] != 1))
        if bad.any():
            z = int(np.argmax(bad))
            return Record("delta_structure", False, {**witness, "vertex": z,
                                                     "class3": int(c3[c][z]), "class1": int(c1[c][z])})
    return Record("delta_structure", True, None, {"T_size": t_size, "delta_size": t_size - 2 * r,
                                                  "delta_degrees": (r - 1, r - 1),
                                                  "touching": r ** 3 * (r - 1)})


def check_lambda_mu_sizes(cs: CliqueSystem, vertices: Optional[Iterable[int]] = None) -> Record:
    """``|lambda(y)| = r(r-1)`` and ``|mu(y)| = r+1``, disjoint, for ``y`` in class 2 to ``x``."""
    rel = cs.scheme.relations
    r = cs.r
    vertices = range(cs.scheme.size) if vertices is None else vertices
    checked = 0
    for x in vertices:
        lam, mu = _lambda_mu_masks(cs, x)
        ys = np.nonzero(rel[x] == 2)[0]
        sl = _popcount(lam[ys][:, None])
        sm = _popcount(mu[ys][:, None])
        both = _popcount((lam[ys] & mu[ys])[:, None])
        bad = (sl != r * (r - 1)) | (sm != r + 1) | (both != 0)
        if bad.any():
            k = int(np.argmax(bad))
            return Record("lambda_mu_sizes", False, {"x": x, "y": int(ys[k]), "lambda": int(sl[k]),
                                                     "mu": int(sm[k]), "overlap": int(both[k])})
        checked += len(ys)
    return Record("lambda_mu_sizes", True, None, {"pairs": checked, "lambda": r * (r - 1), "mu": r + 1})


def _lambda_mu_masks(cs: CliqueSystem, x: int) -> Tuple[np.ndarray, np.ndarray]:
    """Bit masks over the cliques through ``x`` (bit ``j`` = ``through[x][j]``) for every vertex."""
    rel = cs.scheme.relations
    mem = cs.members[cs.through[x]]
    block = rel[:, mem]  # (n, t, r)
    weights = np.left_shift(np.uint64(1), np.arange(mem.shape[0], dtype=np.uint64))
    lam = ((block == 3).any(axis=2) * weights).sum(axis=1, dtype=np.uint64)
    mu = ((block == 2).all(axis=2) * weights).sum(axis=1, dtype=np.uint64)
    return lam, mu


@dataclass
class Hypothesis1Stats:
    triples: int = 0
    m_plus_n: Tuple[int, ...] = ()
    n_values: Tuple[int, ...] = ()
    witness: Optional[dict] = None


def _hypothesis1_vertex(cs: CliqueSystem, packed3: np.ndarray, x: int, sample: Optional[int],
                        seed: int) -> Hypothesis1Stats:
    rel = cs.scheme.relations
    r = cs.r
    target = r * r - 2 * r
    r2 = np.nonzero(rel[x] == 2)[0]
    iu, iv = np.nonzero(np.triu(rel[np.ix_(r2, r2)] == 3, k=1))
    if sample is not None and len(iu) > sample:
        pick = np.sort(np.random.default_rng([seed, x]).choice(len(iu), sample, replace=False))
        iu, iv = iu[pick], iv[pick]
    u, v = r2[iu], r2[iv]
    lam, mu = _lambda_mu_masks(cs, x)
    m = np.bitwise_count(lam[u] & lam[v]).astype(np.int64)
    shared_mu = np.bitwise_count(mu[u] & mu[v]).astype(np.int64)
    n = _popcount(packed3[x][None, :] & packed3[u] & packed3[v])
    bad = (n > 1) | (m + n != target) | (shared_mu != m - r * r + 2 * r + 1)
    witness = None
    if bad.any():
        k = int(np.argmax(bad))
        witness = {"x": x, "u": int(u[k]), "v": int(v[k]), "m": int(m[k]), "n": int(n[k]),
                   "mu_overlap": int(shared_mu[k])}
    return Hypothesis1Stats(len(u), tuple(np.unique(m + n).tolist()), tuple(np.unique(n).tolist()), witness)


def check_hypothesis1(cs: CliqueSystem, sample: Optional[int] = None, seed: int = 0, threads: int = 1,
                      vertices: Optional[Sequence[int]] = None) -> Record:
    """``m + n = r^2 - 2r`` for ``u, v`` in class 2 to ``x`` and class 3 to each other.

    Also checks ``n <= 1`` and ``|mu(u) & mu(v)| = m - r^2 + 2r + 1``.  With
    ``sample`` set, at most that many ``(u, v)`` pairs are drawn per ``x``
    from a generator seeded by ``(seed, x)``; every ``x`` is still visited.
    """
    packed3 = _packed(cs.scheme.relations == 3)
    xs = range(cs.scheme.size) if vertices is None else vertices
    job = lambda x: _hypothesis1_vertex(cs, packed3, int(x), sample, seed)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            stats = list(pool.map(job, xs))
    else:
        stats = [job(x) for x in xs]
    total = sum(s.triples for s in stats)
    mn = sorted({v for s in stats for v in s.m_plus_n})
    nv = sorted({v for s in stats for v in s.n_values})
    values = {"triples": total, "m_plus_n": mn, "n": nv, "target": cs.r ** 2 - 2 * cs.r,
              "mode": "sampled" if sample is not None else "exhaustive"}
    if sample is not None:
        values.update(sample_per_vertex=sample, seed=seed)
    witness = next((s.witness for s in stats if s.witness), None)
    return Record("hypothesis1", witness is None, witness, values)


def check_delta_decomposition(cs: CliqueSystem) -> Record:
    """``Delta_C`` is a disjoint union of ``r^2-r-2`` cliques with no other class-3 pair."""
    r = cs.r
    rel = cs.scheme.relations
    want = r * r - r - 2
    for c in range(len(cs)):
        delta, _ = delta_T(cs, c)
        inside = np.zeros(cs.scheme.size, dtype=bool)
        inside[delta] = True
        contained = np.nonzero(cs.membership @ inside.astype(np.int64) == r)[0]
        covered = np.zeros(cs.scheme.size, dtype=np.int64)
        for d in contained:
            covered[cs.members[d]] += 1
        edges = int((rel[np.ix_(delta, delta)] == 3).sum()) // 2
        if (len(contained) != want or (covered[delta] != 1).any()
                or edges != want * r * (r - 1) // 2):
            return Record("delta_decomposition", False, {"clique": c, "contained": len(contained),
                                                         "class3_pairs": edges})
    return Record("delta_decomposition", True, None, {"cliques_per_delta": want})


def check_sunflowers(cs: CliqueSystem) -> Record:
    """At every ``z`` in ``Delta_C`` the mu-sets of the points of ``C`` share one clique inside ``Delta_C``.

    The family is first checked against the hypotheses of
    :func:`sunflower_check` (``r`` sets of size ``r+1``, pairwise meeting
    once, covering the cliques through ``z``), all on bit masks.
    """
    r = cs.r
    rel = cs.scheme.relations
    pairs = [(i, j) for i in range(r) for j in range(i + 1, r)]
    checked = 0
    for z in range(cs.scheme.size):
        _, mu = _lambda_mu_masks(cs, z)
        full = np.uint64((1 << len(cs.through[z])) - 1)
        owners = np.nonzero((rel[z, cs.members] == 2).all(axis=1))[0]
        fam = mu[cs.members[owners]]  # (owners, r)
        sizes = np.bitwise_count(fam)
        meets = np.stack([np.bitwise_count(fam[:, i] & fam[:, j]) for i, j in pairs], axis=1)
        union = np.bitwise_or.reduce(fam, axis=1)
        common = np.bitwise_and.reduce(fam, axis=1)
        bad = (sizes != r + 1).any(axis=1) | (meets != 1).any(axis=1) | (union != full)
        if bad.any():
            c = int(owners[np.argmax(bad)])
            return Record("sunflowers", False, {"vertex": z, "clique": c, "reason": "family violates the hypotheses"})
        if (np.bitwise_count(common) != 1).any():
            c = int(owners[np.argmax(np.bitwise_count(common) != 1)])
            return Record("sunflowers", False, {"vertex": z, "clique": c, "reason": "no single common clique"})
        bit = np.bitwise_count(common - np.uint64(1)).astype(np.int64)
        shared = cs.through[z][bit]
        inside = (rel[cs.members[shared][:, :, None], cs.members[owners][:, None, :]] == 2)
        if not inside.all():
            c = int(owners[np.argmax(~inside.all(axis=(1, 2)))])
            return Record("sunflowers", False, {"vertex": z, "clique": c, "reason": "common clique leaves Delta_C"})
        checked += len(owners)
    return Record("sunflowers", True, None, {"families": checked})


def check_classes(cs: CliqueSystem, cc: CongruenceClasses) -> Record:
    """Class sizes, contacts from outside vertices, and pairwise intersections."""
    r = cs.r
    rel = cs.scheme.relations
    values = {"classes": len(cc), "points": r ** 3 - r * r, "cliques": r * r - r}
    for t, (cl, pts) in enumerate(zip(cc.cliques, cc.points)):
        if len(cl) != r * r - r or len(pts) != r ** 3 - r * r:
            return Record("congruence_classes", False, {"class": t, "cliques": len(cl), "points": len(pts)}, values)
        edges = int((rel[np.ix_(pts, pts)] == 3).sum()) // 2
        if edges != len(cl) * r * (r - 1) // 2:
            return Record("congruence_classes", False, {"class": t, "class3_pairs": edges}, values)
        out = ~cc.indicator[t]
        for cls, want in ((3, r * r - r), (1, r * r - r), (2, r * (r - 1) * (r - 2))):
            counts = (rel[np.ix_(out, pts)] == cls).sum(axis=1)
            if (counts != want).any():
                x = int(np.nonzero(out)[0][np.argmax(counts != want)])
                return Record("congruence_classes", False, {"class": t, "vertex": x, "relation": cls,
                                                            "count": int(counts[np.argmax(counts != want)])}, values)
    sizes = cc.overlaps[~np.eye(len(cc), dtype=bool)]
    values["intersections"] = sorted(set(sizes.tolist()))
    if not set(values["intersections"]) <= {0, r * r - r}:
        return Record("congruence_classes", False, {"intersections": values["intersections"]}, values)
    meets = (cs.membership @ cs.membership.T).toarray() > 0
    for t1, t2 in zip(*np.nonzero(np.triu(cc.overlaps > 0, k=1))):
        block = meets[np.ix_(cc.cliques[t1], cc.cliques[t2])].sum(axis=1)
        if (block != 1).any():
            k = int(np.argmax(block != 1))
            return Record("congruence_classes", False, {"classes": (int(t1), int(t2)),
                                                        "clique": cc.cliques[t1][k], "meets": int(block[k])}, values)
    return Record("congruence_classes", True, None, values)


def check_quotients(cs: CliqueSystem, cc: CongruenceClasses) -> Record:
    r = cs.r
    b1, b2 = expected_quotients(r)
    e1 = ((r - 1) * (r * r + 1), -(r - 1) ** 2)
    e2 = (r * (r - 2) * (r * r + 1), 2 * r * (r - 2))
    for t in range(len(cc)):
        q1, q2 = quotient_matrices(cs, cc, t)
        for name, q, want, eig in (("B1", q1, b1, e1), ("B2", q2, b2, e2)):
            if q.irregular or q.matrix != want or q.eigenvalues != eig:
                return Record("quotient_matrices", False, {"class": t, "matrix": name, "got": q.matrix,
                                                           "eigenvalues": q.eigenvalues,
                                                           "irregular_row": q.irregular})
    return Record("quotient_matrices", True, None, {"B1": b1, "B2": b2, "B1_eigenvalues": e1,
                                                    "B2_eigenvalues": e2})


def check_disjoint_cliques(cs: CliqueSystem, cc: CongruenceClasses, limit: Optional[int] = None) -> Record:
    """``r+1`` cliques through ``x`` miss ``T``, their classes miss ``T``, the rest meet it once."""
    checked = 0
    for t in range(len(cc)):
        for x in np.nonzero(~cc.indicator[t])[0][:limit].tolist():
            try:
                ds = disjoint_cliques(cs, cc, t, x)
            except CharacterizationError as exc:
                return Record("disjoint_cliques", False, exc.witness, {"reason": str(exc)})
            for d in ds:
                if cc.overlaps[cc.clique_class[d], t]:
                    return Record("disjoint_cliques", False, {"class": t, "vertex": x, "clique": d})
            for c in set(cs.through[x].tolist()) - set(ds):
                if cc.indicator[t][cs.members[c]].sum() != 1:
                    return Record("disjoint_cliques", False, {"class": t, "vertex": x, "clique": c})
            checked += 1
    return Record("disjoint_cliques", True, None, {"pairs": checked, "disjoint": cs.r + 1})


def check_hypothesis2(cs: CliqueSystem, parts: Partitions) -> Record:
    """Theta identities, the double-count sums and ``theta_0 >= 1`` over all disjoint pairs."""
    r = cs.r
    sum2 = r * (r - 2) * (r * r - r) ** 2
    sum0 = (r * r - r) ** 2
    profiles = set()
    for res in parts.results:
        th = res.theta
        if res.failure:
            return Record("hypothesis2", False, {"pair": res.pair, "reason": res.failure[0],
                                                 "at": res.failure[1]})
        if ((th.sum(axis=1) != r * r + 1).any() or (th[:, 1] + 2 * th[:, 2] != 2 * (r * r - r)).any()
                or th[:, 2].sum() != sum2 or th[:, 0].sum() != sum0):
            return Record("hypothesis2", False, {"pair": res.pair, "theta2_sum": int(th[:, 2].sum()),
                                                 "theta0_sum": int(th[:, 0].sum())})
        profiles.update(map(tuple, th.tolist()))
    return Record("hypothesis2", True, None, {"pairs": len(parts.results), "profiles": sorted(profiles),
                                              "theta2_sum": sum2, "theta0_sum": sum0})


def check_partitions(cs: CliqueSystem, cc: CongruenceClasses, parts: Partitions) -> Record:
    r = cs.r
    sizes = sorted({len(p) for p in parts.partitions})
    on = np.zeros(len(cc), dtype=np.int64)
    for p in parts.partitions:
        on[list(p)] += 1
    values = {"partitions": len(parts), "sizes": sizes, "per_class": sorted(set(on.tolist()))}
    ok = sizes == [r + 1] and (on == r + 1).all()
    return Record("partitions", bool(ok), None if ok else {"class": int(np.argmax(on != r + 1))}, values)


def emit_json(cs: CliqueSystem, cc: Optional[CongruenceClasses] = None,
              parts: Optional[Partitions] = None) -> dict:
    doc = {"format_version": 1, **cs.to_json()}
    if cc is not None:
        doc.update(cc.to_json())
    if parts is not None:
        doc.update(parts.to_json())
    return doc
