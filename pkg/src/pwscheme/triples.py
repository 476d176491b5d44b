"""Triple intersection numbers: exact linear systems and brute-force counts.

For vertices ``x, y, u`` with ``(x,y)`` in class ``A``, ``(y,u)`` in ``B`` and
``(u,x)`` in ``C``, the unknown ``[l m n]`` counts the ``z`` with ``(x,z)``,
``(y,z)``, ``(u,z)`` in classes ``l``, ``m``, ``n``.  Unknowns with every
index in ``1..d`` are ordered by ``(l-1) d^2 + (m-1) d + (n-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import permutations, product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .linalg import InconsistentSystem, Row
from .scheme import AssociationScheme

Triple = Tuple[int, int, int]


def unknowns(d: int = 4) -> List[Triple]:
    return list(product(range(1, d + 1), repeat=3))


def unknown_index(l: int, m: int, n: int, d: int = 4) -> int:
    return (l - 1) * d * d + (m - 1) * d + (n - 1)


def unknown_label(idx: int, d: int = 4) -> str:
    l, rest = divmod(idx, d * d)
    m, n = divmod(rest, d)
    return f"[{l + 1} {m + 1} {n + 1}]"


def parse_label(label: str, d: int = 4) -> int:
    l, m, n = (int(t) for t in label.strip("[] ").split())
    return unknown_index(l, m, n, d)


def _delta(a: int, b: int) -> int:
    return int(a == b)


@dataclass
class TripleSystem:
    """Equations in the ``d^3`` unknowns ``[l m n]``.

    ``kinds[i]`` tags row ``i`` as ``"sum"``, ``"symmetry"``, ``"krein"`` or
    ``"pin"``.
    """

    triple: Triple
    d: int
    rows: List[Row]
    consts: List[Fraction]
    kinds: List[str]
    symmetry_used: bool = False
    krein_used: bool = False

    @property
    def n_unknowns(self) -> int:
        return self.d ** 3

    def count(self, kind: str) -> int:
        return self.kinds.count(kind)

    def with_pins(self, pins: Dict[int, Fraction]) -> "TripleSystem":
        rows = self.rows + [{i: Fraction(1)} for i in sorted(pins)]
        consts = self.consts + [Fraction(pins[i]) for i in sorted(pins)]
        return replace(self, rows=rows, consts=consts, kinds=self.kinds + ["pin"] * len(pins))

    def residuals(self, vector: Sequence) -> List[Fraction]:
        return [sum((c * vector[i] for i, c in row.items()), Fraction(0)) - b
                for row, b in zip(self.rows, self.consts)]

    def satisfied_by(self, vector: Sequence, kinds: Optional[Sequence[str]] = None) -> bool:
        for row, b, kind in zip(self.rows, self.consts, self.kinds):
            if kinds is not None and kind not in kinds:
                continue
            if sum((c * vector[i] for i, c in row.items()), Fraction(0)) != b:
                return False
        return True


def symmetry_maps(A: int, B: int, C: int) -> List[Tuple[int, int, int]]:
    """Position permutations of ``[l m n]`` that leave the system unchanged.

    Swapping ``x`` and ``y`` is allowed when ``B = C``, ``y`` and ``u`` when
    ``A = C``, ``x`` and ``u`` when ``A = B``; all of S3 when ``A = B = C``.
    """
    gens = []
    if B == C:
        gens.append((1, 0, 2))
    if A == C:
        gens.append((0, 2, 1))
    if A == B:
        gens.append((2, 1, 0))
    if len(gens) > 1:
        return [s for s in permutations(range(3)) if s != (0, 1, 2)]
    return gens


def build_system(p: np.ndarray, A: int, B: int, C: int, symmetry: bool = False, krein: bool = False,
                 Q: Optional[Sequence[Sequence]] = None,
                 krein_triples: Optional[Sequence[Triple]] = None) -> TripleSystem:
    """Assemble the sum equations, plus optional symmetry and Krein rows.

    ``p`` is the intersection tensor ``p[k, i, j]``.  Krein rows need the
    second eigenmatrix ``Q`` and the list of ordered triples ``(r, s, t)``
    with vanishing Krein parameter.
    """
    d = p.shape[0] - 1
    for v in (A, B, C):
        if not 1 <= v <= d:
            raise ValueError(f"class index {v} outside 1..{d}")
    idx = lambda l, m, n: unknown_index(l, m, n, d)
    rng = range(1, d + 1)
    rows: List[Row] = []
    consts: List[Fraction] = []
    kinds: List[str] = []
    for m, n in product(rng, rng):
        rows.append({idx(l, m, n): Fraction(1) for l in rng})
        consts.append(Fraction(int(p[B, m, n]) - _delta(m, A) * _delta(n, C)))
    for l, n in product(rng, rng):
        rows.append({idx(l, m, n): Fraction(1) for m in rng})
        consts.append(Fraction(int(p[C, l, n]) - _delta(l, A) * _delta(n, B)))
    for l, m in product(rng, rng):
        rows.append({idx(l, m, n): Fraction(1) for n in rng})
        consts.append(Fraction(int(p[A, l, m]) - _delta(l, C) * _delta(m, B)))
    kinds += ["sum"] * len(rows)

    if symmetry:
        seen = set()
        for t in product(rng, repeat=3):
            for s in symmetry_maps(A, B, C):
                image = tuple(t[k] for k in s)
                a, b = idx(*t), idx(*image)
                if a != b and (min(a, b), max(a, b)) not in seen:
                    seen.add((min(a, b), max(a, b)))
                    rows.append({a: Fraction(1), b: Fraction(-1)})
                    consts.append(Fraction(0))
                    kinds.append("symmetry")

    if krein:
        if Q is None or krein_triples is None:
            raise ValueError("Krein rows need Q and the vanishing triples")
        Qf = [[Fraction(v) for v in row] for row in Q]
        for r, s, t in krein_triples:
            row = {}
            for l, m, n in product(rng, repeat=3):
                c = Qf[l][r] * Qf[m][s] * Qf[n][t]
                if c:
                    row[idx(l, m, n)] = c
            rows.append(row)
            consts.append(-Qf[0][r] * Qf[A][s] * Qf[C][t] - Qf[A][r] * Qf[0][s] * Qf[B][t]
                          - Qf[C][r] * Qf[B][s] * Qf[0][t])
            kinds.append("krein")
    return TripleSystem((A, B, C), d, rows, consts, kinds, symmetry, krein)


@dataclass
class SolutionSpace:
    """Affine solution set ``particular + span(basis)`` of a triple system."""

    system: TripleSystem
    particular: List[Fraction]
    basis: List[List[Fraction]]
    free: List[int]
    echelon_rows: List[Tuple[Row, Fraction]] = field(repr=False, default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def expression(self, idx: int) -> Tuple[Fraction, Tuple[Fraction, ...]]:
        """Value of unknown ``idx`` as ``(constant, coefficients on the basis)``."""
        return self.particular[idx], tuple(b[idx] for b in self.basis)

    @property
    def pinned(self) -> Dict[int, Fraction]:
        return {i: self.particular[i] for i in range(self.system.n_unknowns)
                if all(b[i] == 0 for b in self.basis)}

    def holds(self, v: int, u: int, factor, offset=0) -> bool:
        """True if ``[v] = factor * [u] + offset`` on the whole space."""
        cv, bv = self.expression(v)
        cu, bu = self.expression(u)
        factor = Fraction(factor)
        return cv == factor * cu + offset and all(a == factor * b for a, b in zip(bv, bu))

    def contains(self, vector: Sequence) -> bool:
        return self.system.satisfied_by(vector)

    def dependencies(self) -> List[dict]:
        """Each non-pinned, non-free unknown in terms of the free unknowns."""
        free = set(self.free)
        out = []
        for i in range(self.system.n_unknowns):
            if i in free or i in self.pinned:
                continue
            const, coeffs = self.expression(i)
            terms = {unknown_label(f, self.system.d): c for f, c in zip(self.free, coeffs) if c}
            out.append({"unknown": unknown_label(i, self.system.d), "constant": const, "terms": terms})
        return out

    def to_json(self) -> dict:
        fmt = linalg.format_rational
        d = self.system.d
        return {
            "triple": list(self.system.triple),
            "pinned": {unknown_label(i, d): fmt(v) for i, v in sorted(self.pinned.items())},
            "free": [unknown_label(f, d) for f in self.free],
            "dependencies": [{"unknown": dep["unknown"], "constant": fmt(dep["constant"]),
                              "terms": {k: fmt(v) for k, v in dep["terms"].items()}}
                             for dep in self.dependencies()],
        }


def solve(system: TripleSystem) -> SolutionSpace:
    """Exact reduced row echelon solve; raises :class:`InconsistentSystem`."""
    sol = linalg.solve(system.rows, system.consts, system.n_unknowns)
    ech = sol.echelon
    rows = list(zip(ech.rows[:ech.rank], ech.consts[:ech.rank]))
    return SolutionSpace(system, sol.particular, sol.basis, sol.free, rows)


class NonnegativityContradiction(ArithmeticError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class Propagation:
    """Result of :func:`nonneg_propagate`.

    ``stages`` lists ``(rule, pinned unknowns)`` in firing order and
    ``spaces[i]`` is the space that stage ``i`` was applied to;
    ``spaces[-1]`` is the final space.
    """

    pins: Dict[int, Fraction]
    stages: List[Tuple[str, List[int]]]
    spaces: List[SolutionSpace]

    @property
    def space(self) -> SolutionSpace:
        return self.spaces[-1]

    def space_before(self, rule: str) -> SolutionSpace:
        """The space the first ``rule`` stage acted on, or the final space."""
        for k, (name, _) in enumerate(self.stages):
            if name == rule:
                return self.spaces[k]
        return self.spaces[-1]


def _same_sign_rows(space: SolutionSpace) -> Tuple[List[int], Optional[str]]:
    """Unknowns forced to zero by rows ``sum c_i u_i = b`` with one-signed ``c``."""
    found: List[int] = []
    for row, b in zip(space.system.rows, space.system.consts):
        if not row:
            continue
        signs = {c > 0 for c in row.values()}
        if len(signs) != 1:
            continue
        positive = signs.pop()
        if b == 0:
            found.extend(row)
        elif (b < 0) == positive:
            labels = " + ".join(f"{c}*{unknown_label(i, space.system.d)}" for i, c in sorted(row.items()))
            return [], f"{labels} = {b} has no nonnegative solution"
    return sorted(set(found)), None


def _opposite_pairs(space: SolutionSpace) -> List[Tuple[int, int, Fraction]]:
    """Pairs ``(u, v, c)`` with ``[v] = -c [u]``, ``c > 0``, on the whole space."""
    pinned = space.pinned
    n = space.system.n_unknowns
    exprs = {i: space.expression(i) for i in range(n) if not (i in pinned and pinned[i] == 0)}
    out = []
    keys = sorted(exprs)
    for a_pos, u in enumerate(keys):
        cu, bu = exprs[u]
        pivot = next((k for k, x in enumerate(bu) if x), None)
        for v in keys[a_pos + 1:]:
            cv, bv = exprs[v]
            if pivot is not None:
                if not bv[pivot]:
                    continue
                ratio = bv[pivot] / bu[pivot]
            elif cu:
                ratio = cv / cu
            else:
                continue
            if ratio >= 0:
                continue
            if cv == ratio * cu and all(x == ratio * y for x, y in zip(bv, bu)):
                out.append((u, v, -ratio))
    return out


def nonneg_propagate(space: SolutionSpace) -> Propagation:
    """Pin unknowns to zero using that every ``[l m n]`` is a count.

    Two rules are iterated to a fixpoint, the first taking priority:

    * an equation of the system whose coefficients share one sign and whose
      constant is zero forces all its unknowns to zero;
    * if ``[v] = -c [u]`` with ``c > 0`` on the solution space, both vanish.

    Raises :class:`NonnegativityContradiction` when a pin clashes with an
    existing value or a count is forced negative.
    """
    pins: Dict[int, Fraction] = {}
    stages: List[Tuple[str, List[int]]] = []
    spaces = [space]
    d = space.system.d
    while True:
        current = spaces[-1]
        pinned = current.pinned
        for i, val in sorted(pinned.items()):
            if val < 0:
                raise NonnegativityContradiction(f"{unknown_label(i, d)} = {val} is negative", i)
        forced, bad = _same_sign_rows(current)
        if bad:
            raise NonnegativityContradiction(bad)
        rule = "sign"
        forced = [i for i in forced if pinned.get(i) != 0]
        if not forced:
            rule = "pair"
            forced = sorted({i for u, v, _ in _opposite_pairs(current) for i in (u, v)})
        if not forced:
            break
        for i in forced:
            if i in pinned and pinned[i] != 0:
                raise NonnegativityContradiction(
                    f"{unknown_label(i, d)} is pinned to {pinned[i]} but nonnegativity forces 0", i)
        new = {i: Fraction(0) for i in forced}
        pins.update(new)
        stages.append((rule, forced))
        try:
            spaces.append(solve(current.system.with_pins(new)))
        except InconsistentSystem as exc:
            raise NonnegativityContradiction(f"pinning {[unknown_label(i, d) for i in forced]} "
                                             f"makes the system inconsistent: {exc}") from exc
    return Propagation(pins, stages, spaces)


def propagation_to_json(prop: Propagation) -> dict:
    d = prop.space.system.d
    doc = prop.space.to_json()
    doc["propagation"] = [{"rule": rule, "pinned": [unknown_label(i, d) for i in idx]}
                          for rule, idx in prop.stages]
    return doc


def triple_numbers_bruteforce(scheme: AssociationScheme, x: int, y: int, u: int) -> np.ndarray:
    """``counts[l, m, n]`` over all ``z``, including the index-0 layers."""
    d = scheme.classes
    rel = scheme.relations
    counts = np.zeros((d + 1,) * 3, dtype=np.int64)
    np.add.at(counts, (rel[x], rel[y], rel[u]), 1)
    return counts


def as_unknown_vector(counts: np.ndarray) -> List[Fraction]:
    """The ``d^3`` entries with every index nonzero, in unknown order."""
    return [Fraction(int(v)) for v in counts[1:, 1:, 1:].ravel()]


def triangles(scheme: AssociationScheme, A: int, B: int, C: int):
    """Yield every ordered triple ``(x, y, u)`` with the given class pattern."""
    rel = scheme.relations
    for x in range(scheme.size):
        for y in np.nonzero(rel[x] == A)[0].tolist():
            for u in np.nonzero((rel[y] == B) & (rel[x] == C))[0].tolist():
                yield x, y, u


def bruteforce_profiles(scheme: AssociationScheme, A: int, B: int, C: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Distinct brute-force count arrays over all triples with pattern ``(A, B, C)``.

    Returns ``(profiles, multiplicity, n_triples)`` where ``profiles`` has
    shape ``(k, d+1, d+1, d+1)``.
    """
    d = scheme.classes
    rel = scheme.relations.astype(np.int64)
    base = d + 1
    seen: Dict[bytes, int] = {}
    arrays: List[np.ndarray] = []
    mult: List[int] = []
    total = 0
    for x in range(scheme.size):
        ys = np.nonzero(rel[x] == A)[0]
        for y in ys.tolist():
            us = np.nonzero((rel[y] == B) & (rel[x] == C))[0]
            if not us.size:
                continue
            codes = (rel[x] * base + rel[y])[None, :] * base + rel[us]
            counts = np.zeros((us.size, base ** 3), dtype=np.int64)
            rows = np.repeat(np.arange(us.size), scheme.size)
            np.add.at(counts, (rows, codes.ravel()), 1)
            total += us.size
            for c in counts:
                key = c.tobytes()
                if key in seen:
                    mult[seen[key]] += 1
                else:
                    seen[key] = len(arrays)
                    arrays.append(c.reshape(base, base, base))
                    mult.append(1)
    shape = (0, base, base, base)
    profiles = np.array(arrays) if arrays else np.zeros(shape, dtype=np.int64)
    return profiles, np.array(mult, dtype=np.int64), total
