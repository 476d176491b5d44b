"""Symmetric association schemes stored as dense relation tables."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import QuadrangleModel

log = logging.getLogger(__name__)


class SchemeError(ValueError):
    """A relation table that is not a symmetric association scheme."""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


class AssociationScheme:
    """A symmetric association scheme on ``0..size-1``.

    ``relations[x, y]`` is the class index of the pair.  The table is
    validated on construction unless ``verify=False``; intersection numbers
    are checked separately by :func:`intersection_numbers`.
    """

    def __init__(self, relations: np.ndarray, classes: Optional[int] = None, verify: bool = True,
                 labels: Optional[Sequence[int]] = None):
        rel = np.asarray(relations)
        if rel.ndim != 2 or rel.shape[0] != rel.shape[1]:
            raise SchemeError(f"relation table must be square, got shape {rel.shape}")
        if classes is None:
            classes = int(rel.max()) if rel.size else 0
        self.relations = rel.astype(np.uint8)
        self.relations.setflags(write=False)
        self.classes = classes
        self.labels = list(labels) if labels is not None else None
        if verify:
            self.verify()

    @property
    def size(self) -> int:
        return self.relations.shape[0]

    def __eq__(self, other) -> bool:
        return (isinstance(other, AssociationScheme) and self.classes == other.classes
                and np.array_equal(self.relations, other.relations))

    def __repr__(self) -> str:
        return f"AssociationScheme(size={self.size}, classes={self.classes})"

    def verify(self) -> None:
        """Raise :class:`SchemeError` unless the table is a symmetric, regular partition."""
        rel = self.relations
        n, d = self.size, self.classes
        bad = np.argwhere(rel > d)
        if bad.size:
            x, y = bad[0].tolist()
            raise SchemeError(f"relation index {rel[x, y]} at ({x},{y}) is out of range 0..{d}", (x, y))
        diag = np.nonzero(np.diagonal(rel) != 0)[0]
        if diag.size:
            x = int(diag[0])
            raise SchemeError(f"relation({x},{x}) = {rel[x, x]} is not the identity class", (x, x))
        off = rel == 0
        np.fill_diagonal(off, False)
        bad = np.argwhere(off)
        if bad.size:
            x, y = bad[0].tolist()
            raise SchemeError(f"distinct vertices ({x},{y}) are in the identity class", (x, y))
        bad = np.argwhere(rel != rel.T)
        if bad.size:
            x, y = bad[0].tolist()
            raise SchemeError(f"relation({x},{y}) = {rel[x, y]} but relation({y},{x}) = {rel[y, x]}", (x, y))
        for i in range(1, d + 1):
            deg = (rel == i).sum(axis=1)
            if deg[0] == 0:
                raise SchemeError(f"class {i} is empty", (0, i))
            odd = np.nonzero(deg != deg[0])[0]
            if odd.size:
                x = int(odd[0])
                raise SchemeError(f"class {i} is not regular: vertex {x} has {deg[x]} neighbours, "
                                  f"vertex 0 has {deg[0]}", (x, i))

    @cached_property
    def valencies(self) -> List[int]:
        return [int((self.relations[0] == i).sum()) for i in range(self.classes + 1)]

    def adjacency(self, i: int) -> np.ndarray:
        return self._adjacency[i]

    @cached_property
    def _adjacency(self) -> List[np.ndarray]:
        return [(self.relations == i).astype(np.int64) for i in range(self.classes + 1)]

    def neighbors(self, x: int, i: int) -> np.ndarray:
        return np.nonzero(self.relations[x] == i)[0]

    def relation(self, x: int, y: int) -> int:
        return int(self.relations[x, y])

    def to_json(self) -> dict:
        return {"format_version": 1, "size": self.size, "classes": self.classes,
                "relations": self.relations.ravel().tolist()}

    @classmethod
    def from_json(cls, doc: dict, verify: bool = True) -> "AssociationScheme":
        try:
            n = int(doc["size"])
            d = int(doc["classes"])
            flat = doc["relations"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemeError(f"malformed scheme document: {exc!r}") from exc
        if doc.get("format_version", 1) != 1:
            raise SchemeError(f"unsupported format_version {doc.get('format_version')}")
        if not isinstance(flat, list) or len(flat) != n * n:
            raise SchemeError(f"relations must be a flat list of {n}*{n} integers")
        arr = np.asarray(flat)
        if arr.dtype.kind not in "iu":
            raise SchemeError("relations must be integers")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            bad = int(np.argmax((arr < 0) | (arr > 255)))
            raise SchemeError(f"relation index {arr[bad]} out of range", divmod(bad, n))
        return cls(arr.reshape(n, n), d, verify=verify)


def save_scheme(scheme: AssociationScheme, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scheme.to_json()))


def load_scheme(path: Union[str, Path], verify: bool = True) -> AssociationScheme:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemeError(f"{path}: not valid JSON ({exc})") from exc
    return AssociationScheme.from_json(doc, verify=verify)


def classify_pair(model: QuadrangleModel, x: int, y: int) -> int:
    """Relation index of two outer points of ``model`` (ids in ``model.gq``)."""
    if x == y:
        return 0
    ox = model.subtended_ovoid(x).carrier
    oy = model.subtended_ovoid(y).carrier
    return _classify(model.gq.collinear(x, y), len(ox & oy), model.q, (x, y))


def _classify(collinear: bool, common: int, r: int, pair) -> int:
    if collinear:
        if common == 1:
            return 3
    elif common == r * r + 1:
        return 4
    elif common == 1:
        return 1
    elif common == r + 1:
        return 2
    raise SchemeError(f"pair {pair}: collinear={collinear}, |O_x & O_y|={common} matches no relation", pair)


def build_pw_scheme(model: QuadrangleModel) -> AssociationScheme:
    """The 4-class scheme on the points outside the subquadrangle.

    Vertex ``v`` is the outer point ``model.outer[v]``; ``scheme.labels``
    records that map.
    """
    r = model.q
    outer = model.outer
    n = len(outer)
    ov = model.ovoid_matrix
    common = ov @ ov.T
    pos = {p: i for i, p in enumerate(outer)}
    coll = np.zeros((n, n), dtype=bool)
    for L in model.gq.lines:
        members = [pos[p] for p in L if p in pos]
        for a in members:
            for b in members:
                if a != b:
                    coll[a, b] = True
    rel = np.full((n, n), 255, dtype=np.uint8)
    rel[coll & (common == 1)] = 3
    free = ~coll
    rel[free & (common == r * r + 1)] = 4
    rel[free & (common == 1)] = 1
    rel[free & (common == r + 1)] = 2
    np.fill_diagonal(rel, 0)
    bad = np.argwhere(rel == 255)
    if bad.size:
        a, b = bad[0].tolist()
        _classify(bool(coll[a, b]), int(common[a, b]), r, (outer[a], outer[b]))
    scheme = AssociationScheme(rel, 4, labels=outer)
    log.info("built PW scheme on %d vertices, valencies %s", n, scheme.valencies)
    return scheme


def count_intersection(scheme: AssociationScheme, x: int, y: int, i: int, j: int) -> int:
    """Number of ``z`` with ``(x,z)`` in class ``i`` and ``(z,y)`` in class ``j``."""
    rel = scheme.relations
    return int(np.count_nonzero((rel[x] == i) & (rel[y] == j)))


def base_pairs(scheme: AssociationScheme) -> List[Tuple[int, int]]:
    """The first pair (row-major) in each class."""
    out = []
    for k in range(scheme.classes + 1):
        y = int(np.argmax(scheme.relations[0] == k))
        out.append((0, y))
    return out


def intersection_numbers(scheme: AssociationScheme, threads: int = 1) -> np.ndarray:
    """``p[k, i, j]`` counted at one base pair per class and verified everywhere.

    Raises :class:`SchemeError` with the offending pair when some count is
    not constant on its class.
    """
    d = scheme.classes
    p = np.zeros((d + 1, d + 1, d + 1), dtype=np.int64)
    bases = base_pairs(scheme)
    for k, (x, y) in enumerate(bases):
        for i in range(d + 1):
            for j in range(d + 1):
                p[k, i, j] = count_intersection(scheme, x, y, i, j)

    rel = scheme.relations
    masks = [rel == k for k in range(d + 1)]

    def check(ij):
        i, j = ij
        prod = scheme.adjacency(i) @ scheme.adjacency(j)
        for k in range(d + 1):
            bad = np.argwhere(masks[k] & (prod != p[k, i, j]))
            if bad.size:
                x, y = bad[0].tolist()
                return (f"p^{k}_{i}{j} is not constant: {int(prod[x, y])} at ({x},{y}) "
                        f"vs {int(p[k, i, j])} at {bases[k]}", (x, y, i, j, k))
        return None

    pairs = [(i, j) for i in range(d + 1) for j in range(i, d + 1)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(check, pairs))
    else:
        results = [check(ij) for ij in pairs]
    for res in results:
        if res:
            raise SchemeError(*res)
    if not np.array_equal(p, p.transpose(0, 2, 1)):
        raise SchemeError("intersection numbers are not symmetric in i, j")
    return p


def compare_tensors(computed: np.ndarray, expected: np.ndarray) -> Optional[Tuple[int, int, int]]:
    """First index ``(k, i, j)`` where the tensors differ, or ``None``."""
    if computed.shape != expected.shape:
        return (-1, -1, -1)
    bad = np.argwhere(computed != expected)
    return tuple(int(v) for v in bad[0]) if bad.size else None
