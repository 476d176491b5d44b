"""Closed-form parameters of the Penttila-Williford 4-class scheme.

Everything here is a function of the quadrangle order ``r`` alone and serves
as the comparison target for quantities counted on concrete schemes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np

D = 4  # number of classes

# Vanishing Krein parameters used in the triple-intersection argument,
# as unordered index triples; every permutation vanishes too.
KREIN_ZERO_BASE = ((1, 1, 1), (1, 3, 1), (1, 4, 1), (1, 2, 2), (1, 4, 2), (1, 3, 3), (1, 4, 4))


def vertex_count(r: int) -> int:
    return r * r * (r * r - 1)


def order_from_size(size: int) -> Optional[int]:
    """The ``r >= 3`` with ``r^2 (r^2 - 1) = size``, if any."""
    r = 3
    while vertex_count(r) < size:
        r += 1
    return r if vertex_count(r) == size else None


def valencies(r: int) -> List[int]:
    return [1, (r - 1) * (r * r + 1), (r * r - 2 * r) * (r * r + 1), (r - 1) * (r * r + 1), 1]


def multiplicities(r: int) -> List[Fraction]:
    h = Fraction(1, 2)
    return [Fraction(1), h * r * (r - 1) ** 2, h * (r - 2) * (r + 1) * (r * r + 1),
            h * r * (r - 1) * (r * r + 1), h * r * (r * r + 1)]


def intersection_tensor(r: int) -> np.ndarray:
    """``p[k, i, j]`` for ``0 <= i, j, k <= 4`` from the printed tables.

    ``p[4, 2, 2] = n_2``: the antipode of ``x`` shares every class-2
    neighbour with ``x``, so the row sums force it.
    """
    n = valencies(r)
    p = np.zeros((D + 1, D + 1, D + 1), dtype=np.int64)
    for k in range(D + 1):
        p[k, 0, k] = p[k, k, 0] = 1
    for i in range(D + 1):
        p[0, i, i] = n[i]
    a = r * r * (r - 2)
    b1 = r ** 4 - 4 * r ** 3 + 5 * r * r - 2 * r
    b2 = r ** 4 - 4 * r ** 3 + 7 * r * r - 8 * r
    c = (r - 1) ** 3
    e = r * (r - 1)
    tables = {
        1: [[r * r, a, r - 2, 0],
            [a, b1, a, 0],
            [r - 2, a, r * r, 1],
            [0, 0, 1, 0]],
        2: [[e, c, e, 0],
            [c, b2, c, 1],
            [e, c, e, 0],
            [0, 1, 0, 0]],
        3: [[r - 2, a, r * r, 1],
            [a, b1, a, 0],
            [r * r, a, r - 2, 0],
            [1, 0, 0, 0]],
        4: [[0, 0, (r - 1) * (r * r + 1), 0],
            [0, r * (r - 2) * (r * r + 1), 0, 0],
            [(r - 1) * (r * r + 1), 0, 0, 0],
            [0, 0, 0, 0]],
    }
    for k, table in tables.items():
        p[k, 1:, 1:] = np.array(table, dtype=np.int64)
    return p


def first_eigenmatrix(r: int) -> List[List[int]]:
    """Rows indexed by eigenspaces, columns by relations."""
    s = r * r + 1
    return [
        [1, (r - 1) * s, r * (r - 2) * s, (r - 1) * s, 1],
        [1, s, 0, -s, -1],
        [1, r - 1, -2 * r, r - 1, 1],
        [1, -r + 1, 0, r - 1, -1],
        [1, -(r - 1) ** 2, 2 * r * (r - 2), -(r - 1) ** 2, 1],
    ]


def second_eigenmatrix(r: int) -> List[List[Fraction]]:
    """Rows indexed by relations, columns by eigenspaces."""
    h = Fraction(1, 2)
    s = r * r + 1
    rows = [
        [1, r * (r - 1) ** 2 * h, (r - 2) * (r + 1) * s * h, r * (r - 1) * s * h, r * s * h],
        [1, r * (r - 1) * h, (r - 2) * (r + 1) * h, -r * (r - 1) * h, -r * (r - 1) * h],
        [1, 0, -(r + 1), 0, r],
        [1, -r * (r - 1) * h, (r - 2) * (r + 1) * h, r * (r - 1) * h, -r * (r - 1) * h],
        [1, -r * (r - 1) ** 2 * h, (r - 2) * (r + 1) * s * h, -r * (r - 1) * s * h, r * s * h],
    ]
    return [[Fraction(v) for v in row] for row in rows]


@dataclass(frozen=True)
class PWParameters:
    r: int
    size: int
    valencies: List[int]
    multiplicities: List[Fraction]
    p: np.ndarray
    P: List[List[int]]
    Q: List[List[Fraction]]


def expected_parameters(r: int) -> PWParameters:
    if r < 3:
        raise ValueError("the parameter tables are stated for r >= 3")
    return PWParameters(r, vertex_count(r), valencies(r), multiplicities(r), intersection_tensor(r),
                        first_eigenmatrix(r), second_eigenmatrix(r))


def krein_zero_triples() -> List[tuple]:
    """All ordered index triples obtained by permuting :data:`KREIN_ZERO_BASE`."""
    from itertools import permutations

    return sorted({t for base in KREIN_ZERO_BASE for t in permutations(base)})
