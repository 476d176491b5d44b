"""Eigenmatrices, Krein parameters and the spherical Gram matrix, all exact."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .scheme import AssociationScheme

Matrix = List[List[Fraction]]


class SpectralError(ValueError):
    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


@dataclass
class Eigenmatrices:
    """``P`` has rows indexed by eigenspaces, ``Q`` rows indexed by relations."""

    P: Matrix
    Q: Matrix
    size: int

    @property
    def d(self) -> int:
        return len(self.P) - 1

    @property
    def valencies(self) -> List[Fraction]:
        return list(self.P[0])

    @property
    def multiplicities(self) -> List[Fraction]:
        return list(self.Q[0])

    def to_json(self) -> dict:
        fmt = linalg.format_rational
        return {"P": [[fmt(v) for v in row] for row in self.P],
                "Q": [[fmt(v) for v in row] for row in self.Q],
                "multiplicities": [fmt(v) for v in self.multiplicities]}


def _frac(m) -> Matrix:
    return [[Fraction(v) for v in row] for row in m]


def check_algebra(eig: Eigenmatrices) -> Optional[str]:
    """``PQ = QP = |X| I`` and ``n_j Q[j][i] = m_i P[i][j]``; ``None`` if all hold."""
    n, d = eig.size, eig.d
    for name, prod in (("PQ", linalg.matmul(eig.P, eig.Q)), ("QP", linalg.matmul(eig.Q, eig.P))):
        for i, j in product(range(d + 1), repeat=2):
            if prod[i][j] != (n if i == j else 0):
                return f"{name}[{i}][{j}] = {prod[i][j]}"
    nv, mv = eig.valencies, eig.multiplicities
    for i, j in product(range(d + 1), repeat=2):
        if nv[j] * eig.Q[j][i] != mv[i] * eig.P[i][j]:
            return f"n_{j} Q[{j}][{i}] != m_{i} P[{i}][{j}]"
    return None


def check_characters(p: np.ndarray, eig: Eigenmatrices) -> Optional[str]:
    """Each row of ``P`` must be a character of the intersection algebra."""
    d = eig.d
    for e in range(d + 1):
        row = eig.P[e]
        for i, j in product(range(d + 1), repeat=2):
            rhs = sum(int(p[k, i, j]) * row[k] for k in range(d + 1))
            if row[i] * row[j] != rhs:
                return f"row {e} of P fails A_{i} A_{j} at ({row[i] * row[j]} vs {rhs})"
    return None


def _lcm_denominator(m: Matrix) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for row in m for v in row), 1)


def check_idempotents(scheme: AssociationScheme, eig: Eigenmatrices) -> Optional[str]:
    """Build ``E_i = |X|^-1 sum_j Q[j][i] A_j`` and test the idempotent identities.

    Works on the integer matrices ``F_i = D |X| E_i`` where ``D`` clears the
    denominators of ``Q``:  ``F_i F_j = delta_ij D |X| F_i``,
    ``sum_i F_i = D |X| I`` and ``A_j F_i = P[i][j] F_i``.
    """
    n, d = scheme.size, eig.d
    if n != eig.size or d != scheme.classes:
        return "eigenmatrix shape does not match the scheme"
    D = _lcm_denominator(eig.Q)
    coeff = [[int(eig.Q[j][i] * D) for j in range(d + 1)] for i in range(d + 1)]
    bound = n * (sum(abs(c) for row in coeff for c in row)) ** 2
    if bound >= 2 ** 62:
        raise SpectralError("entries too large for exact int64 verification")
    A = [scheme.adjacency(j) for j in range(d + 1)]
    F = [sum(c * a for c, a in zip(coeff[i], A)) for i in range(d + 1)]
    scale = D * n
    total = sum(F)
    if not np.array_equal(total, scale * np.eye(n, dtype=np.int64)):
        return "sum of idempotents is not the identity"
    for i in range(d + 1):
        for j in range(i, d + 1):
            prod = F[i] @ F[j]
            want = scale * F[i] if i == j else np.zeros_like(prod)
            if not np.array_equal(prod, want):
                return f"E_{i} E_{j} != {'E_' + str(i) if i == j else '0'}"
    for i in range(d + 1):
        for j in range(1, d + 1):
            val = Fraction(eig.P[i][j])
            if not np.array_equal(val.denominator * (A[j] @ F[i]), val.numerator * F[i]):
                return f"A_{j} E_{i} != P[{i}][{j}] E_{i}"
    return None


def _character_rows(p: np.ndarray) -> List[List[Fraction]]:
    import sympy

    d = p.shape[0] - 1
    mats = [[[Fraction(int(p[k, i, j])) for k in range(d + 1)] for j in range(d + 1)] for i in range(d + 1)]
    for weights in ([0, 1] + [0] * (d - 1), list(range(d + 1)), [0] + [3 ** i for i in range(d)]):
        M = [[sum(w * mats[i][j][k] for i, w in enumerate(weights)) for k in range(d + 1)] for j in range(d + 1)]
        lam = sympy.Symbol("lam")
        poly = sympy.Matrix(M).charpoly(lam)
        _, factors = sympy.factor_list(poly.as_expr(), lam)
        if any(sympy.degree(f, lam) > 1 for f, _ in factors):
            raise SpectralError("intersection algebra has irrational eigenvalues")
        if any(e > 1 for _, e in factors):
            continue
        rows = []
        for f, _ in factors:
            c1, c0 = sympy.Poly(f, lam).all_coeffs()
            root = sympy.Rational(-c0, c1)
            theta = Fraction(int(root.p), int(root.q))
            shifted = [[M[a][b] - (theta if a == b else 0) for b in range(d + 1)] for a in range(d + 1)]
            basis = linalg.nullspace(shifted)
            if len(basis) != 1 or basis[0][0] == 0:
                raise SpectralError("eigenvector is not normalisable")
            v = basis[0]
            rows.append([x / v[0] for x in v])
        return rows
    raise SpectralError("could not separate the eigenspaces of the intersection algebra")


def eigenmatrices_from_intersection(p: np.ndarray, size: int) -> Eigenmatrices:
    """Character table of the intersection algebra, for rational spectra only.

    The trivial character comes first; the rest are sorted by decreasing
    eigenvalue of ``A_1`` (then ``A_2``, ...).
    """
    rows = _character_rows(p)
    val = [Fraction(int(p[0, i, i])) for i in range(p.shape[0])]
    trivial = [r for r in rows if r == val]
    if len(trivial) != 1:
        raise SpectralError("trivial character not found")
    rest = sorted((r for r in rows if r != val), key=lambda r: [-x for x in r[1:]])
    P = trivial + rest
    Q = [[v * size for v in row] for row in linalg.inverse(P)]
    return Eigenmatrices(P, Q, size)


def eigenmatrices(scheme: AssociationScheme, p: np.ndarray,
                  candidate: Optional[Tuple[Sequence, Sequence]] = None) -> Eigenmatrices:
    """Certify a candidate ``(P, Q)`` against the scheme, or derive one.

    Raises :class:`SpectralError` naming the first identity that fails.
    """
    if candidate is not None:
        eig = Eigenmatrices(_frac(candidate[0]), _frac(candidate[1]), scheme.size)
    else:
        eig = eigenmatrices_from_intersection(p, scheme.size)
    for check in (lambda: check_algebra(eig), lambda: check_characters(p, eig),
                  lambda: check_idempotents(scheme, eig)):
        msg = check()
        if msg:
            raise SpectralError(msg)
    return eig


def krein_parameters(eig: Eigenmatrices) -> List[List[List[Fraction]]]:
    """``q[k][i][j] = (|X| m_k)^-1 sum_l n_l Q[l][i] Q[l][j] Q[l][k]``.

    Raises :class:`SpectralError` on a negative value.
    """
    d, n = eig.d, eig.size
    nv, mv, Q = eig.valencies, eig.multiplicities, eig.Q
    out = [[[Fraction(0)] * (d + 1) for _ in range(d + 1)] for _ in range(d + 1)]
    for k, i, j in product(range(d + 1), repeat=3):
        val = sum(nv[l] * Q[l][i] * Q[l][j] * Q[l][k] for l in range(d + 1)) / (n * mv[k])
        if val < 0:
            raise SpectralError(f"negative Krein parameter q^{k}_{i}{j} = {val}", (i, j, k))
        out[k][i][j] = val
    return out


def krein_zeros(krein) -> List[Tuple[int, int, int]]:
    """Ordered triples ``(i, j, k)`` with ``q^k_{ij} = 0`` and all indices nonzero."""
    d = len(krein) - 1
    return [(i, j, k) for i, j, k in product(range(1, d + 1), repeat=3) if krein[k][i][j] == 0]


def krein_pattern(krein, listed: Sequence[Tuple[int, int, int]]) -> Dict[str, list]:
    """Compare the vanishing set with ``listed`` (ordered triples)."""
    zeros = set(krein_zeros(krein))
    listed = set(listed)
    return {
        "zeros": sorted(zeros),
        "listed_nonzero": sorted(listed - zeros),
        "unlisted_zeros": sorted(zeros - listed),
    }


@dataclass
class SphericalGram:
    """Gram matrix of ``x* = |X|^(1/2) (E_a + E_b) x``, scaled to integers.

    ``gram = scale * G`` with ``G[x][y] = Q[rel(x,y)][a] + Q[rel(x,y)][b]``.
    ``rank`` is certified by ``G^2 = |X| G`` (so ``G / |X|`` is an orthogonal
    projection) as ``trace(G) / |X|``.
    """

    gram: np.ndarray
    scale: int
    rank: int
    spaces: Tuple[int, int]
    entries: List[Fraction]

    def value(self, x: int, y: int) -> Fraction:
        return Fraction(int(self.gram[x, y]), self.scale)


def spherical_gram(scheme: AssociationScheme, eig: Eigenmatrices, spaces: Tuple[int, int] = (1, 4)) -> SphericalGram:
    a, b = spaces
    entries = [eig.Q[i][a] + eig.Q[i][b] for i in range(eig.d + 1)]
    scale = reduce(lambda u, v: u * v // math.gcd(u, v), (e.denominator for e in entries), 1)
    table = np.array([int(e * scale) for e in entries], dtype=np.int64)
    gram = table[scheme.relations]
    n = scheme.size
    if not np.array_equal(gram, gram.T):
        raise SpectralError("Gram matrix is not symmetric")
    # (scale G)^2 = scale * n * (scale G)
    if not np.array_equal(gram @ gram, scale * n * gram):
        raise SpectralError("Gram matrix is not a multiple of an idempotent")
    tr = Fraction(int(np.trace(gram)), scale * n)
    if tr.denominator != 1:
        raise SpectralError(f"trace/|X| = {tr} is not an integer")
    return SphericalGram(gram, scale, int(tr), spaces, entries)


def gram_rank(gram: np.ndarray) -> int:
    """Rank by exact elimination (independent of the idempotent certificate)."""
    return linalg.rank(gram.tolist())


def local_basis_rank(scheme: AssociationScheme, sg: SphericalGram, x: int, cls: int = 3) -> int:
    """Rank of the vectors ``{y*: y in R_cls(x)} + {x*}`` via their Gram matrix."""
    idx = [x] + scheme.neighbors(x, cls).tolist()
    return linalg.rank(sg.gram[np.ix_(idx, idx)].tolist())


def krein_from_idempotents(scheme: AssociationScheme, eig: Eigenmatrices) -> List[List[List[Fraction]]]:
    """Krein parameters read off the concrete idempotents.

    ``q^k_{ij} = |X| tr((E_i o E_j) E_k) / m_k`` with ``o`` the entrywise
    product; computed on the integer matrices ``F_i = D |X| E_i``.
    """
    n, d = scheme.size, eig.d
    D = _lcm_denominator(eig.Q)
    A = [scheme.adjacency(j) for j in range(d + 1)]
    F = [sum(int(eig.Q[j][i] * D) * A[j] for j in range(d + 1)) for i in range(d + 1)]
    out = [[[Fraction(0)] * (d + 1) for _ in range(d + 1)] for _ in range(d + 1)]
    for i, j, k in product(range(d + 1), repeat=3):
        # F_k is symmetric, so tr(X F_k) = sum(X * F_k)
        tr = int(np.sum((F[i] * F[j]) * F[k], dtype=object))
        out[k][i][j] = Fraction(tr, D ** 3 * n * n) / eig.multiplicities[k]
    return out
