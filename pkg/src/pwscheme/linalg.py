"""Exact rational linear algebra on sparse rows.

Rows are dictionaries mapping column index to a nonzero ``Fraction``.  All
elimination uses leftmost-column pivoting, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Row = Dict[int, Fraction]


class InconsistentSystem(ArithmeticError):
    """Raised when a linear system has no solution.

    ``combination`` maps original row indices to the coefficients of a
    combination of equations whose left side vanishes while the right side
    equals ``constant`` (nonzero).
    """

    def __init__(self, combination: Dict[int, Fraction], constant: Fraction):
        self.combination = combination
        self.constant = constant
        terms = ", ".join(f"{c}*row{i}" for i, c in sorted(combination.items()))
        super().__init__(f"inconsistent system: {terms} gives 0 = {constant}")


def _clean(row: Row) -> Row:
    return {c: v for c, v in row.items() if v != 0}


def _axpy(target: Row, factor: Fraction, source: Row) -> None:
    # target -= factor * source, in place
    for c, v in source.items():
        nv = target.get(c, 0) - factor * v
        if nv:
            target[c] = nv
        else:
            target.pop(c, None)


@dataclass
class Echelon:
    """Reduced row echelon form of an augmented system ``rows * x = consts``."""

    rows: List[Row]
    consts: List[Fraction]
    pivots: List[int]
    ncols: int
    # index of the first zero row with nonzero constant, if any
    bad_row: Optional[int] = None

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def free(self) -> List[int]:
        piv = set(self.pivots)
        return [c for c in range(self.ncols) if c not in piv]


def rref(rows: Sequence[Row], consts: Sequence[Fraction], ncols: int) -> Echelon:
    """Reduce an augmented sparse system to reduced row echelon form."""
    work = [(_clean(dict(r)), Fraction(b)) for r, b in zip(rows, consts)]
    return _reduce(work, ncols)


def _reduce(work: List[Tuple[Row, Fraction]], ncols: int) -> Echelon:
    pivots: List[int] = []
    done: List[Tuple[Row, Fraction]] = []
    pending = work
    for col in range(ncols):
        pick = None
        for k, (r, _) in enumerate(pending):
            if col in r:
                pick = k
                break
        if pick is None:
            continue
        prow, pb = pending.pop(pick)
        inv = 1 / prow[col]
        prow = {c: v * inv for c, v in prow.items()}
        pb = pb * inv
        new_pending = []
        for r, b in pending:
            f = r.get(col)
            if f:
                _axpy(r, f, prow)
                b = b - f * pb
            new_pending.append((r, b))
        pending = new_pending
        new_done = []
        for r, b in done:
            f = r.get(col)
            if f:
                _axpy(r, f, prow)
                b = b - f * pb
            new_done.append((r, b))
        done = new_done
        done.append((prow, pb))
        pivots.append(col)
    bad = None
    zero_consts = [b for r, b in pending]
    for k, b in enumerate(zero_consts):
        if b != 0:
            bad = k
            break
    rows = [r for r, _ in done] + [r for r, _ in pending]
    consts = [b for _, b in done] + zero_consts
    if bad is not None:
        bad += len(done)
    return Echelon(rows=rows, consts=consts, pivots=pivots, ncols=ncols, bad_row=bad)


def _tracked_inconsistency(rows: Sequence[Row], consts: Sequence[Fraction], ncols: int) -> InconsistentSystem:
    # Tag each original row with an identity column block past ncols.
    work = []
    for i, (r, b) in enumerate(zip(rows, consts)):
        tagged = _clean(dict(r))
        tagged[ncols + i] = Fraction(1)
        work.append((tagged, Fraction(b)))
    ech = _reduce(work, ncols)
    for r, b in zip(ech.rows[ech.rank:], ech.consts[ech.rank:]):
        if b != 0 and all(c >= ncols for c in r):
            return InconsistentSystem({c - ncols: v for c, v in sorted(r.items())}, b)
    raise AssertionError("tracked elimination found no inconsistent row")


@dataclass
class AffineSolution:
    """Solution set ``particular + span(basis)`` of a consistent system."""

    particular: List[Fraction]
    basis: List[List[Fraction]]
    pivots: List[int]
    free: List[int]
    echelon: Echelon = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)


def solve(rows: Sequence[Row], consts: Sequence[Fraction], ncols: int) -> AffineSolution:
    """Solve ``rows * x = consts`` exactly.

    The basis has one vector per free column, with a 1 in that column.
    Raises :class:`InconsistentSystem` carrying the offending combination.
    """
    ech = rref(rows, consts, ncols)
    if ech.bad_row is not None:
        raise _tracked_inconsistency(rows, consts, ncols)
    free = ech.free
    particular = [Fraction(0)] * ncols
    for r, b, p in zip(ech.rows, ech.consts, ech.pivots):
        particular[p] = b
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for r, p in zip(ech.rows, ech.pivots):
            v = r.get(f)
            if v:
                vec[p] = -v
        basis.append(vec)
    return AffineSolution(particular, basis, list(ech.pivots), free, ech)


def dense_rows(matrix: Iterable[Sequence]) -> List[Row]:
    return [{j: Fraction(v) for j, v in enumerate(row) if v} for row in matrix]


def rank(matrix: Sequence[Sequence]) -> int:
    """Exact rank of a dense matrix of ints or Fractions."""
    rows = dense_rows(matrix)
    if not rows:
        return 0
    ncols = len(matrix[0])
    return rref(rows, [Fraction(0)] * len(rows), ncols).rank


def nullspace(matrix: Sequence[Sequence], ncols: Optional[int] = None) -> List[List[Fraction]]:
    """Basis of the right null space of a dense matrix."""
    rows = dense_rows(matrix)
    if ncols is None:
        ncols = len(matrix[0])
    return solve(rows, [Fraction(0)] * len(rows), ncols).basis


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> List[List[Fraction]]:
    inner = len(b)
    cols = len(b[0])
    return [[sum((Fraction(row[k]) * b[k][j] for k in range(inner)), Fraction(0)) for j in range(cols)] for row in a]


def inverse(matrix: Sequence[Sequence]) -> List[List[Fraction]]:
    """Exact inverse by Gauss-Jordan; raises ``ZeroDivisionError`` if singular."""
    n = len(matrix)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


def format_rational(value) -> str:
    """Serialize a rational as a ``"num/den"`` string."""
    v = Fraction(value)
    return f"{v.numerator}/{v.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text)
