"""Prime field arithmetic and projective canonical forms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


@dataclass(frozen=True)
class FieldElement:
    """An element of GF(q), q prime."""

    value: int
    modulus: int

    def __post_init__(self):
        if not is_prime(self.modulus):
            raise ValueError(f"modulus {self.modulus} is not prime")
        object.__setattr__(self, "value", self.value % self.modulus)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ValueError("field mismatch")
            return other.value
        return int(other)

    def __add__(self, other):
        return FieldElement(self.value + self._coerce(other), self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._coerce(other), self.modulus)

    def __rsub__(self, other):
        return FieldElement(self._coerce(other) - self.value, self.modulus)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other), self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.modulus)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElement(pow(self.value, -1, self.modulus), self.modulus)

    def __truediv__(self, other):
        return self * FieldElement(self._coerce(other), self.modulus).inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return FieldElement(pow(self.value, k, self.modulus), self.modulus)

    def __int__(self):
        return self.value

    def is_square(self) -> bool:
        return self.value == 0 or pow(self.value, (self.modulus - 1) // 2, self.modulus) == 1


def is_square(value: int, q: int) -> bool:
    return FieldElement(value, q).is_square()


def canonical(coords: Iterable[int], q: int) -> Tuple[int, ...]:
    """Scale a nonzero vector so that its last nonzero coordinate is 1."""
    v = [c % q for c in coords]
    for c in reversed(v):
        if c:
            inv = pow(c, -1, q)
            return tuple(x * inv % q for x in v)
    raise ValueError("the zero vector is not a projective point")


def projective_points(dim: int, q: int):
    """All canonical representatives of PG(dim-1, q), in lexicographic order."""
    from itertools import product

    out = []
    for last in range(dim):
        for head in product(range(q), repeat=last):
            out.append(tuple(head) + (1,) + (0,) * (dim - last - 1))
    out.sort()
    return out
