import pytest

from pwscheme import cliques as K
from pwscheme import reconstruction as R
from pwscheme.geometry import build_model
from pwscheme.parameters import expected_parameters
from pwscheme.scheme import build_pw_scheme, intersection_numbers


class Lab:
    """Objects for one q, built on first use and shared across tests."""

    def __init__(self, q):
        self.q = q
        self._cache = {}

    def _get(self, name, make):
        if name not in self._cache:
            self._cache[name] = make()
        return self._cache[name]

    @property
    def model(self):
        return self._get("model", lambda: build_model(self.q))

    @property
    def scheme(self):
        return self._get("scheme", lambda: build_pw_scheme(self.model))

    @property
    def params(self):
        return self._get("params", lambda: expected_parameters(self.q))

    @property
    def p(self):
        return self._get("p", lambda: intersection_numbers(self.scheme))

    @property
    def cliques(self):
        return self._get("cliques", lambda: K.maximal_cliques(self.scheme))

    @property
    def classes(self):
        return self._get("classes", lambda: K.congruence_classes(self.cliques))

    @property
    def partitions(self):
        return self._get("partitions", lambda: K.partition_set(self.cliques, self.classes))

    @property
    def reconstruction(self):
        return self._get("reconstruction", lambda: R.reconstruct(self.cliques, self.classes, self.partitions))


@pytest.fixture(scope="session")
def lab3():
    return Lab(3)


@pytest.fixture(scope="session")
def lab5():
    return Lab(5)
