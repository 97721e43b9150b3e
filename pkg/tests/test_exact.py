import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetalift.exact import QSqrt2, SQRT2, bareiss_det, ldl_exact

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=12)
elements = st.builds(QSqrt2, rationals, rationals)


@given(elements, elements, elements)
@settings(max_examples=100, deadline=None)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert a - a == QSqrt2(0)
    if b:
        assert (a / b) * b == a


@given(elements)
@settings(max_examples=50, deadline=None)
def test_float_embedding(a):
    assert float(a) == pytest.approx(float(a.a) + float(a.b) * math.sqrt(2))


def test_sqrt2_squares_to_two():
    assert SQRT2 * SQRT2 == 2
    assert (1 / SQRT2) * SQRT2 == 1


def test_bareiss_matches_fraction_elimination():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = rng.integers(1, 6)
        m = rng.integers(-5, 6, size=(n, n))
        # oracle: Gaussian elimination over Fractions
        a = [[Fraction(int(x)) for x in row] for row in m]
        det = Fraction(1)
        for k in range(n):
            piv = next((i for i in range(k, n) if a[i][k]), None)
            if piv is None:
                det = Fraction(0)
                break
            if piv != k:
                a[k], a[piv] = a[piv], a[k]
                det = -det
            det *= a[k][k]
            for i in range(k + 1, n):
                f = a[i][k] / a[k][k]
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
        assert bareiss_det(m.tolist()) == det


def test_ldl_reconstructs():
    g = [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]
    L, D = ldl_exact(g)
    n = 3
    rec = [[sum(L[i][k] * D[k] * L[j][k] for k in range(n))
            for j in range(n)] for i in range(n)]
    assert rec == [[Fraction(x) for x in row] for row in g]


def test_ldl_rejects_indefinite():
    with pytest.raises(ValueError):
        ldl_exact([[0, 1], [1, 0]])
