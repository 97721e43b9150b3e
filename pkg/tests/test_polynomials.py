import math
import random
from fractions import Fraction

import numpy as np
import pytest

from thetalift.exact import INV_SQRT2, QSqrt2
from thetalift.injectivity import swap_e_matrix_exact
from thetalift.polynomials import (MultiPoly, base_fbasis_exact, decompose,
                                   decompose_general, exact_base_frame,
                                   heat_expansion, heat_operator, laplacian,
                                   p_alpha_beta)

B = 10


def identity_exact(n):
    return [[QSqrt2(int(i == j)) for j in range(n)] for i in range(n)]


def rotation_exact(b, alpha, beta):
    """Stabilizer isometry sending e_a -> (e_a+e_b)/sqrt2, e_b -> (e_a-e_b)/sqrt2,
    e_b2 -> e_b (1-based alpha, beta < b)."""
    h = INV_SQRT2
    g = [[QSqrt2(0) for _ in range(b + 2)] for _ in range(b + 2)]
    a, c = alpha - 1, beta - 1
    for j in range(b + 2):
        if j == a:
            g[a][j] = h
            g[c][j] = h
        elif j == b - 1:
            g[a][j] = h
            g[c][j] = -h
        elif j == c:
            g[b - 1][j] = QSqrt2(1)
        else:
            g[j][j] = QSqrt2(1)
    return g


def exact_swap(b, alpha):
    return [[QSqrt2(x) for x in row] for row in swap_e_matrix_exact(b, alpha)]


def test_p_alpha_beta_basics():
    p = p_alpha_beta(1, 2, B)
    assert p.terms == {(1, 1) + (0,) * B: 2}
    assert p_alpha_beta(3, 3, B).terms == {(0, 0, 2) + (0,) * (B - 1): 2}
    assert p.split_degree(B) == (2, 0)
    for bad in ((0, 1), (1, B + 1), (1, B + 2)):
        with pytest.raises(ValueError):
            p_alpha_beta(bad[0], bad[1], B)


def test_laplacian():
    assert not laplacian(p_alpha_beta(1, 2, B))
    assert laplacian(p_alpha_beta(1, 1, B)).terms == {(0,) * (B + 2): 4}
    assert not laplacian(MultiPoly.constant(3, 7))
    x1sq = MultiPoly(3, {(2, 0, 0): 1})
    assert laplacian(x1sq).terms == {(0, 0, 0): 2}


def test_heat_operator():
    # harmonic stays fixed
    p = p_alpha_beta(1, 2, B)
    assert heat_operator(p, 1.3).terms == p.to_float().terms
    # x1^2 -> x1^2 - 1/(4 pi y)
    x1sq = MultiPoly(3, {(2, 0, 0): 1})
    out = heat_operator(x1sq, 2.0)
    assert out.terms[(2, 0, 0)] == 1.0
    assert out.terms[(0, 0, 0)] == pytest.approx(-1 / (4 * math.pi * 2.0))
    # vanishing correction as y grows
    big = heat_operator(MultiPoly(3, {(2, 0, 0): 2}), 1e9)
    assert big.terms[(0, 0, 0)] == pytest.approx(0.0, abs=1e-9)
    pieces = heat_expansion(x1sq)
    assert pieces[0] == x1sq
    assert pieces[1].terms == {(0, 0, 0): Fraction(-1)}


def test_heat_linearity_and_permutation():
    rng = random.Random(5)
    nv = 4
    def rand_poly():
        return MultiPoly(nv, {tuple(rng.randint(0, 2) for _ in range(nv)):
                              Fraction(rng.randint(-4, 4)) for _ in range(4)})
    p, q = rand_poly(), rand_poly()
    lhs = heat_expansion(p + q)
    rhs_p, rhs_q = heat_expansion(p), heat_expansion(q)
    for m in range(max(len(rhs_p), len(rhs_q))):
        a = rhs_p[m] if m < len(rhs_p) else MultiPoly.zero(nv)
        b = rhs_q[m] if m < len(rhs_q) else MultiPoly.zero(nv)
        got = lhs[m] if m < len(lhs) else MultiPoly.zero(nv)
        assert got == a + b
    # commutes with a coordinate swap
    perm = [1, 0, 2, 3]
    mat = [[Fraction(int(perm[i] == j)) for j in range(nv)] for i in range(nv)]
    assert heat_expansion(p.substitute(mat))[1] == \
        heat_expansion(p)[1].substitute(mat)


def test_swap_decomposition_matches_closed_form():
    # the swap isometry turns 2 x_a x_b into (v, u_zperp) * 2 sqrt(2) x_beta
    frame = exact_base_frame(B)
    dec = decompose(1, 2, exact_swap(B, 1), frame)
    twosqrt2 = QSqrt2(0, 2)
    x2 = [0] * (B + 2)
    x2[1] = 1
    assert dec.composed[1].terms == {tuple(x2): twosqrt2}
    assert not dec.composed[0]
    assert not dec.composed[2]


def test_rotation_decomposition_pieces():
    # pieces (x_alpha^2, 0, -2) for the block-rotation stabilizer
    frame = exact_base_frame(B)
    dec = decompose(1, 2, rotation_exact(B, 1, 2), frame)
    xa2 = [0] * (B + 2)
    xa2[0] = 2
    assert dec.composed[0].terms == {tuple(xa2): QSqrt2(1)}
    assert not dec.composed[1]
    assert dec.composed[2].terms == {(0,) * (B + 2): QSqrt2(-2)}
    # the h+ = 0 piece is non-harmonic in the intrinsic coordinates
    gen = decompose_general(p_alpha_beta(1, 2, B), rotation_exact(B, 1, 2),
                            frame, base_fbasis_exact(B))
    assert laplacian(gen[(0, 0)]).terms  # nonzero Laplacian


def test_identity_decomposition():
    frame = exact_base_frame(B)
    dec = decompose(1, 2, identity_exact(B + 2), frame)
    assert dec.composed[0] == p_alpha_beta(1, 2, B).map_coefficients(QSqrt2)
    assert not dec.composed[1]
    assert not dec.composed[2]


def _random_stabilizer(rng, b):
    """Random product of swap and rotation generators over Q(sqrt2)."""
    from thetalift.polynomials import _mat_mul
    g = identity_exact(b + 2)
    for _ in range(rng.randint(1, 4)):
        if rng.random() < 0.5:
            g = _mat_mul(g, exact_swap(b, rng.randint(1, b - 1)))
        else:
            i = rng.randint(1, b - 2)
            j = rng.randint(i + 1, b - 1)
            g = _mat_mul(g, rotation_exact(b, i, j))
    return g


@pytest.mark.parametrize("seed", [0, 1])
def test_reconstruction_identity_exact(seed):
    """P(g0 g v) = sum_h (v,u_zperp)^h p_h(g0 w v) as exact polynomials."""
    rng = random.Random(seed)
    frame = exact_base_frame(B)
    for _ in range(10):
        g = _random_stabilizer(rng, B)
        alpha = rng.randint(1, B)
        beta = rng.randint(1, B)
        dec = decompose(alpha, beta, g, frame, check=False)
        target = p_alpha_beta(alpha, beta, B).substitute(g)
        assert dec.reconstruction() == target.map_coefficients(
            lambda c: c * QSqrt2(1))


def test_degree_bookkeeping():
    rng = random.Random(9)
    frame = exact_base_frame(B)
    fb = base_fbasis_exact(B)
    g = _random_stabilizer(rng, B)
    gen = decompose_general(p_alpha_beta(2, 5, B), g, frame, fb)
    for (hp, hm), piece in gen.items():
        assert hm == 0
        if piece:
            mp, mm = piece.split_degree(B - 1)
            assert mp == 2 - hp and mm == 0


def test_general_matches_closed_form_on_values():
    rng = random.Random(11)
    frame = exact_base_frame(B)
    fb = base_fbasis_exact(B)
    for _ in range(5):
        g = _random_stabilizer(rng, B)
        dec = decompose(2, 3, g, frame)
        gen = decompose_general(p_alpha_beta(2, 3, B), g, frame, fb)
        v = [QSqrt2(rng.randint(-3, 3)) for _ in range(B + 2)]
        from thetalift.polynomials import _mat_vec
        sv = _mat_vec(dec.sigma, v)
        zeta = [frame.pair(f, v) for f in fb[:-1]]
        zeta.append(QSqrt2(-1) * frame.pair(fb[-1], v))
        for hp in (0, 1, 2):
            closed = dec.pieces[hp].evaluate(sv)
            general = gen.get((hp, 0), MultiPoly.zero(B)).evaluate(zeta)
            assert closed == general


def test_canonical_string():
    p = MultiPoly(3, {(1, 0, 2): Fraction(3, 2), (0, 0, 0): -1})
    assert p.canonical_str() == "-1 + 3/2 * x1 x3^2"
