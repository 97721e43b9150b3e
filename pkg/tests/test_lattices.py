import itertools

import numpy as np
import pytest

from thetalift.lattices import (Lattice, direct_sum, e8_lattice, ellipsoid_points,
                                enumerate_majorant, hyperbolic_plane,
                                lattice_from_json, majorant_gram, make_lattice,
                                quadratic_form, real_basis_map,
                                represent_integer, signature_b2_lattice,
                                standard_real_basis_map, vector_divisors)


def box_points(maj, bound, center=None):
    """Independent oracle: exhaustive coordinate-box search."""
    maj = np.asarray(maj, float)
    n = len(maj)
    c = np.zeros(n) if center is None else np.asarray(center, float)
    inv = np.linalg.inv(maj)
    lim = [int(np.floor(np.sqrt(bound * inv[i, i]) + abs(c[i]))) + 1
           for i in range(n)]
    out = []
    for coords in itertools.product(*[range(-l, l + 1) for l in lim]):
        v = np.array(coords, float) + c
        if v @ maj @ v <= bound + 1e-9:
            out.append(coords)
    return sorted(out)


def test_e8_det_and_shape():
    e8 = e8_lattice()
    assert e8.det() == 1
    assert e8.rank == 8
    assert e8.signature == (8, 0)
    assert all(int(g) == 2 for g in np.diag(e8.gram_array))


def test_e8_has_240_roots():
    # oracle: exhaustive box enumeration, independent of Fincke-Pohst
    e8 = e8_lattice()
    pts = box_points(e8.gram_array, 2.0)
    roots = [p for p in pts if sum(np.array(p) @ e8.gram_array * np.array(p)) == 2]
    assert len(roots) == 240
    # and the ellipsoid enumerator agrees
    fast = enumerate_majorant(e8, None, 2.0)
    qs = np.einsum("ij,jk,ik->i", fast, e8.gram_array, fast) // 2
    assert int(np.sum(qs == 1)) == 240
    assert sorted(map(tuple, fast.tolist())) == pts


def test_hyperbolic_plane():
    u = hyperbolic_plane()
    assert quadratic_form(u, np.array([1, 0])) == 0
    assert int(np.array([1, 0]) @ u.gram_array @ np.array([0, 1])) == 1
    for a in range(-4, 5):
        assert quadratic_form(u, np.array([a, 1])) == a


def test_direct_sum():
    u = hyperbolic_plane()
    e8 = e8_lattice()
    assert direct_sum(u, u).signature == (2, 2)
    eu = direct_sum(e8, u)
    assert eu.rank == 10 and abs(eu.det()) == 1
    assert eu.det() == -1
    assert direct_sum(e8, e8).signature == (16, 0)


def test_signature_b2():
    s = signature_b2_lattice(10)
    assert s.lattice.rank == 12
    assert s.lattice.signature == (10, 2)
    assert s.k_lattice.rank == 10
    assert s.k_lattice.signature == (9, 1)
    assert signature_b2_lattice(18).lattice.rank == 20
    for bad in (11, 2, 8, -6):
        with pytest.raises(ValueError):
            signature_b2_lattice(bad)


def test_quadratic_form_values():
    e8 = e8_lattice()
    root = np.zeros(8, dtype=np.int64)
    root[0] = 1
    assert quadratic_form(e8, root) == 1
    u = hyperbolic_plane()
    assert quadratic_form(u, np.array([3, 2])) == 6
    with pytest.raises(ValueError):
        quadratic_form(u, np.array([1, 2, 3]))


@pytest.mark.parametrize("b", [10, 18])
def test_real_basis_map_residual(b):
    s = signature_b2_lattice(b)
    rbm = real_basis_map(s)
    assert rbm.residual(s.lattice) < 1e-12


def test_real_basis_map_hyperbolic_columns():
    s = signature_b2_lattice(10)
    t = real_basis_map(s).matrix
    b = 10
    u_img = t[:, b]
    expect = np.zeros(b + 2)
    expect[b - 1] = expect[b + 1] = 1 / np.sqrt(2)
    assert np.allclose(u_img, expect)


def test_vector_divisors():
    assert vector_divisors([2, 4, 6]) == [1, 2]
    assert vector_divisors([3, 5]) == [1]
    assert vector_divisors([6, 12]) == [1, 2, 3, 6]
    with pytest.raises(ValueError):
        vector_divisors([0, 0])


def test_enumerate_majorant_against_box_oracle():
    u = hyperbolic_plane()
    y = np.array([1.0, -1.0])
    for bound in (0.0, 1.0, 4.0, 10.0):
        got = enumerate_majorant(u, y, bound)
        want = box_points(majorant_gram(u, y), bound)
        assert sorted(map(tuple, got.tolist())) == want
    # rank 3 and 4 cases
    a1 = make_lattice([[2]])
    lat3 = direct_sum(u, a1)
    y3 = np.array([1.0, -1.0, 0.2])
    for bound in (3.0, 7.5):
        got = enumerate_majorant(lat3, y3, bound)
        want = box_points(majorant_gram(lat3, y3), bound)
        assert sorted(map(tuple, got.tolist())) == want
    lat4 = direct_sum(u, u)
    y4 = np.array([1.0, -1.2, 0.3, -0.1])
    got = enumerate_majorant(lat4, y4, 6.0)
    want = box_points(majorant_gram(lat4, y4), 6.0)
    assert sorted(map(tuple, got.tolist())) == want


def test_enumerate_majorant_basics():
    u = hyperbolic_plane()
    y = np.array([1.0, -1.0])
    only_zero = enumerate_majorant(u, y, 0.0)
    assert only_zero.shape == (1, 2)
    pts = enumerate_majorant(u, y, 9.0)
    assert len(pts) % 2 == 1  # closed under negation plus zero
    allpts = set(map(tuple, pts.tolist()))
    assert all((-a, -bb) in allpts for a, bb in allpts)
    with pytest.raises(ValueError):
        enumerate_majorant(u, y, -1.0)
    with pytest.raises(ValueError):
        enumerate_majorant(u, np.array([1.0, 1.0]), 2.0)  # positive norm axis


def test_shifted_enumeration_matches_box():
    u = hyperbolic_plane()
    y = np.array([1.0, -1.0])
    maj = majorant_gram(u, y)
    center = np.array([0.3, -0.7])
    got = ellipsoid_points(maj, 5.0, center=center)
    want = box_points(maj, 5.0, center=center)
    assert sorted(map(tuple, got.tolist())) == want


def test_represent_integer():
    s = signature_b2_lattice(10)
    for n in range(1, 101):
        lam = represent_integer(s, n)
        assert quadratic_form(s.k_lattice, lam) == n
    with pytest.raises(ValueError):
        represent_integer(s, 0)


def test_json_roundtrip():
    lat = signature_b2_lattice(10).lattice
    again = lattice_from_json(lat.to_json())
    assert again == lat


def test_standard_real_basis_map_small():
    u = hyperbolic_plane()
    rbm = standard_real_basis_map(u)
    assert (rbm.p, rbm.q) == (1, 1)
    assert rbm.residual(u) < 1e-12
