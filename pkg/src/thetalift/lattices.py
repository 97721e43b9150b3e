"""Even lattices, the E8 + hyperbolic-plane constructions, and lattice point
enumeration under a positive-definite majorant.

All lattices are described by integer Gram matrices.  The distinguished
signature-(b,2) lattice is assembled as E8 + ... + E8 + U + U; the last
hyperbolic plane U is the one split off for unfolding, and the orthogonal
complement K = E8 + ... + E8 + U is the Lorentzian sublattice carrying
Fourier expansions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg

from .exact import bareiss_det, ldl_exact


@dataclass(frozen=True)
class Lattice:
    """Integral lattice given by the Gram matrix of a fixed basis."""

    gram: tuple
    unimodular: bool

    def __post_init__(self):
        g = self.gram_array
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("Gram matrix must be square")
        if not np.array_equal(g, g.T):
            raise ValueError("Gram matrix must be symmetric")
        if self.rank and any(int(g[i, i]) % 2 for i in range(self.rank)):
            raise ValueError("lattice is not even")
        if self.unimodular and abs(self.det()) != 1:
            raise ValueError("lattice flagged unimodular but |det| != 1")

    @property
    def gram_array(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64).reshape(len(self.gram), -1)

    @property
    def rank(self) -> int:
        return len(self.gram)

    def det(self) -> int:
        return bareiss_det(self.gram)

    @property
    def signature(self) -> tuple:
        """Inertia (p, q) of the Gram matrix."""
        if self.rank == 0:
            return (0, 0)
        ev = np.linalg.eigvalsh(self.gram_array.astype(float))
        p = int(np.sum(ev > 1e-9))
        q = int(np.sum(ev < -1e-9))
        if p + q != self.rank:
            raise ValueError("degenerate Gram matrix")
        return (p, q)

    def to_json(self) -> str:
        return json.dumps({"gram": [list(map(int, r)) for r in self.gram],
                           "unimodular": self.unimodular})


def make_lattice(gram, unimodular=None) -> Lattice:
    rows = tuple(tuple(int(x) for x in row) for row in gram)
    if unimodular is None:
        unimodular = abs(bareiss_det(rows)) == 1 if rows else True
    return Lattice(rows, bool(unimodular))


def lattice_from_json(text: str) -> Lattice:
    doc = json.loads(text)
    return make_lattice(doc["gram"], doc.get("unimodular"))


def e8_lattice() -> Lattice:
    """E8 in the standard root basis: chain 1-3-4-5-6-7-8 with 2 hung off 4."""
    g = 2 * np.eye(8, dtype=np.int64)
    bonds = [(0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)]
    for i, j in bonds:
        g[i, j] = g[j, i] = -1
    return make_lattice(g, unimodular=True)


def hyperbolic_plane() -> Lattice:
    return make_lattice([[0, 1], [1, 0]], unimodular=True)


def direct_sum(*lattices: Lattice) -> Lattice:
    grams = [lat.gram_array for lat in lattices if lat.rank]
    if not grams:
        return make_lattice([], unimodular=True)
    g = scipy.linalg.block_diag(*grams).astype(np.int64)
    uni = all(lat.unimodular for lat in lattices)
    return make_lattice(g, unimodular=uni)


@dataclass(frozen=True)
class SplitB2:
    """L = E8^n + U + U with the distinguished copies of K and U marked.

    Basis order: E8 blocks, then the hyperbolic plane inside K (basis
    u2, u2'), then the distinguished U (basis u, u').  K occupies the
    first b coordinates.
    """

    b: int
    lattice: Lattice
    k_lattice: Lattice
    n_e8: int

    @property
    def rank(self) -> int:
        return self.b + 2

    @property
    def k_indices(self) -> tuple:
        return tuple(range(self.b))

    @property
    def u_indices(self) -> tuple:
        return (self.b, self.b + 1)

    @property
    def u2_indices(self) -> tuple:
        return (self.b - 2, self.b - 1)


def signature_b2_lattice(b: int) -> SplitB2:
    """Even unimodular lattice of signature (b, 2) with its K + U split."""
    if b <= 2 or b % 8 != 2:
        raise ValueError(
            f"no even unimodular lattice of signature ({b}, 2): "
            "need b > 2 and b = 2 (mod 8)")
    n_e8 = (b - 2) // 8
    e8 = e8_lattice()
    u = hyperbolic_plane()
    lat = direct_sum(*([e8] * n_e8 + [u, u]))
    k = direct_sum(*([e8] * n_e8 + [u]))
    return SplitB2(b=b, lattice=lat, k_lattice=k, n_e8=n_e8)


def quadratic_form(lattice: Lattice, v):
    """q(v) = (v, v)/2.  Integer for lattice vectors of an even lattice."""
    v = np.asarray(v)
    if v.shape != (lattice.rank,):
        raise ValueError("vector length does not match lattice rank")
    g = lattice.gram_array
    if np.issubdtype(v.dtype, np.integer):
        num = int(v @ g @ v)
        return num // 2 if num % 2 == 0 else Fraction(num, 2)
    return float(v @ g.astype(float) @ v) / 2.0


def bilinear_form(lattice: Lattice, v, w):
    v = np.asarray(v)
    w = np.asarray(w)
    return v @ lattice.gram_array.astype(
        np.int64 if np.issubdtype(v.dtype, np.integer)
        and np.issubdtype(w.dtype, np.integer) else float) @ w


def vector_divisors(v) -> list:
    """All t >= 1 with v/t still integral, ascending: divisors of gcd(v)."""
    coords = [abs(int(x)) for x in v]
    g = 0
    for c in coords:
        g = math.gcd(g, c)
    if g == 0:
        raise ValueError("zero vector has no divisor list")
    divs = [t for t in range(1, g + 1) if g % t == 0]
    return divs


@dataclass(frozen=True)
class RealBasisMap:
    """Columns express the lattice basis in pseudo-orthonormal coordinates.

    matrix maps lattice coordinates to coordinates (x_1, ..., x_{p+q}) with
    x_j^2 = +1 for j <= p and -1 afterwards, so matrix^T J matrix = gram.
    """

    matrix: np.ndarray
    p: int
    q: int
    tolerance: float = 1e-12

    @property
    def signature_matrix(self) -> np.ndarray:
        return np.diag(np.concatenate([np.ones(self.p), -np.ones(self.q)]))

    def residual(self, lattice: Lattice) -> float:
        lhs = self.matrix.T @ self.signature_matrix @ self.matrix
        return float(np.max(np.abs(lhs - lattice.gram_array)))


def _e8_cholesky() -> np.ndarray:
    """Upper-triangular R with R^T R = gram(E8), from exact LDL^T."""
    L, D = ldl_exact(e8_lattice().gram)
    Lf = np.array([[float(x) for x in row] for row in L])
    return np.sqrt(np.array([float(d) for d in D]))[:, None] * Lf.T


def real_basis_map(split: SplitB2) -> RealBasisMap:
    """Pseudo-orthonormal coordinates for L = E8^n + U + U.

    K lands on coordinates (1..b-1, b+1); the distinguished U lands on
    (b, b+2), with u -> (e_b + e_{b+2})/sqrt(2) and u' -> (e_b - e_{b+2})/sqrt(2).
    """
    b = split.b
    n = split.rank
    t = np.zeros((n, n))
    r8 = _e8_cholesky()
    for k in range(split.n_e8):
        sl = slice(8 * k, 8 * k + 8)
        t[sl, sl] = r8
    s = 1.0 / math.sqrt(2.0)
    # u2, u2' -> rows (b-2, b) which carry e_{b-1} and e_{b+1}
    i2, i2p = split.u2_indices
    t[b - 2, i2], t[b, i2] = s, s
    t[b - 2, i2p], t[b, i2p] = s, -s
    # u, u' -> rows (b-1, b+1) which carry e_b and e_{b+2}
    iu, iup = split.u_indices
    t[b - 1, iu], t[b + 1, iu] = s, s
    t[b - 1, iup], t[b + 1, iup] = s, -s
    return RealBasisMap(matrix=t, p=b, q=2)


def standard_real_basis_map(lattice: Lattice) -> RealBasisMap:
    """Pseudo-orthonormal coordinates for an arbitrary nondegenerate lattice,
    positive directions first.  Used for small test lattices."""
    g = lattice.gram_array.astype(float)
    w, v = np.linalg.eigh(g)
    order = np.argsort(-w)  # positive eigenvalues first
    w, v = w[order], v[:, order]
    if np.any(np.abs(w) < 1e-9):
        raise ValueError("degenerate lattice")
    t = (np.sqrt(np.abs(w))[:, None]) * v.T
    p = int(np.sum(w > 0))
    return RealBasisMap(matrix=t, p=p, q=lattice.rank - p)


def majorant_gram(lattice: Lattice, w_data=None) -> np.ndarray:
    """Positive-definite majorant Gram matrix in lattice coordinates.

    For a Lorentzian lattice, ``w_data`` is a vector Y of negative norm
    spanning the negative line; the majorant is then
    (v, v)_w = v^2 - 2 (v, Y)^2 / Y^2.  ``None`` keeps a positive-definite
    Gram as is.
    """
    g = lattice.gram_array.astype(float)
    if w_data is None:
        maj = g
    else:
        y = np.asarray(w_data, dtype=float)
        gy = g @ y
        y2 = float(y @ gy)
        if y2 >= 0:
            raise ValueError("majorant axis must have negative norm")
        maj = g - 2.0 * np.outer(gy, gy) / y2
    try:
        scipy.linalg.cholesky(maj + 1e-12 * np.eye(len(maj)))
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("majorant is not positive definite") from exc
    return maj


def ellipsoid_points(maj: np.ndarray, bound: float, center=None) -> np.ndarray:
    """All integer x with (x + c)^T maj (x + c) <= bound, sorted lexicographically.

    Backtracking on the Cholesky factor of the majorant, one coordinate
    level at a time with vectorized interval expansion.
    """
    out = list(iter_ellipsoid_blocks(maj, bound, center, block=None))
    pts = np.concatenate(out, axis=0) if out else np.zeros((0, len(maj)), dtype=np.int64)
    if len(pts):
        pts = pts[np.lexsort(pts.T[::-1])]
    return pts


def _ball_volume(n: int, r: float) -> float:
    return math.pi ** (n / 2) * r ** n / math.gamma(n / 2 + 1)


def iter_ellipsoid_blocks(maj: np.ndarray, bound: float, center=None, block=1_000_000):
    """Yield the ellipsoid's integer points in bounded-size batches.

    The search tree is split recursively on the outermost coordinates until
    the estimated subtree size fits a batch, so peak memory stays bounded.
    Batches appear in a fixed deterministic order.  ``block=None`` yields a
    single batch.
    """
    n = len(maj)
    if bound < 0 or n == 0:
        return
    r = scipy.linalg.cholesky(np.asarray(maj, dtype=float), lower=False)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    yield from _iter_blocks(r, float(bound), c, block, ())


def _iter_blocks(r, bound, c, block, suffix):
    n = r.shape[0]
    rad = math.sqrt(max(bound, 0.0))
    covol = float(np.prod(np.diag(r)))
    est = 2.0 * _ball_volume(n, rad) / covol + 10_000.0
    if block is None or est <= block or n == 1:
        pts = _expand_levels(r, c, np.zeros((1, 0), dtype=np.int64),
                             np.zeros((1, n)), np.full(1, float(bound)))
        if len(pts):
            if suffix:
                tailcols = np.tile(np.array(suffix, dtype=np.int64), (len(pts), 1))
                pts = np.concatenate([pts, tailcols], axis=1)
            yield pts
        return
    rk = r[n - 1, n - 1]
    rad = math.sqrt(max(bound, 0.0)) / rk
    lo = math.ceil(-rad - c[n - 1] - 1e-12)
    hi = math.floor(rad - c[n - 1] + 1e-12)
    rsub = r[: n - 1, : n - 1]
    for xn in range(lo, hi + 1):
        t = r[: n - 1, n - 1] * (xn + c[n - 1])
        rem = bound - (rk * (xn + c[n - 1])) ** 2
        if rem < -1e-12:
            continue
        csub = c[: n - 1] + scipy.linalg.solve_triangular(rsub, t, lower=False)
        yield from _iter_blocks(rsub, max(rem, 0.0), csub, block,
                                (int(xn),) + suffix)


def _expand_levels(r, c, coords, partial, rem):
    """Vectorized level expansion for Fincke-Pohst style backtracking.

    coords holds the already-chosen trailing coordinates (reversed order);
    partial[k] is the contribution of those coordinates to rows <= level;
    rem is the remaining norm budget.
    """
    n = r.shape[0]
    level = n - 1 - coords.shape[1]
    while level >= 0:
        rk = r[level, level]
        srem = np.sqrt(np.maximum(rem, 0.0))
        lo = np.ceil((-srem - partial[:, level]) / rk - c[level] - 1e-12).astype(np.int64)
        hi = np.floor((srem - partial[:, level]) / rk - c[level] + 1e-12).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        idx = np.repeat(np.arange(len(coords)), counts)
        if len(idx) == 0:
            return np.zeros((0, n), dtype=np.int64)
        offs = np.arange(len(idx)) - np.repeat(np.cumsum(counts) - counts, counts)
        xs = lo[idx] + offs
        t = rk * (xs + c[level]) + partial[idx, level]
        rem = rem[idx] - t * t
        keep = rem >= -1e-12
        idx, xs, t, rem = idx[keep], xs[keep], t[keep], rem[keep]
        coords = np.concatenate([xs[:, None], coords[idx]], axis=1)
        partial = partial[idx, :level] + r[:level, level][None, :] * (xs + c[level])[:, None]
        level -= 1
    return coords


def enumerate_majorant(lattice: Lattice, w_data, bound: float, center=None) -> np.ndarray:
    """Exactly the lattice vectors with majorant norm <= bound (includes 0).

    ``w_data`` is either None (positive definite lattice), a negative-norm
    vector Y, or a precomputed majorant Gram matrix.
    """
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    if isinstance(w_data, np.ndarray) and w_data.ndim == 2:
        maj = w_data
    else:
        maj = majorant_gram(lattice, w_data)
    return ellipsoid_points(maj, bound, center)


def represent_integer(split: SplitB2, n: int) -> np.ndarray:
    """A vector of K with q = n, taken as n*u2 + u2' in the hyperbolic summand."""
    if n <= 0:
        raise ValueError("only positive integers are represented")
    lam = np.zeros(split.b, dtype=np.int64)
    lam[split.b - 2] = n
    lam[split.b - 1] = 1
    return lam


@lru_cache(maxsize=None)
def _cached_split(b: int) -> SplitB2:
    return signature_b2_lattice(b)
