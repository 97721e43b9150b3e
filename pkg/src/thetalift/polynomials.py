"""Sparse multivariate polynomials with exact coefficients, the heat
operator, and the splitting of the degree-(2,0) kernel polynomials along
a point of the Grassmannian.

A polynomial P of split-degree (m+, m-) on the standard quadratic space
decomposes against a plane z and the isotropic vector u as

    P(g0 g(v)) = sum_{h+, h-} (v, u_zperp)^{h+} (v, u_z)^{h-}
                 p_{h+, h-}(g0 w(v)),

where w is the projection-then-isometry map attached to (g, z).  For the
degree-(2,0) polynomials 2 x_a x_b only h+ = 0, 1, 2 occur and the pieces
have closed forms; the general decomposition is kept as an independent
substitution-based route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import QSqrt2


def _is_zero(c) -> bool:
    return not c


class MultiPoly:
    """Sparse polynomial: map from exponent tuples to coefficients.

    Coefficients may be int, Fraction, QSqrt2, float, or complex; they are
    never mixed implicitly except through ordinary arithmetic coercion.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for ex, c in terms.items():
                if len(ex) != nvars:
                    raise ValueError("exponent length mismatch")
                if not _is_zero(c):
                    self.terms[tuple(int(e) for e in ex)] = c

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c) -> "MultiPoly":
        return cls(nvars, {tuple([0] * nvars): c})

    @classmethod
    def variable(cls, nvars: int, j: int, c=1) -> "MultiPoly":
        ex = [0] * nvars
        ex[j] = 1
        return cls(nvars, {tuple(ex): c})

    @classmethod
    def linear_form(cls, coeffs) -> "MultiPoly":
        coeffs = list(coeffs)
        n = len(coeffs)
        terms = {}
        for j, c in enumerate(coeffs):
            if not _is_zero(c):
                ex = [0] * n
                ex[j] = 1
                terms[tuple(ex)] = c
        return cls(n, terms)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        out = dict(self.terms)
        for ex, c in other.terms.items():
            s = out.get(ex, 0) + c
            if _is_zero(s):
                out.pop(ex, None)
            else:
                out[ex] = s
        return MultiPoly(self.nvars, out)

    def __neg__(self):
        return MultiPoly(self.nvars, {ex: -c for ex, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            out = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    ex = tuple(a + b for a, b in zip(e1, e2))
                    s = out.get(ex, 0) + c1 * c2
                    if _is_zero(s):
                        out.pop(ex, None)
                    else:
                        out[ex] = s
            return MultiPoly(self.nvars, out)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "MultiPoly":
        if _is_zero(c):
            return MultiPoly.zero(self.nvars)
        return MultiPoly(self.nvars, {ex: c * v for ex, v in self.terms.items()})

    def __pow__(self, n: int) -> "MultiPoly":
        if n < 0:
            raise ValueError("negative power")
        out = MultiPoly.constant(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def degree(self) -> int:
        return max((sum(ex) for ex in self.terms), default=0)

    def split_degree(self, p: int) -> tuple:
        """Degrees (m+, m-) in the first p and remaining variables.

        Requires bihomogeneity; raises otherwise.
        """
        if not self.terms:
            return (0, 0)
        degs = {(sum(ex[:p]), sum(ex[p:])) for ex in self.terms}
        if len(degs) != 1:
            raise ValueError("polynomial is not bihomogeneous")
        return degs.pop()

    def diff(self, j: int) -> "MultiPoly":
        out = {}
        for ex, c in self.terms.items():
            if ex[j]:
                e2 = list(ex)
                e2[j] -= 1
                out[tuple(e2)] = c * ex[j]
        return MultiPoly(self.nvars, out)

    def evaluate(self, point):
        acc = 0
        for ex, c in self.terms.items():
            v = c
            for j, e in enumerate(ex):
                for _ in range(e):
                    v = v * point[j]
            acc = acc + v
        return acc

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation at rows of an (N, nvars) array."""
        pts = np.asarray(points, dtype=float)
        acc = np.zeros(len(pts))
        for ex, c in self.terms.items():
            term = np.full(len(pts), float(c) if not isinstance(c, complex) else c)
            for j, e in enumerate(ex):
                if e:
                    term = term * pts[:, j] ** e
            acc = acc + term
        return acc

    def substitute(self, matrix) -> "MultiPoly":
        """P(M v): compose with the linear map; matrix is (nvars, new_nvars)."""
        rows = [list(r) for r in matrix]
        new_n = len(rows[0]) if rows else 0
        forms = [MultiPoly.linear_form(r) for r in rows]
        out = MultiPoly.zero(new_n)
        for ex, c in self.terms.items():
            term = MultiPoly.constant(new_n, c)
            for j, e in enumerate(ex):
                if e:
                    term = term * forms[j] ** e
            out = out + term
        return out

    def map_coefficients(self, fn) -> "MultiPoly":
        return MultiPoly(self.nvars, {ex: fn(c) for ex, c in self.terms.items()})

    def to_float(self) -> "MultiPoly":
        return self.map_coefficients(float)

    def canonical_str(self, names=None) -> str:
        """Sparse text form 'c * x1^a1 x3^a3 ...' sorted by multi-index."""
        if not self.terms:
            return "0"
        parts = []
        for ex in sorted(self.terms):
            c = self.terms[ex]
            vars_part = " ".join(
                f"x{j + 1}^{e}" if e > 1 else f"x{j + 1}"
                for j, e in enumerate(ex) if e)
            cs = str(float(c)) if isinstance(c, float) else str(c)
            parts.append(f"{cs} * {vars_part}" if vars_part else cs)
        return " + ".join(parts)

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {self.canonical_str()})"


def p_alpha_beta(alpha: int, beta: int, b: int) -> MultiPoly:
    """The degree-(2,0) kernel polynomial 2 x_alpha x_beta on R^{b,2}.

    Indices are 1-based and must stay in the positive-definite range 1..b.
    """
    if not (1 <= alpha <= b and 1 <= beta <= b):
        raise ValueError("indices must lie in 1..b")
    ex = [0] * (b + 2)
    ex[alpha - 1] += 1
    ex[beta - 1] += 1
    return MultiPoly(b + 2, {tuple(ex): 2})


def laplacian(p: MultiPoly) -> MultiPoly:
    """Euclidean Laplacian over all variables (not signature-weighted)."""
    out = MultiPoly.zero(p.nvars)
    for j in range(p.nvars):
        out = out + p.diff(j).diff(j)
    return out


def heat_expansion(p: MultiPoly) -> list:
    """Pieces H_m with exp(-Lap/8 pi y) P = sum_m (4 pi y)^{-m} H_m.

    H_m = (-1)^m Lap^m P / (2^m m!); the sum terminates because the
    Laplacian lowers degree by two.
    """
    pieces = []
    cur = p
    m = 0
    while cur:
        denom = Fraction((-2) ** m) * math.factorial(m)
        pieces.append(cur.map_coefficients(lambda c, d=denom: c * (1 / d)))
        cur = laplacian(cur)
        m += 1
    return pieces or [MultiPoly.zero(p.nvars)]


def heat_operator(p: MultiPoly, y=None):
    """Apply exp(-Lap / 8 pi y).

    With numeric y the result is a float-coefficient polynomial; with
    y=None the symbolic expansion in powers of 1/(4 pi y) is returned.
    """
    pieces = heat_expansion(p)
    if y is None:
        return pieces
    if y <= 0:
        raise ValueError("y must be positive")
    s = 1.0 / (4.0 * math.pi * y)
    out = MultiPoly.zero(p.nvars)
    for m, h in enumerate(pieces):
        out = out + h.map_coefficients(lambda c, w=s ** m: float(c) * w)
    return out


@dataclass(frozen=True)
class DecompositionFrame:
    """Standard-coordinate data of a Grassmannian point used for splitting.

    All entries may be exact (Fraction / QSqrt2) or float; p is the number
    of positive-definite coordinates, u the isotropic reference vector.
    """

    u_zperp: tuple
    u_z: tuple
    u: tuple
    p: int

    @property
    def nvars(self) -> int:
        return len(self.u)

    def form_row(self, v) -> list:
        """Coordinates of the linear form w -> (v, w) in the standard basis."""
        q = self.nvars - self.p
        return [v[j] if j < self.p else -v[j] for j in range(self.p + q)]

    def pair(self, v, w):
        row = self.form_row(v)
        return sum(a * c for a, c in zip(row, w))


def exact_base_frame(b: int) -> DecompositionFrame:
    """The base-point frame with entries in Q(sqrt2)."""
    half = QSqrt2(0, Fraction(1, 2))  # 1/sqrt(2)
    zero = QSqrt2(0)
    u_zperp = [zero] * (b + 2)
    u_zperp[b - 1] = half
    u_z = [zero] * (b + 2)
    u_z[b + 1] = half
    u = [zero] * (b + 2)
    u[b - 1] = half
    u[b + 1] = half
    return DecompositionFrame(u_zperp=tuple(u_zperp), u_z=tuple(u_z),
                              u=tuple(u), p=b)


def float_frame(space, frame) -> DecompositionFrame:
    """Standard-coordinate decomposition data of a geometry frame."""
    return DecompositionFrame(
        u_zperp=tuple(space.standard_coords(frame.u_zperp)),
        u_z=tuple(space.standard_coords(frame.u_z)),
        u=tuple(space.standard_coords(space.u)),
        p=space.b)


def _w_projection(frame: DecompositionFrame):
    """Matrix of the projection onto w-perp + w in standard coordinates."""
    n = frame.nvars
    uz2 = frame.pair(frame.u_z, frame.u_z)
    up2 = frame.pair(frame.u_zperp, frame.u_zperp)
    rz = frame.form_row(frame.u_z)
    rp = frame.form_row(frame.u_zperp)
    mat = [[(1 if i == j else 0)
            - frame.u_z[i] * rz[j] * (1 / uz2)
            - frame.u_zperp[i] * rp[j] * (1 / up2)
            for j in range(n)] for i in range(n)]
    return mat


def _mat_vec(m, v):
    return [sum(a * b for a, b in zip(row, v)) for row in m]


def _mat_mul(a, b):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


@dataclass
class PolyDecomposition:
    """Splitting of a degree-(2,0) kernel polynomial against a frame.

    pieces[h] is the piece attached to (v, u_zperp)^h as a polynomial in
    the ambient standard coordinates of the image of the w-map; composed[h]
    is the same piece written as a polynomial in the argument v.
    """

    alpha: int
    beta: int
    pieces: dict
    composed: dict
    sigma: list            # matrix of the w-map in standard coordinates
    ell: MultiPoly          # the linear form v -> (v, u_zperp)
    frame: DecompositionFrame

    def reconstruction(self) -> MultiPoly:
        n = self.frame.nvars
        out = MultiPoly.zero(n)
        for h, piece in self.composed.items():
            out = out + self.ell ** h * piece
        return out


def decompose(alpha: int, beta: int, g_matrix, frame: DecompositionFrame,
              check: bool = True) -> PolyDecomposition:
    """Split 2 x_alpha x_beta by the closed forms attached to (g, z).

    ``g_matrix`` is the isometry in standard coordinates (rows x columns,
    exact or float entries); it must map the frame's plane to the base
    plane, which is implied by the caller's construction and cross-checked
    through the reconstruction identity when ``check`` is set.
    """
    b = frame.p
    n = frame.nvars
    if not (1 <= alpha <= b and 1 <= beta <= b):
        raise ValueError("indices must lie in 1..b")
    g = [list(r) for r in g_matrix]
    gu = _mat_vec(g, list(frame.u))
    up2 = frame.pair(frame.u_zperp, frame.u_zperp)
    ga, gb = gu[alpha - 1], gu[beta - 1]
    xa = MultiPoly.variable(n, alpha - 1)
    xb = MultiPoly.variable(n, beta - 1)
    pieces = {
        2: MultiPoly.constant(n, 2 * ga * gb * (1 / (up2 * up2))),
        1: (xb.scale(ga) + xa.scale(gb)).scale(2 * (1 / up2)),
        0: (xa * xb).scale(2),
    }
    pieces = {h: p for h, p in pieces.items()}
    sigma = _mat_mul(g, _w_projection(frame))
    composed = {h: p.substitute(sigma) for h, p in pieces.items()}
    ell = MultiPoly.linear_form(frame.form_row(frame.u_zperp))
    dec = PolyDecomposition(alpha=alpha, beta=beta, pieces=pieces,
                            composed=composed, sigma=sigma, ell=ell,
                            frame=frame)
    if check:
        target = p_alpha_beta(alpha, beta, b).substitute(g)
        resid = dec.reconstruction() - target
        if any(abs(float(c)) > 1e-8 for c in resid.terms.values()):
            raise ValueError("reconstruction identity failed; "
                             "does g map z to the base plane?")
    return dec


def decompose_general(poly: MultiPoly, g_matrix, frame: DecompositionFrame,
                      fbasis) -> dict:
    """Substitution-based decomposition of any bihomogeneous polynomial.

    ``fbasis`` is a pseudo-orthonormal basis (f_1..f_{n-2}) of w-perp + w in
    standard coordinates, positive vectors first.  Returns a map
    (h+, h-) -> piece, each piece a polynomial in the intrinsic coordinates
    of the image of the w-map.  Independent of the closed forms; used as
    their oracle.
    """
    n = frame.nvars
    k = len(fbasis)
    if k != n - 2:
        raise ValueError("f-basis must span w-perp + w")
    g = [list(r) for r in g_matrix]
    uz2 = frame.pair(frame.u_z, frame.u_z)
    up2 = frame.pair(frame.u_zperp, frame.u_zperp)
    # v = (s+ / up2) u_zperp + (s- / uz2) u_z + sum_i zeta_i f_i in variables
    # (s+, s-, zeta); substitute into poly(g v) and collect powers of s+-.
    sub = [[0] * (2 + k) for _ in range(n)]
    for i in range(n):
        sub[i][0] = frame.u_zperp[i] * (1 / up2)
        sub[i][1] = frame.u_z[i] * (1 / uz2)
        for j, f in enumerate(fbasis):
            sub[i][2 + j] = f[i]
    gv = _mat_mul(g, sub)
    expanded = poly.substitute(gv)
    out = {}
    for ex, c in expanded.terms.items():
        hp, hm = ex[0], ex[1]
        piece = out.setdefault((hp, hm), MultiPoly.zero(k))
        out[(hp, hm)] = piece + MultiPoly(k, {ex[2:]: c})
    return out


def base_fbasis_exact(b: int):
    """Pseudo-orthonormal basis of w0-perp + w0: (e_1..e_{b-1}, e_{b+1})."""
    zero = QSqrt2(0)
    one = QSqrt2(1)
    out = []
    for i in list(range(b - 1)) + [b]:
        v = [zero] * (b + 2)
        v[i] = one
        out.append(tuple(v))
    return out
