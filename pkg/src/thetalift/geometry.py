"""Coordinate models of the symmetric space of O(b,2) and the explicit
identification of isometries with pairs (stabilizer element, tube point).

Three coordinate systems are in play:

* lattice coordinates -- integer coordinates in the basis of L = E8^n+U+U;
* standard coordinates -- pseudo-orthonormal (e_1..e_b positive,
  e_{b+1}, e_{b+2} negative), reached through the real basis map;
* KAN coordinates -- the basis (u, u2, d_3..d_b, u2', u') adapted to the
  Iwasawa decomposition, in which the A factor is diagonal and the N
  factor is unipotent upper triangular.

Tube points Z = X + iY live in K (x) R with Y of negative norm; their
frames carry the negative plane z = span(X_L, Y_L), the projections of
the isotropic vector u, and the majorant axis Y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattices import (Lattice, SplitB2, real_basis_map, signature_b2_lattice)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class TubePoint:
    """Z = X + iY in K (x) C with Y^2 < 0, in K lattice coordinates."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "Y", np.asarray(self.Y, dtype=float))
        if self.X.shape != self.Y.shape:
            raise GeometryError("X and Y must have equal length")

    @property
    def b(self) -> int:
        return len(self.X)

    def shifted(self, xprime) -> "TubePoint":
        return TubePoint(self.X + np.asarray(xprime, dtype=float), self.Y)

    def to_json(self):
        return {"X": list(map(float, self.X)), "Y": list(map(float, self.Y))}


@dataclass(frozen=True)
class Isometry:
    """Real matrix acting on L (x) R in lattice coordinates."""

    matrix: np.ndarray
    tolerance: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))

    def check(self, lattice: Lattice):
        g = lattice.gram_array.astype(float)
        err = np.max(np.abs(self.matrix.T @ g @ self.matrix - g))
        if err > self.tolerance:
            raise GeometryError(f"matrix fails to preserve the form ({err:.2e})")

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            return Isometry(self.matrix @ other.matrix, self.tolerance)
        return self.matrix @ other

    def inverse(self) -> "Isometry":
        return Isometry(np.linalg.inv(self.matrix), self.tolerance)


@dataclass(frozen=True)
class PointFrame:
    """Derived data of the negative plane attached to a tube point."""

    Z: TubePoint
    X_L: np.ndarray          # lattice coordinates of Re Z_L
    Y_L: np.ndarray          # lattice coordinates of Im Z_L
    u_z: np.ndarray
    u_zperp: np.ndarray
    u_z_sq: float
    u_zperp_sq: float
    mu: np.ndarray
    mu_K: np.ndarray

    @property
    def z_basis(self):
        return (self.X_L, self.Y_L)

    @property
    def w_data(self) -> np.ndarray:
        """The imaginary part Y spans the negative line of Gr(K)."""
        return self.Z.Y


class Space:
    """All fixed data attached to the signature-(b,2) lattice of level b."""

    def __init__(self, b: int):
        self.b = b
        self.split: SplitB2 = signature_b2_lattice(b)
        self.L: Lattice = self.split.lattice
        self.K: Lattice = self.split.k_lattice
        self.gram = self.L.gram_array.astype(float)
        self.gram_K = self.K.gram_array.astype(float)
        self.rbm = real_basis_map(self.split)
        self.T = self.rbm.matrix                      # lattice -> standard
        self.T_inv = np.linalg.inv(self.T)
        self.J = self.rbm.signature_matrix
        n = b + 2
        self.u = np.zeros(n)
        self.u[b] = 1.0
        self.uprime = np.zeros(n)
        self.uprime[b + 1] = 1.0
        self.embed_K = np.zeros((n, b))
        self.embed_K[:b, :] = np.eye(b)
        # KAN basis columns in standard coordinates
        s = 1.0 / math.sqrt(2.0)
        P = np.zeros((n, n))
        P[b - 1, 0], P[b + 1, 0] = s, s               # u
        P[b - 2, 1], P[b, 1] = s, s                   # u2
        for j in range(2, b):                          # d_j = e_{j-2}
            P[j - 2, j] = 1.0
        P[b - 2, b], P[b, b] = s, -s                  # u2'
        P[b - 1, b + 1], P[b + 1, b + 1] = s, -s      # u'
        self.kan_P = P
        self.gram_kan = np.zeros((n, n))
        self.gram_kan[0, n - 1] = self.gram_kan[n - 1, 0] = 1.0
        self.gram_kan[1, n - 2] = self.gram_kan[n - 2, 1] = 1.0
        for j in range(2, b):
            self.gram_kan[j, j] = 1.0
        self.kan_P_inv = self.gram_kan @ P.T @ self.J
        self.lat_to_kan = self.kan_P_inv @ self.T
        self.kan_to_lat = self.T_inv @ P
        base_Y = np.zeros(b)
        base_Y[b - 2], base_Y[b - 1] = 1.0, -1.0      # u2 - u2' = sqrt(2) e_{b+1}
        self.base_point = TubePoint(np.zeros(b), base_Y)

    # -- forms ------------------------------------------------------------
    def q_L(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.gram @ v) / 2.0

    def q_K(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.gram_K @ v) / 2.0

    def bil_L(self, v, w) -> float:
        return float(np.asarray(v, dtype=float) @ self.gram @ np.asarray(w, dtype=float))

    def bil_K(self, v, w) -> float:
        return float(np.asarray(v, dtype=float) @ self.gram_K @ np.asarray(w, dtype=float))

    def standard_coords(self, v_lat) -> np.ndarray:
        return self.T @ np.asarray(v_lat, dtype=float)

    def kan_coords_K(self, v_K) -> np.ndarray:
        return self.lat_to_kan @ (self.embed_K @ np.asarray(v_K, dtype=float))

    def identity(self) -> Isometry:
        return Isometry(np.eye(self.b + 2))

    def from_kan_matrix(self, m_kan) -> Isometry:
        return Isometry(self.kan_to_lat @ np.asarray(m_kan, dtype=float) @ self.lat_to_kan)

    # -- planes -----------------------------------------------------------
    def plane_projector(self, v1, v2) -> np.ndarray:
        """Form-orthogonal projector onto a nondegenerate plane."""
        v1 = np.asarray(v1, dtype=float)
        v2 = np.asarray(v2, dtype=float)
        a = self.bil_L(v1, v1)
        v2 = v2 - self.bil_L(v2, v1) / a * v1
        b2 = self.bil_L(v2, v2)
        return (np.outer(v1, self.gram @ v1) / a
                + np.outer(v2, self.gram @ v2) / b2)

    def base_plane_basis(self):
        e1 = self.T_inv[:, self.b]       # e_{b+1} in lattice coordinates
        e2 = self.T_inv[:, self.b + 1]   # e_{b+2}
        return e1, e2

    def maps_z_to_z0(self, g: Isometry, frame: "PointFrame", tol=1e-8) -> bool:
        p_img = self.plane_projector(g @ frame.X_L, g @ frame.Y_L)
        p0 = self.plane_projector(*self.base_plane_basis())
        return float(np.linalg.norm(p_img - p0)) < tol


@lru_cache(maxsize=None)
def space(b: int) -> Space:
    return Space(b)


# -- frames ---------------------------------------------------------------

def validate_tube_point(sp: Space, Z: TubePoint):
    if Z.b != sp.b:
        raise GeometryError("tube point has wrong dimension")
    if sp.q_K(Z.Y) >= 0:
        raise GeometryError("Im Z must have negative norm")
    if sp.kan_coords_K(Z.Y)[sp.b] >= 0:
        raise GeometryError("Im Z lies in the wrong connected component")


def tube_to_frame(sp: Space, Z: TubePoint) -> PointFrame:
    """Lift Z to the plane basis (X_L, Y_L) and project u onto z and z-perp."""
    validate_tube_point(sp, Z)
    qX, qY = sp.q_K(Z.X), sp.q_K(Z.Y)
    xy = sp.bil_K(Z.X, Z.Y)
    X_L = sp.embed_K @ Z.X + sp.uprime + (qY - qX) * sp.u
    Y_L = sp.embed_K @ Z.Y - xy * sp.u
    # Gram-Schmidt projection of u onto z = span(X_L, Y_L)
    u_z = (sp.bil_L(sp.u, X_L) / sp.bil_L(X_L, X_L) * X_L
           + sp.bil_L(sp.u, Y_L) / sp.bil_L(Y_L, Y_L) * Y_L)
    u_zperp = sp.u - u_z
    u_z_sq = sp.bil_L(u_z, u_z)
    u_zperp_sq = sp.bil_L(u_zperp, u_zperp)
    mu = -sp.uprime + u_zperp / (2 * u_zperp_sq) + u_z / (2 * u_z_sq)
    return PointFrame(Z=Z, X_L=X_L, Y_L=Y_L, u_z=u_z, u_zperp=u_zperp,
                      u_z_sq=u_z_sq, u_zperp_sq=u_zperp_sq,
                      mu=mu, mu_K=mu[: sp.b].copy())


def base_frame(sp: Space) -> PointFrame:
    return tube_to_frame(sp, sp.base_point)


def project(sp: Space, frame: PointFrame, v) -> tuple:
    """Split v = v_z + v_zperp against the frame's negative plane."""
    v = np.asarray(v, dtype=float)
    v_z = (sp.bil_L(v, frame.X_L) / sp.bil_L(frame.X_L, frame.X_L) * frame.X_L
           + sp.bil_L(v, frame.Y_L) / sp.bil_L(frame.Y_L, frame.Y_L) * frame.Y_L)
    return v_z, v - v_z


def majorant_value(sp: Space, frame: PointFrame, lam) -> float:
    """(lam, lam)_w = lam^2 - 2 (lam, Y)^2 / Y^2 for lam in K (x) R."""
    lam = np.asarray(lam, dtype=float)
    y = frame.Z.Y
    y2 = 2.0 * sp.q_K(y)
    return float(2.0 * sp.q_K(lam) - 2.0 * sp.bil_K(lam, y) ** 2 / y2)


def w_projection_matrix(sp: Space, frame: PointFrame) -> np.ndarray:
    """Projector of L (x) R onto w-perp + w (kills u_z and u_zperp)."""
    pz = np.outer(frame.u_z, sp.gram @ frame.u_z) / frame.u_z_sq
    pp = np.outer(frame.u_zperp, sp.gram @ frame.u_zperp) / frame.u_zperp_sq
    return np.eye(sp.b + 2) - pz - pp


def w_map_matrix(sp: Space, g: Isometry, frame: PointFrame) -> np.ndarray:
    if not sp.maps_z_to_z0(g, frame, tol=1e-6):
        raise GeometryError("isometry does not map z to the base plane")
    return g.matrix @ w_projection_matrix(sp, frame)


def w_map(sp: Space, g: Isometry, frame: PointFrame, v) -> np.ndarray:
    """g applied to the (w-perp + w)-component of v."""
    return w_map_matrix(sp, g, frame) @ np.asarray(v, dtype=float)


# -- Iwasawa factors ------------------------------------------------------

def _n_matrix(b: int, eta, phi, x, y):
    """Unipotent upper-triangular N factor in the KAN basis.

    x and y are the two length-(b-2) row-vector parameters.
    """
    one = eta * 0 + phi * 0 + 1  # promotes to Fraction when inputs are exact
    d = b - 2
    x = list(x)
    y = list(y)
    yyt = sum(t * t for t in y)
    xyt = sum(s * t for s, t in zip(x, y))
    xxt = sum(s * s for s in x)
    m = [[one * 0 for _ in range(b + 2)] for _ in range(b + 2)]
    for i in range(b + 2):
        m[i][i] = one
    m[0][1] = phi
    for j in range(d):
        m[0][2 + j] = x[j] + phi * y[j] / 2
    m[0][b] = eta - xyt / 2 - phi * yyt / 6
    m[0][b + 1] = -phi * eta - xxt / 2 + phi * phi * yyt / 24
    for j in range(d):
        m[1][2 + j] = y[j]
    m[1][b] = -yyt / 2
    m[1][b + 1] = -eta - xyt / 2 + phi * yyt / 6
    for j in range(d):
        m[2 + j][b] = -y[j]
        m[2 + j][b + 1] = -x[j] + phi * y[j] / 2
    m[b][b + 1] = -phi
    return np.array(m, dtype=object if isinstance(one, Fraction) else float)


def _a_matrix(b: int, m1: float, m2: float) -> np.ndarray:
    d = np.ones(b + 2)
    d[0], d[1], d[b], d[b + 1] = m1, m2, 1.0 / m2, 1.0 / m1
    return np.diag(d)


@dataclass(frozen=True)
class KanSolution:
    a: Isometry
    n: Isometry
    m1: float
    m2: float
    eta: float
    phi: float
    x: np.ndarray
    y: np.ndarray


def kan_factors(sp: Space, Z: TubePoint) -> KanSolution:
    """The unique (a, n) in A x N with (a n)(Z_0) = Z on the tube domain.

    The triangular structure gives the parameters by back-substitution:
    matching the image of the base point coordinate by coordinate
    determines (m1, m2), then phi, then the vectors x, y, then eta.
    """
    validate_tube_point(sp, Z)
    b = sp.b
    zk = sp.kan_coords_K(Z.X) + 1j * sp.kan_coords_K(Z.Y)
    z2, zd, zb = zk[1], zk[2:b], zk[b]
    qY = sp.q_K(Z.Y)
    m1 = math.sqrt(-qY)
    if not np.isfinite(m1) or m1 <= 0:
        raise GeometryError("no Iwasawa solution for this point")
    m2 = m1 / (-zb.imag)
    phi = zb.real / zb.imag
    y = zd.imag / m1
    x = phi * y / 2.0 - zd.real / m1
    eta = -z2.real / (m1 * m2) - float(x @ y) / 2.0 + phi * float(y @ y) / 6.0
    a = sp.from_kan_matrix(_a_matrix(b, m1, m2))
    n = sp.from_kan_matrix(_n_matrix(b, eta, phi, x, y))
    a.check(sp.L)
    n.check(sp.L)
    return KanSolution(a=a, n=n, m1=m1, m2=m2, eta=eta, phi=phi, x=x, y=y)


def stabilizes_base_point(sp: Space, kappa: Isometry, tol=1e-8) -> bool:
    e1, e2 = sp.base_plane_basis()
    p0 = sp.plane_projector(e1, e2)
    p = sp.plane_projector(kappa @ e1, kappa @ e2)
    return float(np.linalg.norm(p - p0)) < tol


def identify(sp: Space, kappa: Isometry, Z: TubePoint) -> Isometry:
    """The isometry kappa . (a n)^{-1}: maps z to z_0 and preserves R u."""
    if not stabilizes_base_point(sp, kappa):
        raise GeometryError("kappa does not stabilize the base point")
    sol = kan_factors(sp, Z)
    an = sol.a.matrix @ sol.n.matrix
    return Isometry(kappa.matrix @ np.linalg.inv(an))


def psi1(sp: Space, Z: TubePoint) -> Isometry:
    return identify(sp, sp.identity(), Z)


def translation_matrix_kan(sp: Space, xprime_K, exact: bool = False) -> np.ndarray:
    """The unipotent translation matrix M(X') in the KAN basis.

    With ``exact=True`` the input is read as KAN coordinates (entries
    rational) and the matrix is exact; otherwise X' is a K-lattice
    coordinate vector and the matrix is floating point.
    """
    b = sp.b
    if exact:
        k = [Fraction(t) for t in xprime_K]
        if len(k) != b:
            raise GeometryError("expected KAN K-coordinates (length b)")
        kan = [Fraction(0)] + k + [Fraction(0)]
        one = Fraction(1)
        m = [[Fraction(0)] * (b + 2) for _ in range(b + 2)]
    else:
        kan = sp.lat_to_kan @ (sp.embed_K @ np.asarray(xprime_K, dtype=float))
        one = 1.0
        m = [[0.0] * (b + 2) for _ in range(b + 2)]
    qx = kan[1] * kan[b] + sum(t * t for t in kan[2:b]) / 2
    for i in range(b + 2):
        m[i][i] = one
    m[0][1] = -kan[b]
    for j in range(2, b):
        m[0][j] = -kan[j]
    m[0][b] = -kan[1]
    m[0][b + 1] = -qx
    m[1][b + 1] = kan[1]
    for j in range(2, b):
        m[j][b + 1] = kan[j]
    m[b][b + 1] = kan[b]
    return np.array(m, dtype=object if exact else float)


def translation_isometry(sp: Space, xprime_K) -> Isometry:
    return sp.from_kan_matrix(translation_matrix_kan(sp, xprime_K))


def apply_to_tube(sp: Space, g: Isometry, Z: TubePoint) -> TubePoint:
    """Push a tube point through an isometry via the projective model."""
    qZc = complex(sp.q_K(Z.X) - sp.q_K(Z.Y), sp.bil_K(Z.X, Z.Y))
    z_l = (sp.embed_K @ (Z.X + 1j * Z.Y) + sp.uprime - qZc * sp.u)
    img = g.matrix @ z_l
    a = complex(img @ sp.gram @ sp.u)
    if abs(a) < 1e-12:
        raise GeometryError("image leaves the affine chart of the tube model")
    w = img / a
    Zk = w[: sp.b]
    out = TubePoint(Zk.real, Zk.imag)
    try:
        validate_tube_point(sp, out)
    except GeometryError:
        out = TubePoint(Zk.real, -Zk.imag)
        validate_tube_point(sp, out)
    return out


def plane_to_tube(sp: Space, v1, v2) -> TubePoint:
    """Tube coordinates of the negative plane spanned by v1, v2."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    a11 = sp.bil_L(v1, v1)
    if a11 >= 0:
        raise GeometryError("plane is not negative definite")
    o1 = v1 / math.sqrt(-a11)
    v2 = v2 - sp.bil_L(v2, o1) / sp.bil_L(o1, o1) * o1
    a22 = sp.bil_L(v2, v2)
    if a22 >= 0:
        raise GeometryError("plane is not negative definite")
    o2 = v2 / math.sqrt(-a22)
    z_l = o1 + 1j * o2
    a = complex(z_l @ sp.gram @ sp.u)
    if abs(a) < 1e-12:
        raise GeometryError("plane is orthogonal-degenerate against u")
    w = z_l / a
    Zk = w[: sp.b]
    out = TubePoint(Zk.real, Zk.imag)
    try:
        validate_tube_point(sp, out)
    except GeometryError:
        out = TubePoint(Zk.real, -Zk.imag)
        validate_tube_point(sp, out)
    return out


def frame_of_isometry(sp: Space, g: Isometry) -> PointFrame:
    """Frame of the plane z = g^{-1}(z_0)."""
    e1, e2 = sp.base_plane_basis()
    ginv = np.linalg.inv(g.matrix)
    Z = plane_to_tube(sp, ginv @ e1, ginv @ e2)
    return tube_to_frame(sp, Z)


def x_independence_check(sp: Space, Z: TubePoint, xprime, lam_K,
                         tol: float = 1e-8) -> bool:
    """Whether the w-maps of psi(1, Z) and psi(1, Z + X') agree on lam."""
    g1 = psi1(sp, Z)
    g2 = psi1(sp, Z.shifted(xprime))
    f1 = tube_to_frame(sp, Z)
    f2 = tube_to_frame(sp, Z.shifted(xprime))
    v = sp.embed_K @ np.asarray(lam_K, dtype=float)
    w1 = w_map(sp, g1, f1, v)
    w2 = w_map(sp, g2, f2, v)
    return float(np.max(np.abs(w1 - w2))) < tol
