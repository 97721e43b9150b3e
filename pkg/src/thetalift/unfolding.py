"""Rankin-Selberg unfolding of the defining integrals and the closed-form
Fourier coefficients that fall out of it.

The defining integral pairs y^{k+1} f(tau) against the conjugated theta
function of L over a fundamental domain.  Splitting L = K + U rewrites the
integrand as a constant part plus a sum over cosets of the translation
subgroup, and unfolding collapses the coset sum to twice a strip integral
of the auxiliary function

    h(tau, g) = y^{k+1/2} f(tau) / (sqrt(2) |u_zperp|)
                * sum_{r >= 1} sum_{h+} (r / 2iy)^{h+}
                  exp(-pi r^2 / (2 y u_zperp^2))
                  conj(Theta_K(tau, r mu_K, 0, w, p_{h+})).

Collecting Fourier modes of the strip integral gives, for each lambda in K
of positive norm, a divisor sum whose y-integrals are Bessel K functions.
Everything here is numerical-first: series and quadrature sides are coded
independently so they can be played against each other.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .geometry import (Isometry, PointFrame, Space, TubePoint,
                       frame_of_isometry, psi1, tube_to_frame)
from .lattices import ellipsoid_points, vector_divisors
from .quadrature import exp_kernel_integral, panel_rule
from .theta import KThetaMachine, Truncation, coprime_pairs


@dataclass(frozen=True)
class CuspFormProxy:
    """Weight plus a finite list of Fourier coefficients c_1..c_N.

    The proxy IS the finite sum; when standing in for an infinite
    expansion, the neglected tail at height y is of the order
    exp(-2 pi (N+1) y).
    """

    weight: int
    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients",
                           tuple(complex(c) for c in self.coefficients))

    @property
    def nmax(self) -> int:
        return len(self.coefficients)

    def coefficient(self, m):
        if isinstance(m, float):
            if abs(m - round(m)) > 1e-9:
                return 0.0
            m = int(round(m))
        if 1 <= m <= self.nmax:
            return self.coefficients[m - 1]
        return 0.0

    def value(self, tau: complex) -> complex:
        tau = complex(tau)
        return sum(c * cmath.exp(2j * math.pi * n * tau)
                   for n, c in enumerate(self.coefficients, start=1))

    def values(self, x: np.ndarray, y: float) -> np.ndarray:
        ns = np.arange(1, self.nmax + 1)
        radial = np.array(self.coefficients) * np.exp(-2 * math.pi * y * ns)
        return np.exp(2j * math.pi * np.outer(x, ns)) @ radial

    def abs_bound(self, y: float) -> float:
        return float(sum(abs(c) * math.exp(-2 * math.pi * n * y)
                         for n, c in enumerate(self.coefficients, start=1)))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coefficients)


def unit_cusp_form(weight: int, n0: int, nmax: int = None) -> CuspFormProxy:
    nmax = nmax or n0
    coeffs = [0.0] * nmax
    coeffs[n0 - 1] = 1.0
    return CuspFormProxy(weight, tuple(coeffs))


def ramanujan_tau(nmax: int) -> tuple:
    """tau(1..nmax) from the 24th power of the Dedekind eta q-expansion."""
    series = [0] * (nmax + 1)
    series[0] = 1
    for k in range(1, nmax + 1):  # multiply by (1 - q^k)^24
        for _ in range(24):
            for j in range(nmax, k - 1, -1):
                series[j] -= series[j - k]
    return tuple(series[: nmax])  # tau(n) = coefficient of q^{n-1} times q


@dataclass(frozen=True)
class QuadratureConfig:
    y_min: float = 0.05
    y_max: float = 10.0
    panels: int = 30
    degree: int = 8
    x_nodes: int = 32
    eps: float = 1e-8
    coset_bound: int = 40


# -- Bessel-type integrals ---------------------------------------------------

def bessel_integral(s: float, a: float, b: float) -> float:
    """int_0^inf y^{s-1} exp(-a y - b / y) dy = 2 (b/a)^{s/2} K_s(2 sqrt(ab))."""
    if a <= 0 or b <= 0:
        raise ValueError("rates must be positive")
    return float(2.0 * (b / a) ** (s / 2.0) * scipy.special.kv(s, 2.0 * math.sqrt(a * b)))


def exp_integral_quadrature(s: float, a: float, b: float, tol: float = 1e-13) -> float:
    return exp_kernel_integral(s, a, b, tol=tol)


# -- the auxiliary function h ------------------------------------------------

def h_alpha_beta(sp: Space, tau: complex, g: Isometry, f: CuspFormProxy,
                 alpha: int, beta: int, trunc: Truncation,
                 frame: PointFrame = None, theta_tail: float = 1e-11) -> complex:
    """One value of the translation-invariant auxiliary function."""
    tau = complex(tau)
    y = tau.imag
    if f.is_zero():
        return 0.0 + 0.0j
    if frame is None:
        frame = frame_of_isometry(sp, g)
    machine = KThetaMachine(sp, g, frame, alpha, beta)
    u2 = machine.u_zperp_sq
    pref = y ** (f.weight + 0.5) * f.value(tau) / (math.sqrt(2.0) * machine.u_abs)
    total = 0.0 + 0.0j
    rmax = trunc.r_bound or 8
    for r in range(1, rmax + 1):
        egauss = math.exp(-math.pi * r * r / (2.0 * y * u2))
        if abs(pref) * egauss * max(1.0, (r / y) ** 2) * 1e3 < 1e-18:
            break
        for h in (0, 1, 2):
            th = machine.theta(tau, h, alpha_shift=r * machine.X,
                               beta_shift=None, tail_target=theta_tail)
            total += (r / (2j * y)) ** h * egauss * np.conjugate(th.value)
    return pref * total


def sl2_coset_reps(bound: int):
    """One representative (a, b; c, d) per translation coset, |c|,|d| <= bound."""
    reps = []
    for c, d in coprime_pairs(bound):
        g, a, b = _ext_gcd(d, -c)
        # a*d - b*c = gcd = +-1; normalize to determinant one
        if a * d - b * c == -1:
            a, b = -a, -b
        reps.append((a, b, c, d))
    return reps


def _ext_gcd(p: int, q: int):
    if q == 0:
        return (abs(p), 1 if p >= 0 else -1, 0)
    g, x, y = _ext_gcd(q, p % q)
    return (g, y, x - (p // q) * y)


# -- generic unfolding check --------------------------------------------------

@dataclass(frozen=True)
class UnfoldCheck:
    lhs: float
    rhs: float
    residual: float


def generic_unfold_check(s: float, coset_bound: int = 40, y_max: float = 60.0,
                         x_panels: int = 12, y_panels: int = 22,
                         degree: int = 10) -> UnfoldCheck:
    """Rankin-Selberg identity on the test function h(tau) = y^s e^{-y}.

    The left side integrates the coset sum over the standard fundamental
    domain; the right side is the strip integral in closed form,
    2 * Gamma(s - 1).
    """
    if s <= 1:
        raise ValueError("need s > 1 for convergence")
    pairs = np.array(coprime_pairs(coset_bound), dtype=float)
    c, d = pairs[:, 0], pairs[:, 1]
    xs, xw = panel_rule(-0.5, 0.5, x_panels, degree)
    total = 0.0
    for x, wx in zip(xs, xw):
        y0 = math.sqrt(max(1.0 - x * x, 0.0))
        ys, yw = panel_rule(y0, y_max, y_panels, degree, geometric=True)
        j2 = (c[:, None] * x + d[:, None]) ** 2 + np.outer(c ** 2, ys ** 2)
        yp = ys[None, :] / j2
        vals = np.sum(yp ** s * np.exp(-yp), axis=0)
        total += wx * float(np.sum(yw * vals / ys ** 2))
    rhs = 2.0 * math.gamma(s - 1.0)
    return UnfoldCheck(lhs=total, rhs=rhs, residual=abs(total - rhs))


# -- Fourier coefficients ------------------------------------------------------

@dataclass(frozen=True)
class FourierCoefficientResult:
    lam: tuple
    value: complex
    terms: dict
    method: str

    def check_sum(self) -> float:
        return abs(self.value - sum(self.terms.values()))


def _machine_for(sp: Space, frame: PointFrame, g: Isometry,
                 alpha: int, beta: int) -> KThetaMachine:
    return KThetaMachine(sp, g, frame, alpha, beta)


def fourier_coefficient(sp: Space, lam, f: CuspFormProxy, alpha: int, beta: int,
                        frame: PointFrame, g: Isometry, method: str = "bessel",
                        machine: KThetaMachine = None) -> FourierCoefficientResult:
    """Closed-form Fourier coefficient of the defining integral at lambda.

    Zero (by fiat of the expansion theorem) for lambda of non-positive
    norm; the zero vector belongs to the constant term instead.
    """
    lam = np.asarray(lam, dtype=np.int64)
    if not lam.any():
        raise ValueError("lambda = 0 is the constant term; call constant_term")
    q = int(round(2 * sp.q_K(lam))) // 2
    if q <= 0:
        return FourierCoefficientResult(tuple(int(v) for v in lam), 0.0 + 0.0j,
                                        {}, method)
    if machine is None:
        machine = _machine_for(sp, frame, g, alpha, beta)
    u2 = machine.u_zperp_sq
    k = f.weight
    y_axis = frame.Z.Y
    y2 = 2.0 * sp.q_K(y_axis)
    terms = {}
    for t in vector_divisors(lam):
        cn = f.coefficient(q / (t * t))
        if cn == 0:
            continue
        lam_t = lam.astype(float) / t
        lw2 = 2.0 * sp.q_K(lam_t) - sp.bil_K(lam_t, y_axis) ** 2 / y2
        a_rate = 2.0 * math.pi * lw2
        b_rate = math.pi * t * t / (2.0 * u2)
        zeta = machine.tmat_K @ lam_t
        for h in (0, 1, 2):
            pieces = machine.pieces[h].heat
            integral = 0.0
            for m, piece in enumerate(pieces):
                if not piece:
                    continue
                pval = float(piece.evaluate_many(zeta[None, :])[0])
                if pval == 0.0:
                    continue
                s_exp = k - h - 0.5 - m
                if method == "bessel":
                    ival = bessel_integral(s_exp, a_rate, b_rate)
                else:
                    ival = exp_integral_quadrature(s_exp, a_rate, b_rate)
                integral += (4.0 * math.pi) ** (-m) * pval * ival
            if integral:
                terms[(h, t)] = (t / 2j) ** h * cn * integral
    pref = math.sqrt(2.0) / machine.u_abs
    value = pref * sum(terms.values())
    terms = {key: pref * v for key, v in terms.items()}
    return FourierCoefficientResult(tuple(int(v) for v in lam), value, terms, method)


# -- grouped theta over K for strip quadrature ---------------------------------

class GroupedKTheta:
    """Enumerated K-points with per-level reduction grouped by q(lambda).

    For zero beta-shift the x-dependence of Theta_K enters only through
    e(x q(lambda)), so each height y needs one pass over the points to
    produce the finitely many mode amplitudes A_q.  The point table is
    stored compactly (int8 coordinates, float32 majorants), sorted by
    majorant norm so each level works on a prefix; it depends only on the
    imaginary part Y and is reused across real parts X.
    """

    def __init__(self, gram_K: np.ndarray, tmat_K: np.ndarray, r2max: float):
        maj = tmat_K.T @ tmat_K
        pts_chunks, maj_chunks, q_chunks = [], [], []
        itype = np.int8
        from .lattices import iter_ellipsoid_blocks
        for block in iter_ellipsoid_blocks(maj, r2max, block=1_000_000):
            coords = block.astype(np.float64) @ tmat_K.T
            maj_chunks.append(np.einsum("ij,ij->i", coords, coords)
                              .astype(np.float32))
            qf = 0.5 * np.einsum("ij,ij->i", block @ gram_K,
                                 block.astype(np.float64))
            q_chunks.append(np.round(qf).astype(np.int32))
            if np.abs(block).max(initial=0) >= 127:
                itype = np.int16
            pts_chunks.append(block.astype(np.int16))
        n = len(maj)
        pts = np.concatenate(pts_chunks) if pts_chunks \
            else np.zeros((0, n), np.int16)
        majv = np.concatenate(maj_chunks) if maj_chunks \
            else np.zeros(0, np.float32)
        qv = np.concatenate(q_chunks) if q_chunks else np.zeros(0, np.int32)
        order = np.argsort(majv, kind="stable")
        self.pts = pts[order].astype(itype)
        self.majv = majv[order]
        self.qv = qv[order]
        self.qmin = int(self.qv.min(initial=0))
        self.qmax = int(self.qv.max(initial=0))
        self.tmat_K = tmat_K
        self.gram_K = gram_K
        self.machine = None
        self.hvals = None
        self.phase1 = None
        self._heat_orders = None

    def attach(self, machine: KThetaMachine):
        """Bind the (X-dependent) pieces and shift phases of one frame."""
        self.machine = machine
        n = len(self.pts)
        self.hvals = {}
        self._heat_orders = {h: len(machine.pieces[h].heat) for h in (0, 1, 2)}
        for h in (0, 1, 2):
            for m, piece in enumerate(machine.pieces[h].heat):
                self.hvals[(h, m)] = np.zeros(n, np.float32) if piece else None
        self.phase1 = np.zeros(n, np.complex64)
        gx = self.gram_K @ machine.X
        step = 2_000_000
        for lo in range(0, n, step):
            hi = min(lo + step, n)
            coords = self.pts[lo:hi].astype(np.float64) @ machine.tmat_K.T
            for h in (0, 1, 2):
                for m, piece in enumerate(machine.pieces[h].heat):
                    if piece:
                        self.hvals[(h, m)][lo:hi] = piece.evaluate_many(coords)
            self.phase1[lo:hi] = np.exp(
                -2j * math.pi * (self.pts[lo:hi].astype(np.float64) @ gx))

    def prefix(self, r2: float) -> int:
        return int(np.searchsorted(self.majv, np.float32(r2 * (1 + 1e-7)),
                                   side="right"))

    def abs_bound(self, y: float, h: int) -> float:
        """Upper bound for |Theta| from the table plus the analytic tail."""
        from .theta import gaussian_tail_bound
        n = self.prefix(min(12.0, float(self.majv[-1]) if len(self.majv) else 0.0))
        s = 1.0 / (4.0 * math.pi * y)
        total = 0.0
        for m in range(self._heat_orders[h]):
            hv = self.hvals[(h, m)]
            if hv is not None:
                total += (s ** m) * float(
                    np.abs(hv[:n].astype(np.float64))
                    @ np.exp(-math.pi * y * self.majv[:n].astype(np.float64)))
        total += gaussian_tail_bound(self.machine.pieces[h], y,
                                     float(self.majv[n - 1]) if n else 0.0)
        return total

    def mode_amplitudes(self, y: float, n: int, rmax: int, h: int):
        """A_q arrays for r = 1..rmax with Theta(x+iy) = sum_q A_q e(x q)."""
        return [self.amplitude_table(y, n, rmax, (h,))[(r, h)]
                for r in range(1, rmax + 1)]

    def amplitude_table(self, y: float, n: int, rmax: int,
                        hs=(0, 1, 2), skip=None) -> dict:
        """All A_q arrays for r = 1..rmax and the requested pieces.

        The Gaussian weight and the accumulated shift phases are shared
        across pieces; (r, h) pairs in ``skip`` are not reduced.
        """
        gauss = np.exp(-math.pi * y * self.majv[:n].astype(np.float32))
        s = 1.0 / (4.0 * math.pi * y)
        base = {}
        for h in hs:
            pv = None
            for m in range(self._heat_orders[h]):
                hv = self.hvals[(h, m)]
                if hv is not None:
                    term = np.float32(s ** m) * hv[:n]
                    pv = term if pv is None else pv + term
            base[h] = gauss * pv if pv is not None else None
        idx = self.qv[:n] - self.qmin
        nq = self.qmax - self.qmin + 1
        out = {}
        p1 = self.phase1[:n]
        phase = None
        for r in range(1, rmax + 1):
            phase = p1 if phase is None else phase * p1
            for h in hs:
                if skip is not None and (r, h) in skip:
                    continue
                if base[h] is None:
                    out[(r, h)] = np.zeros(nq, dtype=complex)
                    continue
                w = base[h] * phase
                out[(r, h)] = (np.bincount(idx, weights=w.real, minlength=nq)
                               + 1j * np.bincount(idx, weights=w.imag,
                                                  minlength=nq))
        return out

    @property
    def q_range(self) -> np.ndarray:
        return np.arange(self.qmin, self.qmax + 1)


def _zero_shift_modes(table: GroupedKTheta, y: float, n: int, hplus: int) -> np.ndarray:
    """A_q for the shiftless theta of one piece (used by the constant term)."""
    s = 1.0 / (4.0 * math.pi * y)
    pv = np.zeros(n)
    for m in range(table._heat_orders[hplus]):
        hv = table.hvals[(hplus, m)]
        if hv is not None:
            pv = pv + (s ** m) * hv[:n].astype(np.float64)
    w = pv * np.exp(-math.pi * y * table.majv[:n].astype(np.float64))
    idx = table.qv[:n] - table.qmin
    nq = table.qmax - table.qmin + 1
    return np.bincount(idx, weights=w, minlength=nq).astype(complex)


def _strip_levels(cfg: QuadratureConfig):
    return panel_rule(cfg.y_min, cfg.y_max, cfg.panels, cfg.degree,
                      geometric=True)


def strip_integral_h(sp: Space, f: CuspFormProxy, alpha: int, beta: int,
                     Z: TubePoint, trunc: Truncation,
                     cfg: QuadratureConfig = QuadratureConfig(),
                     g: Isometry = None, table: GroupedKTheta = None,
                     r2_cap: float = 20.0) -> complex:
    """Numerical integral of h over the strip x in [0,1], y in [y_min, y_max].

    The x-integration is an N-point trapezoid rule on the periodic
    integrand; the y-integration is composite Gauss-Legendre.  Negligible
    heights and r-terms are skipped using theta bounds built from the
    shared point table.
    """
    if f.is_zero():
        return 0.0 + 0.0j
    if g is None:
        g = psi1(sp, Z)
    frame = tube_to_frame(sp, Z)
    machine = KThetaMachine(sp, g, frame, alpha, beta)
    if table is None:
        table = strip_table(sp, machine, f, trunc, cfg, r2_cap=r2_cap)
    table.attach(machine)
    u2 = machine.u_zperp_sq
    k = f.weight
    ys, yw = _strip_levels(cfg)
    measure = float(np.sum(yw / ys ** 2))
    rmax = trunc.r_bound or 8

    def prefactor(y, r, h):
        return (y ** (k + 0.5) * f.abs_bound(y) / (math.sqrt(2) * machine.u_abs)
                * (r / (2 * y)) ** h * math.exp(-math.pi * r * r / (2 * y * u2)))

    xs = np.arange(cfg.x_nodes) / cfg.x_nodes
    qr = table.q_range
    emat = np.exp(2j * math.pi * np.outer(xs, qr))  # x-modes
    total = 0.0 + 0.0j
    bounds_cache = {}
    for y, w in zip(ys, yw):
        bounds = bounds_cache.get(round(math.log(y), 6))
        if bounds is None:
            bounds = {h: table.abs_bound(y, h) for h in (0, 1, 2)}
            bounds_cache[round(math.log(y), 6)] = bounds
        worst = max(prefactor(y, r, h) * bounds[h]
                    for r in range(1, rmax + 1) for h in (0, 1, 2))
        if worst * measure < cfg.eps / 10:
            continue
        r_eff = rmax
        while r_eff > 1 and max(prefactor(y, r_eff, h) * bounds[h]
                                for h in (0, 1, 2)) * measure < cfg.eps / 100:
            r_eff -= 1
        from .theta import gaussian_tail_bound
        scale = max(prefactor(y, 1, h) for h in (0, 1, 2))
        level_budget = cfg.eps * y * y / (max(w, 1e-12) * 60.0)
        r2 = 4.0
        while (scale * gaussian_tail_bound(machine.pieces[0], y, r2)
               > level_budget and r2 < r2_cap):
            r2 *= 1.25
        n = table.prefix(min(r2, r2_cap))
        fvals = f.values(xs, y)
        acc = np.zeros(cfg.x_nodes, dtype=complex)
        skip = {(r, h) for r in range(1, r_eff + 1) for h in (0, 1, 2)
                if prefactor(y, r, h) * bounds[h] * measure < cfg.eps / 300}
        amps = table.amplitude_table(y, n, r_eff, (0, 1, 2), skip=skip)
        for (r, h), a_q in amps.items():
            egauss = math.exp(-math.pi * r * r / (2.0 * y * u2))
            theta_x = emat @ a_q
            acc += (r / (2j * y)) ** h * egauss * np.conjugate(theta_x)
        pref = y ** (k + 0.5) / (math.sqrt(2.0) * machine.u_abs)
        level = pref * np.mean(fvals * acc)
        total += w / (y * y) * level
    return complex(total)


def strip_table(sp: Space, machine: KThetaMachine, f: CuspFormProxy,
                trunc: Truncation, cfg: QuadratureConfig,
                r2_cap: float = 20.0) -> GroupedKTheta:
    """The majorant-sorted point table large enough for every strip level."""
    from .theta import gaussian_tail_bound
    ys, yw = _strip_levels(cfg)
    measure = float(np.sum(yw / ys ** 2))
    k = f.weight
    u2 = machine.u_zperp_sq
    needed = 4.0
    for y in ys:
        pref = (y ** (k + 0.5) * f.abs_bound(y)
                / (math.sqrt(2) * machine.u_abs)
                * max(1.0, 1.0 / (2 * y) ** 2)
                * math.exp(-math.pi / (2 * y * u2)))
        if pref == 0.0:
            continue
        r2 = 4.0
        while (pref * gaussian_tail_bound(machine.pieces[0], y, r2)
               > cfg.eps / (measure * 30) and r2 < r2_cap):
            r2 *= 1.25
        needed = max(needed, min(r2, r2_cap))
    return GroupedKTheta(sp.K.gram_array.astype(float), machine.tmat_K, needed)


# -- constant term -------------------------------------------------------------

@dataclass(frozen=True)
class ConstantTermResult:
    value: complex
    y_max: float
    tail_bound: float


def constant_term(sp: Space, f: CuspFormProxy, alpha: int, beta: int,
                  g: Isometry, cfg: QuadratureConfig = QuadratureConfig()) -> ConstantTermResult:
    """Numerical constant term: the pairing of f with the K-theta of the
    h+ = 0 piece over the truncated fundamental domain.

    The x-integral is exact per Fourier mode on each horizontal slice of
    the domain; the y-integral is composite Gauss-Legendre, split at the
    corner y = 1.
    """
    if f.is_zero():
        return ConstantTermResult(0.0 + 0.0j, cfg.y_max, 0.0)
    frame = frame_of_isometry(sp, g)
    machine = KThetaMachine(sp, g, frame, alpha, beta)
    k = f.weight
    from .theta import gaussian_tail_bound
    data = machine.pieces[0]
    r2 = 4.0
    while gaussian_tail_bound(data, math.sqrt(3) / 2, r2) > cfg.eps / 100 and r2 < 40:
        r2 *= 1.3
    grouped = GroupedKTheta(sp.K.gram_array.astype(float), machine.tmat_K, r2)
    grouped.attach(machine)
    qr = grouped.q_range
    ns = np.arange(1, f.nmax + 1)
    cns = np.array(f.coefficients)

    def x_mode_integrals(y: float) -> np.ndarray:
        """I(m) = int over the allowed x-range of e(m x), m = n - q."""
        ms = ns[:, None] - qr[None, :]
        if y >= 1.0:
            out = np.where(ms == 0, 1.0 + 0j, 0.0 + 0j)
            nz = ms != 0
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(
                    nz,
                    (np.exp(1j * math.pi * ms) - np.exp(-1j * math.pi * ms))
                    / (2j * math.pi * np.where(nz, ms, 1)),
                    out)
            return out
        xc = math.sqrt(1.0 - y * y)
        width = 1.0 - 2.0 * xc
        out = np.where(ms == 0, width + 0j, 0.0 + 0j)
        nz = ms != 0
        msafe = np.where(nz, ms, 1)
        piece = ((np.exp(1j * math.pi * msafe) - np.exp(2j * math.pi * msafe * xc))
                 + (np.exp(-2j * math.pi * msafe * xc) - np.exp(-1j * math.pi * msafe))) \
            / (2j * math.pi * msafe)
        return np.where(nz, piece, out)

    total = 0.0 + 0.0j
    y_arc = math.sqrt(3.0) / 2.0
    for lo, hi, panels in ((y_arc, 1.0, max(cfg.panels // 3, 4)),
                           (1.0, cfg.y_max, cfg.panels)):
        ys, yw = panel_rule(lo, hi, panels, cfg.degree,
                            geometric=(lo >= 1.0))
        n = grouped.prefix(r2)
        for y, w in zip(ys, yw):
            amps = _zero_shift_modes(grouped, y, n, hplus=0)
            imat = x_mode_integrals(y)
            radial = cns * np.exp(-2 * math.pi * y * ns)
            inner = radial @ (imat @ np.conjugate(amps))
            pref = y ** (k + 0.5) / (math.sqrt(2.0) * machine.u_abs)
            total += w / (y * y) * pref * inner
    zb = abs(machine.crude_bound(cfg.y_max, 0))
    tail = (cfg.y_max ** (k - 1.5) * f.abs_bound(cfg.y_max) * zb
            / (math.sqrt(2.0) * machine.u_abs) / (2.0 * math.pi) * 1.5)
    return ConstantTermResult(complex(total), cfg.y_max, tail)


# -- end-to-end comparison ------------------------------------------------------

@dataclass(frozen=True)
class ExpansionComparison:
    max_residual: float
    samples: tuple


def _supported_vectors(sp: Space, f: CuspFormProxy, pts: np.ndarray) -> np.ndarray:
    """Vectors lambda with some divisor t such that c_{q(lambda)/t^2} != 0."""
    if not len(pts):
        return pts
    qv = (np.einsum("ij,ij->i", pts @ sp.K.gram_array, pts) // 2).astype(np.int64)
    support = {n for n in range(1, f.nmax + 1) if f.coefficient(n) != 0}
    if not support:
        return pts[:0]
    keep = np.zeros(len(pts), dtype=bool)
    tmax = int(math.isqrt(max(int(qv.max(initial=0)), 1)))
    for t in range(1, tmax + 1):
        qt = qv / (t * t)
        ok = (qv > 0) & (qv % (t * t) == 0) & np.isin(qv // (t * t),
                                                      list(support))
        if t > 1:
            ok &= np.all(pts % t == 0, axis=1)
        keep |= ok
    return pts[keep]


def fourier_series_value(sp: Space, f: CuspFormProxy, alpha: int, beta: int,
                         Z: TubePoint, trunc: Truncation,
                         method: str = "bessel") -> complex:
    """Non-constant part of the expansion: sum of coefficients times e((lam, X))."""
    frame = tube_to_frame(sp, Z)
    g = psi1(sp, Z)
    machine = _machine_for(sp, frame, g, alpha, beta)
    maj = machine.tmat_K.T @ machine.tmat_K
    pts = _supported_vectors(sp, f, ellipsoid_points(maj, trunc.radius))
    gX = sp.gram_K @ frame.mu_K
    total = 0.0 + 0.0j
    for lam in pts:
        res = fourier_coefficient(sp, lam, f, alpha, beta, frame, g,
                                  method=method, machine=machine)
        total += res.value * cmath.exp(2j * math.pi * float(lam @ gX))
    return total


def expansion_vs_quadrature(sp: Space, f: CuspFormProxy, alpha: int, beta: int,
                            Z: TubePoint, x_samples, trunc: Truncation,
                            cfg: QuadratureConfig = QuadratureConfig()) -> ExpansionComparison:
    """Strip quadrature against the coefficient series at several real parts.

    For each X the quantity compared is the non-constant part of the
    defining integral: twice the strip integral of h at psi(1, X + iY)
    versus the truncated Fourier series.
    """
    rows = []
    worst = 0.0
    table = None
    for xs in x_samples:
        zx = TubePoint(np.asarray(xs, dtype=float), Z.Y)
        if table is None:
            g0 = psi1(sp, zx)
            m0 = KThetaMachine(sp, g0, tube_to_frame(sp, zx), alpha, beta)
            table = strip_table(sp, m0, f, trunc, cfg)
        quad_side = 2.0 * strip_integral_h(sp, f, alpha, beta, zx, trunc, cfg,
                                           table=table)
        series_side = fourier_series_value(sp, f, alpha, beta, zx, trunc)
        resid = abs(quad_side - series_side)
        worst = max(worst, resid)
        rows.append({"X": list(map(float, xs)),
                     "quadrature": quad_side, "series": series_side,
                     "residual": resid})
    return ExpansionComparison(max_residual=worst, samples=tuple(rows))
