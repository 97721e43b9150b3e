"""Executable form of the injectivity argument.

For every lattice vector of positive norm there is a swap isometry making
the linear piece of the split kernel polynomial strictly positive at it;
the corresponding term of the coefficient formula then has strictly
negative imaginary part, so a vanishing coefficient forces the cusp form
coefficient c_{q(lambda)} to vanish.  Walking n = 1..N through vectors
representing every integer turns this into a machine-checked certificate.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Isometry, PointFrame, Space, base_frame, space
from .lattices import represent_integer, vector_divisors
from .unfolding import bessel_integral


@dataclass(frozen=True)
class Witness:
    """Data certifying a nonzero coefficient term at lambda."""

    lam: tuple            # vector of K, possibly sign-flipped (see `flipped`)
    alpha: int
    beta: int
    g: Isometry
    p1_value: float
    flipped: bool

    def __post_init__(self):
        if self.p1_value <= 0:
            raise ValueError("witness value must be strictly positive")


def swap_isometry(sp: Space, alpha: int) -> Isometry:
    """Exchange e_alpha with e_b and e_{b+1} with e_{b+2}, fixing the rest.

    Lies in the stabilizer of the base plane.  ``alpha`` is 1-based and
    must stay below b.
    """
    b = sp.b
    if not (1 <= alpha <= b - 1):
        raise ValueError("alpha must lie in 1..b-1")
    perm = list(range(b + 2))
    perm[alpha - 1], perm[b - 1] = perm[b - 1], perm[alpha - 1]
    perm[b], perm[b + 1] = perm[b + 1], perm[b]
    mat_e = np.zeros((b + 2, b + 2))
    for j, i in enumerate(perm):
        mat_e[i, j] = 1.0
    g = Isometry(sp.T_inv @ mat_e @ sp.T)
    g.check(sp.L)
    return g


def swap_e_matrix_exact(b: int, alpha: int):
    """The swap isometry as an exact permutation matrix in standard coordinates."""
    from fractions import Fraction
    perm = list(range(b + 2))
    perm[alpha - 1], perm[b - 1] = perm[b - 1], perm[alpha - 1]
    perm[b], perm[b + 1] = perm[b + 1], perm[b]
    return [[Fraction(1 if perm[j] == i else 0) for j in range(b + 2)]
            for i in range(b + 2)]


def find_witness(sp: Space, lam) -> Witness:
    """Indices, swap isometry and positive linear-piece value for lambda.

    beta is the smallest index with a strictly positive standard
    coordinate; when only negative coordinates are available the vector is
    replaced by -lambda (the norm, which indexes cusp form coefficients,
    is unchanged) and the flip recorded.
    """
    lam = np.asarray(lam)
    q = sp.q_K(lam.astype(float))
    if q <= 0:
        raise ValueError("witness requires a vector of positive norm")
    coords = sp.standard_coords(sp.embed_K @ lam.astype(float))
    flipped = False
    pos = [j for j in range(sp.b - 1) if coords[j] > 1e-12]
    if not pos:
        lam = -lam
        coords = -coords
        flipped = True
        pos = [j for j in range(sp.b - 1) if coords[j] > 1e-12]
    if not pos:
        raise ValueError("no positive coordinate; vector cannot have q > 0")
    beta = pos[0] + 1
    alpha = 1 if beta != 1 else 2
    g = swap_isometry(sp, alpha)
    p1 = 2.0 * math.sqrt(2.0) * coords[beta - 1]
    return Witness(lam=tuple(int(v) for v in lam), alpha=alpha, beta=beta,
                   g=g, p1_value=p1, flipped=flipped)


def imaginary_part_term(sp: Space, witness: Witness, k: int,
                        frame: PointFrame = None) -> float:
    """Imaginary part contributed by the linear piece: strictly negative.

    -(1/2) p1 * int_0^inf y^{k-5/2} exp(-2 pi y lw2 - pi/(2 y u^2)) dy,
    with the heat operator absent because the piece has degree one.
    """
    if frame is None:
        frame = base_frame(sp)
    lam = np.asarray(witness.lam, dtype=float)
    y_axis = frame.Z.Y
    y2 = 2.0 * sp.q_K(y_axis)
    lw2 = 2.0 * sp.q_K(lam) - sp.bil_K(lam, y_axis) ** 2 / y2
    a_rate = 2.0 * math.pi * lw2
    b_rate = math.pi / (2.0 * frame.u_zperp_sq)
    integral = bessel_integral(k - 1.5, a_rate, b_rate)
    return -0.5 * witness.p1_value * integral


@dataclass(frozen=True)
class CertificateStep:
    n: int
    lam: tuple
    divisors: tuple
    alpha: int
    beta: int
    p1_value: float
    term_value: float
    flipped: bool

    def passes(self) -> bool:
        return self.p1_value > 0 and self.term_value < 0


@dataclass(frozen=True)
class CertificateReport:
    b: int
    k: int
    steps: tuple

    @property
    def passed(self) -> bool:
        return all(s.passes() for s in self.steps) and self._ordered()

    def _ordered(self) -> bool:
        seen = set()
        for s in self.steps:
            for t in s.divisors:
                if t > 1 and (s.n // (t * t)) not in seen:
                    return False
            seen.add(s.n)
        return True

    def to_json(self) -> str:
        return json.dumps([{
            "n": s.n, "lambda": list(s.lam), "divisors": list(s.divisors),
            "alpha": s.alpha, "beta": s.beta, "p1_value": s.p1_value,
            "term_value": s.term_value, "flipped": s.flipped,
        } for s in self.steps], indent=1)


def injectivity_certificate(n_max: int, b: int) -> CertificateReport:
    """Witness records for n = 1..N, ordered along the divisibility induction.

    Each step records the vector representing n, its divisor chain, the
    swap witness and the strictly negative imaginary part; the report
    passes only if every witness value is nonzero and every reduction
    q(lambda/t) appears earlier.
    """
    if n_max < 1:
        raise ValueError("need at least one step")
    sp = space(b)
    k = 1 + b // 2
    frame = base_frame(sp)
    steps = []
    for n in range(1, n_max + 1):
        lam = represent_integer(sp.split, n)
        wit = find_witness(sp, lam)
        term = imaginary_part_term(sp, wit, k, frame)
        steps.append(CertificateStep(
            n=n, lam=wit.lam, divisors=tuple(vector_divisors(lam)),
            alpha=wit.alpha, beta=wit.beta, p1_value=wit.p1_value,
            term_value=term, flipped=wit.flipped))
    return CertificateReport(b=b, k=k, steps=tuple(steps))
