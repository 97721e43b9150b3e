"""Command-line entry point.

Subcommands mirror the library layers: lattice construction and inspection,
theta evaluation and the two big identity checks, tube-domain geometry,
polynomial splitting, unfolded coefficients, injectivity certificates, and
a batch verification suite.  Exit codes: 0 on success, 1 when a requested
verification misses its tolerance, 2 on bad arguments.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .geometry import (Isometry, TubePoint, psi1, space, translation_matrix_kan,
                       tube_to_frame, x_independence_check)
from .injectivity import find_witness, injectivity_certificate, swap_isometry
from .lattices import (Lattice, lattice_from_json, represent_integer,
                       signature_b2_lattice)
from .polynomials import MultiPoly, decompose, exact_base_frame, p_alpha_beta
from .theta import (ThetaInput, Truncation, f_alpha_beta, modular_check,
                    siegel_theta, split_rhs)
from .unfolding import (CuspFormProxy, QuadratureConfig, constant_term,
                        expansion_vs_quadrature, fourier_coefficient,
                        generic_unfold_check, unit_cusp_form)

GAMMAS = {
    "S": ((0, -1), (1, 0)),
    "T": ((1, 1), (0, 1)),
    "TS": ((1, -1), (1, 0)),
    "ST1": ((0, -1), (1, -1)),
}


class CliError(Exception):
    pass


def _parse_vec(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split(",")])


def _parse_tau(args) -> complex:
    tau = complex(args.tau_re, args.tau_im)
    if tau.imag <= 0:
        raise CliError("tau must lie in the upper half plane")
    return tau


def _load_cusp_form(path: str, weight: int) -> CuspFormProxy:
    with open(path) as fh:
        doc = json.load(fh)
    return CuspFormProxy(doc.get("weight", weight), tuple(doc["coefficients"]))


def _emit(args, payload: dict, csv_rows=None, csv_header=None) -> None:
    text = json.dumps(payload, indent=1, sort_keys=True, default=_jsonable)
    print(text)
    if getattr(args, "out", None):
        if args.out.endswith(".csv"):
            if csv_rows is None:
                raise CliError("no CSV schema for this subcommand")
            with open(args.out, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(csv_header)
                w.writerows(csv_rows)
        else:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x)}")


# -- subcommand handlers ------------------------------------------------------

def cmd_lattice_build(args) -> int:
    split = signature_b2_lattice(args.b)
    _emit(args, {"gram": [list(r) for r in split.lattice.gram],
                 "unimodular": split.lattice.unimodular})
    return 0


def cmd_lattice_info(args) -> int:
    if args.infile:
        with open(args.infile) as fh:
            lat = lattice_from_json(fh.read())
    else:
        lat = signature_b2_lattice(args.b).lattice
    p, q = lat.signature
    _emit(args, {"rank": lat.rank, "det": lat.det(),
                 "signature": [p, q], "unimodular": lat.unimodular,
                 "even": all(g % 2 == 0 for g in np.diag(lat.gram_array))})
    return 0


def cmd_theta_eval(args) -> int:
    sp = space(args.b)
    tau = _parse_tau(args)
    poly = p_alpha_beta(args.alpha, args.beta, args.b) if args.alpha else \
        MultiPoly.constant(args.b + 2, 1)
    n = args.b + 2
    inp = ThetaInput(lattice=sp.L, tau=tau,
                     alpha_shift=np.zeros(n), beta_shift=np.zeros(n),
                     g=sp.identity(), poly=poly,
                     truncation=Truncation(radius=args.radius),
                     basis_map=sp.T)
    res = siegel_theta(inp)
    row = (tau.real, tau.imag, args.alpha, args.beta,
           res.value.real, res.value.imag, res.tail_estimate)
    _emit(args, {"tau": tau, "alpha": args.alpha, "beta": args.beta,
                 "value": res.value, "tail_estimate": res.tail_estimate,
                 "count": res.count},
          csv_rows=[row],
          csv_header=("tau_re", "tau_im", "alpha", "beta",
                      "value_re", "value_im", "tail_estimate"))
    return 0


def cmd_theta_modular(args) -> int:
    sp = space(args.b)
    tau = _parse_tau(args)
    gamma = GAMMAS.get(args.gamma)
    if gamma is None:
        parts = [int(t) for t in args.gamma.split(",")]
        gamma = ((parts[0], parts[1]), (parts[2], parts[3]))
    n = args.b + 2
    inp = ThetaInput(lattice=sp.L, tau=tau,
                     alpha_shift=np.zeros(n), beta_shift=np.zeros(n),
                     g=sp.identity(),
                     poly=p_alpha_beta(args.alpha, args.beta, args.b),
                     truncation=Truncation(radius=args.radius),
                     basis_map=sp.T)
    chk = modular_check(inp, gamma, tail_target=args.tail_target)
    ok = chk.residual < args.tol
    _emit(args, {"gamma": [list(gamma[0]), list(gamma[1])],
                 "residual": chk.residual, "tolerance": args.tol,
                 "lhs_tail": chk.lhs.tail_estimate,
                 "rhs_tail": chk.rhs.tail_estimate, "pass": ok})
    return 0 if ok else 1


def cmd_theta_split(args) -> int:
    sp = space(args.b)
    tau = _parse_tau(args)
    Z = _tube_point(sp, args)
    g = psi1(sp, Z)
    trunc = Truncation(radius=args.radius, cd_bound=args.cd_bound,
                       r_bound=args.r_bound)
    lhs = f_alpha_beta(sp, tau, g, args.alpha, args.beta, trunc)
    rhs = split_rhs(sp, tau, g, args.alpha, args.beta, trunc,
                    frame=tube_to_frame(sp, Z))
    resid = abs(lhs.value - rhs.value)
    ok = resid < args.tol
    _emit(args, {"lhs": lhs.value, "rhs": rhs.value, "residual": resid,
                 "tolerance": args.tol, "pass": ok})
    return 0 if ok else 1


def _tube_point(sp, args) -> TubePoint:
    if args.z:
        with open(args.z) as fh:
            doc = json.load(fh)
        return TubePoint(np.array(doc["X"], float), np.array(doc["Y"], float))
    X = _parse_vec(args.X) if args.X else np.zeros(sp.b)
    Y = _parse_vec(args.Y) if args.Y else sp.base_point.Y
    return TubePoint(X, Y)


def cmd_geometry_kan(args) -> int:
    sp = space(args.b)
    Z = _tube_point(sp, args)
    sol = __import__("thetalift.geometry", fromlist=["kan_factors"]) \
        .kan_factors(sp, Z)
    _emit(args, {"m1": sol.m1, "m2": sol.m2, "eta": sol.eta, "phi": sol.phi,
                 "x": sol.x, "y": sol.y,
                 "a_matrix": sol.a.matrix, "n_matrix": sol.n.matrix})
    return 0


def cmd_geometry_translate(args) -> int:
    sp = space(args.b)
    xp = _parse_vec(args.X)
    mat = translation_matrix_kan(sp, xp)
    _emit(args, {"matrix_kan": np.asarray(mat, float)})
    return 0


def cmd_poly_decompose(args) -> int:
    sp = space(args.b)
    frame = exact_base_frame(args.b)
    if args.g.startswith("swap:"):
        from .injectivity import swap_e_matrix_exact
        gmat = swap_e_matrix_exact(args.b, int(args.g.split(":")[1]))
    elif args.g == "identity":
        from fractions import Fraction
        gmat = [[Fraction(int(i == j)) for j in range(args.b + 2)]
                for i in range(args.b + 2)]
    else:
        raise CliError("g must be 'identity' or 'swap:<alpha>'")
    dec = decompose(args.alpha, args.beta, gmat, frame)
    _emit(args, {str(h): dec.composed[h].canonical_str() for h in (0, 1, 2)})
    return 0


def cmd_unfold_coeff(args) -> int:
    sp = space(args.b)
    f = _load_cusp_form(args.f, 1 + args.b // 2)
    Z = _tube_point(sp, args)
    frame = tube_to_frame(sp, Z)
    g = psi1(sp, Z)
    lam = np.array([int(t) for t in args.lam.split(",")])
    res = fourier_coefficient(sp, lam, f, args.alpha, args.beta, frame, g,
                              method=args.method)
    _emit(args, {"lambda": list(res.lam), "value": res.value,
                 "method": res.method,
                 "terms": {f"h{h}_t{t}": v for (h, t), v in res.terms.items()}})
    return 0


def cmd_unfold_constant(args) -> int:
    sp = space(args.b)
    f = _load_cusp_form(args.f, 1 + args.b // 2)
    Z = _tube_point(sp, args)
    res = constant_term(sp, f, args.alpha, args.beta, psi1(sp, Z),
                        QuadratureConfig(y_max=args.y_max))
    _emit(args, {"value": res.value, "y_max": res.y_max,
                 "tail_bound": res.tail_bound})
    return 0


def cmd_unfold_generic(args) -> int:
    chk = generic_unfold_check(args.s, coset_bound=args.coset_bound)
    ok = chk.residual < args.tol
    _emit(args, {"s": args.s, "lhs": chk.lhs, "rhs": chk.rhs,
                 "residual": chk.residual, "tolerance": args.tol, "pass": ok})
    return 0 if ok else 1


def cmd_unfold_verify(args) -> int:
    with open(args.scenario) as fh:
        sc = json.load(fh)
    b = sc.get("b", 10)
    sp = space(b)
    f = CuspFormProxy(sc.get("weight", 1 + b // 2),
                      tuple(sc["coefficients"]))
    Y = np.array(sc["Y"], float) if "Y" in sc else sp.base_point.Y
    Z = TubePoint(np.zeros(b), Y)
    rng = np.random.default_rng(sc.get("seed", 0))
    xs = [rng.normal(size=b) * sc.get("x_scale", 0.3)
          for _ in range(sc.get("n_samples", 3))]
    trunc = Truncation(radius=sc.get("radius", 12.0),
                       r_bound=sc.get("r_bound", 8))
    cfg = QuadratureConfig(**sc.get("quadrature", {}))
    cmp = expansion_vs_quadrature(sp, f, sc.get("alpha", 1), sc.get("beta", 2),
                                  Z, xs, trunc, cfg)
    tol = sc.get("tolerance", 1e-4)
    ok = cmp.max_residual < tol
    _emit(args, {"max_residual": cmp.max_residual, "tolerance": tol,
                 "samples": [{"X": r["X"], "residual": r["residual"]}
                             for r in cmp.samples], "pass": ok})
    return 0 if ok else 1


def cmd_inject_witness(args) -> int:
    sp = space(args.b)
    lam = np.array([int(t) for t in args.lam.split(",")])
    wit = find_witness(sp, lam)
    _emit(args, {"lambda": list(wit.lam), "alpha": wit.alpha,
                 "beta": wit.beta, "p1_value": wit.p1_value,
                 "flipped": wit.flipped})
    return 0


def cmd_inject_certificate(args) -> int:
    rep = injectivity_certificate(args.n, args.b)
    payload = json.loads(rep.to_json())
    _emit(args, {"passed": rep.passed, "steps": payload})
    return 0 if rep.passed else 1


def cmd_suite(args) -> int:
    """Reduced verification battery; --full raises tolerances to spec level."""
    sp = space(args.b)
    rng = np.random.default_rng(args.seed)
    fast = not args.full
    failures = []

    def check(name, ok, detail=""):
        print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
        if not ok:
            failures.append(name)

    split = sp.split
    check("lattice.e8", sp.L.det() == 1 and sp.L.signature == (args.b, 2))
    check("lattice.rbm", sp.rbm.residual(sp.L) < 1e-12,
          f"residual {sp.rbm.residual(sp.L):.2e}")
    rep = injectivity_certificate(20 if fast else 100, args.b)
    check("injectivity.certificate", rep.passed)
    chk = generic_unfold_check(3.0, coset_bound=20 if fast else 40)
    check("unfold.generic", chk.residual < (1e-3 if fast else 1e-4),
          f"residual {chk.residual:.2e}")
    tau = 1j if fast else 2j
    n = args.b + 2
    inp = ThetaInput(lattice=sp.L, tau=tau, alpha_shift=np.zeros(n),
                     beta_shift=np.zeros(n), g=sp.identity(),
                     poly=p_alpha_beta(1, 1, args.b),
                     truncation=Truncation(radius=14.0), basis_map=sp.T)
    mc = modular_check(inp, GAMMAS["S"], tail_target=1e-9 if fast else 1e-10)
    check("theta.modular.S", mc.residual < 1e-7, f"residual {mc.residual:.2e}")
    Z = TubePoint(rng.normal(size=args.b) * 0.2,
                  sp.base_point.Y + rng.normal(size=args.b) * 0.1)
    g = psi1(sp, Z)
    trunc = Truncation(radius=11.0 if fast else 13.5, cd_bound=15, r_bound=8)
    lhs = f_alpha_beta(sp, tau, g, 1, 2, trunc)
    rhs = split_rhs(sp, tau, g, 1, 2, trunc, frame=tube_to_frame(sp, Z))
    check("theta.split", abs(lhs.value - rhs.value) < 1e-6,
          f"residual {abs(lhs.value - rhs.value):.2e}")
    ok = all(x_independence_check(sp, Z, rng.normal(size=args.b),
                                  rng.normal(size=args.b)) for _ in range(5))
    check("geometry.x_independence", ok)
    _emit(args, {"failures": failures, "pass": not failures})
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thetalift",
        description="Siegel theta lifts on signature (b,2) lattices: "
                    "construction, splitting, unfolding, and certificates.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(p, *specs):
        for spec in specs:
            if spec == "b":
                p.add_argument("--b", type=int, default=10)
            elif spec == "tau":
                p.add_argument("--tau-re", type=float, default=0.0)
                p.add_argument("--tau-im", type=float, default=1.0)
            elif spec == "ab":
                p.add_argument("--alpha", type=int, default=1)
                p.add_argument("--beta", type=int, default=2)
            elif spec == "out":
                p.add_argument("--out", help="write result to .json or .csv")
            elif spec == "point":
                p.add_argument("--z", help="tube point JSON file")
                p.add_argument("--X", help="comma-separated real part")
                p.add_argument("--Y", help="comma-separated imaginary part")

    lat = sub.add_parser("lattice").add_subparsers(dest="sub", required=True)
    p = lat.add_parser("build"); add(p, "b", "out"); p.set_defaults(fn=cmd_lattice_build)
    p = lat.add_parser("info"); add(p, "b", "out")
    p.add_argument("--in", dest="infile")
    p.set_defaults(fn=cmd_lattice_info)

    th = sub.add_parser("theta").add_subparsers(dest="sub", required=True)
    p = th.add_parser("eval"); add(p, "b", "tau", "ab", "out")
    p.add_argument("--radius", type=float, default=14.0)
    p.set_defaults(fn=cmd_theta_eval)
    p = th.add_parser("modular-check"); add(p, "b", "tau", "ab", "out")
    p.add_argument("--gamma", default="S")
    p.add_argument("--radius", type=float, default=14.0)
    p.add_argument("--tail-target", type=float, default=1e-10)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(fn=cmd_theta_modular)
    p = th.add_parser("split-check"); add(p, "b", "tau", "ab", "point", "out")
    p.add_argument("--radius", type=float, default=13.5)
    p.add_argument("--cd-bound", type=int, default=15)
    p.add_argument("--r-bound", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(fn=cmd_theta_split)

    ge = sub.add_parser("geometry").add_subparsers(dest="sub", required=True)
    p = ge.add_parser("kan"); add(p, "b", "point", "out"); p.set_defaults(fn=cmd_geometry_kan)
    p = ge.add_parser("translate"); add(p, "b", "out")
    p.add_argument("--X", required=True)
    p.set_defaults(fn=cmd_geometry_translate)

    po = sub.add_parser("poly").add_subparsers(dest="sub", required=True)
    p = po.add_parser("decompose"); add(p, "b", "ab", "out")
    p.add_argument("--g", default="identity")
    p.set_defaults(fn=cmd_poly_decompose)

    un = sub.add_parser("unfold").add_subparsers(dest="sub", required=True)
    p = un.add_parser("coeff"); add(p, "b", "ab", "point", "out")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--f", required=True, help="cusp form coefficients JSON")
    p.add_argument("--method", choices=("bessel", "quadrature"),
                   default="bessel")
    p.set_defaults(fn=cmd_unfold_coeff)
    p = un.add_parser("constant"); add(p, "b", "ab", "point", "out")
    p.add_argument("--f", required=True)
    p.add_argument("--y-max", type=float, default=10.0)
    p.set_defaults(fn=cmd_unfold_constant)
    p = un.add_parser("generic-unfold"); add(p, "out")
    p.add_argument("--s", type=float, default=3.0)
    p.add_argument("--coset-bound", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(fn=cmd_unfold_generic)
    p = un.add_parser("verify"); add(p, "out")
    p.add_argument("--scenario", required=True)
    p.set_defaults(fn=cmd_unfold_verify)

    inj = sub.add_parser("inject").add_subparsers(dest="sub", required=True)
    p = inj.add_parser("witness"); add(p, "b", "out")
    p.add_argument("--lambda", dest="lam", required=True)
    p.set_defaults(fn=cmd_inject_witness)
    p = inj.add_parser("certificate"); add(p, "b", "out")
    p.add_argument("--n", type=int, default=100)
    p.set_defaults(fn=cmd_inject_certificate)

    p = sub.add_parser("suite").add_subparsers(dest="sub", required=True) \
        .add_parser("all")
    add(p, "b", "out")
    p.add_argument("--fast", action="store_true")
    p.add_argument("--full", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_suite)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (CliError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
