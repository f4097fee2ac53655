"""Command-line front end.

Exit status: 0 for a definitive verdict, 2 when a computation is
inconclusive, 1 for usage, input and schema errors.
"""

import argparse
import sys
import time

import numpy as np

from . import acceptance, extremal, io, matrange, spectral, tuples
from .errors import ClassificationError, Inconclusive, OpsysError, SchemaError
from .tuples import LambdaMatrix, RationalAngle, root_of_unity

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument helpers


def _angle(text):
    try:
        return RationalAngle.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _scalar(text):
    text = text.strip()
    if "/" in text:
        a, b = text.split("/", 1)
        return root_of_unity(int(a), int(b))
    return complex(text.replace("i", "j"))


def _scalars(text):
    try:
        return [_scalar(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r}: {exc}") from exc


def _lambda(text):
    """``"0,1=1/2;1,2=1/3"`` -> dict of upper-triangle angles."""
    upper = {}
    try:
        for part in filter(None, text.split(";")):
            ij, ang = part.split("=")
            i, j = (int(x) for x in ij.split(","))
            upper[(min(i, j), max(i, j))] = RationalAngle.parse(ang) if i < j else RationalAngle.parse(ang).conj()
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse Lambda entries {text!r}") from exc
    return upper


def _levels(text):
    try:
        return sorted({int(x) for x in text.split(",") if x})
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r}") from exc


def _bound(value, error):
    return {"value": float(value), "error_bound": float(error)}


# ---------------------------------------------------------------------------
# subcommands; each returns (document or text, exit code)


def cmd_construct(a):
    if a.transpose:
        T = tuples.transpose_tuple(io.load_tuple(a.transpose))
        kind = "transpose"
    elif a.lam:
        T = tuples.lambda_tuple(LambdaMatrix.from_upper(a.d, _lambda(a.lam)))
        kind = "lambda"
    elif a.disk:
        T, res = tuples.disk_tuple(a.disk)
        kind = f"disk (resolution {res:.6g})"
    elif a.q is None:
        raise UsageError("construct needs --q, --lambda, --disk or --transpose")
    elif a.grid:
        T = tuples.universal_sample(a.q, a.grid)
        kind = "universal-sample"
    else:
        alpha, beta = a.phases if a.phases else (1, 1)
        T = tuples.phase_scaled_pair(a.q, alpha, beta)
        kind = "standard" if (alpha, beta) == (1, 1) else "phase-scaled"
    doc = io.tuple_to_json(T)
    doc["kind"] = kind
    doc["commutation_residual"] = _bound(T.commutation_residual(), 1e-12)
    return doc, EXIT_OK


def cmd_classify(a):
    T = io.load_tuple(a.s)
    ang = a.q or T.commutation
    if T.d != 2:
        raise UsageError("classify expects a pair")
    try:
        c = tuples.classify_irreducible_pair(T, ang)
    except ClassificationError as exc:
        pieces = tuples.numerics.irreducible_decomposition(T.matrices)
        return {"verdict": "reducible", "message": str(exc),
                "summand_dimensions": [P.shape[1] for P in pieces]}, EXIT_OK
    u, v = T.matrices
    W = c.unitary
    resid = max(np.max(np.abs(W.conj().T @ u @ W - c.lam * tuples.clock(ang))),
                np.max(np.abs(W.conj().T @ v @ W - c.eta * tuples.shift(ang.n))))
    return {
        "verdict": "irreducible",
        "angle": str(ang),
        "u_power_n": {"re": _bound(c.xi.real, 1e-9), "im": _bound(c.xi.imag, 1e-9)},
        "v_power_n": {"re": _bound(c.zeta.real, 1e-9), "im": _bound(c.zeta.imag, 1e-9)},
        "lambda": {"re": _bound(c.lam.real, 1e-9), "im": _bound(c.lam.imag, 1e-9)},
        "eta": {"re": _bound(c.eta.real, 1e-9), "im": _bound(c.eta.imag, 1e-9)},
        "canonical_form_residual": _bound(resid, 1e-12),
        "unitary": io._encode(W),
    }, EXIT_OK


def cmd_nrange(a):
    T = io.load_tuple(a.s)
    poly = matrange.numerical_range_boundary(T, directions=a.directions, seed=a.seed)
    return poly.to_csv(), EXIT_OK


def cmd_member(a):
    T = io.load_tuple(a.s)
    targets = io.load_matrices(a.a)
    v = matrange.membership(T, targets, a.tol)
    doc = v.to_json()
    return doc, EXIT_INCONCLUSIVE if v.verdict == "inconclusive" else EXIT_OK


def cmd_support(a):
    T = io.load_tuple(a.s)
    if a.direction:
        B = io.load_matrices(a.direction)
        level = B.shape[1]
    elif a.c:
        if len(a.c) != T.d:
            raise UsageError(f"--c needs {T.d} coefficients")
        level = a.level
        E = np.zeros((level, level))
        E[0, 0] = 1
        B = [c * E for c in a.c]
    else:
        raise UsageError("support needs --c or --direction")
    if level == 1:
        vals, pts = matrange.support_level1(T, [np.array([b[0, 0] for b in B])])
        return {"level": 1, "support": _bound(vals[0], 1e-12),
                "maximiser": [[z.real, z.imag] for z in pts[0]]}, EXIT_OK
    try:
        value, res = matrange.support(T, level, B, a.tol, detail=True)
    except Inconclusive as exc:
        return {"level": level, "verdict": "inconclusive", "message": str(exc)}, EXIT_INCONCLUSIVE
    bound = 0.0 if res is None else max(res.dual_objective - value, 0.0) + a.tol
    return {"level": level, "support": _bound(value, bound),
            "sdp": None if res is None else res.summary()}, EXIT_OK


def cmd_equiv(a):
    s, r = io.load_tuple(a.s), io.load_tuple(a.r)
    if a.mode == "level1":
        rep = matrange.one_order_equivalent(s, r, directions=a.directions, tol=a.tol, seed=a.seed)
    else:
        rep = matrange.completely_order_equivalent(s, r, a.tol)
    return rep.to_json(), EXIT_INCONCLUSIVE if rep.verdict == "inconclusive" else EXIT_OK


def cmd_extreme(a):
    T = io.load_tuple(a.s)
    vals = io.load_matrices(a.phi)
    cr = extremal.dilation_coupling_max(T, vals, directions=a.directions, seed=a.seed, tol=a.tol)
    doc = cr.to_json()
    if isinstance(T.commutation, RationalAngle) and vals.shape[1] == T.commutation.n and T.d == 2:
        chk = extremal.is_boundary_restriction(vals, T.commutation)
        doc["boundary_restriction"] = {"verdict": chk.verdict, "unitary": chk.unitary,
                                       "q_commuting": chk.commuting, "irreducible": chk.irreducible}
        if chk.verdict and cr.classification == "consistent-with-maximal":
            doc["classification"] = "boundary-restriction"
    return doc, EXIT_INCONCLUSIVE if cr.classification == "inconclusive" else EXIT_OK


def cmd_chain(a):
    T = io.load_tuple(a.s)
    if a.start:
        start = io.load_matrices(a.start)
    else:
        if a.c is not None:
            c = np.array(a.c)
        else:
            rng = np.random.default_rng(a.seed)
            c = rng.standard_normal(T.d) + 1j * rng.standard_normal(T.d)
        start = extremal.exposed_state(T, c)
    ch = extremal.extreme_chain_walk(T, start, max_steps=a.steps, directions=a.directions,
                                     seed=a.seed, tol=a.tol)
    return ch.to_json(), EXIT_OK if ch.terminated else EXIT_INCONCLUSIVE


def cmd_dilation(a):
    if a.grid:
        norm, err = spectral.universal_norm_grid(a.q, a.grid)
        c = 4.0 / norm
        doc = {"angle": str(a.q), "method": "grid", "grid": a.grid,
               "norm": _bound(norm, err), "constant": _bound(c, c - 4.0 / (norm + err))}
        return doc, EXIT_OK
    r = (spectral.dilation_constant_pair(a.q, a.q2, a.tol) if a.q2 is not None
         else spectral.dilation_constant(a.q, a.tol))
    doc = r.to_json()
    doc["method"] = "branch-and-bound"
    return doc, EXIT_OK if r.converged else EXIT_INCONCLUSIVE


def cmd_butterfly(a):
    rows = spectral.butterfly_scan(a.nmax, a.tol)
    code = EXIT_OK if all(r.converged for r in rows) else EXIT_INCONCLUSIVE
    return spectral.butterfly_csv(rows), code


def cmd_transpose_check(a):
    r = spectral.transpose_isometry_check(a.q, a.grid, a.samples, a.seed)
    return r.to_json(), EXIT_OK


def cmd_selftest(a):
    results = acceptance.run_all(quick=a.quick, solver_tol=a.inject_solver_tol, only=a.only,
                                 echo=lambda line: print(line, file=sys.stderr, flush=True))
    passed = all(c.passed for c in results)
    doc = {"passed": passed, "quick": a.quick, "criteria": [c.to_json() for c in results]}
    return doc, EXIT_OK if passed else EXIT_ERROR


# ---------------------------------------------------------------------------


DEFAULT_TOL = {"member": 1e-7, "support": 1e-7, "equiv": 1e-7, "extreme": extremal.COUPLING_TOL,
               "chain": extremal.COUPLING_TOL, "dilation": 1e-9, "butterfly": 1e-7}


def build_parser():
    p = _Parser(prog="opsys", description="Operator systems of q-commuting unitaries: "
                "constructions, matrix ranges, dilation searches and dilation constants.")
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_, tol=False, seed=False, directions=None, grid=None):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", help="output file (default: stdout)")
        if tol:
            sp.add_argument("--tol", type=float, default=DEFAULT_TOL.get(name))
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if directions is not None:
            sp.add_argument("--directions", type=int, default=directions)
        if grid is not None:
            sp.add_argument("--grid", type=int, default=grid)
        return sp

    sp = add("construct", cmd_construct, "write a tuple file", grid=0)
    sp.add_argument("--q", type=_angle, help="rotation angle k/n")
    sp.add_argument("--phases", type=_scalars, help="alpha,beta (complex or k/n turns)")
    sp.add_argument("--lambda", dest="lam", help="upper entries of Lambda, e.g. '0,1=1/2;1,2=1/3'")
    sp.add_argument("--d", type=int, default=2, help="tuple length for --lambda")
    sp.add_argument("--disk", type=int, help="diagonal disk tuple with this many points")
    sp.add_argument("--transpose", help="transpose the tuple in this file")

    sp = add("classify", cmd_classify, "canonical form of an irreducible q-commuting pair")
    sp.add_argument("--s", required=True)
    sp.add_argument("--q", type=_angle)

    sp = add("nrange", cmd_nrange, "level-1 boundary polygon (CSV)", seed=True, directions=360)
    sp.add_argument("--s", required=True)

    sp = add("member", cmd_member, "is a matrix tuple in the matrix range?", tol=True)
    sp.add_argument("--s", required=True)
    sp.add_argument("--a", required=True, help="target matrices (JSON)")

    sp = add("support", cmd_support, "support function at a level", tol=True)
    sp.add_argument("--s", required=True)
    sp.add_argument("--c", type=_scalars, help="corner coefficients c_1,...,c_d")
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--direction", help="direction matrices (JSON)")

    sp = add("equiv", cmd_equiv, "order equivalence of two tuples", tol=True, seed=True, directions=360)
    sp.add_argument("--s", required=True)
    sp.add_argument("--r", required=True)
    sp.add_argument("--mode", choices=["complete", "level1"], default="complete")

    sp = add("extreme", cmd_extreme, "search for a nontrivial one-step dilation", tol=True, seed=True,
             directions=extremal.DEFAULT_DIRECTIONS)
    sp.add_argument("--s", required=True)
    sp.add_argument("--phi", required=True, help="values of the map on the generators (JSON)")

    sp = add("chain", cmd_chain, "walk up the matrix state space by dilations", tol=True, seed=True,
             directions=16)
    sp.add_argument("--s", required=True)
    sp.add_argument("--start", help="starting values (JSON); default: an exposed pure state")
    sp.add_argument("--c", type=_scalars, help="direction defining the exposed starting state")
    sp.add_argument("--steps", type=int, default=8)

    sp = add("dilation", cmd_dilation, "dilation constant c_theta", tol=True, grid=0)
    sp.add_argument("--q", type=_angle, required=True)
    sp.add_argument("--q2", type=_angle, help="second angle: constant for the pair (q, q2)")

    sp = add("butterfly", cmd_butterfly, "dilation constants for all k/n, n <= nmax (CSV)", tol=True)
    sp.add_argument("--nmax", type=int, default=8)

    sp = add("transpose-check", cmd_transpose_check, "transpose isometry check", seed=True, grid=8)
    sp.add_argument("--q", type=_angle, required=True)
    sp.add_argument("--samples", type=int, default=100)

    sp = add("selftest", cmd_selftest, "run the acceptance criteria")
    sp.add_argument("--quick", action="store_true", help="reduced sample sizes")
    sp.add_argument("--only", type=_levels, help="comma-separated criterion numbers")
    sp.add_argument("--inject-solver-tol", type=float, default=None,
                    help="override every SDP tolerance (fault injection)")
    return p


def _version():
    from . import __version__
    return __version__


def _parameters(args):
    skip = {"fn", "command", "out"}
    return {k: (str(v) if isinstance(v, RationalAngle) else v) for k, v in vars(args).items()
            if k not in skip}


def run(argv=None):
    started = time.time()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        result, code = args.fn(args)
    except UsageError as exc:
        print(f"opsys {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SchemaError as exc:
        print(f"opsys {args.command}: schema error at {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Inconclusive as exc:
        result, code = {"verdict": "inconclusive", "message": str(exc)}, EXIT_INCONCLUSIVE
    except (OpsysError, ValueError, OSError) as exc:
        print(f"opsys {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    params = _parameters(args)
    seeds = [args.seed] if hasattr(args, "seed") else []
    tols = {"tol": args.tol} if getattr(args, "tol", None) is not None else {}
    man = io.manifest(args.command, params, seeds, tols, started)
    if isinstance(result, str):
        io.write_text(result, args.out)
        if args.out not in (None, "-"):
            io.write_text(io.dumps({"format": io.FORMAT, "manifest": man}), args.out + ".manifest.json")
    else:
        doc = {"format": io.FORMAT, **result, "manifest": man}
        io.write_text(io.dumps(doc), args.out)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
