"""Dense semidefinite programming over complex Hermitian blocks.

Problems are stated in the primal form::

    maximize    sum_b <C_b, X_b>
    subject to  sum_b <A_ib, X_b> = b_i      (i = 1..p)
                X_b >= 0                      (Hermitian PSD, every block)

with ``<A, X> = Re tr(A X)``.  The dual is ``minimize b.y`` subject to
``sum_i y_i A_i - C >= 0``.

Complex blocks are realified as ``R(X) = [[Re X, -Im X], [Im X, Re X]]``
so that ``<A, X> = tr(R(A) R(X)) / 2``.  The realified problem is solved
without imposing the block structure; the complex solution is recovered by
averaging ``Z`` with its image under the complex structure, which preserves
positivity and every constraint value.  The interior-point iterations are
delegated to cvxopt's ``conelp`` (primal-dual, Nesterov-Todd scaling).  All
verdicts are re-derived here from the returned iterates: residuals, gaps
and infeasibility certificates are recomputed with numpy, independently of
the solver's own bookkeeping.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import NumericalFailure, PreconditionError, SchemaError
from .numerics import hermitian_defect, herm

DEFAULT_TOL = 1e-7
MAX_ITER = 200

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILURE = "numerical-failure"


@dataclass
class SdpProblem:
    """Block-PSD SDP in the primal form described in the module docstring.

    ``coefficients[b]`` has shape ``(p, blocks[b], blocks[b])`` and holds the
    block-``b`` part of every constraint; ``rhs`` has shape ``(p,)``.
    """

    blocks: list
    objective: list
    coefficients: list
    rhs: np.ndarray
    check_size: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.blocks = [int(k) for k in self.blocks]
        if not self.blocks or min(self.blocks) < 1:
            raise PreconditionError("need at least one block of positive size")
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        p = self.rhs.size
        if len(self.objective) != len(self.blocks) or len(self.coefficients) != len(self.blocks):
            raise PreconditionError("objective/coefficients must have one entry per block")
        obj, coeffs = [], []
        for k, C, A in zip(self.blocks, self.objective, self.coefficients):
            C = np.asarray(C, dtype=complex)
            A = np.asarray(A, dtype=complex).reshape(p, k, k)
            if C.shape != (k, k):
                raise PreconditionError(f"objective block has shape {C.shape}, expected {(k, k)}")
            for M in [C, *A]:
                if hermitian_defect(M) > 1e-12 * max(1.0, float(np.max(np.abs(M), initial=0.0))):
                    raise PreconditionError("coefficient matrices must be Hermitian")
            obj.append(herm(C))
            coeffs.append(herm(A))
        self.objective, self.coefficients = obj, coeffs
        if self.check_size and p > sum(k * k for k in self.blocks):
            raise PreconditionError("more constraints than variable degrees of freedom")

    @property
    def num_constraints(self):
        return self.rhs.size

    @classmethod
    def feasibility_of(cls, blocks, coefficients, rhs):
        return cls(blocks, [np.zeros((k, k)) for k in blocks], coefficients, rhs)

    def constraint_values(self, X):
        """``(<A_i, X>)_i`` for a list of Hermitian blocks ``X``."""
        out = np.zeros(self.num_constraints)
        for A, Xb in zip(self.coefficients, X):
            out += np.einsum("pij,ji->p", A, Xb).real
        return out

    def objective_value(self, X):
        return float(sum(np.einsum("ij,ji->", C, Xb).real for C, Xb in zip(self.objective, X)))

    def dual_slack(self, y):
        """Blocks of ``sum_i y_i A_i - C``."""
        return [np.tensordot(y, A, axes=1) - C for A, C in zip(self.coefficients, self.objective)]

    def scaled(self, factors):
        """Copy with constraint ``i`` multiplied by ``factors[i]``."""
        f = np.asarray(factors, dtype=float)
        return SdpProblem(
            self.blocks,
            self.objective,
            [A * f[:, None, None] for A in self.coefficients],
            self.rhs * f,
        )

    # -- JSON -----------------------------------------------------------
    def to_json(self):
        return {
            "format": 1,
            "blocks": self.blocks,
            "objective": [_encode(C) for C in self.objective],
            "constraints": [
                {"coefficients": [_encode(A[i]) for A in self.coefficients], "rhs": float(self.rhs[i])}
                for i in range(self.num_constraints)
            ],
        }

    @classmethod
    def from_json(cls, doc):
        try:
            blocks = [int(k) for k in doc["blocks"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError("missing or malformed 'blocks'", "blocks") from exc
        objective = [_decode(C, f"objective[{b}]") for b, C in enumerate(doc.get("objective", []))]
        cons = doc.get("constraints")
        if not isinstance(cons, list):
            raise SchemaError("missing 'constraints' array", "constraints")
        coeffs = [np.zeros((len(cons), k, k), dtype=complex) for k in blocks]
        rhs = np.zeros(len(cons))
        for i, con in enumerate(cons):
            try:
                rhs[i] = float(con["rhs"])
                parts = con["coefficients"]
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError("constraint needs 'coefficients' and 'rhs'", f"constraints[{i}]") from exc
            for b, part in enumerate(parts):
                coeffs[b][i] = _decode(part, f"constraints[{i}].coefficients[{b}]")
        return cls(blocks, objective, coeffs, rhs)

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))


def _encode(M):
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _decode(rows, path):
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError("expected an array of [re, im] pairs", path) from exc
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise SchemaError(f"expected shape (n, n, 2), got {arr.shape}", path)
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass
class SdpResult:
    status: str
    primal: list = None
    dual: np.ndarray = None
    primal_objective: float = float("nan")
    dual_objective: float = float("nan")
    gap: float = float("nan")
    residuals: dict = field(default_factory=dict)
    certificate_margin: float = float("nan")
    certificate_verified: bool = False
    slack: float = float("nan")
    iterations: int = 0
    tol: float = DEFAULT_TOL
    message: str = ""

    @property
    def feasible(self):
        """True/False for a definitive verdict, None for numerical failure."""
        if self.status in (OPTIMAL, UNBOUNDED):
            return True
        if self.status == INFEASIBLE:
            return False
        return None

    def summary(self):
        out = {
            "status": self.status,
            "tol": self.tol,
            "primal_objective": _num(self.primal_objective, self.gap),
            "dual_objective": _num(self.dual_objective, self.gap),
            "gap": _num(self.gap, self.tol),
            "residuals": {k: _num(v, self.tol) for k, v in self.residuals.items()},
            "iterations": self.iterations,
            "message": self.message,
        }
        if self.status == INFEASIBLE:
            out["certificate"] = {
                "dual_ray": [float(v) for v in self.dual],
                "margin": _num(self.certificate_margin, self.tol),
                "verified": self.certificate_verified,
            }
        if not np.isnan(self.slack):
            out["phase1_slack"] = _num(self.slack, self.tol)
        return out


def _num(value, bound):
    return {"value": None if value is None or np.isnan(value) else float(value),
            "error_bound": None if bound is None or np.isnan(bound) else float(abs(bound))}


# ---------------------------------------------------------------------------
# realification


def realify(M):
    """``R(M) = [[Re M, -Im M], [Im M, Re M]]`` (works on stacks)."""
    re, im = M.real, M.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def complexify(Z):
    """Inverse of :func:`realify` after projecting onto the complex structure."""
    k = Z.shape[-1] // 2
    Z11, Z12 = Z[..., :k, :k], Z[..., :k, k:]
    Z21, Z22 = Z[..., k:, :k], Z[..., k:, k:]
    return herm(0.5 * (Z11 + Z22) + 0.5j * (Z21 - Z12))


def _real_rows(p):
    """Constraint rows on the stacked real variable, plus the objective row."""
    rows, obj = [], []
    for A, C in zip(p.coefficients, p.objective):
        k2 = (2 * A.shape[-1]) ** 2
        rows.append(0.5 * realify(A).reshape(p.num_constraints, k2))
        obj.append(0.5 * realify(C).reshape(k2))
    return np.hstack(rows), np.concatenate(obj)


def _split_real(vec, blocks):
    out, pos = [], 0
    for k in blocks:
        n = 2 * k
        out.append(vec[pos:pos + n * n].reshape(n, n))
        pos += n * n
    return out


# ---------------------------------------------------------------------------
# independent checks


def farkas_margin(p, y):
    """Check ``y`` as a certificate that the primal constraints are infeasible.

    After normalising to ``b.y = 1`` the certificate asserts
    ``sum_i y_i A_i <= margin * I``; any feasible ``X`` would then need
    ``tr X >= 1 / margin``.  Returns ``(margin, valid)`` where ``valid``
    requires ``b.y > 0``; the caller compares ``margin`` with its tolerance.
    """
    y = np.asarray(y, dtype=float)
    by = float(p.rhs @ y)
    if not np.isfinite(by) or by <= 0:
        return float("inf"), False
    y = y / by
    margin = -np.inf
    for A in p.coefficients:
        S = herm(np.tensordot(y, A, axes=1))
        margin = max(margin, float(np.linalg.eigvalsh(S)[-1]))
    return max(margin, 0.0), True


def _min_eig(blocks):
    return min(float(np.linalg.eigvalsh(herm(B))[0]) for B in blocks)


# ---------------------------------------------------------------------------
# solver


def _reduce_rows(M, b):
    """Normalise rows and drop linearly dependent ones.

    Returns ``(keep, norms, certificate)``; ``certificate`` is a Farkas
    vector when the dependent rows are inconsistent, else ``None``.
    """
    p = M.shape[0]
    norms = np.linalg.norm(M, axis=1)
    scale_b = 1.0 + float(np.max(np.abs(b), initial=0.0))
    zero = norms <= 1e-14 * max(1.0, float(np.max(norms, initial=0.0)))
    for i in np.flatnonzero(zero):
        if abs(b[i]) > 1e-12 * scale_b:
            y = np.zeros(p)
            y[i] = np.sign(b[i])
            return None, norms, y
    live = np.flatnonzero(~zero)
    Mn = M[live] / norms[live, None]
    bn = b[live] / norms[live]
    _, R, piv = sla.qr(Mn.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-10 * diag[0])) if diag.size else 0
    keep_local = np.sort(piv[:rank])
    drop_local = np.sort(piv[rank:])
    if drop_local.size:
        Z, *_ = np.linalg.lstsq(Mn[keep_local].T, Mn[drop_local].T, rcond=None)
        mismatch = bn[drop_local] - Z.T @ bn[keep_local]
        j = int(np.argmax(np.abs(mismatch)))
        if abs(mismatch[j]) > 1e-9 * (1.0 + float(np.max(np.abs(bn)))):
            y = np.zeros(p)
            s = np.sign(mismatch[j])
            y[live[drop_local[j]]] = s / norms[live[drop_local[j]]]
            y[live[keep_local]] = -s * Z[:, j] / norms[live[keep_local]]
            return None, norms, y
    return live[keep_local], norms, None


def _check_tol(tol):
    if not (1e-10 <= tol <= 1e-4):
        raise PreconditionError(f"tol must lie in [1e-10, 1e-4], got {tol}")


def solve(p, tol=DEFAULT_TOL, max_iter=MAX_ITER, facial=True, trace=None):
    """Solve ``p`` and return an :class:`SdpResult`.

    ``optimal`` is reported only if the recomputed relative duality gap,
    primal residual and negative primal eigenvalue are all below ``tol``;
    ``infeasible`` only with a Farkas ray whose margin (see
    :func:`farkas_margin`) is below ``tol``.  Anything else is a
    ``numerical-failure`` carrying the diagnostics.

    When the direct solve fails and ``facial`` is true, the problem is
    restricted to the face exposed by :func:`facial_reduction` and solved
    again; ``facial="first"`` tries the face first (for problems known to
    lack a strictly feasible point).  ``trace``, if given, must equal ``sum_b tr X_b`` for every
    feasible ``X``; it lets the dual bound absorb a slightly indefinite dual
    slack (``b.y + trace * eps`` is then a valid upper bound).
    """
    _check_tol(tol)
    if facial == "first":
        red = _solve_on_face(p, tol, max_iter, trace)
        if red is not None:
            return red
    res = _solve_direct(p, tol, max_iter)
    if res.status != FAILURE or facial is not True:
        return res
    red = _solve_on_face(p, tol, max_iter, trace)
    return red if red is not None else res


def _solve_direct(p, tol, max_iter):
    import cvxopt
    from cvxopt import solvers

    M, c_row = _real_rows(p)
    b = p.rhs
    keep, norms, cert = _reduce_rows(M, b)
    if cert is not None:
        return _infeasible_result(p, cert, tol, iterations=0,
                                  message="inconsistent linear constraints")

    Mk = M[keep] / norms[keep, None]
    bk = b[keep] / norms[keep]
    G = cvxopt.matrix(-Mk.T)
    h = cvxopt.matrix(-c_row)
    c = cvxopt.matrix(bk)
    dims = {"l": 0, "q": [], "s": [2 * k for k in p.blocks]}
    out = None
    # Well-posed instances here converge in well under 40 iterations.  On
    # degenerate ones (no strictly feasible point) the iterates pass through
    # acceptable points and then drift until the budget runs out, so budgets
    # are halved from 100 until a verified iterate comes back; the full
    # max_iter is the last resort.
    out = None
    for budget in _budgets(int(max_iter)):
        opts = {
            "show_progress": False,
            "maxiters": budget,
            "abstol": tol * 1e-1,
            "reltol": tol * 1e-1,
            "feastol": tol * 1e-1,
            "refinement": 1,
        }
        try:
            sol = solvers.conelp(c, G, h, dims, options=opts)
        except (ValueError, ArithmeticError) as exc:
            if out is None:
                out = SdpResult(FAILURE, tol=tol, message=f"solver error: {exc}")
            continue
        out = _interpret(p, sol, keep, norms, tol)
        if out.status != FAILURE or sol["status"] != "unknown" or out.iterations < budget:
            return out
    return out


def _budgets(max_iter):
    out = []
    b = min(100, max_iter)
    while b >= 10:
        out.append(b)
        b //= 2
    if max_iter > 100:
        out.append(max_iter)
    return out


def _interpret(p, sol, keep, norms, tol):
    """Turn a cvxopt solution into a verified :class:`SdpResult`."""
    b = p.rhs
    iters = int(sol.get("iterations", 0) or 0)
    status = sol["status"]
    if status == "dual infeasible":
        # cvxopt's dual is our primal: x certifies infeasibility of X
        y = np.zeros(p.num_constraints)
        y[keep] = -np.asarray(sol["x"]).ravel() / norms[keep]
        return _infeasible_result(p, y, tol, iterations=iters, message="dual ray from solver")
    if status == "primal infeasible":
        Zs = _split_real(np.asarray(sol["z"]).ravel(), p.blocks)
        ray = [complexify(Z) for Z in Zs]
        ok = (np.max(np.abs(p.constraint_values(ray)), initial=0.0) <= tol * 1e2
              and p.objective_value(ray) > 0.5 and _min_eig(ray) >= -tol)
        return SdpResult(UNBOUNDED if ok else FAILURE, primal=ray, tol=tol, iterations=iters,
                         message="improving ray" + ("" if ok else " failed verification"))

    x = np.asarray(sol["x"]).ravel()
    z = np.asarray(sol["z"]).ravel()
    y = np.zeros(p.num_constraints)
    y[keep] = x / norms[keep]
    X = [complexify(Z) for Z in _split_real(z, p.blocks)]
    pobj = p.objective_value(X)
    dobj = float(b @ y)
    scale_b = 1.0 + float(np.max(np.abs(b), initial=0.0))
    res_p = float(np.max(np.abs(p.constraint_values(X) - b), initial=0.0)) / scale_b
    scale_c = 1.0 + max(float(np.max(np.abs(C), initial=0.0)) for C in p.objective)
    res_d = max(0.0, -_min_eig(p.dual_slack(y))) / scale_c
    lam = _min_eig(X)
    gap = (dobj - pobj) / (1.0 + abs(pobj) + abs(dobj))
    residuals = {"primal": res_p, "dual": res_d, "primal_min_eig": lam}
    ok = abs(gap) < tol and res_p < tol and lam > -tol and res_d < tol
    return SdpResult(
        OPTIMAL if ok else FAILURE,
        primal=X, dual=y, primal_objective=pobj, dual_objective=dobj, gap=gap,
        residuals=residuals, iterations=iters, tol=tol,
        message=f"solver status '{status}'" + ("" if ok else "; accuracy targets missed"),
    )


def _infeasible_result(p, y, tol, iterations, message):
    margin, valid = farkas_margin(p, y)
    ok = valid and margin <= tol
    y = np.asarray(y, dtype=float)
    if valid:
        y = y / float(p.rhs @ y)
    return SdpResult(
        INFEASIBLE if ok else FAILURE,
        dual=y, certificate_margin=margin, certificate_verified=ok,
        iterations=iterations, tol=tol,
        message=message if ok else f"{message}; infeasible-or-degenerate, certificate margin {margin:.2e}",
    )


def feasibility(p, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    """Phase-I feasibility test for the constraints of ``p``.

    Solves ``maximize t`` subject to ``<A_i, Y + tI/D> = b_i``, ``Y >= 0`` and
    ``t <= 1``, where ``D`` is the total block dimension (so ``t`` is measured
    against the average eigenvalue, independent of problem size); the
    constraints admit a PSD solution iff the optimal ``t`` is at least
    ``-tol``.  The objective of ``p`` is ignored.  On infeasibility
    the phase-I dual yields a Farkas ray which is re-verified before being
    reported.  ``result.slack`` holds the optimal ``t``; ``result.primal``
    holds ``X = Y + tI/D`` when feasible.
    """
    _check_tol(tol)
    q = p.num_constraints
    D = float(sum(p.blocks))
    traces = np.array([sum(np.trace(A[i]).real for A in p.coefficients) for i in range(q)]) / D
    blocks = list(p.blocks) + [1, 1, 1]  # t+, t-, w  with  t = t+ - t-,  t+ + w = 1
    coeffs = [np.concatenate([A, np.zeros((1, k, k))]) for A, k in zip(p.coefficients, p.blocks)]
    tp = np.zeros((q + 1, 1, 1))
    tp[:q, 0, 0] = traces
    tp[q, 0, 0] = 1.0
    tm = np.zeros((q + 1, 1, 1))
    tm[:q, 0, 0] = -traces
    w = np.zeros((q + 1, 1, 1))
    w[q, 0, 0] = 1.0
    coeffs += [tp, tm, w]
    objective = [np.zeros((k, k)) for k in p.blocks] + [np.eye(1), -np.eye(1), np.zeros((1, 1))]
    phase1 = SdpProblem(blocks, objective, coeffs, np.append(p.rhs, 1.0))
    res = solve(phase1, tol=tol, max_iter=max_iter)
    nb = len(p.blocks)

    if res.status == INFEASIBLE:
        # the phase-I ray restricted to the original constraints is a ray for p
        return _infeasible_result(p, res.dual[:q], tol, res.iterations,
                                  "phase-I constraints inconsistent")
    if res.status != OPTIMAL:
        res.message = f"phase-I: {res.message}"
        if res.primal is not None:
            res.slack = float(res.primal[nb][0, 0].real - res.primal[nb + 1][0, 0].real)
        return res

    t = float(res.primal[nb][0, 0].real - res.primal[nb + 1][0, 0].real)
    if t >= -tol:
        X = [Y + (t / D) * np.eye(k) for Y, k in zip(res.primal[:nb], p.blocks)]
        scale_b = 1.0 + float(np.max(np.abs(p.rhs), initial=0.0))
        residuals = dict(res.residuals)
        residuals["primal"] = float(np.max(np.abs(p.constraint_values(X) - p.rhs), initial=0.0)) / scale_b
        residuals["primal_min_eig"] = _min_eig(X)
        return SdpResult(OPTIMAL, primal=X, dual=res.dual[:q], primal_objective=t,
                         dual_objective=res.dual_objective, gap=res.gap, residuals=residuals,
                         slack=t, iterations=res.iterations, tol=tol, message="feasible (phase-I)")
    # optimal t < 0: the phase-I dual y has sum y_i A_i >= 0 and b.y < 0
    out = _infeasible_result(p, -res.dual[:q], tol, res.iterations, "phase-I optimum negative")
    out.slack = t
    out.gap = res.gap
    return out


# ---------------------------------------------------------------------------
# facial reduction


def _exposing(p):
    """A matrix ``Z = sum_i y_i A_i >= 0`` with ``b.y = 0`` and ``tr Z = 1``.

    Every feasible ``X`` satisfies ``<Z, X> = b.y = 0``, so its range lies in
    ``null(Z)``.  Returns ``(y, Z_blocks)`` or ``None`` when no such ``Z``
    exists (the constraints then admit a positive definite point, or are
    infeasible).
    """
    import cvxopt
    from cvxopt import solvers

    M, _ = _real_rows(p)
    keep, norms, cert = _reduce_rows(M, p.rhs)
    if cert is not None:
        return None
    Mk = M[keep] / norms[keep, None]
    bk = p.rhs[keep] / norms[keep]
    traces = np.array([sum(np.trace(A[i]).real for A in p.coefficients) for i in keep]) / norms[keep]
    dims = {"l": 0, "q": [], "s": [2 * k for k in p.blocks]}
    try:
        sol = solvers.conelp(
            cvxopt.matrix(np.zeros(keep.size)), cvxopt.matrix(-2.0 * Mk.T),
            cvxopt.matrix(np.zeros(Mk.shape[1])), dims,
            cvxopt.matrix(np.vstack([bk, traces])), cvxopt.matrix(np.array([0.0, 1.0])),
            options={"show_progress": False, "maxiters": 100},
        )
    except (ValueError, ArithmeticError):
        return None
    if sol["status"] != "optimal":
        return None
    y = np.zeros(p.num_constraints)
    y[keep] = np.asarray(sol["x"]).ravel() / norms[keep]
    Z = [herm(np.tensordot(y, A, axes=1)) for A in p.coefficients]
    if _min_eig(Z) < -1e-8 * max(1.0, max(float(np.max(np.abs(B))) for B in Z)):
        return None
    return y, Z


@dataclass
class Face:
    """Restriction ``X_b = V_b X'_b V_b^*`` of the blocks of a problem.

    ``kept`` lists the original block indices that survive (a block whose
    face is ``{0}`` is dropped); ``exposers`` are the dual vectors that
    certified each step.
    """

    problem: SdpProblem
    bases: list
    kept: list
    exposers: list

    def lift(self, X_red, blocks):
        X = [np.zeros((k, k), dtype=complex) for k in blocks]
        for Xr, V, b in zip(X_red, self.bases, self.kept):
            X[b] = V @ Xr @ V.conj().T
        return X


def facial_reduction(p, max_steps=4, gap=1e-6):
    """Shrink ``p`` to the minimal face containing its feasible set.

    Each step finds an exposing ``Z`` and keeps the eigenvectors of each
    block whose eigenvalue is below ``gap * lambda_max(Z)``.  Returns a
    :class:`Face` (possibly with no steps taken).
    """
    bases = [np.eye(k, dtype=complex) for k in p.blocks]
    kept = list(range(len(p.blocks)))
    exposers = []
    cur = p
    for _ in range(max_steps):
        found = _exposing(cur)
        if found is None:
            break
        y, Z = found
        top = max(float(np.linalg.eigvalsh(B)[-1]) for B in Z)
        new_bases, new_kept = [], []
        for B, V, b in zip(Z, bases, kept):
            w, Q = np.linalg.eigh(B)
            null = Q[:, w <= gap * top]
            if null.shape[1]:
                new_bases.append(V @ null)
                new_kept.append(b)
        if not new_kept:
            break
        exposers.append(_clean_exposer(p, y, new_bases, new_kept))
        bases, kept = new_bases, new_kept
        cur = SdpProblem(
            [V.shape[1] for V in bases],
            [V.conj().T @ p.objective[b] @ V for V, b in zip(bases, kept)],
            [np.einsum("ji,pjk,kl->pil", V.conj(), p.coefficients[b], V) for V, b in zip(bases, kept)],
            p.rhs,
            check_size=False,  # restricted rows are dependent; the solver prunes them
        )
    return Face(cur, bases, kept, exposers)


def _clean_exposer(p, y, bases, kept):
    """Least-norm correction of ``y`` so that ``b.y = 0`` and ``sum y A``
    vanishes on the kept face exactly (up to rounding).  The IPM only gets
    these to solver accuracy, which would cap how far the exposer can be
    scaled in :func:`_combine_dual`."""
    rows = [p.rhs[None, :]]
    for V, b in zip(bases, kept):
        R = np.einsum("ji,pjk,kl->ilp", V.conj(), p.coefficients[b], V).reshape(-1, p.num_constraints)
        rows += [R.real, R.imag]
    L = np.vstack(rows)
    delta, *_ = np.linalg.lstsq(L, L @ y, rcond=None)
    return y - delta


def dual_bound(p, y, trace):
    """Upper bound ``b.y + trace * max(0, -lambda_min(sum y A - C))``."""
    eps = max(0.0, -_min_eig(p.dual_slack(y)))
    return float(p.rhs @ y) + trace * eps, eps


def _combine_dual(p, y, exposers, trace):
    """Best bound over ``y + mu_j * y_j`` for the exposing vectors (innermost first)."""
    best_y = y
    best, _ = dual_bound(p, y, trace)
    for ye in reversed(exposers):
        base_y = best_y
        for mu in np.logspace(-2, 16, 145):
            cand = base_y + mu * ye
            val, _ = dual_bound(p, cand, trace)
            if val < best:
                best, best_y = val, cand
    return best_y, best


def _solve_on_face(p, tol, max_iter, trace):
    face = facial_reduction(p)
    if not face.exposers:
        return None
    red = _solve_direct(face.problem, tol, max_iter)
    if red.status != OPTIMAL:
        return None
    X = face.lift(red.primal, p.blocks)
    pobj = p.objective_value(X)
    scale_b = 1.0 + float(np.max(np.abs(p.rhs), initial=0.0))
    res_p = float(np.max(np.abs(p.constraint_values(X) - p.rhs), initial=0.0)) / scale_b
    lam = _min_eig(X)
    scale_c = 1.0 + max(float(np.max(np.abs(C), initial=0.0)) for C in p.objective)
    if trace is not None:
        y, dobj = _combine_dual(p, red.dual, face.exposers, trace)
        res_d = 0.0
    else:
        y = red.dual
        dobj = float(p.rhs @ y)
        res_d = max(0.0, -_min_eig(p.dual_slack(y))) / scale_c
    gap = (dobj - pobj) / (1.0 + abs(pobj) + abs(dobj))
    residuals = {"primal": res_p, "dual": res_d, "primal_min_eig": lam}
    ok = abs(gap) < tol and res_p < tol and lam > -tol and res_d < tol
    return SdpResult(
        OPTIMAL if ok else FAILURE,
        primal=X, dual=y, primal_objective=pobj, dual_objective=dobj, gap=gap,
        residuals=residuals, iterations=red.iterations, tol=tol,
        message=f"solved on a face ({len(face.exposers)} reduction step(s))"
                + ("" if ok else "; accuracy targets missed"),
    )


def solve_or_raise(p, tol=DEFAULT_TOL):
    res = solve(p, tol)
    if res.status == FAILURE:
        raise NumericalFailure(res.message)
    return res
