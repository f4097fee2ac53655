"""Dilation constants of rotation pairs via certified maximisation over phases.

For ``q = exp(2 pi i k/n)`` the universal pair is a direct sum of the fibres
``(alpha U, beta V)`` over the torus, so the norm of ``u + u* + v + v*`` is
the supremum over phases of the norm of the Harper matrix

    H(alpha, beta) = alpha U + conj(alpha) U* + beta V + conj(beta) V*.

Conjugating by ``V`` (resp. ``U``) multiplies ``alpha`` (resp. ``beta``) by
``q``, so the phases ``(e^{ia}, e^{ib})`` may be restricted to
``[0, 2 pi/n)^2``.  The maximum is found by branch and bound with two cell
bounds:

* Lipschitz: ``||H(a,b) - H(a',b')|| <= 2|a-a'| + 2|b-b'|``;
* second order: ``H`` is a sum of a function of ``a`` and one of ``b``,
  each with second derivative of norm at most 2, so on a cell with centre
  ``c`` and half-widths ``(h_a, h_b)``
  ``||H|| <= max over corners of ||H(c) + d.grad H(c)|| + h_a^2 + h_b^2``
  (the middle term is convex in ``d``, hence maximal at a corner).
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .parallel import pmap
from .tuples import RationalAngle, clock, shift, universal_sample

NORM_TOL = 1e-9
MAX_EVALS = 4_000_000


def _check_phase(z, name):
    z = complex(z)
    if abs(abs(z) - 1) > 1e-12:
        raise PreconditionError(f"{name} must be unimodular")
    return z


def harper_matrix(angle, alpha, beta):
    """``alpha U + conj(alpha) U* + beta V + conj(beta) V*`` on ``C^n``."""
    alpha = _check_phase(alpha, "alpha")
    beta = _check_phase(beta, "beta")
    U, V = clock(angle), shift(angle.n)
    A = alpha * U + beta * V
    return A + A.conj().T


class _Fibres:
    """Vectorised evaluation of fibre norms for one angle."""

    def __init__(self, angle):
        self.n = angle.n
        self.u = np.array([angle.power(j) for j in range(self.n)])  # diagonal of U
        self.V = shift(self.n)

    def matrices(self, a, b, da=None, db=None):
        """``H`` at phases ``(a, b)``, plus ``da * dH/da + db * dH/db`` if given."""
        alpha = np.exp(1j * np.asarray(a))
        beta = np.exp(1j * np.asarray(b))
        if da is not None:
            # dH/da = i alpha U + h.c., dH/db = i beta V + h.c.
            alpha = alpha * (1 + 1j * np.asarray(da))
            beta = beta * (1 + 1j * np.asarray(db))
        N = alpha.size
        A = np.zeros((N, self.n, self.n), dtype=complex)
        idx = np.arange(self.n)
        A[:, idx, idx] = alpha[:, None] * self.u[None, :]
        A += beta[:, None, None] * self.V[None]
        return A + np.conj(np.swapaxes(A, 1, 2))

    def norms(self, a, b, da=None, db=None):
        H = self.matrices(a, b, da, db)
        if self.n == 1:
            return np.abs(H[:, 0, 0].real)
        w = np.linalg.eigvalsh(H)
        return np.maximum(w[:, -1], -w[:, 0])


def fibre_norm(angle, alpha, beta):
    return float(np.max(np.abs(np.linalg.eigvalsh(harper_matrix(angle, alpha, beta)))))


@dataclass
class NormResult:
    """``norm`` is attained at ``argmax``; the true supremum lies in
    ``[norm, norm + error_bound]``."""

    angle: RationalAngle
    norm: float
    error_bound: float
    argmax: tuple
    evaluations: int
    grid_final: int
    converged: bool


def universal_norm(angle, tol=NORM_TOL, initial=8, max_evals=MAX_EVALS):
    """Certified maximum of ``||H(alpha, beta)||`` over the phase torus."""
    if tol < 1e-9:
        raise PreconditionError("tol must be at least 1e-9")
    f = _Fibres(angle)
    width = 2 * math.pi / angle.n
    h0 = width / (2 * initial)
    centres = (np.arange(initial) + 0.5) * 2 * h0
    A, B = np.meshgrid(centres, centres, indexing="ij")
    a, b = A.ravel(), B.ravel()
    h = np.full(a.size, h0)

    # lower bound: cell centres plus the four real points of the full torus
    guard_a = np.array([0.0, 0.0, math.pi, math.pi])
    guard_b = np.array([0.0, math.pi, 0.0, math.pi])
    gv = f.norms(guard_a, guard_b)
    g = int(np.argmax(gv))
    best, arg = float(gv[g]), (float(guard_a[g]), float(guard_b[g]))
    evals = 4
    depth = 0
    cells = None
    while True:
        vals = f.norms(a, b)
        evals += a.size
        i = int(np.argmax(vals))
        if vals[i] > best or (vals[i] == best and (a[i], b[i]) < arg):
            best, arg = float(vals[i]), (float(a[i]), float(b[i]))
        ub = _cell_bounds(f, a, b, h, vals)
        evals += 4 * a.size
        live = ub > best + tol
        if cells is None:
            cells = (a, b, h, ub)
        if not live.any():
            err = max(0.0, float(np.max(ub, initial=best)) - best)
            return NormResult(angle, best, min(err, tol), arg, evals, initial * 2 ** depth, True)
        if evals > max_evals:
            err = float(np.max(ub[live])) - best
            return NormResult(angle, best, err, arg, evals, initial * 2 ** depth, False)
        a, b, h = a[live], b[live], h[live] / 2
        a = np.concatenate([a - h, a - h, a + h, a + h])
        b = np.concatenate([b - h, b + h, b - h, b + h])
        h = np.concatenate([h, h, h, h])
        depth += 1


def _cell_bounds(f, a, b, h, vals):
    lip = vals + 4 * h
    second = np.full(a.size, -np.inf)
    for sa in (-1, 1):
        for sb in (-1, 1):
            second = np.maximum(second, f.norms(a, b, sa * h, sb * h))
    second += 2 * h * h
    return np.minimum(np.minimum(lip, second), 4.0)


def universal_norm_grid(angle, grid):
    """Max of fibre norms on the nested node grid ``(j w, l w)``, ``w = 2 pi/(n grid)``.

    Every phase is within ``w/2`` of a node in each coordinate, so the bound
    is ``2w``.  Doubling ``grid`` keeps all nodes: the value can only grow
    and the bound halves.
    """
    if grid < 1:
        raise PreconditionError("grid must be at least 1")
    f = _Fibres(angle)
    w = 2 * math.pi / (angle.n * grid)
    nodes = np.arange(grid) * w
    A, B = np.meshgrid(nodes, nodes, indexing="ij")
    vals = f.norms(A.ravel(), B.ravel())
    return float(np.max(vals)), 2 * w


@dataclass
class DilationConstantResult:
    angle: RationalAngle
    norm: float
    constant: float
    error_bound: float
    norm_error_bound: float
    grid_final: int
    evaluations: int
    converged: bool
    parameters: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "angle": str(self.angle),
            "theta": {"value": float(self.angle), "error_bound": 0.0},
            "norm": {"value": self.norm, "error_bound": self.norm_error_bound},
            "constant": {"value": self.constant, "error_bound": self.error_bound},
            "grid_final": self.grid_final,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "parameters": self.parameters,
        }


def dilation_constant(angle, tol=NORM_TOL):
    """``c = 4 / ||u + u* + v + v*||`` for the universal pair of ``angle``.

    With the norm in ``[L, L + e]`` and ``L >= 2``, the constant lies in
    ``[4/(L+e), 4/L]`` and ``4/L - 4/(L+e) <= e``, so the norm tolerance is
    also a tolerance for the constant.
    """
    r = universal_norm(angle, tol)
    if not 2.0 - 1e-9 <= r.norm <= 4.0 + 1e-12:
        raise ArithmeticError(f"norm {r.norm} outside [2, 4]")
    L, e = r.norm, r.error_bound
    c = 4.0 / L
    err = c - 4.0 / (L + e)
    return DilationConstantResult(angle, L, c, err, e, r.grid_final, r.evaluations, r.converged,
                                  {"tol": tol, "argmax": list(r.argmax)})


def dilation_constant_pair(theta, theta_prime, tol=NORM_TOL):
    """The constant for ``(theta, theta')`` depends only on ``theta - theta'``."""
    return dilation_constant(theta - theta_prime, tol)


def _random_combination(rng):
    return rng.standard_normal(5) + 1j * rng.standard_normal(5)


def _combo_norm(u, v, coeffs):
    """Max over blocks of ``||a0 + a1 u + a2 v + b1 u* + b2 v*||``; ``u, v`` stacked."""
    a0, a1, a2, b1, b2 = coeffs
    X = a1 * u + a2 * v + b1 * np.conj(np.swapaxes(u, 1, 2)) + b2 * np.conj(np.swapaxes(v, 1, 2))
    X = X + a0 * np.eye(u.shape[1])
    return float(np.max(np.linalg.svd(X, compute_uv=False)[:, 0]))


@dataclass
class TransposeCheck:
    deviation: float
    blockwise: float
    against_conjugate: float
    grid: int
    samples: int
    seed: int

    def to_json(self):
        return {
            "deviation": {"value": self.deviation, "error_bound": 1e-12},
            "blockwise_transpose": {"value": self.blockwise, "error_bound": 1e-12},
            "against_conjugate_sample": {"value": self.against_conjugate, "error_bound": 1e-12},
            "parameters": {"grid": self.grid, "samples": self.samples, "seed": self.seed},
        }


def transpose_isometry_check(angle, grid, samples=100, seed=0):
    """Compare norms of ``a0 + a1 u + a2 v + b1 u* + b2 v*`` under ``V -> V^t``.

    The transposed-``V`` sample is compared with the original sample
    (blockwise) and with the universal sample of the conjugate angle; the
    returned deviation is the larger relative difference.
    """
    if grid < 1:
        raise PreconditionError("grid must be at least 1")
    if samples == 0:
        return TransposeCheck(0.0, 0.0, 0.0, grid, 0, seed)
    cap = angle.n * grid * grid
    S = np.array(universal_sample(angle, grid, cap=cap).blocks)
    C = np.array(universal_sample(angle.conj(), grid, cap=cap).blocks)
    su, sv = S[:, 0], S[:, 1]
    tv = np.swapaxes(sv, 1, 2)
    rng = np.random.default_rng(seed)
    dev_t = dev_c = 0.0
    for _ in range(samples):
        co = _random_combination(rng)
        ns = _combo_norm(su, sv, co)
        nt = _combo_norm(su, tv, co)
        nc = _combo_norm(C[:, 0], C[:, 1], co)
        dev_t = max(dev_t, abs(ns - nt) / ns)
        dev_c = max(dev_c, abs(nt - nc) / nt)
    return TransposeCheck(max(dev_t, dev_c), dev_t, dev_c, grid, samples, seed)


def reduced_fractions(n_max):
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    out = [RationalAngle(0, 1)]
    for n in range(2, n_max + 1):
        out += [RationalAngle(k, n) for k in range(1, n) if math.gcd(k, n) == 1]
    return out


@dataclass
class ButterflyRow:
    k: int
    n: int
    theta: float
    norm: float
    constant: float
    error_bound: float
    grid_final: int
    converged: bool


def butterfly_scan(n_max, tol=1e-7):
    """Dilation constants for every reduced ``k/n`` with ``n <= n_max``."""
    angles = reduced_fractions(n_max)
    results = pmap(lambda a: dilation_constant(a, tol), angles)
    return [ButterflyRow(a.k, a.n, float(a), r.norm, r.constant, r.error_bound,
                         r.grid_final, r.converged) for a, r in zip(angles, results)]


def butterfly_symmetry(rows):
    """Max ``|c_{k/n} - c_{(n-k)/n}|`` over the table."""
    table = {(r.k, r.n): r.constant for r in rows}
    worst = 0.0
    for (k, n), c in table.items():
        if n > 1:
            worst = max(worst, abs(c - table[((n - k) % n, n)]))
    return worst


CSV_COLUMNS = ["k", "n", "theta", "norm", "constant", "error_bound", "grid_final"]


def butterfly_csv(rows):
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(",".join([str(r.k), str(r.n), repr(r.theta), repr(r.norm), repr(r.constant),
                               repr(r.error_bound), str(r.grid_final)]))
    return "\n".join(lines) + "\n"
