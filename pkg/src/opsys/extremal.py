"""Boundary-representation recognition and one-step dilation searches.

A UCP map ``phi: S(s) -> M_n`` is maximal when every dilation
``psi: S(s) -> M_{n+1}`` with ``phi`` as its top-left compression splits as
``phi (+) rho``.  The coupling of a dilation is the size of its off-diagonal
column and row; we maximise a random linear functional of them by SDP.  A
positive optimum certifies a nontrivial dilation.  A zero optimum over the
sampled functionals is only consistent with maximality.
"""

from dataclasses import dataclass, field

import numpy as np

from . import numerics, sdp
from .cpmaps import ChoiMap, apply
from .errors import PreconditionError
from .matrange import ChoiProgram
from .tuples import RationalAngle

COUPLING_TOL = 1e-6
DEFAULT_DIRECTIONS = 64
SDP_TOL = 1e-7


@dataclass
class BoundaryCheck:
    verdict: bool
    unitary: bool
    commuting: bool
    irreducible: bool

    def __bool__(self):
        return self.verdict


def is_boundary_restriction(values, angle, tol=1e-9):
    """Is ``(u, v)`` an irreducible ``q``-commuting pair of ``n x n`` unitaries?

    These are exactly the restrictions of boundary representations of the
    universal ``q``-commuting system.
    """
    if not isinstance(angle, RationalAngle):
        raise PreconditionError("angle must be a RationalAngle")
    u, v = (numerics.as_matrix(x) for x in values)
    n = angle.n
    if u.shape != (n, n) or v.shape != (n, n):
        raise PreconditionError(f"values must be {n}x{n} for angle {angle}")
    unitary = numerics.is_unitary(u, tol) and numerics.is_unitary(v, tol)
    commuting = bool(np.max(np.abs(u @ v - angle.q * v @ u)) <= tol)
    irreducible = numerics.commutant_dimension([u, v]) == 1
    return BoundaryCheck(unitary and commuting and irreducible, unitary, commuting, irreducible)


def _values(s, phi):
    if isinstance(phi, ChoiMap):
        return np.array([apply(phi, t) for t in s.matrices])
    vals = np.array([numerics.as_matrix(x) for x in phi])
    if vals.shape[0] != s.d:
        raise PreconditionError(f"need {s.d} values, got {vals.shape[0]}")
    return vals


def coupling_directions(d, n, count, seed):
    """Random unit functionals on the off-diagonal parts at level ``n + 1``.

    Direction ``j`` depends only on ``(seed, j)``, so smaller counts give
    prefixes of larger ones.
    """
    out = []
    rng = np.random.default_rng(seed)
    for _ in range(count):
        z = rng.standard_normal((d, 2, n)) + 1j * rng.standard_normal((d, 2, n))
        z /= np.linalg.norm(z)
        D = np.zeros((d, n + 1, n + 1), dtype=complex)
        D[:, :n, n] = z[:, 0]
        D[:, n, :n] = z[:, 1]
        out.append(D)
    return out


@dataclass
class DirectionOutcome:
    index: int
    lower: float
    upper: float
    status: str


@dataclass
class CouplingResult:
    """Coupling bounds over the sampled directions.

    For each direction the optimum lies in ``[lower, upper]``: ``lower`` is
    the objective of a verified feasible dilation (0 from the trivial
    dilation ``phi (+) rho`` when the solver returns nothing better) and
    ``upper`` the objective of a verified dual-feasible point (weak
    duality).  ``coupling`` and ``upper_bound`` are the maxima over
    directions.
    """

    coupling: float
    upper_bound: float
    level: int
    directions: int
    seed: int
    tol: float
    per_direction: list = field(default_factory=list)
    best_values: np.ndarray = None
    best_choi: list = None
    status: str = "ok"

    @property
    def classification(self):
        if self.status == "phi-not-ucp":
            return "inconclusive"
        if self.coupling > self.tol:
            return "dilatable"
        if self.upper_bound <= self.tol:
            return "consistent-with-maximal"
        return "inconclusive"

    def to_json(self):
        return {
            "classification": self.classification,
            "coupling": {"value": float(self.coupling),
                         "error_bound": float(self.upper_bound - self.coupling)},
            "upper_bound": {"value": float(self.upper_bound), "error_bound": self.tol},
            "level": self.level,
            "status": self.status,
            "parameters": {"directions": self.directions, "seed": self.seed, "tol": self.tol},
            "evaluated": len(self.per_direction),
        }


def _bounds(p, res, tol, trace):
    """Verified ``(lower, upper)`` bounds from a possibly unconverged solve.

    Every feasible Choi variable has total trace ``trace`` (the level), so
    any dual vector ``y`` with ``sum_i y_i A_i - C >= -eps I`` bounds the
    optimum by ``b.y + trace * eps``.
    """
    lower, upper = 0.0, float("inf")
    if res.dual is not None and res.dual.size == p.num_constraints:
        eps = max(0.0, -min(float(np.linalg.eigvalsh(S)[0]) for S in p.dual_slack(res.dual)))
        upper = float(p.rhs @ res.dual) + trace * eps
    if res.primal is not None:
        r = res.residuals
        if r.get("primal", 1.0) < tol and r.get("primal_min_eig", -1.0) > -tol:
            lower = max(lower, res.primal_objective)
    return lower, upper


def dilation_coupling_max(s, phi, directions=DEFAULT_DIRECTIONS, seed=0, tol=COUPLING_TOL,
                          stop_above=None, sdp_tol=SDP_TOL):
    """Largest off-diagonal coupling of a one-step dilation of ``phi``.

    For each sampled functional ``D``, maximise ``Re sum_i tr(D_i^* psi(s_i))``
    over UCP ``psi: S(s) -> M_{n+1}`` whose top-left ``n x n`` block on each
    ``s_i`` equals ``phi(s_i)``.  With ``stop_above`` set, returns at the
    first direction whose certified value exceeds it.
    """
    vals = _values(s, phi)
    n = vals.shape[1]
    prog = ChoiProgram(s, n + 1)
    prog.unital()
    for i, t in enumerate(vals):
        prog.fix(i, t, corner=n)
    base = prog.problem()
    result = CouplingResult(0.0, 0.0, n, directions, seed, tol)
    for j, D in enumerate(coupling_directions(s.d, n, directions, seed)):
        obj = ChoiProgram(s, n + 1)
        obj.maximize(D)
        p = sdp.SdpProblem(base.blocks, obj._objective, base.coefficients, base.rhs)
        res = sdp.solve(p, tol=sdp_tol, facial="first", trace=n + 1)
        if res.status == sdp.INFEASIBLE:
            result.status = "phi-not-ucp"
            result.per_direction.append(DirectionOutcome(j, float("nan"), float("nan"), res.status))
            return result
        lower, upper = _bounds(p, res, sdp_tol, n + 1)
        result.per_direction.append(DirectionOutcome(j, lower, upper, res.status))
        result.upper_bound = max(result.upper_bound, upper)
        if res.status != sdp.OPTIMAL:
            result.status = "partial"
        if lower > result.coupling:
            result.coupling = lower
            result.best_choi = res.primal
            result.best_values = prog.values(res.primal)
        if stop_above is not None and lower > stop_above:
            break
    return result


def _round_pure(s, choi_blocks, k, rank_tol=1e-6):
    """If the Choi blocks have total rank one, return the exact compression.

    A rank-one Choi ``w w^*`` on block ``b`` gives ``psi(x) = V^* x_b V`` with
    ``V = conj(w).reshape(m_b, k)``; ``V`` is replaced by its polar factor.
    """
    eig = [np.linalg.eigh(numerics.herm(J)) for J in choi_blocks]
    top = max(float(w[-1]) for w, _ in eig)
    ranks = [int(np.sum(w > rank_tol * top)) for w, _ in eig]
    if sum(ranks) != 1:
        return None
    b = int(np.argmax(ranks))
    w, Q = eig[b]
    vec = Q[:, -1] * np.sqrt(w[-1])
    V = numerics.orthonormal_columns(vec.conj().reshape(s.block_sizes[b], k))
    return np.array([V.conj().T @ x @ V for x in s.blocks[b]])


def exposed_state(s, direction):
    """Level-1 values of the vector state at the top eigenvector of
    ``Re sum_i conj(c_i) s_i`` (an exposed, hence pure, state)."""
    from .matrange import support_level1
    _, pts = support_level1(s, [direction])
    return pts[0].reshape(s.d, 1, 1)


@dataclass
class ChainResult:
    levels: list
    couplings: list
    terminated: bool
    rounded: list
    seed: int
    directions: int
    tol: float
    note: str = ""

    @property
    def final_level(self):
        return self.levels[-1]

    def to_json(self):
        return {
            "levels": self.levels,
            "couplings": [{"value": float(c), "error_bound": self.tol} for c in self.couplings],
            "terminated": self.terminated,
            "final_level": self.final_level,
            "rounded_to_pure": self.rounded,
            "parameters": {"seed": self.seed, "directions": self.directions, "tol": self.tol},
            "note": self.note,
        }


def extreme_chain_walk(s, start, max_steps=8, directions=16, seed=0, tol=COUPLING_TOL):
    """Follow one-step dilations until none with coupling above ``tol`` is found.

    Each step takes the optimiser of the first direction that beats ``tol``.
    Rank-one optimisers are snapped to exact compressions of one block, so
    every map along the chain stays pure.
    """
    current = _values(s, start)
    levels, couplings, rounded = [current.shape[1]], [], []
    for step in range(max_steps):
        cr = dilation_coupling_max(s, current, directions, seed + step, tol, stop_above=tol)
        couplings.append(cr.coupling)
        if cr.classification == "inconclusive":
            return ChainResult(levels, couplings, False, rounded, seed, directions, tol,
                               note=f"inconclusive at level {levels[-1]}: {cr.status}")
        if cr.coupling <= tol:
            return ChainResult(levels, couplings, True, rounded, seed, directions, tol,
                               note="no coupling above tol at the final level")
        snapped = _round_pure(s, cr.best_choi, current.shape[1] + 1)
        rounded.append(snapped is not None)
        current = snapped if snapped is not None else cr.best_values
        levels.append(current.shape[1])
    return ChainResult(levels, couplings, False, rounded, seed, directions, tol,
                       note=f"max_steps={max_steps} exceeded")
