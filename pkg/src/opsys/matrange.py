"""Matrix ranges, support functions and UCP-existence between tuples.

A UCP map on the operator system of a block-diagonal tuple ``s`` is
modelled as a sum of completely positive maps, one per diagonal block, with
``sum_b Phi_b(I) = I``.  Every UCP map on the system extends (Arveson) to
the full matrix algebra and restricts to the block-diagonal subalgebra by
the conditional expectation, so nothing is lost.  Each block contributes a
Choi variable of size ``m_b * k``, which keeps the SDP small for tuples made
of many small blocks.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import sdp
from .errors import Inconclusive, PreconditionError
from .numerics import herm, hermitian_defect
from .tuples import OperatorTuple

UCP_TOL = sdp.DEFAULT_TOL


# ---------------------------------------------------------------------------
# Choi-variable SDP builder


def _entry_units(k):
    """``E[a, b]`` is the matrix unit ``E_ba`` (so ``tr(E_ba X) = X[a, b]``)."""
    E = np.zeros((k, k, k, k))
    for a in range(k):
        for b in range(k):
            E[a, b, b, a] = 1.0
    return E


class ChoiProgram:
    """Constraints on a UCP map ``Phi: S(s) -> M_k`` in Choi variables.

    The identity ``tr(Y Phi_b(x)) = tr((x^T (x) Y) J_b)`` turns entries of
    ``Phi(x)`` into linear functionals of the block Choi matrices ``J_b``.
    """

    def __init__(self, s, k):
        if k < 1:
            raise PreconditionError("level must be at least 1")
        self.s = s
        self.k = int(k)
        self.sizes = s.block_sizes
        self.blocks = [m * self.k for m in self.sizes]
        self._rows = [[] for _ in self.sizes]
        self._rhs = []
        self._objective = [np.zeros((K, K), dtype=complex) for K in self.blocks]
        # group blocks by size for vectorised assembly
        self._groups = {}
        for idx, m in enumerate(self.sizes):
            self._groups.setdefault(m, []).append(idx)

    def _generator(self, i):
        """Per-block copies of generator ``i`` (``i = None`` is the unit)."""
        if i is None:
            return [np.eye(m) for m in self.sizes]
        return [b[i] for b in self.s.blocks]

    def fix(self, i, target, corner=None):
        """Add ``Phi(s_i) = target`` (``i = None`` for unitality).

        With ``corner = c`` only the top-left ``c x c`` entries are fixed and
        ``target`` is ``c x c``.
        """
        k = self.k
        c = k if corner is None else int(corner)
        target = np.asarray(target, dtype=complex)
        if target.shape != (c, c):
            raise PreconditionError(f"target must be {c}x{c}, got {target.shape}")
        padded = np.zeros((k, k), dtype=complex)
        padded[:c, :c] = target
        target = padded
        inside = np.zeros((k, k), dtype=bool)
        inside[:c, :c] = True
        inside = inside.reshape(-1)
        gens = self._generator(i)
        # a Hermitian generator has a Hermitian image, so the upper triangle
        # suffices unless the target itself is not Hermitian
        self_adj = all(hermitian_defect(g) <= 1e-12 for g in gens)
        if self_adj and hermitian_defect(target) <= 1e-12:
            sel_re = np.triu(np.ones((k, k), dtype=bool)).reshape(-1)
            sel_im = np.triu(np.ones((k, k), dtype=bool), 1).reshape(-1)
        else:
            sel_re = sel_im = np.ones(k * k, dtype=bool)
        sel_re = sel_re & inside
        sel_im = sel_im & inside
        E = _entry_units(k)
        for m, idx in self._groups.items():
            x = np.array([gens[b] for b in idx])
            M = np.einsum("gji,abcd->gabicjd", x, E).reshape(len(idx), k * k, m * k, m * k)
            rows = np.concatenate([herm(M[:, sel_re]), herm(-1j * M[:, sel_im])], axis=1)
            for pos, b in enumerate(idx):
                self._rows[b].append(rows[pos])
        flat = target.reshape(-1)
        self._rhs.append(np.concatenate([flat.real[sel_re], flat.imag[sel_im]]))

    def unital(self):
        self.fix(None, np.eye(self.k))

    def maximize(self, directions):
        """Objective ``Re sum_i tr(B_i^* Phi(s_i))``."""
        for i, B in enumerate(directions):
            Y = np.asarray(B, dtype=complex).conj().T
            for b, x in enumerate(self._generator(i)):
                self._objective[b] = self._objective[b] + herm(np.kron(x.T, Y))

    def problem(self):
        coeffs = [np.concatenate(r, axis=0) for r in self._rows]
        return sdp.SdpProblem(self.blocks, self._objective, coeffs, np.concatenate(self._rhs))

    def values(self, choi_blocks):
        """``(Phi(s_1), ..., Phi(s_d))`` for block Choi matrices."""
        k = self.k
        out = np.zeros((self.s.d, k, k), dtype=complex)
        for blk, J, m in zip(self.s.blocks, choi_blocks, self.sizes):
            out += np.einsum("gij,iajb->gab", blk, J.reshape(m, k, m, k))
        return out


def _targets(targets, d):
    if isinstance(targets, OperatorTuple):
        targets = targets.matrices
    mats = [np.asarray(t, dtype=complex) for t in targets]
    if len(mats) != d:
        raise PreconditionError(f"need {d} targets, got {len(mats)}")
    k = mats[0].shape[0]
    for t in mats:
        if t.shape != (k, k):
            raise PreconditionError("targets must be square matrices of one size")
    return mats, k


# ---------------------------------------------------------------------------
# UCP existence and membership


@dataclass
class UcpVerdict:
    """Outcome of a UCP-existence test.

    ``verdict`` is ``feasible``, ``infeasible`` (with a verified Farkas
    certificate in ``result``) or ``inconclusive``.  ``choi_blocks`` holds
    one Choi block per diagonal block of the source when feasible.
    """

    verdict: str
    result: sdp.SdpResult
    level: int
    block_sizes: list
    choi_blocks: list = None

    @property
    def feasible(self):
        return {"feasible": True, "infeasible": False}.get(self.verdict)

    def choi_map(self):
        """Dense Choi map on the full source algebra (block-diagonal extension)."""
        from .cpmaps import ChoiMap
        if self.choi_blocks is None:
            return None
        m, k = sum(self.block_sizes), self.level
        T = np.zeros((m, k, m, k), dtype=complex)
        pos = 0
        for J, mb in zip(self.choi_blocks, self.block_sizes):
            sl = slice(pos, pos + mb)
            T[sl, :, sl, :] = J.reshape(mb, k, mb, k)
            pos += mb
        return ChoiMap(m, k, T.reshape(m * k, m * k))

    def to_json(self):
        return {"verdict": self.verdict, "level": self.level, "sdp": self.result.summary()}


def ucp_exists(s, targets, tol=UCP_TOL):
    """Is there a UCP map on the operator system of ``s`` sending ``s_i`` to ``targets[i]``?

    Feasibility of ``{J_b >= 0, sum_b Phi_b(I) = I, Phi(s_i) = t_i}``.  The
    adjoint conditions ``Phi(s_i^*) = t_i^*`` follow because a PSD Choi
    matrix gives a Hermitian-preserving map.
    """
    mats, k = _targets(targets, s.d)
    prog = ChoiProgram(s, k)
    prog.unital()
    for i, t in enumerate(mats):
        prog.fix(i, t)
    res = sdp.feasibility(prog.problem(), tol=tol)
    if res.status == sdp.OPTIMAL:
        return UcpVerdict("feasible", res, k, s.block_sizes, res.primal)
    if res.status == sdp.INFEASIBLE:
        return UcpVerdict("infeasible", res, k, s.block_sizes)
    return UcpVerdict("inconclusive", res, k, s.block_sizes)


def membership(s, A, tol=UCP_TOL):
    """Whether the tuple ``A`` lies in the matrix range of ``s`` at its level."""
    return ucp_exists(s, A, tol)


# ---------------------------------------------------------------------------
# support functions


def support(s, n, B, tol=UCP_TOL, detail=False):
    """``max Re sum_i tr(B_i^* phi(s_i))`` over UCP ``phi: S(s) -> M_n``.

    Raises :class:`Inconclusive` when the SDP is not solved to ``tol``.
    With ``detail=True`` returns ``(value, SdpResult)``; the dual objective in
    the result is a certified upper bound.
    """
    mats = [np.asarray(b, dtype=complex) for b in B]
    if len(mats) != s.d or any(b.shape != (n, n) for b in mats):
        raise PreconditionError(f"direction must be {s.d} matrices of size {n}x{n}")
    if all(not np.any(b) for b in mats):
        return (0.0, None) if detail else 0.0
    prog = ChoiProgram(s, n)
    prog.unital()
    prog.maximize(mats)
    res = sdp.solve(prog.problem(), tol=tol)
    if res.status != sdp.OPTIMAL:
        raise Inconclusive(f"support SDP ended with status {res.status}: {res.message}")
    return (res.primal_objective, res) if detail else res.primal_objective


def _grouped_blocks(s):
    groups = {}
    for b in s.blocks:
        groups.setdefault(b.shape[1], []).append(b)
    return [np.array(g) for g in groups.values()]


def support_level1(s, directions, chunk=64):
    """Level-1 support values and maximising points.

    For ``c`` in ``C^d`` the support is ``lambda_max(Re sum_i conj(c_i) s_i)``
    (largest over the diagonal blocks); the point is the vector state at the
    top eigenvector.  Returns ``(values, points)`` with shapes ``(D,)`` and
    ``(D, d)``.
    """
    C = np.atleast_2d(np.asarray(directions, dtype=complex))
    if C.shape[1] != s.d:
        raise PreconditionError(f"directions must have {s.d} components")
    D = C.shape[0]
    best = np.full(D, -np.inf)
    points = np.zeros((D, s.d), dtype=complex)
    for G in _grouped_blocks(s):  # G: (nblocks, d, m, m)
        for start in range(0, D, chunk):
            c = C[start:start + chunk]
            H = herm(np.einsum("ei,gimn->egmn", c.conj(), G))
            w, V = np.linalg.eigh(H)
            top = w[..., -1]  # (e, g)
            arg = np.argmax(top, axis=1)
            e_idx = np.arange(c.shape[0])
            val = top[e_idx, arg]
            better = val > best[start:start + chunk]
            if not better.any():
                continue
            h = V[e_idx, arg, :, -1]  # (e, m)
            pts = np.einsum("em,eimn,en->ei", h.conj(), G[arg], h)
            sl = np.arange(start, start + c.shape[0])[better]
            best[sl] = val[better]
            points[sl] = pts[better]
    return best, points


def direction_fan(s_or_d, count, hermitian=False, seed=0):
    """Unit directions in ``C^d`` (or ``R^d`` when ``hermitian``).

    Planar cases use a uniform angle fan; higher dimensions use a scrambled
    Halton sequence pushed to the sphere through the normal quantile map.
    """
    d = s_or_d if isinstance(s_or_d, (int, np.integer)) else s_or_d.d
    real_dim = d if hermitian else 2 * d
    if count < 1:
        raise PreconditionError("need at least one direction")
    if real_dim == 1:
        X = np.array([[1.0], [-1.0]])
    elif real_dim == 2:
        t = 2 * np.pi * np.arange(count) / count
        X = np.column_stack([np.cos(t), np.sin(t)])
    else:
        from scipy.stats import norm
        u = qmc.Halton(real_dim, scramble=True, seed=seed).random(count)
        X = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
    if hermitian:
        return X.astype(complex)
    return X[:, :d] + 1j * X[:, d:]


@dataclass
class BoundaryPolygon:
    directions: np.ndarray
    values: np.ndarray
    points: np.ndarray
    seed: int
    hermitian: bool

    def to_csv(self):
        d = self.directions.shape[1]
        head = ["index"]
        head += [f"c{i + 1}_{p}" for i in range(d) for p in ("re", "im")]
        head += ["support", "error_bound"]
        head += [f"x{i + 1}_{p}" for i in range(d) for p in ("re", "im")]
        lines = [",".join(head)]
        for j in range(self.values.size):
            row = [str(j)]
            for z in self.directions[j]:
                row += [repr(float(z.real)), repr(float(z.imag))]
            row.append(repr(float(self.values[j])))
            # backward-stable eigensolver: error of order eps times the matrix scale
            row.append(repr(1e-12 * max(1.0, abs(float(self.values[j])))))
            for z in self.points[j]:
                row += [repr(float(z.real)), repr(float(z.imag))]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def numerical_range_boundary(s, directions=360, seed=0):
    """Support values of the level-1 range on a direction fan (eigenvalues only)."""
    if directions < 3:
        raise PreconditionError("need at least 3 directions")
    herm_src = s.is_hermitian()
    C = direction_fan(s, directions, hermitian=herm_src, seed=seed)
    vals, pts = support_level1(s, C)
    return BoundaryPolygon(C, vals, pts, seed, herm_src)


# ---------------------------------------------------------------------------
# equivalence


@dataclass
class EquivalenceReport:
    """Verdict of an order-equivalence test.

    ``scope`` is ``"level-1, up to fan resolution"`` for sampled support
    comparisons and ``"complete"`` for SDP-backed two-way UCP existence.
    """

    verdict: str
    scope: str
    deviation: float = float("nan")
    certificates: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    star_isomorphic: bool = None

    def to_json(self):
        out = {"verdict": self.verdict, "scope": self.scope, "parameters": self.parameters}
        if not np.isnan(self.deviation):
            out["deviation"] = {"value": float(self.deviation),
                                "error_bound": float(self.parameters.get("tol", 0.0))}
        if self.certificates:
            out["certificates"] = [c.to_json() for c in self.certificates]
        if self.star_isomorphic is not None:
            out["star_isomorphic"] = self.star_isomorphic
        return out


def _verdict(s_to_r, r_to_s):
    if s_to_r is None or r_to_s is None:
        return "inconclusive"
    return {(True, True): "equivalent", (True, False): "s-to-r-only",
            (False, True): "r-to-s-only", (False, False): "neither"}[(s_to_r, r_to_s)]


def one_order_equivalent(s, r, directions=360, tol=1e-9, seed=0):
    """Compare level-1 support functions of ``s`` and ``r`` on a direction fan.

    A level-1 map ``s -> r`` exists iff ``W_1(r)`` is inside ``W_1(s)``,
    i.e. ``h_r <= h_s``; each inclusion is tested up to ``tol`` on the fan.
    """
    if s.d != r.d:
        raise PreconditionError("tuples must have the same length")
    herm_both = s.is_hermitian() and r.is_hermitian()
    C = direction_fan(s.d, directions, hermitian=herm_both, seed=seed)
    hs, _ = support_level1(s, C)
    hr, _ = support_level1(r, C)
    diff = hr - hs
    verdict = _verdict(bool(np.max(diff) <= tol), bool(np.max(-diff) <= tol))
    return EquivalenceReport(
        verdict, "level-1, up to fan resolution", float(np.max(np.abs(diff))),
        parameters={"directions": int(C.shape[0]), "tol": tol, "seed": seed,
                    "fan": "real" if herm_both else "complex"},
    )


def completely_order_equivalent(s, r, tol=UCP_TOL):
    """Two-way UCP existence between the generator tuples.

    For unitary tuples, an equivalent verdict also means the generated
    C*-algebras are *-isomorphic via the generator map (a UCP map between
    unitaries that sends unitaries to unitaries is multiplicative on them).
    """
    if s.d != r.d:
        raise PreconditionError("tuples must have the same length")
    fwd = ucp_exists(s, r, tol)
    back = ucp_exists(r, s, tol)
    verdict = _verdict(fwd.feasible, back.feasible)
    unitary = s.commutation_residual() <= 1e-9 and r.commutation_residual() <= 1e-9
    star = (verdict == "equivalent") if unitary else None
    return EquivalenceReport(verdict, "complete", certificates=[fwd, back],
                             parameters={"tol": tol}, star_isomorphic=star)


def level_link_check(s, N, directions=100, seed=0, tol=UCP_TOL):
    """Max over level-1 directions ``c`` of ``|h_1(c) - h_N(c E_11)|``.

    The level-``N`` support against a corner direction sees only the
    ``(1,1)`` entry of the map, which ranges over exactly the states.
    """
    if N < 1:
        raise PreconditionError("N must be at least 1")
    if N == 1:
        return 0.0
    C = direction_fan(s, directions, hermitian=s.is_hermitian(), seed=seed)
    h1, _ = support_level1(s, C)
    worst = 0.0
    E11 = np.zeros((N, N))
    E11[0, 0] = 1.0
    for c, v in zip(C, h1):
        hN = support(s, N, [ci * E11 for ci in c], tol=tol)
        worst = max(worst, abs(hN - v))
    return worst
