"""Linear maps between matrix algebras, stored as Choi matrices.

Convention: ``J = sum_ij E_ij (x) Phi(E_ij)`` with the input slot first, so
``J[(i, a), (j, b)] = Phi(E_ij)[a, b]`` and

    Phi(X) = tr_in[(X^T (x) I) J].
"""

import json
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import PreconditionError, SchemaError

CP_TOL = 1e-9


@dataclass
class ChoiMap:
    in_dim: int
    out_dim: int
    choi: np.ndarray

    def __post_init__(self):
        self.choi = np.asarray(self.choi, dtype=complex)
        n = self.in_dim * self.out_dim
        if self.choi.shape != (n, n):
            raise PreconditionError(f"Choi matrix must be {n}x{n}, got {self.choi.shape}")

    @property
    def tensor(self):
        """``J`` as a 4-index array ``[i, a, j, b]``."""
        m, k = self.in_dim, self.out_dim
        return self.choi.reshape(m, k, m, k)

    def __call__(self, X):
        return apply(self, X)

    def to_json(self):
        return {"format": 1, "in_dim": self.in_dim, "out_dim": self.out_dim,
                "choi": [[[float(z.real), float(z.imag)] for z in row] for row in self.choi]}

    @classmethod
    def from_json(cls, doc):
        try:
            m, k = int(doc["in_dim"]), int(doc["out_dim"])
            arr = np.asarray(doc["choi"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError("expected in_dim, out_dim and choi", "choi") from exc
        if arr.ndim != 3 or arr.shape[-1] != 2:
            raise SchemaError(f"choi must be an array of [re, im] pairs, got shape {arr.shape}", "choi")
        return cls(m, k, arr[..., 0] + 1j * arr[..., 1])

    def dumps(self):
        return json.dumps(self.to_json())


def choi_of(images):
    """Choi map from the images of the matrix units.

    ``images`` is either an array of shape ``(m, m, k, k)`` with
    ``images[i, j] = Phi(E_ij)``, or a sequence of ``(E, Phi(E))`` pairs
    covering every matrix unit of ``M_m``.
    """
    if isinstance(images, np.ndarray) and images.ndim == 4:
        arr = images.astype(complex)
    else:
        pairs = list(images)
        m = int(round(np.sqrt(len(pairs))))
        if m * m != len(pairs):
            raise PreconditionError("need the image of every matrix unit")
        k = np.asarray(pairs[0][1]).shape[0]
        arr = np.zeros((m, m, k, k), dtype=complex)
        seen = np.zeros((m, m), dtype=bool)
        for E, img in pairs:
            E = np.asarray(E)
            if E.shape != (m, m):
                raise PreconditionError(f"basis matrix has shape {E.shape}, expected {(m, m)}")
            idx = np.argwhere(np.abs(E) > 0)
            if len(idx) != 1 or E[tuple(idx[0])] != 1:
                raise PreconditionError("basis matrices must be matrix units E_ij")
            i, j = idx[0]
            img = np.asarray(img, dtype=complex)
            if img.shape != (k, k):
                raise PreconditionError("inconsistent output dimensions")
            arr[i, j] = img
            seen[i, j] = True
        if not seen.all():
            raise PreconditionError("missing matrix units")
    m, _, k, _ = arr.shape
    return ChoiMap(m, k, arr.transpose(0, 2, 1, 3).reshape(m * k, m * k))


def from_function(fn, in_dim):
    """Choi map of a Python callable acting on ``in_dim x in_dim`` matrices."""
    imgs = []
    for i in range(in_dim):
        row = []
        for j in range(in_dim):
            E = np.zeros((in_dim, in_dim), dtype=complex)
            E[i, j] = 1
            row.append(np.asarray(fn(E), dtype=complex))
        imgs.append(row)
    return choi_of(np.array(imgs))


def apply(phi, X):
    """``Phi(X)`` by contraction against the Choi tensor."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (phi.in_dim, phi.in_dim):
        raise PreconditionError(f"input must be {phi.in_dim}x{phi.in_dim}, got {X.shape}")
    return np.einsum("ij,iajb->ab", X, phi.tensor)


def is_cp(phi, tol=CP_TOL):
    """Choi's criterion: returns ``(min_eigenvalue, verdict)``."""
    w = numerics.hermitian_eigen(phi.choi, tol=1e-9)[0]
    lam = float(w[0])
    return lam, lam >= -tol


def is_unital(phi, tol=1e-10):
    return bool(np.max(np.abs(apply(phi, np.eye(phi.in_dim)) - np.eye(phi.out_dim))) <= tol)


def compose(phi, psi):
    """Choi matrix of ``phi o psi`` (apply ``psi`` first)."""
    if psi.out_dim != phi.in_dim:
        raise PreconditionError("dimension mismatch in composition")
    # (phi o psi)(E_ij) = sum_ab psi(E_ij)[a,b] phi(E_ab)
    T = np.einsum("iajb,acbd->icjd", psi.tensor, phi.tensor)
    m, k = psi.in_dim, phi.out_dim
    return ChoiMap(m, k, T.reshape(m * k, m * k))


def identity_map(m):
    return from_function(lambda X: X, m)


def transpose_map(m):
    return from_function(lambda X: X.T, m)


def trace_map(m):
    return from_function(lambda X: np.trace(X) * np.eye(m), m)


def tomiyama_map(n, N, normalized=False):
    """Choi map of ``A -> n tr(A) I_N - A`` on ``M_N``.

    This map is n-positive but not completely positive when ``N > n``; its
    Choi matrix is ``n I - N |Omega><Omega|`` with spectrum ``{n - N, n}``.
    It sends ``I`` to ``(nN - 1) I``; ``normalized=True`` divides by
    ``nN - 1`` to make it unital.
    """
    if not (isinstance(n, (int, np.integer)) and isinstance(N, (int, np.integer))) or not N > n >= 1:
        raise PreconditionError(f"need integers N > n >= 1, got n={n}, N={N}")
    c = 1.0 / (n * N - 1) if normalized else 1.0
    return from_function(lambda A: c * (n * np.trace(A) * np.eye(N) - A), N)


def ampliate(phi, X, k):
    """``(id_k (x) Phi)(X)`` for ``X`` in ``M_k (x) M_m``."""
    m, out = phi.in_dim, phi.out_dim
    X = np.asarray(X, dtype=complex).reshape(k, m, k, m)
    Y = np.einsum("piqj,iajb->paqb", X, phi.tensor)
    return Y.reshape(k * out, k * out)


@dataclass
class ViolationWitness:
    """A PSD input at level ``k`` whose image under ``id_k (x) Phi`` has a
    negative eigenvalue.

    ``vector`` has squared norm ``k`` so that the maximally entangled vector
    ``sum_i e_i (x) e_i`` is a candidate; ``eigenvalue`` is the certified
    minimum eigenvalue of ``(id (x) Phi)(vector vector*)``.
    """

    level: int
    vector: np.ndarray
    eigenvalue: float
    restart: int
    seed: int


@dataclass
class ViolationSearch:
    witness: ViolationWitness = None
    best_value: float = float("inf")
    restarts: int = 0
    seed: int = 0
    note: str = ""


def positivity_violation_search(phi, level, restarts=20, seed=0, iters=200, tol=CP_TOL):
    """Alternating heuristic search for a failure of ``level``-positivity.

    Alternates between the input vector ``x`` (minimising
    ``xi* (id (x) Phi)(x x*) xi`` over unit ``x``: an eigenvector problem)
    and the output vector ``xi`` (bottom eigenvector of the image).  Each
    step can only lower the objective.  A returned witness is re-verified by
    an independent eigen-solve.  Finding nothing proves nothing.
    """
    if level < 1:
        raise PreconditionError("level must be at least 1")
    m, out = phi.in_dim, phi.out_dim
    J = phi.tensor
    rng = np.random.default_rng(seed)
    result = ViolationSearch(restarts=restarts, seed=seed,
                             note="no witness found; this is not a proof of positivity")
    for r in range(restarts):
        xi = rng.standard_normal(level * out) + 1j * rng.standard_normal(level * out)
        xi /= np.linalg.norm(xi)
        prev = np.inf
        for _ in range(iters):
            Xi = xi.reshape(level, out)
            # G[(q,j),(p,i)] conj so that x* G x = xi* (id (x) Phi)(x x*) xi
            T = np.einsum("pa,iajb,qb->piqj", Xi.conj(), J, Xi).reshape(level * m, level * m)
            G = numerics.herm(np.conj(T))
            w, V = np.linalg.eigh(G)
            x = V[:, 0]
            Y = ampliate(phi, np.outer(x, x.conj()), level)
            wy, VY = np.linalg.eigh(numerics.herm(Y))
            xi = VY[:, 0]
            if prev - wy[0] < 1e-14:
                break
            prev = wy[0]
        x = x * np.sqrt(level)
        lam = float(np.linalg.eigvalsh(numerics.herm(ampliate(phi, np.outer(x, x.conj()), level)))[0])
        if lam < result.best_value:
            result.best_value = lam
            if lam < -tol:
                result.witness = ViolationWitness(level, x, lam, r, seed)
                result.note = "certified witness"
    return result
