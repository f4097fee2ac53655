"""Concrete q-commuting and Lambda-commuting unitary tuples.

An :class:`OperatorTuple` is stored as a direct sum of blocks, each block a
``(d, m_b, m_b)`` array.  Most tuples here are naturally direct sums (phase
samples of the universal pair, diagonal disk tuples), and keeping the blocks
lets downstream solvers work block by block without ever forming a large
dense matrix.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import linalg as sla

from . import numerics
from .errors import (
    ClassificationError,
    InconsistentCommutationError,
    PreconditionError,
    SizeError,
)

COMMUTATION_TOL = 1e-10


def root_of_unity(num, den):
    """``exp(2 pi i num/den)``, exact at multiples of a quarter turn."""
    r = Fraction(num, den) % 1
    quarter = r * 4
    if quarter.denominator == 1:
        return (1, 1j, -1, -1j)[int(quarter)]
    x = 2 * math.pi * float(r)
    return complex(math.cos(x), math.sin(x))


@dataclass(frozen=True)
class RationalAngle:
    """The angle ``theta = k/n`` in lowest terms with ``0 <= k < n``."""

    k: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"denominator must be positive, got {self.n}")
        if not 0 <= self.k < self.n:
            raise PreconditionError(f"need 0 <= k < n, got {self.k}/{self.n}")
        if math.gcd(self.k, self.n) != 1:
            raise PreconditionError(f"{self.k}/{self.n} is not in lowest terms")

    @classmethod
    def of(cls, k, n):
        """Reduce ``k/n`` modulo 1 into canonical form."""
        f = Fraction(k, n) % 1
        return cls(f.numerator, f.denominator)

    @classmethod
    def parse(cls, text):
        """Parse ``"k/n"`` (or ``"0"``).  Floats are rejected on purpose."""
        text = str(text).strip()
        if "/" in text:
            a, b = text.split("/", 1)
        else:
            a, b = text, "1"
        try:
            k, n = int(a), int(b)
        except ValueError as exc:
            raise PreconditionError(f"angle must be written 'k/n' with integers, got {text!r}") from exc
        if n <= 0:
            raise PreconditionError(f"angle denominator must be positive, got {text!r}")
        return cls.of(k, n)

    @property
    def q(self):
        return root_of_unity(self.k, self.n)

    def power(self, j):
        """``q**j`` evaluated from the exact angle ``j*k/n``."""
        return root_of_unity(j * self.k, self.n)

    @property
    def fraction(self):
        return Fraction(self.k, self.n)

    def conj(self):
        return RationalAngle.of(-self.k, self.n)

    def __sub__(self, other):
        return RationalAngle.of(self.fraction - other.fraction, 1) if isinstance(other, RationalAngle) else NotImplemented

    def __float__(self):
        return self.k / self.n

    def __str__(self):
        return f"{self.k}/{self.n}"


class LambdaMatrix:
    """Self-adjoint matrix of rational unimodular commutation phases.

    ``angles[i][j]`` is the :class:`RationalAngle` of ``lambda_ij``; the
    constructor checks ``lambda_ji = conj(lambda_ij)`` and ``lambda_ii = 1``.
    """

    def __init__(self, angles):
        d = len(angles)
        self.angles = [[a if isinstance(a, RationalAngle) else RationalAngle.parse(a) for a in row]
                       for row in angles]
        if any(len(row) != d for row in self.angles):
            raise PreconditionError("Lambda must be square")
        for i in range(d):
            if self.angles[i][i].k != 0:
                raise PreconditionError(f"lambda_{i}{i} must be 1")
            for j in range(i + 1, d):
                if self.angles[j][i] != self.angles[i][j].conj():
                    raise PreconditionError(f"lambda_{j}{i} must equal conj(lambda_{i}{j})")
        self.d = d

    @classmethod
    def from_upper(cls, d, upper):
        """Build from a dict ``{(i, j): angle}`` for ``i < j``; missing pairs commute."""
        one = RationalAngle(0, 1)
        angles = [[one] * d for _ in range(d)]
        for (i, j), a in upper.items():
            a = a if isinstance(a, RationalAngle) else RationalAngle.parse(a)
            angles[i][j] = a
            angles[j][i] = a.conj()
        return cls(angles)

    @property
    def values(self):
        return np.array([[a.q for a in row] for row in self.angles])

    @property
    def lcm(self):
        """``N = lcm`` of all denominators."""
        out = 1
        for row in self.angles:
            for a in row:
                out = out * a.n // math.gcd(out, a.n)
        return out

    def conj(self):
        return LambdaMatrix([[a.conj() for a in row] for row in self.angles])

    def __eq__(self, other):
        return isinstance(other, LambdaMatrix) and self.angles == other.angles

    def to_json(self):
        return [[str(a) for a in row] for row in self.angles]


class OperatorTuple:
    """A d-tuple of m x m matrices, stored as a direct sum of blocks.

    Parameters
    ----------
    blocks : list of arrays of shape ``(d, m_b, m_b)``
    commutation : RationalAngle, LambdaMatrix or None
        Claimed commutation data.  When present the tuple is checked to be
        unitary and to satisfy the relations within ``1e-10``.
    """

    def __init__(self, blocks, commutation=None, check=True):
        blocks = [np.asarray(b, dtype=complex) for b in blocks]
        if not blocks:
            raise PreconditionError("tuple needs at least one block")
        d = blocks[0].shape[0]
        for b in blocks:
            if b.ndim != 3 or b.shape[0] != d or b.shape[1] != b.shape[2]:
                raise PreconditionError(f"block of shape {b.shape} does not fit a {d}-tuple")
        self.blocks = blocks
        self.commutation = commutation
        if check and commutation is not None:
            self.check_commutation()

    @classmethod
    def from_matrices(cls, mats, commutation=None, check=True):
        mats = np.asarray([numerics.as_matrix(t) for t in mats])
        return cls([mats], commutation, check)

    @property
    def d(self):
        return self.blocks[0].shape[0]

    @property
    def m(self):
        return sum(b.shape[1] for b in self.blocks)

    @property
    def block_sizes(self):
        return [b.shape[1] for b in self.blocks]

    @property
    def matrices(self):
        """Dense block-diagonal entries (subject to the dimension cap)."""
        if len(self.blocks) == 1:
            return list(self.blocks[0])
        numerics.check_dim(self.m, "dense tuple")
        return [sla.block_diag(*[b[i] for b in self.blocks]) for i in range(self.d)]

    def __len__(self):
        return self.d

    def __getitem__(self, i):
        return self.matrices[i]

    def lambda_values(self):
        if isinstance(self.commutation, RationalAngle):
            q = self.commutation.q
            return np.array([[1, q], [np.conj(q), 1]])
        if isinstance(self.commutation, LambdaMatrix):
            return self.commutation.values
        return None

    def commutation_residual(self):
        """Max of ``||t_i t_j - lambda_ij t_j t_i||`` and unitarity defects."""
        lam = self.lambda_values()
        worst = 0.0
        for b in self.blocks:
            eye = np.eye(b.shape[1])
            for i in range(self.d):
                worst = max(worst, float(np.max(np.abs(b[i].conj().T @ b[i] - eye))))
                if lam is None:
                    continue
                for j in range(i + 1, self.d):
                    r = b[i] @ b[j] - lam[i, j] * (b[j] @ b[i])
                    worst = max(worst, float(np.max(np.abs(r), initial=0.0)))
        return worst

    def check_commutation(self, tol=COMMUTATION_TOL):
        lam = self.lambda_values()
        if lam is not None and lam.shape != (self.d, self.d):
            raise PreconditionError(f"commutation data is {lam.shape[0]}x{lam.shape[0]} for a {self.d}-tuple")
        r = self.commutation_residual()
        if r > tol:
            raise InconsistentCommutationError(f"commutation/unitarity residual {r:.2e} exceeds {tol:.0e}")

    def is_hermitian(self, tol=1e-12):
        return all(numerics.hermitian_defect(b[i]) <= tol for b in self.blocks for i in range(self.d))

    def conjugate(self, W):
        """``W* t W`` for each entry (densifies)."""
        W = numerics.as_matrix(W)
        mats = [W.conj().T @ t @ W for t in self.matrices]
        return OperatorTuple.from_matrices(mats, self.commutation, check=False)

    def scaled(self, factor):
        return OperatorTuple([factor * b for b in self.blocks], None, check=False)

    def split(self):
        """Refine blocks along the joint sparsity pattern."""
        out = []
        for b in self.blocks:
            for comp in numerics.block_components(list(b)):
                out.append(b[:, comp][:, :, comp])
        return OperatorTuple(out, self.commutation, check=False)

    def __repr__(self):
        return f"OperatorTuple(d={self.d}, m={self.m}, blocks={len(self.blocks)}, commutation={self.commutation})"


def direct_sum(tuples, commutation=None):
    blocks = [b for t in tuples for b in t.blocks]
    return OperatorTuple(blocks, commutation, check=False)


# ---------------------------------------------------------------------------
# constructors


def clock(angle):
    return np.diag([angle.power(j) for j in range(angle.n)]).astype(complex)


def shift(n):
    """Cyclic forward shift: ``V e_j = e_{j+1}`` with wrap-around."""
    V = np.zeros((n, n), dtype=complex)
    V[(np.arange(n) + 1) % n, np.arange(n)] = 1
    return V


def standard_pair(angle):
    """Clock ``U = diag(1, q, ..., q^{n-1})`` and cyclic shift ``V``; ``UV = qVU``."""
    return OperatorTuple([np.array([clock(angle), shift(angle.n)])], angle)


def _unimodular(z, name):
    z = complex(z)
    if abs(abs(z) - 1) > 1e-12:
        raise PreconditionError(f"{name} must be unimodular, |{name}| = {abs(z)}")
    return z


def phase_scaled_pair(angle, alpha, beta):
    """``(alpha U, beta V)`` for the standard pair of ``angle``."""
    alpha = _unimodular(alpha, "alpha")
    beta = _unimodular(beta, "beta")
    return OperatorTuple([np.array([alpha * clock(angle), beta * shift(angle.n)])], angle)


def lambda_tuple(lam, cap=None):
    """A Lambda-commuting d-tuple built from pairwise clock/shift factors.

    One tensor factor ``C^{n_p}`` per unordered pair ``p = {i < j}`` with
    ``n_p`` the denominator of ``lambda_ij``.  On factor ``{i, j}``,
    ``u_i`` acts as the clock of ``lambda_ij`` and ``u_j`` as the shift;
    every other generator acts trivially there.  Pairs with
    ``lambda_ij = 1`` contribute a one-dimensional factor.
    """
    cap = numerics.MAX_DIM if cap is None else cap
    d = lam.d
    pairs = list(combinations(range(d), 2))
    dims = [lam.angles[i][j].n for i, j in pairs]
    dim = math.prod(dims)
    if dim > cap:
        raise SizeError(f"Lambda tuple dimension {dim} exceeds cap {cap}")
    mats = []
    for g in range(d):
        M = np.ones((1, 1), dtype=complex)
        for (i, j), n in zip(pairs, dims):
            if g == i:
                f = clock(lam.angles[i][j])
            elif g == j:
                f = shift(n)
            else:
                f = np.eye(n)
            M = np.kron(M, f)
        mats.append(M)
    return OperatorTuple([np.array(mats)], lam)


def fundamental_phases(angle, grid):
    """Grid of phases ``exp(2 pi i j / (n grid))``, ``j < grid``, covering ``[0, 2pi/n)``."""
    return np.array([root_of_unity(j, angle.n * grid) for j in range(grid)])


def universal_sample(angle, grid, cap=None):
    """Direct sum of ``(alpha U, beta V)`` over a ``grid x grid`` phase grid.

    Conjugating by ``V`` (resp. ``U``) multiplies ``alpha`` (resp. ``beta``)
    by ``q``, so phases are drawn from the fundamental domain
    ``[0, 2 pi/n)^2``.  The result has ``m = n * grid**2``.
    """
    if grid < 1:
        raise PreconditionError("grid must be at least 1")
    cap = numerics.MAX_DIM if cap is None else cap
    if angle.n * grid * grid > cap:
        raise SizeError(f"universal sample dimension {angle.n * grid * grid} exceeds cap {cap}")
    U, V = clock(angle), shift(angle.n)
    phases = fundamental_phases(angle, grid)
    blocks = [np.array([a * U, b * V]) for a in phases for b in phases]
    return OperatorTuple(blocks, angle)


def transpose_tuple(T):
    """Entrywise transpose; q-commuting input becomes conj(q)-commuting."""
    comm = T.commutation.conj() if T.commutation is not None else None
    return OperatorTuple([np.swapaxes(b, -1, -2).copy() for b in T.blocks], comm)


def disk_tuple(points=10_000):
    """Commuting diagonal self-adjoint pair sampling the closed unit disk.

    The samples lie on concentric rings of radius ``j/R`` (``j = 0..R``),
    ring ``j`` carrying points in proportion to its circumference, with the
    total count equal to ``points``.  Returns ``(tuple, resolution)`` where
    ``resolution`` bounds the distance from any point of the disk to the
    sample set.
    """
    if points < 4:
        raise PreconditionError("need at least 4 points")
    R = max(1, int(math.sqrt((points - 1) / math.pi)))
    weights = np.arange(1, R + 1, dtype=float)
    raw = (points - 1) * weights / weights.sum()
    counts = np.floor(raw).astype(int)
    counts[np.argsort(raw - counts)[::-1][: points - 1 - counts.sum()]] += 1
    xs, ys = [0.0], [0.0]
    arc = 0.0
    for j, c in enumerate(counts, start=1):
        r = j / R
        t = 2 * np.pi * np.arange(c) / c
        xs.extend(r * np.cos(t))
        ys.extend(r * np.sin(t))
        arc = max(arc, 2 * np.pi * r / c)
    vals = np.array([xs, ys], dtype=complex)
    blocks = [vals[:, k].reshape(2, 1, 1) for k in range(vals.shape[1])]
    resolution = max(1.0 / R, arc)
    return OperatorTuple(blocks, None, check=False), resolution


# ---------------------------------------------------------------------------
# classification


@dataclass
class PairClassification:
    """Canonical form ``W* u W = lam U``, ``W* v W = eta V`` of an irreducible pair."""

    xi: complex
    zeta: complex
    unitary: np.ndarray
    lam: complex
    eta: complex

    def __iter__(self):
        return iter((self.xi, self.zeta, self.unitary))


def classify_irreducible_pair(T, angle=None):
    """Recover ``xi = u^n``, ``zeta = v^n`` and a basis in standard form.

    Follows the eigenvector construction: take the eigenvector ``h`` of
    ``u`` whose eigenvalue ``lam`` has principal argument in
    ``[0, 2 pi/n)``, pick ``eta0`` with ``eta0**n = 1/zeta`` (principal root)
    and use the basis ``eta0**(i-1) v**(i-1) h``.  In that basis
    ``u = lam U`` and ``v = conj(eta0) V``.
    """
    angle = angle if angle is not None else T.commutation
    if not isinstance(angle, RationalAngle):
        raise PreconditionError("classification needs a rational commutation angle")
    u, v = T.matrices
    n = angle.n
    if u.shape[0] != n:
        raise PreconditionError(f"irreducible q_{{{n},{angle.k}}}-pairs have dimension {n}, got {u.shape[0]}")
    eye = np.eye(n)
    if max(np.max(np.abs(u.conj().T @ u - eye)), np.max(np.abs(v.conj().T @ v - eye))) > 1e-10:
        raise PreconditionError("entries must be unitary within 1e-10")
    if np.max(np.abs(u @ v - angle.q * v @ u)) > 1e-10:
        raise PreconditionError("entries are not q-commuting within 1e-10")
    if numerics.commutant_dimension([u, v]) != 1:
        raise ClassificationError("pair is reducible (nontrivial commutant)")

    un = np.linalg.matrix_power(u, n)
    vn = np.linalg.matrix_power(v, n)
    xi = complex(np.mean(np.diag(un)))
    zeta = complex(np.mean(np.diag(vn)))
    if np.max(np.abs(un - xi * eye)) > 1e-9 or np.max(np.abs(vn - zeta * eye)) > 1e-9:
        raise InconsistentCommutationError("u^n or v^n is not scalar")

    w, vecs = np.linalg.eig(u)
    args = np.mod(np.angle(w), 2 * np.pi)
    pick = int(np.argmin(args))
    lam = w[pick] / abs(w[pick])
    h = vecs[:, pick] / np.linalg.norm(vecs[:, pick])
    eta0 = np.exp(-1j * np.angle(zeta) / n)
    cols = [h]
    for _ in range(1, n):
        cols.append(eta0 * (v @ cols[-1]))
    W = numerics.orthonormal_columns(np.column_stack(cols))
    return PairClassification(xi, zeta, W, complex(lam), complex(np.conj(eta0)))
