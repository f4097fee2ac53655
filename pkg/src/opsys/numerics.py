"""Dense complex linear algebra used throughout the package.

Everything here is a pure function on numpy arrays.  Complex scalars are
``complex128``; nothing uses extended precision.
"""

import os

import numpy as np
from scipy import linalg as sla
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NumericalFailure, PreconditionError, SizeError

#: Largest dense matrix dimension any constructor will build.
MAX_DIM = int(os.environ.get("OPSYS_DIM_CAP", "2048"))

#: Relative singular-value cutoff used for nullspace and rank decisions.
NULLSPACE_RTOL = 1e-8

HERMITIAN_TOL = 1e-10


def check_dim(dim, what="matrix"):
    if dim > MAX_DIM:
        raise SizeError(f"{what} dimension {dim} exceeds cap {MAX_DIM}")
    return dim


def as_matrix(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {M.shape}")
    return M


def hermitian_defect(M):
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(M - M.conj().T)))


def herm(M):
    """Hermitian part ``(M + M*)/2``."""
    return 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))


def hermitian_eigen(M, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, Q)`` with ``w`` ascending and ``Q`` unitary such that
    ``M @ Q == Q @ diag(w)``.  Raises :class:`PreconditionError` if ``M`` is
    not Hermitian within ``tol`` and :class:`NumericalFailure` if the
    reconstruction residual exceeds ``1e-10 * dim`` (relative to ``||M||``).
    """
    M = as_matrix(M)
    if hermitian_defect(M) > tol:
        raise PreconditionError(
            f"matrix is not Hermitian (defect {hermitian_defect(M):.2e} > {tol:.0e})"
        )
    M = herm(M)
    try:
        w, Q = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(str(exc)) from exc
    dim = M.shape[0]
    scale = max(1.0, float(np.max(np.abs(w))) if dim else 1.0)
    resid = np.max(np.abs(M @ Q - Q * w)) if dim else 0.0
    if resid > 1e-10 * max(dim, 1) * scale:
        raise NumericalFailure(f"eigen residual {resid:.2e} too large")
    return w, Q


def operator_norm(M):
    """Largest singular value of ``M``."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    if hermitian_defect(M) <= 1e-14 * max(1.0, np.max(np.abs(M))):
        w = np.linalg.eigvalsh(herm(M))
        return float(max(abs(w[0]), abs(w[-1])))
    return float(np.linalg.norm(M, 2))


def kron(A, B):
    """Kronecker product with ``kron(A,B)[(i,j),(k,l)] = A[i,k] * B[j,l]``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    check_dim(A.shape[0] * B.shape[0], "kron product")
    return np.kron(A, B)


def is_unitary(M, tol=1e-10):
    M = np.asarray(M)
    return bool(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0]))) <= tol)


def random_unitary(dim, rng):
    """Haar-random unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def _sylvester_stack(mats):
    """Stacked operators ``X -> tX - Xt`` (and for ``t*``) acting on vec(X)."""
    m = mats[0].shape[0]
    eye = np.eye(m)
    rows = []
    for t in mats:
        for a in (t, t.conj().T):
            # column-major vec: vec(aX - Xa) = (I (x) a - a^T (x) I) vec(X)
            rows.append(np.kron(eye, a) - np.kron(a.T, eye))
    return np.vstack(rows)


def commutant_basis(mats, rtol=NULLSPACE_RTOL):
    """Orthonormal basis (list of m x m matrices) of the commutant of ``mats``.

    The commutant is taken for the *-algebra, i.e. ``X`` must commute with
    every matrix and its adjoint.  Singular values below ``rtol * s_max``
    count as zero.
    """
    mats = [as_matrix(t) for t in mats]
    m = mats[0].shape[0]
    check_dim(m * m, "commutant system")
    S = _sylvester_stack(mats)
    _, s, Vh = np.linalg.svd(S, full_matrices=True)
    smax = s[0] if s.size and s[0] > 0 else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    null = Vh[rank:].conj()
    return [v.reshape(m, m, order="F") for v in null]


def commutant_dimension(mats, rtol=NULLSPACE_RTOL):
    """Dimension of the commutant of the *-algebra generated by ``mats``.

    ``mats`` is a sequence of equal-size square matrices (an operator tuple's
    entries).  Always at least 1 since the identity commutes with everything.
    """
    mats = [as_matrix(t) for t in mats]
    if len({t.shape for t in mats}) != 1:
        raise PreconditionError("all matrices must share one dimension")
    m = mats[0].shape[0]
    check_dim(m * m, "commutant system")
    s = np.linalg.svd(_sylvester_stack(mats), compute_uv=False)
    smax = s[0] if s.size else 0.0
    if smax == 0:
        return m * m
    return int(m * m - np.sum(s > rtol * smax))


def block_components(mats, atol=0.0):
    """Connected components of the joint sparsity pattern of ``mats``.

    Returns a list of index arrays.  Any tuple is unitarily (in fact
    permutation-) equivalent to the direct sum of its restrictions to
    these components.
    """
    mats = [np.asarray(t) for t in mats]
    m = mats[0].shape[0]
    pattern = np.zeros((m, m), dtype=bool)
    for t in mats:
        pattern |= np.abs(t) > atol
    pattern |= pattern.T
    ncomp, labels = connected_components(coo_matrix(pattern), directed=False)
    return [np.flatnonzero(labels == c) for c in range(ncomp)]


def monomial_form(M, tol=1e-12):
    """Return ``(perm, phase)`` with ``M[perm[b], b] = phase[b]`` if ``M`` is a
    unitary monomial matrix, else ``None``."""
    M = np.asarray(M)
    nz = np.abs(M) > tol
    if not np.all(nz.sum(axis=0) == 1) or not np.all(nz.sum(axis=1) == 1):
        return None
    perm = np.argmax(nz, axis=0)
    phase = M[perm, np.arange(M.shape[0])]
    if np.max(np.abs(np.abs(phase) - 1)) > 1e-10:
        return None
    return perm, phase


def _monomial_commutant(forms, m):
    """Commutant of unitary monomial generators via orbits on index pairs.

    ``X`` commutes with ``M`` (monomial, ``M e_b = phase[b] e_perm[b]``) iff
    ``X[perm a, perm b] = phase[a] conj(phase[b]) X[a, b]``.  Each orbit of
    index pairs carries a one-dimensional solution when the phases around
    the orbit are consistent and none otherwise.

    Returns ``(labels, psi, valid)``: orbit label per pair (row-major), the
    propagated phase per pair, and a validity flag per orbit.
    """
    idx = np.arange(m * m)
    a, b = np.divmod(idx, m)
    src, dst, wts = [], [], []
    for perm, phase in forms:
        src.append(idx)
        dst.append(perm[a] * m + perm[b])
        wts.append(phase[a] * np.conj(phase[b]))
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    wts = np.concatenate(wts)
    graph = coo_matrix((np.ones(src.size), (src, dst)), shape=(m * m, m * m))
    ncomp, labels = connected_components(graph, directed=False)

    # propagate phases outward from one root per orbit
    psi = np.zeros(m * m, dtype=complex)
    known = np.zeros(m * m, dtype=bool)
    _, roots = np.unique(labels, return_index=True)
    psi[roots] = 1.0
    known[roots] = True
    e_src = np.concatenate([src, dst])
    e_dst = np.concatenate([dst, src])
    e_w = np.concatenate([wts, np.conj(wts)])
    while not known.all():
        step = known[e_src] & ~known[e_dst]
        if not step.any():  # pragma: no cover - graph is connected per orbit
            break
        tgt = e_dst[step]
        psi[tgt] = psi[e_src[step]] * e_w[step]
        known[tgt] = True
    bad = np.abs(psi[dst] - psi[src] * wts) > 1e-9
    valid = np.ones(ncomp, dtype=bool)
    valid[labels[src[bad]]] = False
    return labels, psi, valid


def _random_commutant_element(mats, rng):
    """A random Hermitian element of the commutant of ``mats``."""
    m = mats[0].shape[0]
    forms = [monomial_form(t) for t in mats]
    if all(f is not None for f in forms):
        labels, psi, valid = _monomial_commutant(forms, m)
        ncomp = valid.size
        z = (rng.standard_normal(ncomp) + 1j * rng.standard_normal(ncomp)) * valid
        X = (psi * z[labels]).reshape(m, m)
    else:
        basis = commutant_basis(mats)
        z = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        X = sum(c * B for c, B in zip(z, basis))
    return herm(X)


def irreducible_decomposition(mats, seed=0, gap=1e-7):
    """Split the *-algebra generated by ``mats`` into irreducible subspaces.

    Returns a list of matrices with orthonormal columns, one per irreducible
    invariant subspace.  The tuple is first split along its sparsity blocks;
    within a block, the eigenspaces of a random Hermitian commutant element
    are irreducible with probability one.  Unitary monomial tuples (clock,
    shift, and their tensor products) use an orbit method that scales to a
    few hundred dimensions; other tuples use the nullspace commutant.
    """
    mats = [as_matrix(t) for t in mats]
    m = mats[0].shape[0]
    rng = np.random.default_rng(seed)
    pieces = []
    for comp in block_components(mats):
        sub = [t[np.ix_(comp, comp)] for t in mats]
        H = _random_commutant_element(sub, rng)
        w, Q = np.linalg.eigh(H)
        scale = max(1.0, float(np.max(np.abs(w))))
        splits = np.flatnonzero(np.diff(w) > gap * scale) + 1
        for group in np.split(np.arange(w.size), splits):
            basis = np.zeros((m, group.size), dtype=complex)
            basis[comp] = Q[:, group]
            pieces.append(basis)
    return pieces


def orthonormal_columns(M):
    """Closest matrix with orthonormal columns (polar factor)."""
    U, _, Vh = sla.svd(M, full_matrices=False)
    return U @ Vh
