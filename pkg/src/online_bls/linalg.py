"""Dense linear-algebra kernel: Cholesky, triangular solves, rank-one updates.

Everything works on plain float64 numpy arrays. A "factor" is a square
lower-triangular array with a strictly positive diagonal; only its lower
triangle is ever read. The inner loops are compiled with numba and written
so that the factor is always traversed along rows (C order), which keeps
every O(m^2) sweep cache friendly.
"""
import numpy as np
from numba import njit

from .errors import (
    DimensionMismatch,
    NonFiniteInput,
    NotPositiveDefinite,
    Singular,
    SingularFactor,
)

SYMMETRY_RTOL = 1e-10
TINY_PIVOT = 1e-300


@njit(cache=True)
def _cholesky_kernel(M, L):
    m = M.shape[0]
    for i in range(m):
        for j in range(i + 1):
            s = M[i, j]
            for p in range(j):
                s -= L[i, p] * L[j, p]
            if i == j:
                # `not s > 0` also rejects NaN
                if not s > 0.0 or not np.isfinite(s):
                    return i
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return -1


@njit(cache=True)
def _forward_kernel(L, C):
    m, c = C.shape
    for i in range(m):
        for d in range(i):
            l = L[i, d]
            if l != 0.0:
                for j in range(c):
                    C[i, j] -= l * C[d, j]
        lii = L[i, i]
        for j in range(c):
            C[i, j] /= lii


@njit(cache=True)
def _backward_kernel(L, X):
    # column-sweep form of L^T x = c: row i of L holds column i of L^T
    m, c = X.shape
    for i in range(m - 1, -1, -1):
        lii = L[i, i]
        for j in range(c):
            X[i, j] /= lii
        for d in range(i):
            l = L[i, d]
            if l != 0.0:
                for j in range(c):
                    X[d, j] -= l * X[i, j]


@njit(cache=True)
def _rank_one_kernel(L, a):
    # Rotation i mixes column i of L with the working vector a. Row p only
    # needs the (c, s) pairs of rotations 0..p-1, so sweeping row by row
    # applies exactly the same sequence while reading L contiguously.
    m = a.shape[0]
    cs = np.empty(m)
    sn = np.empty(m)
    for p in range(m):
        ap = a[p]
        for i in range(p):
            lp = L[p, i]
            L[p, i] = cs[i] * lp + sn[i] * ap
            ap = cs[i] * ap - sn[i] * lp
        lpp = L[p, p]
        r = np.hypot(lpp, ap)
        if not r > 0.0:
            return p
        cs[p] = lpp / r
        sn[p] = ap / r
        L[p, p] = r
    return -1


def warmup():
    """Compile (or load from cache) every kernel so the first timed call is not skewed."""
    L = np.eye(2)
    M = np.eye(2)
    B = np.ones((2, 1))
    _cholesky_kernel(M, np.zeros((2, 2)))
    _forward_kernel(L, B)
    _backward_kernel(L, B)
    _rank_one_kernel(L, np.zeros(2))


def _as_matrix(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {x.shape}")
    return x


def _check_factor(L, rows):
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch(f"factor must be square, got shape {L.shape}")
    if L.shape[0] != rows:
        raise DimensionMismatch(
            f"factor has dim {L.shape[0]} but right-hand side has {rows} rows")
    diag = np.diagonal(L)
    if not np.all(np.abs(diag) >= TINY_PIVOT):
        i = int(np.argmin(np.abs(diag)))
        raise SingularFactor(f"diagonal entry {i} of the factor is {diag[i]!r}")


def cholesky(M):
    """Lower Cholesky factor ``L`` with ``L @ L.T == M``.

    The input is accepted when symmetric to within a relative tolerance of
    1e-10 and is symmetrized as ``(M + M.T) / 2`` before factorization.
    """
    M = _as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NotPositiveDefinite("M has non-finite entries")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotPositiveDefinite("M is not symmetric")
    S = np.ascontiguousarray(0.5 * (M + M.T))
    L = np.zeros_like(S)
    bad = _cholesky_kernel(S, L)
    if bad >= 0:
        raise NotPositiveDefinite(f"non-positive pivot at index {bad}")
    return L


def forward_substitute(L, B):
    """Solve ``L @ C = B`` for lower-triangular ``L``.

    ``B`` may be a vector or an ``m x c`` matrix; the result has the same shape.
    """
    L = np.ascontiguousarray(L, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    vec = B.ndim == 1
    C = np.array(B.reshape(-1, 1) if vec else B, dtype=np.float64, order="C")
    if C.ndim != 2:
        raise DimensionMismatch(f"B must be 1-D or 2-D, got shape {B.shape}")
    _check_factor(L, C.shape[0])
    _forward_kernel(L, C)
    return C[:, 0] if vec else C


def backward_substitute(L, C):
    """Solve ``L.T @ X = C`` using the lower-triangular factor ``L``."""
    L = np.ascontiguousarray(L, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    vec = C.ndim == 1
    X = np.array(C.reshape(-1, 1) if vec else C, dtype=np.float64, order="C")
    if X.ndim != 2:
        raise DimensionMismatch(f"C must be 1-D or 2-D, got shape {C.shape}")
    _check_factor(L, X.shape[0])
    _backward_kernel(L, X)
    return X[:, 0] if vec else X


def cho_solve(L, B):
    """Solve ``(L @ L.T) X = B`` by a forward then a backward sweep."""
    return backward_substitute(L, forward_substitute(L, B))


def rank_one_update(L, a, overwrite=False):
    """Return ``Lbar`` with ``Lbar @ Lbar.T == L @ L.T + outer(a, a)``.

    Applies one plane rotation per coordinate (cosine ``l_ii / r``, sine
    ``a_i / r`` with ``r = hypot(l_ii, a_i)``) as a scalar recurrence, never
    forming rotation matrices, so the cost is O(m^2). Since ``r >= 0`` the new
    diagonal is positive whenever the old one was; a non-positive result is
    reported as :class:`NotPositiveDefinite`. With ``overwrite=True`` the
    factor is modified in place (it must then be a C-contiguous float64
    array) and returned.
    """
    a = np.array(a, dtype=np.float64).ravel()
    if overwrite:
        if not (isinstance(L, np.ndarray) and L.dtype == np.float64
                and L.flags.c_contiguous and L.flags.writeable):
            raise ValueError("in-place update needs a writeable C-contiguous float64 array")
        out = L
    else:
        out = np.array(L, dtype=np.float64, order="C")
    if out.ndim != 2 or out.shape[0] != out.shape[1] or out.shape[0] != a.shape[0]:
        raise DimensionMismatch(
            f"factor shape {out.shape} incompatible with vector length {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("update vector has non-finite entries")
    bad = _rank_one_kernel(out, a)
    if bad >= 0:
        raise NotPositiveDefinite(f"updated factor has non-positive diagonal at {bad}")
    return out


def invert(M):
    """Explicit inverse by Gauss-Jordan elimination with partial pivoting.

    Only the inverse-based baselines use this.
    """
    M = _as_matrix(M, "M")
    n = M.shape[0]
    if n != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got shape {M.shape}")
    aug = np.hstack([M, np.eye(n)])
    for j in range(n):
        p = j + int(np.argmax(np.abs(aug[j:, j])))
        if not abs(aug[p, j]) >= TINY_PIVOT:
            raise Singular(f"pivot {j} has magnitude {abs(aug[p, j])!r}")
        if p != j:
            aug[[j, p]] = aug[[p, j]]
        aug[j] /= aug[j, j]
        col = aug[:, j].copy()
        col[j] = 0.0
        aug -= np.outer(col, aug[j])
    return aug[:, n:].copy()
