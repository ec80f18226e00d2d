"""Inverse-based incremental BLS baselines fed one sample at a time.

* :class:`IBLS` - Greville recursion on the pseudoinverse of the stacked
  feature matrix; memory and per-step cost grow with the number of samples.
* :class:`RIBLS` - accumulates ``U = sum a a^T`` and ``V = sum a y^T`` and
  re-solves ``W = (U + lam I)^-1 V`` with an explicit inverse.
* :class:`BLSCIL` - class-correlation regularized recursion.

RI-BLS and BLS-CIL route through :func:`~online_bls.linalg.invert` on purpose.
"""
import numpy as np

from .errors import DimensionMismatch
from .linalg import invert
from .online import check_features, check_lambda, check_one_hot


class _Baseline:
    kind = None

    def __init__(self, m, c):
        if int(m) < 1 or int(c) < 1:
            raise DimensionMismatch("m and c must be positive")
        self.m = int(m)
        self.c = int(c)
        self.W = np.zeros((self.m, self.c))
        self.k = 0

    def predict(self, a):
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (self.m,):
            raise DimensionMismatch(f"expected broad feature of length {self.m}, got shape {a.shape}")
        return a @ self.W


class IBLS(_Baseline):
    """Pseudoinverse recursion.

    ``A`` holds the seen features as rows (k x m), ``pinv`` its pseudoinverse
    (m x k). Both live in buffers that grow by doubling.
    """

    kind = "ibls"

    def __init__(self, m, c, lam=1e-8, q_tol=1e-10):
        super().__init__(m, c)
        self.lam = check_lambda(lam)
        self.q_tol = float(q_tol)
        self._A = np.zeros((16, self.m))
        self._pinv = np.zeros((self.m, 16))
        self._Y = np.zeros((16, self.c))
        self.branch_counts = {"Q": 0, "D": 0}

    @property
    def A(self):
        return self._A[: self.k]

    @property
    def pinv(self):
        return self._pinv[:, : self.k]

    @property
    def Y(self):
        return self._Y[: self.k]

    def _grow(self):
        cap = self._A.shape[0]
        if self.k < cap:
            return
        new = 2 * cap
        A = np.zeros((new, self.m))
        A[:cap] = self._A
        P = np.zeros((self.m, new))
        P[:, :cap] = self._pinv
        Y = np.zeros((new, self.c))
        Y[:cap] = self._Y
        self._A, self._pinv, self._Y = A, P, Y

    def update(self, a, y):
        a = check_features(a, self.m)
        y = check_one_hot(y, self.c)
        k = self.k
        if k == 0:
            # (a a^T + lam I)^-1 a has the closed form a / (a^T a + lam); an
            # explicit inverse of that rank-one-plus-ridge matrix would carry
            # an error of order |a|^2 / lam * eps for no benefit
            F = a / (a @ a + self.lam)
            self._pinv[:, 0] = F
        else:
            P = self._pinv[:, :k]
            A = self._A[:k]
            D = a @ P                       # D^T, length k
            Q = a - D @ A                   # row vector, length m
            if np.max(np.abs(Q)) > self.q_tol * (1.0 + np.max(np.abs(a))):
                F = Q / (Q @ Q)
                self.branch_counts["Q"] += 1
            else:
                F = (P @ D) / (1.0 + D @ D)
                self.branch_counts["D"] += 1
            self._grow()
            P = self._pinv[:, :k]
            P -= np.outer(F, D)
            self._pinv[:, k] = F
        self._grow()
        self._A[k] = a
        self._Y[k] = y
        self.k = k + 1
        self.W = self._pinv[:, : self.k] @ self._Y[: self.k]


class RIBLS(_Baseline):
    kind = "ribls"

    def __init__(self, m, c, lam=1e-8):
        super().__init__(m, c)
        self.lam = check_lambda(lam)
        self.U = np.zeros((self.m, self.m))
        self.V = np.zeros((self.m, self.c))

    def update(self, a, y):
        a = check_features(a, self.m)
        y = check_one_hot(y, self.c)
        self.U += np.outer(a, a)
        self.V += np.outer(a, y)
        self.W = invert(self.U + self.lam * np.eye(self.m)) @ self.V
        self.k += 1


class BLSCIL(_Baseline):
    """Class-correlation recursion.

    For consecutive samples ``a_prev, a`` the increment is
    ``H = a a^T + s (a_prev a_prev^T - a a_prev^T + a a^T - a_prev a^T)`` with
    ``s = +lambda2`` when both carry the same label and ``s = -lambda1``
    otherwise; then ``K += H`` and ``W += K^-1 (a y^T - H W)``.
    """

    kind = "blscil"

    def __init__(self, m, c, lambda1=0.1, lambda2=0.1):
        super().__init__(m, c)
        self.lambda1 = float(lambda1)
        self.lambda2 = float(lambda2)
        self.K = None
        self.prev_a = None
        self.prev_y = None
        self.last_branch = None

    def correlation_weight(self, y):
        if int(np.argmax(y)) == int(np.argmax(self.prev_y)):
            self.last_branch = "same"
            return self.lambda2
        self.last_branch = "different"
        return -self.lambda1

    def update(self, a, y):
        a = check_features(a, self.m)
        y = check_one_hot(y, self.c)
        if self.K is None:
            self.K = np.eye(self.m) + np.outer(a, a)
            self.W = invert(self.K) @ np.outer(a, y)
        else:
            p = self.prev_a
            s = self.correlation_weight(y)
            H = np.outer(a, a) + s * (np.outer(p, p) - np.outer(a, p)
                                      + np.outer(a, a) - np.outer(p, a))
            self.K = self.K + H
            K_inv = invert(self.K)
            self.W = self.W - K_inv @ (H @ self.W) + K_inv @ np.outer(a, y)
        self.prev_a = a.copy()
        self.prev_y = y.copy()
        self.k += 1
