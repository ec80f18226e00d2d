"""Online-BLS with a forgetting factor for drifting streams.

The scatter matrix decays geometrically, ``P <- mu P + a a^T``, and the factor
is recomputed from scratch as ``chol(P + lam I)`` on every step, so an update
costs O(m^3). The weight increment is then solved exactly as in
:class:`~online_bls.online.OnlineBLS`. With ``mu = 1`` both models follow the
same trajectory.
"""
import numpy as np

from .errors import InvalidDecay
from .linalg import backward_substitute, cholesky, forward_substitute
from .online import OnlineBLS, check_features, check_lambda, check_one_hot


class AdaptiveOnlineBLS(OnlineBLS):
    kind = "online-bls-ada"

    def __init__(self, m, c, lam=1e-8, mu=0.99):
        mu = float(mu)
        if not (0.0 < mu <= 1.0):
            raise InvalidDecay(f"decay factor must lie in (0, 1], got {mu!r}")
        super().__init__(m, c, check_lambda(lam))
        self.mu = mu
        self.P = np.zeros((self.m, self.m))

    def update(self, a, y):
        a = check_features(a, self.m)
        y = check_one_hot(y, self.c)
        self.P *= self.mu
        self.P += np.outer(a, a)
        K = self.P + self.lam * np.eye(self.m)
        self.L = cholesky(K)
        B = np.outer(a, y - a @ self.W)
        self.W += backward_substitute(self.L, forward_substitute(self.L, B))
        self.k += 1

    def _header(self):
        header = super()._header()
        header["mu"] = self.mu
        return header

    def _arrays(self):
        return [("W", self.W), ("P", self.P)]
