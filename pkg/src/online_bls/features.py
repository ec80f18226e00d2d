"""Frozen random broad feature mapping.

A raw vector ``x`` (length ``d``) is projected by ``n2`` linear feature-node
groups of width ``n1``; their concatenation ``z`` feeds ``n4`` tanh
enhancement-node groups of width ``n3``. The broad feature is
``[z, h_1, ..., h_n4]`` of length ``m = n1*n2 + n3*n4``.

Enhancement pre-activations are multiplied by a scalar ``shrink`` before the
tanh (1.0 by default). With uniform [-1, 1] weights and ~100 feature nodes
the raw pre-activations have a spread of several units, which drives most
enhancement nodes into saturation; :func:`calibrate_shrink` rescales them
so that the largest pre-activation seen on a feature sample equals ``target``.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, InvalidDimension, NonFiniteInput

MAPPER_FORMAT_VERSION = 1


def _frozen(x):
    x = np.array(x, dtype=np.float64)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class BroadMapper:
    """Random projection parameters.

    Array shapes: ``feature_weights`` (n2, d, n1), ``feature_biases`` (n2, n1),
    ``enhancement_weights`` (n4, n1*n2, n3), ``enhancement_biases`` (n4, n3).
    Build one with :func:`new_mapper` unless the weights are known.
    """

    d: int
    n1: int
    n2: int
    n3: int
    n4: int
    feature_weights: np.ndarray
    feature_biases: np.ndarray
    enhancement_weights: np.ndarray
    enhancement_biases: np.ndarray
    seed: int | None = None
    shrink: float = 1.0
    _wf: np.ndarray = field(init=False, repr=False)
    _bf: np.ndarray = field(init=False, repr=False)
    _we: np.ndarray = field(init=False, repr=False)
    _be: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.shrink) and self.shrink > 0):
            raise ValueError(f"shrink must be positive, got {self.shrink!r}")
        object.__setattr__(self, "shrink", float(self.shrink))
        for name in ("d", "n1", "n2", "n3", "n4"):
            if int(getattr(self, name)) < 1:
                raise InvalidDimension(f"{name} must be >= 1")
        d, n1, n2, n3, n4 = self.d, self.n1, self.n2, self.n3, self.n4
        shapes = {
            "feature_weights": (n2, d, n1),
            "feature_biases": (n2, n1),
            "enhancement_weights": (n4, n1 * n2, n3),
            "enhancement_biases": (n4, n3),
        }
        for name, shape in shapes.items():
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)
        # group-concatenated copies so map() is two matrix products
        wf = self.feature_weights.transpose(1, 0, 2).reshape(d, n1 * n2)
        we = self.enhancement_weights.transpose(1, 0, 2).reshape(n1 * n2, n3 * n4)
        object.__setattr__(self, "_wf", _frozen(wf))
        object.__setattr__(self, "_bf", _frozen(self.feature_biases.ravel()))
        object.__setattr__(self, "_we", _frozen(we))
        object.__setattr__(self, "_be", _frozen(self.enhancement_biases.ravel()))

    @property
    def m(self):
        return self.n1 * self.n2 + self.n3 * self.n4

    @property
    def n_feature_nodes(self):
        return self.n1 * self.n2

    def map(self, x):
        """Broad feature vector for a single sample."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise DimensionMismatch(f"expected input of length {self.d}, got shape {x.shape}")
        return self.map_batch(x[None, :])[0]

    def map_batch(self, X):
        """Row-wise :meth:`map` for an ``(n, d)`` array."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise DimensionMismatch(f"expected (n, {self.d}) input, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput("input has non-finite entries")
        z = X @ self._wf + self._bf
        h = np.tanh(self.shrink * (z @ self._we + self._be))
        return np.concatenate([z, h], axis=1)

    def enhancement_preactivation(self, X):
        """Unscaled enhancement pre-activations ``z W_e + beta_e`` for rows of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        return (X @ self._wf + self._bf) @ self._we + self._be

    def to_dict(self):
        if self.seed is None:
            raise ValueError("only seeded mappers can be serialized by dimensions + seed")
        return {"version": MAPPER_FORMAT_VERSION, "d": self.d, "n1": self.n1,
                "n2": self.n2, "n3": self.n3, "n4": self.n4, "seed": int(self.seed),
                "shrink": float(self.shrink)}

    @classmethod
    def from_dict(cls, data):
        if data.get("version") != MAPPER_FORMAT_VERSION:
            raise ValueError(f"unsupported mapper format version {data.get('version')!r}")
        return new_mapper(data["d"], data["n1"], data["n2"], data["n3"], data["n4"],
                          data["seed"], shrink=data.get("shrink", 1.0))


def new_mapper(d, n1, n2, n3, n4, seed, shrink=1.0):
    """Draw every weight and bias i.i.d. uniform on [-1, 1] from ``seed``."""
    dims = dict(d=d, n1=n1, n2=n2, n3=n3, n4=n4)
    for name, v in dims.items():
        if int(v) != v or v < 1:
            raise InvalidDimension(f"{name} must be a positive integer, got {v!r}")
    d, n1, n2, n3, n4 = (int(v) for v in dims.values())
    rng = np.random.default_rng(int(seed) % 2**64)
    wf = np.empty((n2, d, n1))
    bf = np.empty((n2, n1))
    for i in range(n2):
        wf[i] = rng.uniform(-1.0, 1.0, size=(d, n1))
        bf[i] = rng.uniform(-1.0, 1.0, size=n1)
    we = np.empty((n4, n1 * n2, n3))
    be = np.empty((n4, n3))
    for j in range(n4):
        we[j] = rng.uniform(-1.0, 1.0, size=(n1 * n2, n3))
        be[j] = rng.uniform(-1.0, 1.0, size=n3)
    return BroadMapper(d, n1, n2, n3, n4, wf, bf, we, be, seed=int(seed), shrink=shrink)


def calibrate_shrink(mapper, X, target=0.8, chunk=4096):
    """Copy of ``mapper`` whose largest enhancement pre-activation over ``X`` is ``target``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionMismatch("need a non-empty (n, d) feature sample")
    peak = 0.0
    for start in range(0, X.shape[0], chunk):
        peak = max(peak, float(np.max(np.abs(mapper.enhancement_preactivation(X[start:start + chunk])))))
    shrink = target / peak if peak > 0 else 1.0
    return replace(mapper, shrink=shrink)
