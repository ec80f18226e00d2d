"""Online-BLS: exact per-sample ridge updates through a maintained Cholesky factor.

The state keeps the output weights ``W`` (m x c) and the lower factor ``L`` of
``K = lam*I + sum_i a_i a_i^T``. An update with ``(a, y)``

1. rotates ``a`` into ``L`` (O(m^2)),
2. forms ``B = a (y^T - a^T W)``,
3. solves ``L L^T dW = B`` by forward then backward substitution,
4. sets ``W += dW``.

Starting from ``W = 0`` and ``L = sqrt(lam) I`` this reproduces the batch
ridge solution on every prefix of the stream. No explicit inverse is used.
"""
import json
import struct

import numpy as np

from .errors import DimensionMismatch, InvalidLabel, InvalidLambda, NonFiniteInput
from .linalg import backward_substitute, forward_substitute, rank_one_update

SNAPSHOT_MAGIC = b"OBLSNAP1"
SNAPSHOT_VERSION = 1


def check_lambda(lam):
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidLambda(f"regularizer must be a positive finite number, got {lam!r}")
    return lam


def check_features(a, m):
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (m,):
        raise DimensionMismatch(f"expected broad feature of length {m}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("broad feature has non-finite entries")
    return a


def check_one_hot(y, c):
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (c,):
        raise DimensionMismatch(f"expected one-hot target of length {c}, got shape {y.shape}")
    if not (np.all((y == 0.0) | (y == 1.0)) and y.sum() == 1.0):
        raise InvalidLabel(f"target must be strictly one-hot, got {y!r}")
    return y


def one_hot(label, c):
    y = np.zeros(c)
    y[label] = 1.0
    return y


class OnlineBLS:
    """Online-BLS output layer for ``m`` broad features and ``c`` classes."""

    kind = "online-bls"

    def __init__(self, m, c, lam=1e-8):
        if int(m) < 1 or int(c) < 1:
            raise DimensionMismatch("m and c must be positive")
        self.m = int(m)
        self.c = int(c)
        self.lam = check_lambda(lam)
        self.W = np.zeros((self.m, self.c))
        self.L = np.sqrt(self.lam) * np.eye(self.m)
        self.k = 0

    def predict(self, a):
        """Score vector ``a^T W``; take ``argmax`` for the class (lowest index on ties)."""
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (self.m,):
            raise DimensionMismatch(f"expected broad feature of length {self.m}, got shape {a.shape}")
        return a @ self.W

    def update(self, a, y):
        a = check_features(a, self.m)
        y = check_one_hot(y, self.c)
        rank_one_update(self.L, a, overwrite=True)
        B = np.outer(a, y - a @ self.W)
        dW = backward_substitute(self.L, forward_substitute(self.L, B))
        self.W += dW
        self.k += 1

    # snapshots

    def _header(self):
        return {"kind": self.kind, "m": self.m, "c": self.c, "lambda": self.lam, "k": self.k}

    def _arrays(self):
        return [("W", self.W), ("L", self.L)]

    def save(self, path, mapper=None):
        """Write a snapshot: magic, u64 header length, JSON header, raw ``<f8`` arrays."""
        header = self._header()
        header["version"] = SNAPSHOT_VERSION
        header["mapper"] = mapper.to_dict() if mapper is not None else None
        arrays = self._arrays()
        header["arrays"] = [[name, list(arr.shape)] for name, arr in arrays]
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(SNAPSHOT_MAGIC)
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
            for _, arr in arrays:
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_snapshot(path):
    """Restore a model saved with ``save``; returns ``(model, mapper_or_None)``."""
    from .adaptive import AdaptiveOnlineBLS
    from .features import BroadMapper

    with open(path, "rb") as fh:
        if fh.read(len(SNAPSHOT_MAGIC)) != SNAPSHOT_MAGIC:
            raise ValueError(f"{path} is not a model snapshot")
        (size,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(size))
        if header.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {header.get('version')!r}")
        arrays = {}
        for name, shape in header["arrays"]:
            count = int(np.prod(shape))
            data = np.frombuffer(fh.read(8 * count), dtype="<f8")
            if data.size != count:
                raise ValueError(f"snapshot truncated while reading {name}")
            arrays[name] = data.reshape(shape).astype(np.float64)
    if header["kind"] == OnlineBLS.kind:
        model = OnlineBLS(header["m"], header["c"], header["lambda"])
        model.L = np.ascontiguousarray(arrays["L"])
    elif header["kind"] == AdaptiveOnlineBLS.kind:
        model = AdaptiveOnlineBLS(header["m"], header["c"], header["lambda"], header["mu"])
        model.P = np.ascontiguousarray(arrays["P"])
    else:
        raise ValueError(f"unknown model kind {header['kind']!r}")
    model.W = np.ascontiguousarray(arrays["W"])
    model.k = header["k"]
    mapper = BroadMapper.from_dict(header["mapper"]) if header.get("mapper") else None
    return model, mapper
