"""Stream construction: CSV ingestion and synthetic drifting generators.

A :class:`Stream` is an immutable, ordered sequence of :class:`Sample`
backed by two arrays (features ``X`` and integer labels ``y``).
"""
import csv
import os
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import EmptyAfterCleaning, SchemaMismatch

MISSING_TOKENS = frozenset({"", "?", "na", "nan", "null", "none"})


class Sample(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class HyperplaneParams:
    d: int = 20
    noise: float = 0.01
    drift_magnitude: float = 0.005
    sigma: float = 0.1           # per-step probability that a drift direction reverses

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0.0 <= self.noise < 1.0:
            raise ValueError("noise must lie in [0, 1)")
        if self.drift_magnitude < 0 or not 0.0 <= self.sigma <= 1.0:
            raise ValueError("invalid drift parameters")


@dataclass(frozen=True)
class SEAParams:
    noise: float = 0.10
    segment_length: int = 25_000
    thresholds: tuple = (8.0, 9.0, 7.0, 9.5)

    def __post_init__(self):
        if not 0.0 <= self.noise < 1.0:
            raise ValueError("noise must lie in [0, 1)")
        if self.segment_length < 1:
            raise ValueError("segment_length must be >= 1")
        if len(self.thresholds) < 1:
            raise ValueError("need at least one threshold")
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))


@dataclass(frozen=True)
class StreamSpec:
    """Where a stream comes from and how it is cleaned.

    ``source`` is ``"csv"``, ``"hyperplane"`` or ``"sea"``. CSV options:
    ``label_column`` (name or index, negative counts from the end),
    ``drop_columns``, ``categorical_columns`` (``None`` means every column
    that fails to parse as a number), ``header``, ``delimiter``.
    ``normalization`` is ``"none"`` or ``"minmax"``; ``limit`` truncates after
    shuffling.
    """

    source: str = "csv"
    path: str | None = None
    label_column: int | str = -1
    drop_columns: tuple = ()
    categorical_columns: tuple | None = None
    header: bool = True
    delimiter: str = ","
    n: int | None = None
    params: HyperplaneParams | SEAParams | None = None
    generator_seed: int = 0
    shuffle_seed: int | None = None
    normalization: str = "none"
    limit: int | None = None

    def __post_init__(self):
        if self.source not in ("csv", "hyperplane", "sea"):
            raise ValueError(f"unknown stream source {self.source!r}")
        if self.normalization not in ("none", "minmax"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.limit is not None and self.limit < 1:
            raise ValueError("limit must be >= 1")
        if self.source == "csv" and self.path is None:
            raise ValueError("csv streams need a path")
        object.__setattr__(self, "drop_columns", tuple(self.drop_columns))
        if self.categorical_columns is not None:
            object.__setattr__(self, "categorical_columns", tuple(self.categorical_columns))

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "params"}
        out["drop_columns"] = list(self.drop_columns)
        if self.categorical_columns is not None:
            out["categorical_columns"] = list(self.categorical_columns)
        if self.params is not None:
            out["params"] = {k: getattr(self.params, k) for k in self.params.__dataclass_fields__}
            if "thresholds" in out["params"]:
                out["params"]["thresholds"] = list(out["params"]["thresholds"])
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        params = data.pop("params", None)
        if params is not None:
            params = dict(params)
            if data.get("source") == "sea":
                if "thresholds" in params:
                    params["thresholds"] = tuple(params["thresholds"])
                params = SEAParams(**params)
            elif data.get("source") == "hyperplane":
                params = HyperplaneParams(**params)
        return cls(params=params, **data)


@dataclass(frozen=True, eq=False)
class Stream(Sequence):
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    class_names: tuple = ()
    feature_names: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise SchemaMismatch(f"inconsistent shapes X={X.shape} y={y.shape}")
        if not np.all(np.isfinite(X)):
            raise SchemaMismatch("features must be finite")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise SchemaMismatch("label outside [0, n_classes)")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.take(np.arange(len(self))[i])
        return Sample(self.X[i], int(self.y[i]))

    @property
    def n_features(self):
        return self.X.shape[1]

    def take(self, index):
        index = np.asarray(index)
        return replace(self, X=self.X[index], y=self.y[index])

    def one_hot(self):
        return np.eye(self.n_classes)[self.y]

    def shuffled(self, seed):
        """Seeded Fisher-Yates permutation."""
        return self.take(np.random.default_rng(seed).permutation(len(self)))

    def normalized(self):
        """Min-max scale each attribute to [0, 1] over the whole stream (constant columns -> 0)."""
        lo = self.X.min(axis=0)
        span = self.X.max(axis=0) - lo
        safe = np.where(span > 0, span, 1.0)
        return replace(self, X=(self.X - lo) / safe)

    def to_csv(self, path, header=True):
        names = list(self.feature_names) or [f"x{i}" for i in range(self.n_features)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if header:
                w.writerow(names + ["label"])
            for row, label in zip(self.X, self.y):
                w.writerow([repr(float(v)) for v in row] + [int(label)])


def _resolve_column(col, names, width):
    if isinstance(col, str) and not col.lstrip("-").isdigit():
        if col not in names:
            raise SchemaMismatch(f"no column named {col!r}")
        return names.index(col)
    idx = int(col)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise SchemaMismatch(f"column index {col!r} out of range for {width} columns")
    return idx


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _label_order(values):
    uniq = set(values)
    if all(_is_number(v) for v in uniq):
        return sorted(uniq, key=float)
    return sorted(uniq)


def load_csv(spec):
    """Read, clean and optionally shuffle/normalize a CSV stream.

    Rows with a missing token in any kept column are dropped. Categorical
    attributes become integer codes in first-appearance order; class labels
    are indexed in sorted order.
    """
    path = Path(spec.path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=spec.delimiter) if r]
    if spec.delimiter == " " or spec.delimiter == "\t":
        rows = [[t for t in r if t != ""] for r in rows]
    if not rows:
        raise EmptyAfterCleaning(f"{path} has no rows")
    if spec.header:
        names, rows = [t.strip() for t in rows[0]], rows[1:]
    else:
        names = [str(i) for i in range(len(rows[0]))]
    width = len(names)
    bad = [i for i, r in enumerate(rows) if len(r) != width]
    if bad:
        raise SchemaMismatch(f"row {bad[0] + int(spec.header) + 1} has {len(rows[bad[0]])} "
                             f"fields, expected {width}")

    label_idx = _resolve_column(spec.label_column, names, width)
    dropped = {_resolve_column(c, names, width) for c in spec.drop_columns}
    if label_idx in dropped:
        raise SchemaMismatch("label column cannot be dropped")
    keep = [i for i in range(width) if i != label_idx and i not in dropped]

    rows = [[t.strip() for t in r] for r in rows]
    rows = [r for r in rows
            if all(r[i].lower() not in MISSING_TOKENS for i in keep + [label_idx])]
    if not rows:
        raise EmptyAfterCleaning(f"{path} has no complete rows")

    if spec.categorical_columns is None:
        categorical = {i for i in keep if not all(_is_number(r[i]) for r in rows)}
    else:
        categorical = {_resolve_column(c, names, width) for c in spec.categorical_columns}
    X = np.empty((len(rows), len(keep)))
    for j, col in enumerate(keep):
        if col in categorical:
            codes = {}
            X[:, j] = [codes.setdefault(r[col], len(codes)) for r in rows]
        else:
            try:
                X[:, j] = [float(r[col]) for r in rows]
            except ValueError as exc:
                raise SchemaMismatch(f"column {names[col]!r} is not numeric: {exc}") from None

    labels = [r[label_idx] for r in rows]
    classes = _label_order(labels)
    lookup = {v: i for i, v in enumerate(classes)}
    stream = Stream(X, [lookup[v] for v in labels], len(classes),
                    class_names=tuple(classes),
                    feature_names=tuple(names[i] for i in keep),
                    meta={"path": str(path)})
    return _finish(stream, spec)


def _finish(stream, spec):
    if spec.normalization == "minmax":
        stream = stream.normalized()
    if spec.shuffle_seed is not None:
        stream = stream.shuffled(spec.shuffle_seed)
    if spec.limit is not None:
        stream = stream.take(np.arange(min(spec.limit, len(stream))))
    return stream


def hyperplane_stream(seed, params=None, n=100_000, return_weights=False):
    """Rotating-hyperplane stream.

    Features are uniform on [0, 1]^d and the hidden weights start uniform on
    [0, 1]. Sample ``t`` is labeled 1 when ``w(t) . x > sum(w(t)) / 2``; then
    every weight moves by ``drift_magnitude * direction_i * |N(0, 1)|``, and
    each direction reverses with probability ``sigma``. Labels flip with
    probability ``noise``. With ``return_weights`` the ``(n, d)`` weight
    trajectory is returned too.
    """
    params = params or HyperplaneParams()
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    d = params.d
    X = rng.uniform(0.0, 1.0, size=(n, d))
    w0 = rng.uniform(0.0, 1.0, size=d)
    direction = np.where(rng.uniform(size=d) < 0.5, -1.0, 1.0)
    flips = np.where(rng.uniform(size=(n, d)) < params.sigma, -1.0, 1.0)
    dirs = direction * np.cumprod(flips, axis=0)
    steps = params.drift_magnitude * dirs * np.abs(rng.standard_normal((n, d)))
    W = np.empty((n, d))
    W[0] = w0
    if n > 1:
        W[1:] = w0 + np.cumsum(steps[:-1], axis=0)
    y = (np.einsum("ij,ij->i", W, X) > W.sum(axis=1) / 2).astype(np.int64)
    noisy = rng.uniform(size=n) < params.noise
    y[noisy] = 1 - y[noisy]
    stream = Stream(X, y, 2, class_names=(0, 1),
                    feature_names=tuple(f"x{i}" for i in range(d)),
                    meta={"generator": "hyperplane", "seed": seed})
    return (stream, W) if return_weights else stream


def sea_thresholds(params, n):
    seg = np.minimum(np.arange(n) // params.segment_length, len(params.thresholds) - 1)
    return np.asarray(params.thresholds)[seg]


def sea_stream(seed, params=None, n=100_000):
    """SEA concepts: three features uniform on [0, 10], label ``x0 + x1 > theta``.

    ``theta`` steps through ``params.thresholds``, switching every
    ``segment_length`` samples (zero-based index ``segment_length`` is the
    first sample of the second concept). Labels flip with probability
    ``noise``.
    """
    params = params or SEAParams()
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 10.0, size=(n, 3))
    y = (X[:, 0] + X[:, 1] > sea_thresholds(params, n)).astype(np.int64)
    noisy = rng.uniform(size=n) < params.noise
    y[noisy] = 1 - y[noisy]
    return Stream(X, y, 2, class_names=(0, 1), feature_names=("x0", "x1", "x2"),
                  meta={"generator": "sea", "seed": seed})


def load_stream(spec):
    """Build the stream described by ``spec``."""
    if spec.source == "csv":
        return load_csv(spec)
    n = spec.n if spec.n is not None else 100_000
    if spec.source == "hyperplane":
        stream = hyperplane_stream(spec.generator_seed, spec.params, n)
    else:
        stream = sea_stream(spec.generator_seed, spec.params, n)
    return _finish(stream, spec)


# Preprocessing recipes for the benchmark files; all but Image Segment must be
# supplied locally (see ``data_dir``).
DATASETS = {
    "image-segment": dict(file="image_segment.csv", label_column="class", normalization="minmax"),
    "usps": dict(file="usps.csv", label_column=0, normalization="minmax"),
    "letter": dict(file="letter.csv", label_column=0, header=False, normalization="minmax"),
    "adult": dict(file="adult.csv", label_column=-1, header=False, normalization="minmax"),
    "shuttle": dict(file="shuttle.csv", label_column=-1, header=False, drop_columns=(0,),
                    normalization="minmax"),
    "mnist": dict(file="mnist.csv", label_column=0, normalization="minmax"),
    "electricity": dict(file="electricity.csv", label_column=-1, drop_columns=(0, 1),
                        normalization="minmax"),
    "covertype": dict(file="covertype.csv", label_column=-1, header=False,
                      normalization="minmax"),
}


def bundled_path(name):
    return str(resources.files("online_bls") / "data" / name)


def data_dir():
    return os.environ.get("ONLINE_BLS_DATA_DIR", "data")


def dataset_spec(name, **overrides):
    """StreamSpec for a named benchmark dataset (or a CSV path, or ``sea``/``hyperplane``)."""
    if name in ("sea", "hyperplane"):
        return StreamSpec(source=name, **overrides)
    if name not in DATASETS:
        return StreamSpec(source="csv", path=name, **overrides)
    recipe = dict(DATASETS[name])
    fname = recipe.pop("file")
    if name == "image-segment":
        path = bundled_path(fname)
    else:
        path = str(Path(data_dir()) / fname)
    recipe.update(overrides)
    return StreamSpec(source="csv", path=recipe.pop("path", path), **recipe)
