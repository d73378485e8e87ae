"""Sparse example streams: parsing, synthetic generation and splits.

Line format::

    <label> [<importance>] <id>:<value> <id>:<value> ...

The second token is an importance weight iff it contains no ``:``. Feature
ids are non-negative integers used as-is. Lines starting with ``#`` and blank
lines are skipped.
"""

from dataclasses import dataclass, field
import math

import numpy as np


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(eq=False)
class Example:
    """One training triple. ``xx`` caches the squared norm of the features."""

    label: float
    indices: np.ndarray
    values: np.ndarray
    importance: float = 1.0
    xx: float = field(init=False)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise ValueError("indices and values must be 1-d and the same length")
        if not self.importance >= 0.0:
            raise ValueError(f"importance must be non-negative, got {self.importance}")
        self.xx = float(np.dot(self.values, self.values))

    @classmethod
    def from_dict(cls, label, features, importance=1.0):
        ids = sorted(features)
        return cls(label, ids, [features[i] for i in ids], importance)

    @property
    def features(self):
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def max_index(self):
        return int(self.indices.max()) if self.indices.size else -1

    def with_label(self, label, importance=None):
        ex = Example.__new__(Example)
        ex.label = label
        ex.indices = self.indices
        ex.values = self.values
        ex.importance = self.importance if importance is None else importance
        ex.xx = self.xx
        return ex

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return (self.label == other.label and self.importance == other.importance
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))


def parse_example(line, lineno=None):
    tokens = line.split()
    if not tokens:
        raise ParseError("empty line", lineno)
    columns = []
    pos = 0
    for tok in tokens:
        pos = line.index(tok, pos)
        columns.append(pos + 1)
        pos += len(tok)

    try:
        label = float(tokens[0])
    except ValueError:
        raise ParseError(f"bad label {tokens[0]!r}", lineno, columns[0]) from None
    if not math.isfinite(label):
        raise ParseError(f"non-finite label {tokens[0]!r}", lineno, columns[0])

    importance = 1.0
    start = 1
    if len(tokens) > 1 and ":" not in tokens[1]:
        try:
            importance = float(tokens[1])
        except ValueError:
            raise ParseError(f"bad importance {tokens[1]!r}", lineno, columns[1]) from None
        if not importance >= 0.0 or not math.isfinite(importance):
            raise ParseError(f"importance must be non-negative, got {tokens[1]!r}",
                             lineno, columns[1])
        start = 2

    features = {}
    for tok, col in zip(tokens[start:], columns[start:]):
        key, sep, val = tok.partition(":")
        if not sep or not key.isdigit():
            raise ParseError(f"bad feature {tok!r}", lineno, col)
        try:
            value = float(val)
        except ValueError:
            raise ParseError(f"bad feature value {tok!r}", lineno, col) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite feature value {tok!r}", lineno, col)
        fid = int(key)
        if fid in features:
            raise ParseError(f"duplicate feature id {fid}", lineno, col)
        features[fid] = value
    return Example(label, list(features), list(features.values()), importance)


def format_example(ex):
    parts = [repr(float(ex.label))]
    if ex.importance != 1.0:
        parts.append(repr(float(ex.importance)))
    parts.extend(f"{i}:{v!r}" for i, v in zip(ex.indices.tolist(), ex.values.tolist()))
    return " ".join(parts)


def stream_dataset(path):
    """Yield examples from ``path`` lazily, in file order."""
    with open(path, encoding="utf-8", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield parse_example(line.rstrip("\r\n"), lineno)


def load_dataset(path):
    return list(stream_dataset(path))


def write_dataset(path, examples):
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(format_example(ex) + "\n")


@dataclass(frozen=True)
class SynthSpec:
    dim: int = 20
    n: int = 20_000
    margin: float = 0.0
    label_noise: float = 0.0
    importance_values: tuple = (1.0,)
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.n < 1:
            raise ValueError("dim and n must be positive")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")
        if not self.importance_values or min(self.importance_values) <= 0:
            raise ValueError("importance_values must be non-empty and positive")


def synth_generate(spec):
    """Linearly separable task around a hidden unit vector, then label noise.

    Points are Gaussian with unit expected squared norm; points closer than
    ``margin`` to the hidden hyperplane are pushed out along its normal.
    Labels are in {-1, +1}.
    """
    rng = np.random.default_rng(spec.seed)
    w_star = rng.standard_normal(spec.dim)
    w_star /= np.linalg.norm(w_star)
    X = rng.standard_normal((spec.n, spec.dim)) / math.sqrt(spec.dim)
    proj = X @ w_star
    sign = np.where(proj >= 0.0, 1.0, -1.0)
    short = np.abs(proj) < spec.margin
    X[short] += np.outer(sign[short] * spec.margin - proj[short], w_star)
    labels = sign.copy()
    flips = rng.random(spec.n) < spec.label_noise
    labels[flips] *= -1.0
    weights = rng.choice(np.asarray(spec.importance_values, dtype=float), size=spec.n)
    ids = np.arange(spec.dim)
    return [Example(float(labels[i]), ids, X[i], float(weights[i])) for i in range(spec.n)]


def split(dataset, test_fraction, seed=0):
    """Random train/test partition; both halves keep the original order."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = len(dataset)
    n_test = int(round(n * test_fraction))
    rng = np.random.default_rng(seed)
    test_mask = np.zeros(n, dtype=bool)
    test_mask[rng.permutation(n)[:n_test]] = True
    train = [ex for ex, m in zip(dataset, test_mask) if not m]
    test = [ex for ex, m in zip(dataset, test_mask) if m]
    return train, test


def to_binary_labels(dataset):
    """Map {-1, +1} labels to {0, 1}."""
    return [ex.with_label(1.0 if ex.label > 0 else 0.0) for ex in dataset]
