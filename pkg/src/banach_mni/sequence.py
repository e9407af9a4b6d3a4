"""Finitely supported real sequences and the norms of l1, lp, l2 and c0.

Indices are 0-based. A :class:`SparseSeq` stores only its nonzero entries,
sorted by index, so the same object serves as an element of l1, lp, c0 or
c_c. Arithmetic drops entries that cancel to exactly ``0.0``; values that
cancel only up to rounding are kept, which is the usual floating-point
caveat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .exceptions import ParameterError

__all__ = [
    "SparseSeq",
    "Space",
    "HILBERT",
    "L1",
    "LINF",
    "lp",
    "norm",
    "inner",
    "combine",
]


class SparseSeq:
    """Immutable finitely supported sequence.

    Parameters
    ----------
    entries : iterable of (index, value) pairs, or mapping index -> value
        Duplicate indices are summed; zero values are dropped.
    """

    __slots__ = ("_idx", "_val")

    def __init__(self, entries: Iterable | dict = ()):
        if isinstance(entries, dict):
            entries = entries.items()
        pairs = list(entries)
        if pairs:
            idx = np.array([int(i) for i, _ in pairs], dtype=np.int64)
            val = np.array([float(v) for _, v in pairs], dtype=np.float64)
        else:
            idx = np.empty(0, dtype=np.int64)
            val = np.empty(0, dtype=np.float64)
        if np.any(idx < 0):
            raise ParameterError("sequence indices must be nonnegative")
        if not np.all(np.isfinite(val)):
            raise ParameterError("sequence values must be finite")
        self._idx, self._val = _canonical(idx, val)
        self._idx.flags.writeable = False
        self._val.flags.writeable = False

    @classmethod
    def from_arrays(cls, indices, values) -> "SparseSeq":
        """Build from parallel index/value arrays (any order, zeros allowed)."""
        idx = np.asarray(indices, dtype=np.int64).ravel()
        val = np.asarray(values, dtype=np.float64).ravel()
        if idx.shape != val.shape:
            raise ParameterError("indices and values must have equal length")
        if np.any(idx < 0):
            raise ParameterError("sequence indices must be nonnegative")
        if not np.all(np.isfinite(val)):
            raise ParameterError("sequence values must be finite")
        obj = cls.__new__(cls)
        obj._idx, obj._val = _canonical(idx, val)
        obj._idx.flags.writeable = False
        obj._val.flags.writeable = False
        return obj

    @classmethod
    def from_dense(cls, values, support=None) -> "SparseSeq":
        """Inverse of :meth:`to_dense`: ``values[k]`` sits at ``support[k]``."""
        values = np.asarray(values, dtype=np.float64).ravel()
        if support is None:
            support = np.arange(values.size, dtype=np.int64)
        return cls.from_arrays(support, values)

    @classmethod
    def unit(cls, index: int, value: float = 1.0) -> "SparseSeq":
        return cls([(index, value)])

    @property
    def indices(self) -> np.ndarray:
        return self._idx

    @property
    def values(self) -> np.ndarray:
        return self._val

    @property
    def support(self) -> frozenset:
        return frozenset(int(i) for i in self._idx)

    def to_dense(self, support) -> np.ndarray:
        """Values at the positions listed in ``support`` (zeros where absent)."""
        support = np.asarray(support, dtype=np.int64)
        out = np.zeros(support.size, dtype=np.float64)
        if self._idx.size == 0 or support.size == 0:
            return out
        pos = np.searchsorted(self._idx, support)
        pos = np.minimum(pos, self._idx.size - 1)
        hit = self._idx[pos] == support
        out[hit] = self._val[pos[hit]]
        return out

    def get(self, index: int) -> float:
        pos = np.searchsorted(self._idx, index)
        if pos < self._idx.size and self._idx[pos] == index:
            return float(self._val[pos])
        return 0.0

    def items(self):
        return [(int(i), float(v)) for i, v in zip(self._idx, self._val)]

    def to_json(self) -> list:
        return [[i, v] for i, v in self.items()]

    @classmethod
    def from_json(cls, data) -> "SparseSeq":
        pairs = []
        for k, item in enumerate(data):
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ParameterError(f"entry {k} is not an [index, value] pair")
            i, v = item
            if isinstance(i, bool) or not isinstance(i, int) and not (
                isinstance(i, float) and i.is_integer()
            ):
                raise ParameterError(f"entry {k} has a non-integer index")
            pairs.append((int(i), float(v)))
        return cls(pairs)

    def __len__(self):
        return int(self._idx.size)

    def __bool__(self):
        return self._idx.size > 0

    def __iter__(self):
        return iter(self.items())

    def __eq__(self, other):
        if not isinstance(other, SparseSeq):
            return NotImplemented
        return np.array_equal(self._idx, other._idx) and np.array_equal(
            self._val, other._val
        )

    def __hash__(self):
        return hash((self._idx.tobytes(), self._val.tobytes()))

    def __repr__(self):
        return f"SparseSeq({self.items()!r})"

    def __neg__(self):
        return SparseSeq.from_arrays(self._idx, -self._val)

    def __add__(self, other):
        return combine(1.0, self, 1.0, other)

    def __sub__(self, other):
        return combine(1.0, self, -1.0, other)

    def __mul__(self, alpha):
        return combine(float(alpha), self, 0.0, _EMPTY)

    __rmul__ = __mul__


def _canonical(idx, val):
    if idx.size == 0:
        return idx.copy(), val.copy()
    order = np.argsort(idx, kind="stable")
    idx, val = idx[order], val[order]
    uniq, start = np.unique(idx, return_index=True)
    if uniq.size != idx.size:
        val = np.add.reduceat(val, start)
        idx = uniq
    keep = val != 0.0
    return idx[keep].copy(), val[keep].copy()


_EMPTY = SparseSeq()


@dataclass(frozen=True)
class Space:
    """Which sequence space a norm or problem refers to.

    ``kind`` is one of ``"hilbert"`` (l2), ``"lp"``, ``"l1"`` or ``"linf"``
    (the c0 / l-infinity norm, used only for measuring).
    """

    kind: str
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("hilbert", "lp", "l1", "linf"):
            raise ParameterError(f"unknown space kind {self.kind!r}")
        if self.kind == "lp":
            if self.p is None or not math.isfinite(self.p) or self.p <= 1.0:
                raise ParameterError(f"lp space needs 1 < p < inf, got p={self.p}")

    @property
    def q(self) -> float:
        """Conjugate exponent."""
        if self.kind == "lp":
            return self.p / (self.p - 1.0)
        if self.kind == "hilbert":
            return 2.0
        if self.kind == "l1":
            return math.inf
        return 1.0

    @property
    def exponent(self) -> float:
        return {"hilbert": 2.0, "l1": 1.0, "linf": math.inf}.get(self.kind, self.p)

    def dual(self) -> "Space":
        if self.kind == "lp":
            return lp(self.q)
        return {"hilbert": HILBERT, "l1": LINF, "linf": L1}[self.kind]

    def to_json(self) -> dict:
        if self.kind == "lp":
            return {"kind": "lp", "p": self.p}
        return {"kind": self.kind}

    def __str__(self):
        return f"lp(p={self.p:g})" if self.kind == "lp" else self.kind


HILBERT = Space("hilbert")
L1 = Space("l1")
LINF = Space("linf")


def lp(p: float) -> Space:
    return Space("lp", float(p))


def pnorm(values, p: float) -> float:
    """p-norm of a dense vector, scaled against overflow/underflow."""
    a = np.abs(np.asarray(values, dtype=np.float64))
    if a.size == 0:
        return 0.0
    if p == 1.0:
        return float(a.sum())
    if math.isinf(p):
        return float(a.max())
    scale = a.max()
    if scale == 0.0:
        return 0.0
    return float(scale * np.sum((a / scale) ** p) ** (1.0 / p))


def norm(x: SparseSeq, which: Space) -> float:
    """Norm of ``x`` in the space ``which``."""
    return pnorm(x.values, which.exponent)


def inner(u: SparseSeq, x: SparseSeq) -> float:
    """Dual pairing sum_j u_j x_j over the common support."""
    common, iu, ix = np.intersect1d(u.indices, x.indices, assume_unique=True, return_indices=True)
    if common.size == 0:
        return 0.0
    return float(np.dot(u.values[iu], x.values[ix]))


def combine(alpha: float, x: SparseSeq, beta: float, y: SparseSeq) -> SparseSeq:
    """Canonical form of ``alpha * x + beta * y``."""
    idx = np.concatenate([x.indices, y.indices])
    val = np.concatenate([alpha * x.values, beta * y.values])
    return SparseSeq.from_arrays(idx, val)
