"""Sampling operator built from finitely many sequence functionals."""

from __future__ import annotations

import warnings
from functools import cached_property

import numpy as np

from .exceptions import ParameterError
from .sequence import SparseSeq

__all__ = ["SamplingOperator", "apply_L", "apply_Lstar", "gram_matrix", "INDEPENDENCE_TOL"]

INDEPENDENCE_TOL = 1e-10


class SamplingOperator:
    """The map x -> [<u_j, x> : j < m] for rows u_j given as sparse sequences.

    All dense linear algebra happens on the union of the row supports
    (``self.support``); ``self.matrix`` is the m x n restriction. A
    warning is issued when the rows are numerically dependent; the
    operator is still built so degenerate data can be studied.
    """

    def __init__(self, rows, check_independence=True):
        rows = [r if isinstance(r, SparseSeq) else SparseSeq(r) for r in rows]
        if not rows:
            raise ParameterError("a sampling operator needs at least one row")
        self.rows = tuple(rows)
        if rows and any(len(r) for r in rows):
            self.support = np.unique(np.concatenate([r.indices for r in rows]))
        else:
            self.support = np.empty(0, dtype=np.int64)
        matrix = np.zeros((len(rows), self.support.size))
        for j, r in enumerate(rows):
            matrix[j] = r.to_dense(self.support)
        matrix.flags.writeable = False
        self.matrix = matrix
        if check_independence and self.min_singular_value() <= INDEPENDENCE_TOL:
            warnings.warn(
                "sampling functionals are numerically linearly dependent "
                f"(smallest singular value {self.min_singular_value():.3e})",
                RuntimeWarning,
                stacklevel=2,
            )

    @classmethod
    def from_dense(cls, matrix, support=None, check_independence=True):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        return cls(
            [SparseSeq.from_dense(row, support) for row in matrix],
            check_independence=check_independence,
        )

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return int(self.support.size)

    def min_singular_value(self) -> float:
        if self.n < self.m:
            return 0.0
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])

    @cached_property
    def spectral_norm(self) -> float:
        return spectral_norm(self.matrix)

    def restrict(self, x: SparseSeq) -> np.ndarray:
        """Dense values of ``x`` on the union support."""
        return x.to_dense(self.support)

    def extend(self, values) -> SparseSeq:
        """Sparse sequence from dense values on the union support."""
        return SparseSeq.from_dense(values, self.support)

    def to_json(self) -> list:
        return [r.to_json() for r in self.rows]

    @classmethod
    def from_json(cls, data, check_independence=True):
        return cls([SparseSeq.from_json(r) for r in data], check_independence)

    def __eq__(self, other):
        if not isinstance(other, SamplingOperator):
            return NotImplemented
        return self.rows == other.rows

    def __repr__(self):
        return f"SamplingOperator(m={self.m}, support={self.support.tolist()})"


def spectral_norm(matrix, iters=500, tol=1e-13) -> float:
    """Largest singular value by power iteration on A^T A."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.size == 0:
        return 0.0
    # fixed-seed start: deterministic, and almost surely not orthogonal
    # to the top singular vector (an all-ones start often is)
    v = np.random.default_rng(0x5EED).standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= tol * nw:
            est = nw
            break
        est = nw
    return float(np.sqrt(est))


def apply_L(op: SamplingOperator, x: SparseSeq) -> np.ndarray:
    """Sample ``x``: component j is <rows[j], x>."""
    return op.matrix @ op.restrict(x)


def apply_Lstar(op: SamplingOperator, c) -> SparseSeq:
    """Adjoint: sum_j c_j rows[j] as a sparse sequence."""
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.size != op.m:
        raise ParameterError(f"coefficient vector has length {c.size}, expected {op.m}")
    return op.extend(c @ op.matrix)


def gram_matrix(op: SamplingOperator) -> np.ndarray:
    """G[j, k] = <rows[j], rows[k]> (l2 pairing)."""
    g = op.matrix @ op.matrix.T
    return 0.5 * (g + g.T)
