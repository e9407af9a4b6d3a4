"""Duality maps and norm subdifferentials for the concrete sequence spaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DegenerateInputError, ParameterError
from .sequence import SparseSeq, pnorm

__all__ = [
    "MAX_INDEX_RTOL",
    "SubdiffFaceLinf",
    "Membership",
    "dmap_lq",
    "max_index_mask",
    "linf_face",
    "truncate_S",
    "linf_subdiff_membership",
    "l1_subdiff_membership",
]

#: relative tolerance deciding which entries attain the sup-norm
MAX_INDEX_RTOL = 1e-9


class Membership(NamedTuple):
    """Outcome of a set-membership test; truthy iff ``ok``."""

    ok: bool
    violation: float

    def __bool__(self):
        return bool(self.ok)


@dataclass(frozen=True)
class SubdiffFaceLinf:
    """Description of the subdifferential of the sup-norm at a nonzero u.

    The subdifferential is the convex hull of ``signs[j] * e_j`` over
    ``j in max_indices``.
    """

    norm_value: float
    max_indices: tuple
    signs: dict

    def vertices(self):
        return [SparseSeq.unit(j, self.signs[j]) for j in self.max_indices]


def dmap_lq(u: SparseSeq, q: float) -> SparseSeq:
    """Duality map from lq to lp: ``sign(u_j)|u_j|^(q-1) / ||u||_q^(q-2)``.

    The image has p-norm ``||u||_q`` and pairs with ``u`` to
    ``||u||_q**2``. The zero sequence maps to zero.
    """
    if not q > 1.0:
        raise ParameterError(f"duality map needs q > 1, got {q}")
    if not u:
        return SparseSeq()
    nu = pnorm(u.values, q)
    w = u.values / nu
    return SparseSeq.from_arrays(u.indices, nu * np.sign(w) * np.abs(w) ** (q - 1.0))


def max_index_mask(values, rtol=MAX_INDEX_RTOL) -> np.ndarray:
    """Boolean mask of the entries attaining the sup-norm (up to ``rtol``)."""
    a = np.abs(np.asarray(values, dtype=np.float64))
    if a.size == 0:
        return np.zeros(0, dtype=bool)
    top = a.max()
    if top == 0.0:
        return np.zeros(a.size, dtype=bool)
    return a >= (1.0 - rtol) * top


def linf_face(u: SparseSeq, rtol=MAX_INDEX_RTOL) -> SubdiffFaceLinf:
    """Norm value, maximal index set and signs describing the sup-norm subdifferential at ``u``."""
    if not u:
        raise DegenerateInputError(
            "the sup-norm subdifferential at 0 is the whole unit ball of l1"
        )
    mask = max_index_mask(u.values, rtol)
    idx = u.indices[mask]
    return SubdiffFaceLinf(
        norm_value=float(np.abs(u.values).max()),
        max_indices=tuple(int(i) for i in idx),
        signs={int(i): int(np.sign(v)) for i, v in zip(idx, u.values[mask])},
    )


def truncate_S(u: SparseSeq, rtol=MAX_INDEX_RTOL) -> SparseSeq:
    """Keep only the entries of ``u`` attaining its sup-norm."""
    if not u:
        return SparseSeq()
    mask = max_index_mask(u.values, rtol)
    return SparseSeq.from_arrays(u.indices[mask], u.values[mask])


def linf_subdiff_membership(v: SparseSeq, u: SparseSeq, scale: float, tol: float = 1e-9,
                            rtol=MAX_INDEX_RTOL) -> Membership:
    """Test ``v in scale * co{sign(u_j) e_j : j maximal for u}``."""
    if scale < 0:
        raise ParameterError("scale must be nonnegative")
    face = linf_face(u, rtol)
    on_face = np.isin(v.indices, np.array(face.max_indices, dtype=np.int64))
    off_mass = float(np.abs(v.values[~on_face]).sum())
    signs = np.array([face.signs[int(j)] for j in v.indices[on_face]], dtype=np.float64)
    signed = v.values[on_face] * signs
    sign_violation = float(max(0.0, -signed.min())) if signed.size else 0.0
    mass_violation = abs(float(np.abs(v.values).sum()) - scale)
    violation = max(off_mass, sign_violation, mass_violation)
    return Membership(off_mass <= tol and sign_violation <= tol and mass_violation <= tol,
                      violation)


def l1_subdiff_membership(u: SparseSeq, x: SparseSeq, tol: float = 1e-9) -> Membership:
    """Test ``u in subdifferential of ||.||_1 at x``, componentwise."""
    bound = float(max(0.0, np.abs(u.values).max() - 1.0)) if u else 0.0
    ux = u.to_dense(x.indices)
    sign_gap = float(np.abs(ux - np.sign(x.values)).max()) if x else 0.0
    return Membership(bound <= tol and sign_gap <= tol, max(bound, sign_gap))
