"""Closed-form proximity operators, their conjugates, and a 1-D numeric oracle.

Convention: ``prox_{s f}(a) = argmin_b 0.5 * ||a - b||^2 + s * f(b)``.
The closed forms below are valid for every scale ``s > 0``; at ``s = 1``
they coincide with the unit-scale formulas for the hinge and
epsilon-insensitive losses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .exceptions import OracleError, ParameterError
from .sequence import SparseSeq

__all__ = [
    "LossSpec",
    "soft_threshold",
    "prox_indicator_conj",
    "prox_hinge",
    "prox_eps_insensitive",
    "prox_square",
    "prox_vector_loss",
    "prox_vector_loss_conj",
    "prox_conjugate_via_moreau",
    "prox_numeric_oracle_1d",
    "golden_section",
]

_KIND_CODES = {"square": kernels.SQUARE, "hinge": kernels.HINGE, "eps_insensitive": kernels.EPS_INSENSITIVE}


@dataclass(frozen=True)
class LossSpec:
    """Data-fidelity term Q_y(z).

    ``kind`` is ``"square"`` (||z - y||^2), ``"hinge"`` (sum max(1 - y_j z_j, 0),
    labels in {-1, +1}) or ``"eps_insensitive"`` (sum max(|z_j - y_j| - eps, 0)).
    """

    kind: str
    y: np.ndarray = field(compare=False)
    eps: float = 0.0

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ParameterError(f"unknown loss kind {self.kind!r}")
        y = np.asarray(self.y, dtype=np.float64).ravel()
        y.flags.writeable = False
        object.__setattr__(self, "y", y)
        if not np.all(np.isfinite(y)):
            raise ParameterError("loss data must be finite")
        if self.kind == "hinge" and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ParameterError("hinge loss labels must be -1 or +1")
        if self.kind == "eps_insensitive":
            if not self.eps > 0:
                raise ParameterError("eps-insensitive loss needs eps > 0")
        else:
            object.__setattr__(self, "eps", 0.0)

    def __eq__(self, other):
        if not isinstance(other, LossSpec):
            return NotImplemented
        return (self.kind, self.eps) == (other.kind, other.eps) and np.array_equal(self.y, other.y)

    __hash__ = None

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def differentiable(self) -> bool:
        return self.kind == "square"

    def value(self, z) -> float:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "square":
            return float(np.sum((z - self.y) ** 2))
        if self.kind == "hinge":
            return float(np.sum(np.maximum(1.0 - self.y * z, 0.0)))
        return float(np.sum(np.maximum(np.abs(z - self.y) - self.eps, 0.0)))

    def gradient(self, z) -> np.ndarray:
        if self.kind != "square":
            raise ParameterError(f"{self.kind} loss is not differentiable")
        return 2.0 * (np.asarray(z, dtype=np.float64) - self.y)

    def with_data(self, y) -> "LossSpec":
        return LossSpec(self.kind, y, self.eps)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "eps_insensitive":
            out["eps"] = self.eps
        return out


def soft_threshold(x: SparseSeq, tau: float) -> SparseSeq:
    """prox of ``tau * ||.||_1``: shrink every entry towards 0 by ``tau``."""
    if not tau > 0:
        raise ParameterError("threshold must be positive")
    return SparseSeq.from_arrays(x.indices, kernels.soft_threshold_dense(x.values, float(tau)))


def prox_indicator_conj(a, y, sigma: float = 1.0) -> np.ndarray:
    """prox of ``sigma * iota_y^*``, where ``iota_y^*(c) = <c, y>``: returns ``a - sigma y``."""
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if a.shape != y.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {y.shape}")
    return a - sigma * y


def prox_hinge(a: float, y: float, sigma: float = 1.0) -> float:
    if y not in (-1, 1):
        raise ParameterError("hinge label must be -1 or +1")
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    return float(kernels.prox_hinge_scalar(float(a), float(y), float(sigma)))


def prox_eps_insensitive(a: float, y: float, eps: float, sigma: float = 1.0) -> float:
    if not eps > 0 or not sigma > 0:
        raise ParameterError("eps and sigma must be positive")
    return float(kernels.prox_eps_scalar(float(a), float(y), float(eps), float(sigma)))


def prox_square(a, y, sigma: float = 1.0):
    """prox of ``sigma * ||. - y||^2``."""
    a = np.asarray(a, dtype=np.float64)
    return (a + 2.0 * sigma * np.asarray(y, dtype=np.float64)) / (1.0 + 2.0 * sigma)


def _check_vector(a, loss: LossSpec, sigma):
    a = np.ascontiguousarray(a, dtype=np.float64).ravel()
    if a.shape != loss.y.shape:
        raise ParameterError(f"argument length {a.size} does not match data length {loss.y.size}")
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    return a


def prox_vector_loss(a, loss: LossSpec, sigma: float = 1.0) -> np.ndarray:
    """prox of ``sigma * Q_y`` evaluated componentwise."""
    a = _check_vector(a, loss, sigma)
    return kernels.prox_loss(a, np.ascontiguousarray(loss.y), loss.code, loss.eps, float(sigma))


def prox_vector_loss_conj(a, loss: LossSpec, sigma: float = 1.0) -> np.ndarray:
    """prox of ``sigma * Q_y^*``, via the Moreau identity."""
    a = _check_vector(a, loss, sigma)
    return kernels.prox_loss_conj(a, np.ascontiguousarray(loss.y), loss.code, loss.eps, float(sigma))


def prox_conjugate_via_moreau(prox_f: Callable, a, sigma: float = 1.0):
    """prox of ``sigma * f^*`` from a prox of ``f``.

    ``prox_f(v, s)`` must return the prox of ``s * f`` at ``v``. Uses
    ``prox_{sigma f*}(a) = a - sigma * prox_{f/sigma}(a / sigma)``.
    """
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    a = np.asarray(a, dtype=np.float64)
    return a - sigma * np.asarray(prox_f(a / sigma, 1.0 / sigma), dtype=np.float64)


def golden_section(h: Callable[[float], float], lo: float, hi: float, width: float = 1e-10,
                   max_iter: int = 500) -> float:
    """Minimize a unimodal ``h`` on ``[lo, hi]`` by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = h(x1), h(x2)
    for _ in range(max_iter):
        if b - a <= width:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = h(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = h(x2)
    return 0.5 * (a + b)


def prox_numeric_oracle_1d(objective: Callable[[float], float], a: float, lipschitz=None,
                           width: float = 1e-10, max_expansions: int = 60) -> float:
    """argmin_b 0.5 (a - b)^2 + objective(b), by bracketing then golden section.

    With ``lipschitz`` given the bracket is ``[a - lipschitz - 1, a + lipschitz + 1]``;
    otherwise the bracket around ``a`` is doubled until the minimizer is
    interior.
    """
    a = float(a)

    def h(b):
        return 0.5 * (a - b) ** 2 + objective(b)

    if lipschitz is not None:
        half = float(lipschitz) + 1.0
        return golden_section(h, a - half, a + half, width)
    half = 1.0
    for _ in range(max_expansions):
        b = golden_section(h, a - half, a + half, width)
        # a minimizer hugging an end of the bracket means the bracket is too small;
        # the margin is relative because golden section cannot resolve 2*width at large half
        margin = 0.01 * half + 2 * width
        if abs(b - (a - half)) > margin and abs(b - (a + half)) > margin:
            return b
        half *= 2.0
    raise OracleError(f"could not bracket the prox minimizer around a={a}")
