"""Solver reports, iteration settings and reproducible JSON output."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError
from .sequence import SparseSeq

__all__ = ["SolveReport", "IterationConfig", "CheckReport", "dumps17"]


@dataclass
class SolveReport:
    """Result of a solve.

    ``fixed_point_residual`` is the larger of the fixed-point residuals for
    the iterative l1 solvers and ``None`` elsewhere; the individual values
    live in ``residuals``.
    """

    solution: SparseSeq
    coefs: np.ndarray
    objective: float
    infimum_dual: float = math.nan
    interp_residual: float = math.nan
    fixed_point_residual: float | None = None
    iterations: int = 0
    converged: bool = True
    method: str = ""
    residuals: dict = field(default_factory=dict)

    @property
    def support(self) -> frozenset:
        return self.solution.support

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": bool(self.converged),
            "objective": float(self.objective),
            "infimum_dual": float(self.infimum_dual),
            "interp_residual": float(self.interp_residual),
            "fixed_point_residual": (
                None if self.fixed_point_residual is None else float(self.fixed_point_residual)
            ),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "iterations": int(self.iterations),
            "coefs": [float(v) for v in np.asarray(self.coefs).ravel()],
            "support": sorted(self.support),
            "solution": self.solution.to_json(),
        }


@dataclass(frozen=True)
class IterationConfig:
    """Settings for the iterative solvers.

    Step sizes left as ``None`` are chosen from a power-iteration estimate
    of the operator norm so that ``step_primal * step_dual * ||L||^2 = 0.95``.
    """

    max_iter: int = 200_000
    tol: float = 1e-9
    step_primal: float | None = None
    step_dual: float | None = None
    relaxation: float = 1.0
    check_every: int = 10

    def __post_init__(self):
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if not 0.0 <= self.relaxation <= 1.0:
            raise ParameterError("relaxation must lie in [0, 1]")
        for name in ("step_primal", "step_dual"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ParameterError(f"{name} must be positive")
        if self.check_every < 1:
            raise ParameterError("check_every must be at least 1")

    def primal_dual_steps(self, opnorm: float) -> tuple[float, float]:
        """(tau, sigma) satisfying tau * sigma * opnorm**2 < 1."""
        tau, sigma = self.step_primal, self.step_dual
        if opnorm == 0.0:
            return (tau or 1.0, sigma or 1.0)
        if tau is None and sigma is None:
            tau = sigma = math.sqrt(0.95) / opnorm
        elif tau is None:
            tau = 0.95 / (sigma * opnorm**2)
        elif sigma is None:
            sigma = 0.95 / (tau * opnorm**2)
        if tau * sigma * opnorm**2 >= 1.0:
            raise ParameterError(
                f"step sizes violate tau*sigma*||L||^2 < 1 (got {tau * sigma * opnorm**2:.4g})"
            )
        return tau, sigma


def _fmt(obj):
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            # strict JSON has no NaN/Infinity; "not available" and "diverged" both read as null
            return "null"
        return format(v, ".17g")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{_fmt(str(k))}: {_fmt(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps17(obj) -> str:
    """Strict JSON text with every float written to 17 significant digits; non-finite floats become null."""
    return _fmt(obj)


@dataclass
class CheckReport:
    """Outcome of one identity check; ``passed`` iff ``max_violation <= tolerance``."""

    name: str
    passed: bool
    max_violation: float
    details: str = ""
    tolerance: float = math.nan
    instance: int | None = None

    @classmethod
    def from_violation(cls, name: str, violation: float, tolerance: float, details: str = "",
                       instance: int | None = None):
        v = float(violation)
        return cls(name, bool(v <= tolerance), v, details, float(tolerance), instance)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "name": self.name,
            "passed": bool(self.passed),
            "max_violation": float(self.max_violation),
            "tolerance": float(self.tolerance),
            "details": self.details,
        }
