"""Problem files: one JSON schema for interpolation and regularization.

Schema (keys beyond these are rejected)::

    {
      "space": "l1" | "hilbert" | {"kind": "lp", "p": 3.0} | {"kind": ...},
      "rows": [[[index, value], ...], ...],      # one sparse row per datum
      "y": [number, ...],                          # same length as rows
      "loss": {"kind": "square" | "hinge" | "eps_insensitive", "eps": number},
      "lambda": number,
      "regularizer": {"kind": "identity" | "square" | "power", "r": number},
      "config": {"max_iter": int, "tol": number, "step_primal": number,
                 "step_dual": number, "relaxation": number, "check_every": int}
    }

``loss`` and ``lambda`` must appear together; their presence selects the
regularization problem, their absence minimum-norm interpolation.
``regularizer`` defaults to the identity in l1 and the square elsewhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DimensionMismatchError, ParameterError, ParseError, SchemaError
from .prox import LossSpec
from .regularization import RegProblem, Regularizer
from .report import IterationConfig
from .sampling import SamplingOperator
from .sequence import Space, SparseSeq

__all__ = ["ProblemInstance", "load_problem", "parse_problem", "dump_problem"]

_TOP_KEYS = {"space", "rows", "y", "loss", "lambda", "regularizer", "config"}
_CONFIG_KEYS = {"max_iter", "tol", "step_primal", "step_dual", "relaxation", "check_every"}


@dataclass
class ProblemInstance:
    space: Space
    rows: list
    y: np.ndarray
    loss: LossSpec | None = None
    lam: float | None = None
    regularizer: Regularizer | None = None
    config: dict = field(default_factory=dict)

    @property
    def mode(self) -> str:
        return "regularization" if self.loss is not None else "mni"

    def operator(self) -> SamplingOperator:
        return SamplingOperator(self.rows)

    def iteration_config(self, **overrides) -> IterationConfig:
        merged = {**self.config, **{k: v for k, v in overrides.items() if v is not None}}
        return IterationConfig(**merged)

    def reg_problem(self, op: SamplingOperator | None = None) -> RegProblem:
        if self.mode != "regularization":
            raise ParameterError("instance has no loss/lambda, so it is not a regularization problem")
        reg = self.regularizer or Regularizer(1.0 if self.space.kind == "l1" else 2.0)
        return RegProblem(op or self.operator(), self.space, self.loss, self.lam, reg)

    def to_json(self) -> dict:
        out = {"space": self.space.to_json(), "rows": [r.to_json() for r in self.rows],
               "y": [float(v) for v in self.y]}
        if self.loss is not None:
            out["loss"] = self.loss.to_json()
            out["lambda"] = self.lam
        if self.regularizer is not None:
            out["regularizer"] = self.regularizer.to_json()
        if self.config:
            out["config"] = dict(self.config)
        return out

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (self.space == other.space and self.rows == other.rows
                and np.array_equal(self.y, other.y) and self.loss == other.loss
                and self.lam == other.lam and self.regularizer == other.regularizer
                and self.config == other.config)


def _number(v, path) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"expected a number, got {type(v).__name__}", path)
    if not math.isfinite(v):
        raise SchemaError("expected a finite number", path)
    return float(v)


def _object(v, path) -> dict:
    if not isinstance(v, dict):
        raise SchemaError(f"expected an object, got {type(v).__name__}", path)
    return v


def _space(v) -> Space:
    if isinstance(v, str):
        v = {"kind": v}
    v = _object(v, "space")
    kind = v.get("kind")
    if kind not in ("hilbert", "l1", "lp"):
        raise SchemaError(f"kind must be hilbert, l1 or lp, got {kind!r}", "space.kind")
    extra = set(v) - ({"kind", "p"} if kind == "lp" else {"kind"})
    if extra:
        raise SchemaError(f"unexpected keys {sorted(extra)}", "space")
    if kind == "lp":
        if "p" not in v:
            raise SchemaError("lp needs an exponent p", "space.p")
        # Space raises ParameterError for p <= 1 or infinite p
        return Space("lp", _number(v["p"], "space.p"))
    return Space(kind)


def _rows(v) -> list:
    if not isinstance(v, list) or not v:
        raise SchemaError("expected a nonempty list of rows", "rows")
    rows = []
    for j, row in enumerate(v):
        path = f"rows[{j}]"
        if not isinstance(row, list):
            raise SchemaError("expected a list of [index, value] pairs", path)
        for k, pair in enumerate(row):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise SchemaError("expected an [index, value] pair", f"{path}[{k}]")
            i, val = pair
            if isinstance(i, bool) or not isinstance(i, int) or i < 0:
                raise SchemaError("index must be a nonnegative integer", f"{path}[{k}][0]")
            _number(val, f"{path}[{k}][1]")
        rows.append(SparseSeq.from_json(row))
    return rows


def _loss(v, y) -> LossSpec:
    v = _object(v, "loss")
    kind = v.get("kind")
    if kind not in ("square", "hinge", "eps_insensitive"):
        raise SchemaError(f"kind must be square, hinge or eps_insensitive, got {kind!r}", "loss.kind")
    allowed = {"kind", "eps"} if kind == "eps_insensitive" else {"kind"}
    extra = set(v) - allowed
    if extra:
        raise SchemaError(f"unexpected keys {sorted(extra)}", "loss")
    eps = _number(v["eps"], "loss.eps") if "eps" in v else 0.0
    if kind == "eps_insensitive" and "eps" not in v:
        raise SchemaError("eps_insensitive needs eps", "loss.eps")
    return LossSpec(kind, y, eps)


def _regularizer(v) -> Regularizer:
    v = _object(v, "regularizer")
    kind = v.get("kind")
    if kind == "identity":
        reg = Regularizer.identity()
    elif kind == "square":
        reg = Regularizer.square()
    elif kind == "power":
        if "r" not in v:
            raise SchemaError("power needs an exponent r", "regularizer.r")
        reg = Regularizer(_number(v["r"], "regularizer.r"))
    else:
        raise SchemaError(f"kind must be identity, square or power, got {kind!r}", "regularizer.kind")
    extra = set(v) - ({"kind", "r"} if kind == "power" else {"kind"})
    if extra:
        raise SchemaError(f"unexpected keys {sorted(extra)}", "regularizer")
    return reg


def _config(v) -> dict:
    v = _object(v, "config")
    extra = set(v) - _CONFIG_KEYS
    if extra:
        raise SchemaError(f"unexpected keys {sorted(extra)}", "config")
    out = {}
    for key, val in v.items():
        if key in ("max_iter", "check_every"):
            if isinstance(val, bool) or not isinstance(val, int):
                raise SchemaError("expected an integer", f"config.{key}")
            out[key] = val
        else:
            out[key] = _number(val, f"config.{key}")
    IterationConfig(**out)  # domain checks
    return out


def parse_problem(data) -> ProblemInstance:
    """Validate decoded JSON and build a :class:`ProblemInstance`."""
    data = _object(data, "")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise SchemaError(f"unexpected keys {sorted(extra)}", "")
    for key in ("space", "rows", "y"):
        if key not in data:
            raise SchemaError("missing required field", key)
    space = _space(data["space"])
    rows = _rows(data["rows"])
    if not isinstance(data["y"], list):
        raise SchemaError("expected a list of numbers", "y")
    y = np.array([_number(v, f"y[{k}]") for k, v in enumerate(data["y"])])
    if y.size != len(rows):
        raise DimensionMismatchError(f"y has {y.size} entries but there are {len(rows)} rows")
    has_loss, has_lam = "loss" in data, "lambda" in data
    if has_loss != has_lam:
        missing = "lambda" if has_loss else "loss"
        raise SchemaError("loss and lambda must be given together", missing)
    loss = lam = None
    if has_loss:
        loss = _loss(data["loss"], y)
        lam = _number(data["lambda"], "lambda")
        if lam <= 0:
            raise SchemaError("lambda must be positive", "lambda")
    reg = _regularizer(data["regularizer"]) if "regularizer" in data else None
    if reg is not None and not has_loss:
        raise SchemaError("a regularizer needs loss and lambda", "regularizer")
    config = _config(data["config"]) if "config" in data else {}
    return ProblemInstance(space, rows, y, loss, lam, reg, config)


def load_problem(path) -> ProblemInstance:
    """Read and validate a problem file.

    Raises :class:`ParseError` for unreadable JSON, :class:`SchemaError`
    (with the offending field path) for structural problems,
    :class:`DimensionMismatchError` when ``y`` and ``rows`` disagree and
    :class:`ParameterError` for out-of-domain values such as ``p <= 1``.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_problem(data)


def dump_problem(instance: ProblemInstance) -> str:
    return json.dumps(instance.to_json(), indent=2)
