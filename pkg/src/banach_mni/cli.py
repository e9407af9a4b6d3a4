"""Command-line front end.

Exit codes: 0 on success, 2 when a solver does not converge or a
verification check fails, 1 on input errors and unknown commands.
Reports go to stdout (or ``--out``) as JSON with 17 significant digits.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import __version__
from .exceptions import BanachMNIError, NonConvergenceError
from .io import load_problem
from .lp_oracle import basis_pursuit, dual_inf_norm_lp, reconstruct_from_dual
from .mni import solve_mni
from .prox import (
    LossSpec,
    prox_eps_insensitive,
    prox_hinge,
    prox_indicator_conj,
    prox_square,
    prox_vector_loss_conj,
)
from .regularization import solve_reg
from .report import dumps17
from .verification import SUITES, run_suite
from . import kernels

__all__ = ["main", "run_command", "build_parser"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2

log = logging.getLogger("banach_mni")


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; this CLI reserves 2 for non-convergence."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _InputError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, iterative: bool = True) -> None:
    if iterative:
        p.add_argument("--tol", type=float, help="stopping tolerance (default 1e-9)")
        p.add_argument("--max-iter", type=int, help="iteration cap (default 200000)")
    p.add_argument("--out", help="write the report to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="banach-mni", description="Minimum-norm interpolation and regularization in l1, lp and l2.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", metavar="{mni,reg,oracle,verify,prox}", parser_class=_Parser)
    groups.required = True

    mni = groups.add_parser("mni", help="minimum-norm interpolation").add_subparsers(dest="action", parser_class=_Parser)
    mni.required = True
    p = mni.add_parser("solve", help="solve the interpolation problem in the file's space")
    p.add_argument("problem")
    _common(p)

    reg = groups.add_parser("reg", help="regularized fitting").add_subparsers(dest="action", parser_class=_Parser)
    reg.required = True
    p = reg.add_parser("solve", help="solve the regularization problem in the file")
    p.add_argument("problem")
    _common(p)

    oracle = groups.add_parser("oracle", help="linear-programming reference for l1").add_subparsers(
        dest="action", parser_class=_Parser)
    oracle.required = True
    p = oracle.add_parser("bp", help="basis pursuit LP: min ||x||_1 s.t. L x = y")
    p.add_argument("problem")
    _common(p, iterative=False)
    p = oracle.add_parser("dual", help="coefficient LP: min ||L^* c||_inf s.t. <c, y> = 1, plus reconstruction")
    p.add_argument("problem")
    _common(p, iterative=False)

    verify = groups.add_parser("verify", help="identity checks on random instances").add_subparsers(
        dest="action", parser_class=_Parser)
    verify.required = True
    p = verify.add_parser("suite", help="run the seeded verification suite (JSON lines)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100, help="number of random instances (default 100)")
    p.add_argument("--suites", default=",".join(SUITES), help=f"comma-separated subset of {','.join(SUITES)}")
    _common(p)

    prox = groups.add_parser("prox", help="closed-form proximity operators").add_subparsers(
        dest="action", parser_class=_Parser)
    prox.required = True
    p = prox.add_parser("eval", help="evaluate a scalar prox")
    p.add_argument("--loss", required=True,
                   choices=["hinge", "eps_insensitive", "square", "soft_threshold", "indicator_conj"])
    p.add_argument("--a", type=float, required=True, help="point to evaluate at")
    p.add_argument("--y", type=float, default=0.0, help="datum (label for hinge)")
    p.add_argument("--eps", type=float, default=None, help="tube width for eps_insensitive")
    p.add_argument("--sigma", type=float, default=1.0, help="scale of the function (default 1)")
    p.add_argument("--conjugate", action="store_true", help="prox of the conjugate, via Moreau")
    _common(p, iterative=False)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _cfg(inst, args):
    return inst.iteration_config(tol=args.tol, max_iter=args.max_iter)


def _report_exit(report, args, extra: dict) -> int:
    payload = {**extra, **report.to_dict()}
    _emit(dumps17(payload), args.out)
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def _cmd_mni(args) -> int:
    inst = load_problem(args.problem)
    if inst.mode != "mni":
        raise _InputError("the file poses a regularization problem; use `reg solve`")
    rep = solve_mni(inst.operator(), inst.y, inst.space, _cfg(inst, args))
    return _report_exit(rep, args, {"mode": "mni", "space": inst.space.to_json()})


def _cmd_reg(args) -> int:
    inst = load_problem(args.problem)
    if inst.mode != "regularization":
        raise _InputError("the file has no loss/lambda; use `mni solve`")
    problem = inst.reg_problem()
    rep = solve_reg(problem, _cfg(inst, args))
    return _report_exit(rep, args, {"mode": "regularization", "space": inst.space.to_json(),
                                    "loss": inst.loss.to_json(), "lambda": inst.lam,
                                    "regularizer": problem.regularizer.to_json()})


def _l1_instance(args):
    inst = load_problem(args.problem)
    if inst.space.kind != "l1":
        raise _InputError(f"the LP oracle solves l1 problems, the file is posed in {inst.space}")
    return inst, inst.operator()


def _cmd_oracle_bp(args) -> int:
    inst, op = _l1_instance(args)
    rep = basis_pursuit(op, inst.y)
    return _report_exit(rep, args, {"mode": "oracle_bp"})


def _cmd_oracle_dual(args) -> int:
    inst, op = _l1_instance(args)
    c_hat, value = dual_inf_norm_lp(op, inst.y)
    g = reconstruct_from_dual(op, inst.y, c_hat)
    payload = {
        "mode": "oracle_dual",
        "c_hat": [float(v) for v in c_hat],
        "dual_value": value,
        "infimum": 1.0 / value,
        "multiplier": [float(v) for v in -float(np.abs(g.values).sum()) * c_hat],
        "solution": g.to_json(),
        "objective": float(np.abs(g.values).sum()),
    }
    _emit(dumps17(payload), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    suites = tuple(s.strip() for s in args.suites.split(",") if s.strip())
    unknown = [s for s in suites if s not in SUITES]
    if unknown or not suites:
        raise _InputError(f"unknown suites {unknown}; choose from {','.join(SUITES)}")
    if args.count < 0:
        raise _InputError("--count must be nonnegative")
    from .report import IterationConfig

    cfg = IterationConfig(**{k: v for k, v in (("tol", args.tol), ("max_iter", args.max_iter)) if v is not None})
    t0 = time.perf_counter()
    reports = run_suite(None, seeds=args.count, seed=args.seed, suites=suites, cfg=cfg)
    log.info("verify suite: %d checks in %.2f s", len(reports), time.perf_counter() - t0)
    failed = sum(not r.passed for r in reports)
    lines = [dumps17(r.to_dict()) for r in reports]
    lines.append(dumps17({"summary": {"seed": args.seed, "instances": args.count, "suites": list(suites),
                                      "checks": len(reports), "failed": failed}}))
    _emit("\n".join(lines), args.out)
    return EXIT_OK if failed == 0 else EXIT_NONCONVERGED


def _cmd_prox(args) -> int:
    kind, a, y, sigma = args.loss, args.a, args.y, args.sigma
    if not sigma > 0:
        raise _InputError("--sigma must be positive")
    if args.eps is not None and kind != "eps_insensitive":
        raise _InputError("--eps only applies to eps_insensitive")
    if kind == "soft_threshold":
        if args.conjugate:
            value = float(np.clip(a, -sigma, sigma))
        else:
            value = float(kernels.soft_threshold_dense(np.array([a]), sigma)[0])
    elif kind == "indicator_conj":
        # conjugate of the indicator of {y} is t -> t*y; its own prox is the constant y
        value = y if args.conjugate else float(prox_indicator_conj(np.array([a]), np.array([y]), sigma)[0])
    else:
        loss = LossSpec(kind, [y], args.eps if args.eps is not None else 0.0)
        if args.conjugate:
            value = float(prox_vector_loss_conj([a], loss, sigma)[0])
        elif kind == "hinge":
            value = prox_hinge(a, y, sigma)
        elif kind == "eps_insensitive":
            value = prox_eps_insensitive(a, y, loss.eps, sigma)
        else:
            value = float(prox_square(a, y, sigma))
    payload = {"loss": kind, "a": a, "y": y, "sigma": sigma, "conjugate": bool(args.conjugate), "prox": value}
    if kind == "eps_insensitive":
        payload["eps"] = args.eps
    _emit(dumps17(payload), args.out)
    return EXIT_OK


_DISPATCH = {
    ("mni", "solve"): _cmd_mni,
    ("reg", "solve"): _cmd_reg,
    ("oracle", "bp"): _cmd_oracle_bp,
    ("oracle", "dual"): _cmd_oracle_dual,
    ("verify", "suite"): _cmd_verify,
    ("prox", "eval"): _cmd_prox,
}


def run_command(argv) -> int:
    """Parse ``argv`` (without the program name), run it and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[(args.group, args.action)](args)
    except _InputError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    except NonConvergenceError as exc:
        _emit(dumps17({"error": str(exc), "converged": False, "best_residual": exc.best_residual}),
              getattr(args, "out", None))
        return EXIT_NONCONVERGED
    except BanachMNIError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
