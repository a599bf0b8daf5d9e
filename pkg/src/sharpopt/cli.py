"""Command-line surface.

Subcommands: run, sweep, toy, eig, bound, check-grad. Exit codes: 0 on
success, 1 for validation problems, 2 for numeric failures, 3 for I/O.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .analysis import GenBoundInputs, classify_minimum, generalization_bound, power_iteration
from .config import ConfigError, parse_config, parse_sweep_config, toy_preset
from .core import l2_norm
from .objectives import check_gradients
from .runner import (
    NumericBlowup,
    build_objective,
    emit,
    format_sweep,
    format_trajectory,
    initial_w,
    run,
    sweep,
)
from .sam import MODES

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; 2 means numeric failure here,
    # so route usage problems to the validation code instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sharpopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="execute one configured optimization run")
    p_run.add_argument("--config", required=True, help="path to an INI run document")
    p_run.add_argument("--out", default=None, help="override the output path")
    p_run.add_argument("--format", default=None, choices=("csv", "jsonl"))

    p_sweep = sub.add_parser("sweep", help="run every cell of a hyperparameter grid")
    p_sweep.add_argument("--config", required=True, help="config with a [sweep] section")
    p_sweep.add_argument("--out", default=None, help="table destination (default stdout)")
    p_sweep.add_argument("--format", default="csv", choices=("csv", "jsonl"))

    p_toy = sub.add_parser("toy", help="two-minima trajectory demo")
    p_toy.add_argument("--gamma", type=float, required=True)
    p_toy.add_argument("--mode", default="coupled", choices=MODES)
    p_toy.add_argument("--steps", type=int, default=150)
    p_toy.add_argument("--seed", type=int, default=0)
    p_toy.add_argument("--record-every", type=int, default=1)
    p_toy.add_argument("--out", default=None, help="CSV destination (default stdout)")
    p_toy.add_argument("--format", default="csv", choices=("csv", "jsonl"))

    p_eig = sub.add_parser("eig", help="dominant Hessian eigenvalue of a configured run")
    p_eig.add_argument("--config", required=True)
    p_eig.add_argument("--at", default="final", choices=("final", "init"))

    p_bound = sub.add_parser("bound", help="generalization-bound calculator")
    p_bound.add_argument("--d", type=int, required=True, help="VC dimension")
    p_bound.add_argument("--m", type=int, required=True, help="sample count")
    p_bound.add_argument("--n", type=int, required=True, help="parameter dimension")
    p_bound.add_argument("--rho", type=float, required=True)
    p_bound.add_argument("--gamma", type=float, required=True)
    p_bound.add_argument("--delta", type=float, required=True)
    p_bound.add_argument("--wnorm", type=float, required=True)
    p_bound.add_argument("--loss", type=float, required=True, help="empirical weighted loss")

    sub.add_parser("check-grad", help="analytic gradients vs the finite-difference oracle")
    return parser


def _load_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _cmd_run(args) -> int:
    cfg = parse_config(_load_text(args.config))
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out=args.out)
    if args.format is not None:
        cfg = dataclasses.replace(cfg, out_format=args.format)
    obj = build_objective(cfg)
    traj = run(cfg, obj)
    text = format_trajectory(traj, cfg.out_format, cfg.record_every)
    summary = (
        f"steps={cfg.steps} final_loss={obj.loss(traj.final_w):.6g} "
        f"final_grad_norm={l2_norm(obj.grad(traj.final_w)):.6g}"
    )
    if cfg.objective.kind == "toy":
        summary += f" minimum={classify_minimum(traj.final_w)}"
    if cfg.out is not None:
        n = emit(text, cfg.out)
        print(f"{summary} wrote={n}B path={cfg.out}")
    else:
        emit(text, None)
        print(summary, file=sys.stderr)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg, spec = parse_sweep_config(_load_text(args.config))
    rows = sweep(cfg, spec)
    text = format_sweep(rows, args.format)
    diverged = sum(1 for r in rows if r.status != "ok")
    if args.out is not None:
        n = emit(text, args.out)
        print(f"cells={len(rows)} diverged={diverged} wrote={n}B path={args.out}")
    else:
        emit(text, None)
        print(f"cells={len(rows)} diverged={diverged}", file=sys.stderr)
    return EXIT_OK


def _cmd_toy(args) -> int:
    cfg = toy_preset(gamma=args.gamma, mode=args.mode, steps=args.steps, seed=args.seed)
    if args.record_every < 1:
        raise ConfigError("record_every must be >= 1")
    traj = run(cfg)
    text = format_trajectory(traj, args.format, args.record_every)
    if args.out is not None:
        n = emit(text, args.out)
        print(f"minimum={classify_minimum(traj.final_w)} wrote={n}B path={args.out}")
    else:
        emit(text, None)
    return EXIT_OK


def _cmd_eig(args) -> int:
    cfg = parse_config(_load_text(args.config))
    obj = build_objective(cfg)
    if args.at == "final":
        w = run(cfg, obj).final_w
    else:
        w = initial_w(cfg, obj)
    est = power_iteration(obj, w, seed=cfg.seed)
    print(
        f"lambda_max={est.lambda_max:.17g} iterations={est.iterations_used} "
        f"residual={est.residual:.3g}"
    )
    return EXIT_OK


def _cmd_bound(args) -> int:
    inp = GenBoundInputs(
        vc_dim=args.d, sample_count=args.m, param_dim=args.n, rho=args.rho,
        gamma=args.gamma, delta=args.delta, weight_norm=args.wnorm,
        empirical_wsam_loss=args.loss,
    )
    print(f"{generalization_bound(inp):.17g}")
    return EXIT_OK


def _cmd_check_grad(args) -> int:
    results = check_gradients()
    failed = False
    for name, worst, ok in results:
        marker = "ok" if ok else "FAIL"
        print(f"{name}: max relative error {worst:.3e} ({marker})")
        failed = failed or not ok
    return EXIT_NUMERIC if failed else EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "toy": _cmd_toy,
        "eig": _cmd_eig,
        "bound": _cmd_bound,
        "check-grad": _cmd_check_grad,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"sharpopt: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericBlowup as exc:
        rec = exc.last_finite_record
        detail = ""
        if rec is not None:
            detail = f" (last finite step {rec.t}, loss {rec.loss:.6g})"
        print(f"sharpopt: {exc}{detail}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"sharpopt: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
