"""Command-line front end: run, synth, gradcheck.

Exit codes: 0 success, 1 runtime or config failure, 2 usage error.
Set D2TPT_THREADS to cap BLAS threads; it must be honored before numpy's
first import, which the package __init__ takes care of for this entry point.
"""

from __future__ import annotations

import argparse
import sys

from .bundle import read_bundle, synth_fixture, write_bundle
from .errors import EngineError
from .gradcheck import run_suite
from .optim import OptimHypers
from .pipeline import AGGREGATES, MODES, RunConfig, run_stream


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2tpt",
        description="retrieval-augmented test-time prompt adaptation over embedding bundles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="adapt and evaluate over a bundle")
    run.add_argument("--bundle", required=True, help="bundle directory")
    run.add_argument("--report", default="report.json", help="output report path")
    run.add_argument("--mode", choices=MODES, default="d2tpt")
    run.add_argument("--aggregate", choices=AGGREGATES, default="selected-mean")
    run.add_argument("--rho", type=float, default=0.1, help="confident-view fraction")
    run.add_argument("--rho-insert", type=float, default=None,
                     help="selection fraction for pseudo-labeling (default: --rho)")
    run.add_argument("--capacity", type=int, default=3, help="register capacity per class")
    run.add_argument("--lambda", dest="lam", type=float, default=1.0,
                     help="retrieval residual weight")
    run.add_argument("--gamma", type=float, default=5.0, help="retrieval sharpness")
    run.add_argument("--alpha", type=float, default=0.1, help="agreement-term weight")
    run.add_argument("--beta", type=float, default=0.001, help="cross-modal-term weight")
    run.add_argument("--lr", type=float, default=5e-3)
    run.add_argument("--beta1", type=float, default=0.9)
    run.add_argument("--beta2", type=float, default=0.999)
    run.add_argument("--eps", type=float, default=1e-8)
    run.add_argument("--weight-decay", type=float, default=0.01)
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--disable-kb", action="store_true",
                     help="skip retrieval entirely (keeps the rest of the objective)")
    run.add_argument("--disable-insert", action="store_true",
                     help="retrieve but never insert")

    synth = sub.add_parser("synth", help="write a deterministic synthetic bundle")
    synth.add_argument("--out", required=True, help="output bundle directory")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--classes", type=int, default=10)
    synth.add_argument("--dim", type=int, default=32)
    synth.add_argument("--views", type=int, default=16)
    synth.add_argument("--samples", type=int, default=200)
    synth.add_argument("--shift", type=float, default=0.6)
    synth.add_argument("--noise", type=float, default=0.3)

    grad = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    grad.add_argument("--trials", type=int, default=20)
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--tol", type=float, default=1e-4)
    grad.add_argument("--fd-step", type=float, default=1e-5)
    grad.add_argument("--perturb-grad", type=float, default=0.0,
                      help="fault injection: corrupt the analytic gradient by this much")
    return parser


def cmd_run(args) -> int:
    config = RunConfig(
        rho=args.rho,
        rho_insert=args.rho_insert,
        capacity=args.capacity,
        lam=args.lam,
        gamma=args.gamma,
        alpha=args.alpha,
        beta=args.beta,
        optim=OptimHypers(
            lr=args.lr,
            beta1=args.beta1,
            beta2=args.beta2,
            eps=args.eps,
            weight_decay=args.weight_decay,
        ),
        seed=args.seed,
        mode=args.mode,
        aggregate=args.aggregate,
        kb_enabled=not args.disable_kb,
        kb_insert=not args.disable_insert,
    )
    manifest, text_pair, samples = read_bundle(args.bundle)
    report, _ = run_stream(manifest, text_pair, samples, config)
    with open(args.report, "w", encoding="utf-8") as f:
        f.write(report.to_json())
    print(
        f"mode={config.mode} accuracy={report.accuracy:.4f}% "
        f"baseline={report.baseline_accuracy:.4f}% "
        f"samples={report.num_samples} report={args.report}"
    )
    return 0


def cmd_synth(args, parser) -> int:
    if args.classes < 2:
        parser.error(f"--classes must be >= 2, got {args.classes}")
    if args.dim < args.classes:
        parser.error(f"--dim must be >= --classes, got {args.dim} < {args.classes}")
    if args.views < 1 or args.samples < 1:
        parser.error("--views and --samples must be >= 1")
    manifest, text_gen, text_spe, records = synth_fixture(
        seed=args.seed,
        classes=args.classes,
        dim=args.dim,
        views=args.views,
        samples=args.samples,
        shift=args.shift,
        noise=args.noise,
    )
    write_bundle(manifest, text_gen, text_spe, records, args.out)
    print(
        f"wrote bundle: {args.out} classes={args.classes} dim={args.dim} "
        f"views={args.views} samples={args.samples} seed={args.seed}"
    )
    return 0


def cmd_gradcheck(args) -> int:
    result = run_suite(
        trials=args.trials,
        seed=args.seed,
        perturb_grad=args.perturb_grad,
        h=args.fd_step,
    )
    print(
        f"max relative error {result.max_rel_err:.3e} over {len(result.trials)} "
        f"trials in {result.elapsed_s:.2f}s (tol {args.tol:.1e})"
    )
    return 0 if result.max_rel_err < args.tol else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "synth":
            return cmd_synth(args, parser)
        if args.command == "gradcheck":
            return cmd_gradcheck(args)
    except (EngineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command!r}")


def entry() -> None:
    sys.exit(main())
