"""Command-line front end.

    cmosim price    --spec deal.deal --out results/
    cmosim compare  --spec deal.deal --out results/
    cmosim trace    --spec deal.deal --out results/ --trace-iteration 7
    cmosim validate --spec deal.deal

Exit status: 0 on success, 1 when the deal fails validation, 2 on any other
error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dealfile import DealSpecError, parse_deal_spec, read_deal_spec
from .pricer import compare_models, iteration_streams, run_iteration, run_simulation
from .report import atomic_write, comparison_dict, dumps, trace_csv, write_summary
from .types import CreditModel, validate

log = logging.getLogger("cmosim")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmosim", description="Monte Carlo CMO pricer")
    p.add_argument("command", choices=["price", "compare", "trace", "validate"])
    p.add_argument("--spec", required=True, help="deal file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--model", choices=[m.value for m in CreditModel])
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a deal-file entry, e.g. model.default_rate=0 (repeatable)",
    )
    p.add_argument("--trace-iteration", "--iteration", dest="trace_iteration", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _overrides(args) -> list[str]:
    # command-line shortcuts are just more overrides, applied before --set
    out = []
    if args.seed is not None:
        out.append(f"simulation.seed={args.seed}")
    if args.iterations is not None:
        out.append(f"simulation.iterations={args.iterations}")
    if args.model is not None:
        out.append(f"simulation.credit_model={args.model}")
    return out + list(args.overrides)


def _validate(args) -> int:
    try:
        text = Path(args.spec).read_text(encoding="utf-8")
        deal, params, config = read_deal_spec(text, _overrides(args))
    except OSError as exc:
        print(f"error: cannot read deal file: {exc}", file=sys.stderr)
        return 2
    except DealSpecError as exc:
        print(f"error: {args.spec}: {exc}", file=sys.stderr)
        return 1
    violations = validate(deal, params, config)
    for v in violations:
        print(v)
    if any(v.severity == "error" for v in violations):
        return 1
    print(f"{args.spec}: ok ({len(deal.tranches)} tranches)")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "validate":
        return _validate(args)
    try:
        text = Path(args.spec).read_text(encoding="utf-8")
        deal, params, config = parse_deal_spec(text, _overrides(args))
    except OSError as exc:
        print(f"error: cannot read deal file: {exc}", file=sys.stderr)
        return 2
    except DealSpecError as exc:
        print(f"error: {args.spec}: {exc}", file=sys.stderr)
        return 2
    for v in validate(deal, params, config):
        log.warning("%s", v)
    out = Path(args.out)
    try:
        if args.command == "price":
            summary = run_simulation(deal, params, config, workers=args.workers)
            write_summary(summary, out)
            for name, m, s in zip(summary.names, summary.mean, summary.std):
                print(f"{name:>8s}  mean {m:12.4f}  std {s:10.4f}")
        elif args.command == "compare":
            report = compare_models(deal, params, config, workers=args.workers)
            for summary in report.summaries:
                write_summary(summary, out, prefix=f"{summary.model}_")
            atomic_write(out / "comparison.json", dumps(comparison_dict(report)))
            print(
                f"mean difference {report.mean_difference:.4f}  t {report.t_statistic:.3f}  "
                f"p {report.p_value:.4g}  reject at {1 - report.alpha:.0%}: {report.reject}"
            )
        elif args.command == "trace":
            k = args.trace_iteration
            if not 0 <= k < config.iterations:
                print(f"error: --trace-iteration must be in [0, {config.iterations})", file=sys.stderr)
                return 2
            gens = iteration_streams(config.seed, k, config.credit_model)
            result = run_iteration(deal, params, gens, config.credit_model, config.copula_loans, trace=True)
            path = out / f"trace_iteration{k}.csv"
            atomic_write(path, trace_csv(result))
            print(f"wrote {path} (total value {result.total_value:.4f})")
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
