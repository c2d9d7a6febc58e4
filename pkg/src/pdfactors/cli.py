"""Command-line entry point: ``pdfactors <subcommand> [flags]``.

Every subcommand accepts ``--output PATH`` and ``--format csv|json``;
without ``--output`` the result goes to stdout. Seeds default to 0.
Exit codes: 0 success, 2 usage, 3 hypothesis violation, 4 capacity or
infeasibility.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import arith
from .errors import PDFactorsError, UsageError
from .experiments import ExperimentConfig, run_experiment
from .intensity import IntervalFamily
from .pdcore import dickman_rho, sample_gem, sample_pd
from .report import fmt
from .semigroups import parse_semigroup, semigroup_mertens

log = logging.getLogger("pdfactors")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _u64(text: str) -> int:
    try:
        value = int(float(text)) if ("e" in text.lower() and "." not in text) else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an unsigned integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{value} is outside [0, 2^64)")
    return value


def _positive_int(text: str) -> int:
    value = _u64(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {text!r}")
    return value


def _intervals(text: str) -> IntervalFamily:
    try:
        return IntervalFamily.parse(text)
    except PDFactorsError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", type=Path, help="write here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdfactors", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw GEM or PD sequences")
    p.add_argument("--process", choices=("gem", "pd"), required=True)
    p.add_argument("--theta", type=_positive_float, required=True)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("--seed", type=_u64, default=0)
    _common(p)

    p = sub.add_parser("dickman", help="evaluate Dickman's rho")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--u", type=float)
    g.add_argument("--grid", help="A:B:STEP")
    _common(p)

    p = sub.add_parser("mertens", help="sum of 1/p up to a limit")
    p.add_argument("--limit", type=_u64, required=True)
    p.add_argument("--semigroup", default="integers")
    _common(p)

    p = sub.add_parser("selberg", help="main terms for counts of integers with j prime factors")
    p.add_argument("--x", type=_u64, required=True)
    p.add_argument("--j", type=_positive_int, required=True)
    p.add_argument("--mode", choices=arith.MODES, required=True)
    p.add_argument("--exact", action="store_true", help="also count exactly by sieving")
    _common(p)

    defaults = ExperimentConfig("billingsley")
    p = sub.add_parser("billingsley", help="spectra of uniform semigroup elements vs PD(theta)")
    p.add_argument("--semigroup", default="integers")
    p.add_argument("--n", type=_u64, default=defaults.n)
    p.add_argument("--samples", type=_positive_int, default=defaults.samples)
    p.add_argument("--topk", type=_positive_int, default=defaults.topk)
    p.add_argument("--intervals", type=_intervals)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--workers", type=_positive_int, default=defaults.workers)
    _common(p)

    p = sub.add_parser("conditioned", help="integers with a prescribed number of prime factors")
    p.add_argument("--mode", choices=arith.MODES, required=True)
    p.add_argument("--tau", type=_positive_float, required=True)
    p.add_argument("--n", type=_u64, default=defaults.n)
    p.add_argument("--samples", type=_positive_int, default=10**4)
    p.add_argument("--topk", type=_positive_int, default=defaults.topk)
    p.add_argument("--intervals", type=_intervals)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--workers", type=_positive_int, default=defaults.workers)
    _common(p)

    p = sub.add_parser("erdos-kac", help="normalised number of prime factors vs the normal law")
    p.add_argument("--n", type=_u64, default=defaults.n)
    p.add_argument("--samples", type=_positive_int, default=defaults.samples)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--workers", type=_positive_int, default=defaults.workers)
    _common(p)

    p = sub.add_parser("intensity", help="multi-intensity of PD(theta) over interval boxes")
    p.add_argument("--theta", type=_positive_float, default=1.0)
    p.add_argument("--samples", type=_positive_int, default=defaults.samples)
    p.add_argument("--intervals", type=_intervals, required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--workers", type=_positive_int, default=defaults.workers)
    _common(p)
    return parser


def _table(header, rows, format: str) -> str:
    if format == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    lines = [",".join(header)] + [",".join(fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}; expected A:B:STEP") from None
    if not (step > 0 and a <= b):
        raise UsageError("grid needs A <= B and STEP > 0")
    m = int(math.floor((b - a) / step + 1e-9))
    return a + step * np.arange(m + 1)


def _cmd_sample(args) -> str:
    rows = []
    for i in range(args.count):
        if args.process == "gem":
            values = sample_gem(args.theta, args.k, args.seed, i).values
        else:
            values = sample_pd(args.theta, args.k, seed=args.seed, stream=i).top(args.k)
        rows += [(i, j + 1, float(v)) for j, v in enumerate(values)]
    return _table(("draw", "index", "value"), rows, args.format)


def _cmd_dickman(args) -> str:
    us = np.array([args.u]) if args.u is not None else _parse_grid(args.grid)
    values = np.atleast_1d(dickman_rho(us))
    if args.u is not None and args.format == "csv" and args.output is None:
        return f"{fmt(values[0])}\n"
    return _table(("u", "rho"), [(float(u), float(v)) for u, v in zip(us, values)], args.format)


def _cmd_mertens(args) -> str:
    if args.limit < 3:
        raise UsageError("--limit must be at least 3")
    spec = parse_semigroup(args.semigroup)
    if spec.name == "integers":
        total = arith.mertens_sum(args.limit)
        offset = total - math.log(math.log(args.limit))
    else:
        total, offset = semigroup_mertens(spec, args.limit)
    return _table(("semigroup", "limit", "theta", "sum", "constant_estimate"),
                  [(spec.label, args.limit, spec.theta, total, offset)], args.format)


def _cmd_selberg(args) -> str:
    if args.x < 3:
        raise UsageError("--x must be at least 3")
    ll = math.log(math.log(args.x))
    if args.mode == "small-omega":
        formula = "small-omega"
    else:
        formula = "big-omega-small-j" if args.j <= 2 * ll else "big-omega-large-j"
    main = arith.selberg_approx(args.x, args.j, formula)
    header = ["x", "j", "mode", "formula", "main_term"]
    row = [args.x, args.j, args.mode, formula, main]
    if args.exact:
        exact = arith.nu_count(args.x, args.j, args.mode)
        header += ["exact", "relative_error"]
        row += [exact, abs(main - exact) / exact if exact else None]
    return _table(header, [row], args.format)


def _experiment_config(args) -> ExperimentConfig:
    kind = args.command
    kw = dict(kind=kind, samples=args.samples, seed=args.seed, workers=args.workers)
    if kind != "intensity":
        kw["n"] = args.n
        if args.n < 3:
            raise UsageError("--n must be at least 3")
    if kind == "billingsley":
        parse_semigroup(args.semigroup)
        kw.update(semigroup=args.semigroup, topk=args.topk, intervals=args.intervals)
    elif kind == "conditioned":
        kw.update(mode=args.mode, tau=args.tau, topk=args.topk, intervals=args.intervals)
    elif kind == "intensity":
        kw.update(theta=args.theta, intervals=args.intervals)
    if kind in ("billingsley", "conditioned") and args.intervals is not None \
            and not args.intervals.sum_b_lt_1:
        log.warning("intervals %s have b_1 + ... + b_k >= 1", args.intervals)
    return ExperimentConfig(**kw)


def _run_experiment(args) -> str | None:
    report = run_experiment(_experiment_config(args))
    for w in report.warnings:
        log.warning(w)
    if args.output is not None:
        report.write(args.output, args.format)
        return None
    return report.to_json() if args.format == "json" else report.statistics_csv()


_COMMANDS = {"sample": _cmd_sample, "dickman": _cmd_dickman, "mertens": _cmd_mertens,
             "selberg": _cmd_selberg, "billingsley": _run_experiment,
             "conditioned": _run_experiment, "erdos-kac": _run_experiment,
             "intensity": _run_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        text = _COMMANDS[args.command](args)
    except PDFactorsError as exc:
        print(f"pdfactors {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"pdfactors {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if text is not None:
        _emit(text, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
