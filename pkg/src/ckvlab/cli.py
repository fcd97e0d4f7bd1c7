"""Command-line entry point.

Exit status: 0 success, 2 invalid arguments, 3 numerical failure (singular or
indefinite metric), 4 ambiguous spectrum under ``--strict``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import jets
from .ckv_solver import SolverConfig, count_ckv
from .errors import NumericalError, ValidationError
from .metrics import FACTORS, METRIC_LABELS, get_metric
from .perturbation import DEFAULT_EPS, conformal_invariance_check, run_battery
from .report import SCHEMA, dumps, to_csv

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_AMBIGUOUS = 0, 2, 3, 4

COMMANDS = ("ckv-count", "jet-scan", "perturb-run", "invariance-check")
REPORT_COLUMNS = ("metric", "mode", "n", "d", "m", "rel_tol", "nullity", "gap_ratio", "ambiguous")
TRIAL_COLUMNS = ("seed", "eps", "before", "after", "ambiguous", "valid")
MAX_NODES = 200_000
INVARIANCE_COLUMNS = ("factor", "n", "d", "m", "nullity_g", "nullity_cg", "agree", "ambiguous")


@dataclass
class RunConfig:
    command: str
    metric: str = "flat"
    n: int = 3
    solver: SolverConfig = field(default_factory=SolverConfig)
    eps: float = DEFAULT_EPS
    trials: int = 20
    seed: int = 0
    factor: str | None = None
    n_range: tuple[int, ...] = tuple(range(2, 9))
    k_range: tuple[int, ...] = tuple(range(0, 11))
    out: str = "-"
    format: str = "json"
    strict: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.metric not in METRIC_LABELS:
            raise ValidationError(f"--metric: unknown label {self.metric!r}; choose from {list(METRIC_LABELS)}")
        if self.factor is not None and self.factor not in FACTORS:
            raise ValidationError(f"--factor: unknown label {self.factor!r}; choose from {sorted(FACTORS)}")
        if self.format not in ("json", "csv"):
            raise ValidationError(f"--format must be json or csv, got {self.format!r}")
        if self.command == "jet-scan":
            if min(self.n_range) < 2 or min(self.k_range) < 0:
                raise ValidationError("--n must be >= 2 and --k >= 0 for jet-scan")
            return
        if self.n < 2:
            raise ValidationError(f"--n must be >= 2, got {self.n}")
        if self.trials < 1:
            raise ValidationError(f"--trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ValidationError(f"--seed must be non-negative, got {self.seed}")
        if self.solver.grid ** self.n > MAX_NODES:
            raise ValidationError(f"--grid {self.solver.grid} in dimension {self.n} exceeds {MAX_NODES} collocation nodes")
        self.solver.check_rows(self.n)


def _int_range(text: str) -> tuple[int, ...]:
    """Parse ``"a..b"`` (inclusive) or a single integer."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return (int(text),)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or an inclusive range a..b, got {text!r}") from None


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or v != v or v == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {text!r}")
    return v


def _finite_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v != v or abs(v) == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ckvlab", description="Conformal Killing field detection and jet-dimension counts.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    output = _Parser(add_help=False)
    output.add_argument("--out", default="-", help="report path ('-' for stdout)")
    output.add_argument("--format", choices=("json", "csv"), default="json")

    solver = _Parser(add_help=False)
    solver.add_argument("--metric", choices=METRIC_LABELS, default="flat")
    solver.add_argument("--n", type=int, default=3)
    solver.add_argument("--degree", type=int, default=3)
    solver.add_argument("--mode", choices=("conformal", "conformal-killing", "killing"), default="conformal")
    solver.add_argument("--grid", type=int, default=6, help="collocation cells per axis")
    solver.add_argument("--rel-tol", type=_positive_float, default=1e-8)
    solver.add_argument("--gap-min", type=_positive_float, default=1e3)
    solver.add_argument("--strict", action="store_true", help="exit 4 if any spectrum is ambiguous")

    sub.add_parser("ckv-count", parents=[solver, output], help="numerical nullity of the CKV operator")
    p = sub.add_parser("perturb-run", parents=[solver, output], help="seeded bump-perturbation trials")
    p.add_argument("--eps", type=_finite_float, default=DEFAULT_EPS)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("invariance-check", parents=[solver, output], help="compare nullity of g and c*g")
    p.add_argument("--factor", choices=sorted(FACTORS), default=None, help="default: every catalog factor")
    p = sub.add_parser("jet-scan", parents=[output], help="exact jet-space dimension table")
    p.add_argument("--n", type=_int_range, default=tuple(range(2, 9)))
    p.add_argument("--k", type=_int_range, default=tuple(range(0, 11)))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "jet-scan":
        return RunConfig("jet-scan", n_range=args.n, k_range=args.k, out=args.out, format=args.format)
    solver = SolverConfig(args.mode, args.degree, args.grid, args.rel_tol, args.gap_min)
    return RunConfig(
        command=args.command,
        metric=args.metric,
        n=args.n,
        solver=solver,
        eps=getattr(args, "eps", DEFAULT_EPS),
        trials=getattr(args, "trials", 20),
        seed=getattr(args, "seed", 0),
        factor=getattr(args, "factor", None),
        out=args.out,
        format=args.format,
        strict=args.strict,
    )


def _jet_scan(cfg: RunConfig) -> tuple[str, bool]:
    result = jets.scan(cfg.n_range, cfg.k_range)
    if cfg.format == "csv":
        return to_csv(result.csv_rows(), jets.CSV_COLUMNS), False
    return dumps({"schema": SCHEMA, "command": cfg.command, **result.to_dict()}), False


def _ckv_count(cfg: RunConfig) -> tuple[str, bool]:
    r = count_ckv(get_metric(cfg.metric, cfg.n), cfg.solver)
    if cfg.format == "csv":
        return to_csv([r.to_dict()], REPORT_COLUMNS), r.ambiguous
    return dumps({"schema": SCHEMA, "command": cfg.command, "report": r.to_dict()}), r.ambiguous


def _perturb_run(cfg: RunConfig) -> tuple[str, bool]:
    base = get_metric(cfg.metric, cfg.n)
    seeds = range(cfg.seed, cfg.seed + cfg.trials)
    records = run_battery(base, cfg.solver, cfg.eps, seeds)
    valid = [t for t in records if t.valid]
    ambiguous = any(t.after.ambiguous for t in valid) or records[0].before.ambiguous
    if cfg.format == "csv":
        return to_csv([t.summary_row() for t in records], TRIAL_COLUMNS), ambiguous
    summary = {
        "trials": len(records),
        "valid": len(valid),
        "invalid": len(records) - len(valid),
        "before_nullity": records[0].before.nullity,
        "after_nullity_zero": sum(1 for t in valid if t.after.nullity == 0),
        "after_ambiguous": sum(1 for t in valid if t.after.ambiguous),
        "rows": [t.summary_row() for t in records],
    }
    doc = {
        "schema": SCHEMA,
        "command": cfg.command,
        "metric": cfg.metric,
        "n": cfg.n,
        "eps": cfg.eps,
        "seed": cfg.seed,
        "config": cfg.solver.as_dict(),
        "summary": summary,
        "trials": [t.to_dict() for t in records],
    }
    return dumps(doc), ambiguous


def _invariance_check(cfg: RunConfig) -> tuple[str, bool]:
    g = get_metric(cfg.metric, cfg.n)
    labels = [cfg.factor] if cfg.factor else sorted(FACTORS)
    rows, pairs = [], []
    for label in labels:
        plain, scaled = conformal_invariance_check(g, label, cfg.solver)
        rows.append({
            "factor": label,
            "n": cfg.n,
            "d": cfg.solver.degree,
            "m": cfg.solver.grid,
            "nullity_g": plain.nullity,
            "nullity_cg": scaled.nullity,
            "agree": plain.nullity == scaled.nullity,
            "ambiguous": plain.ambiguous or scaled.ambiguous,
        })
        pairs.append({"factor": label, "g": plain.to_dict(), "cg": scaled.to_dict()})
    ambiguous = any(r["ambiguous"] for r in rows)
    if cfg.format == "csv":
        return to_csv(rows, INVARIANCE_COLUMNS), ambiguous
    return dumps({"schema": SCHEMA, "command": cfg.command, "metric": cfg.metric, "summary": rows,
                  "reports": pairs}), ambiguous


_HANDLERS = {
    "ckv-count": _ckv_count,
    "jet-scan": _jet_scan,
    "perturb-run": _perturb_run,
    "invariance-check": _invariance_check,
}


def run(cfg: RunConfig) -> int:
    """Execute one command and write exactly one report; returns the exit status."""
    try:
        cfg.validate()
        text, ambiguous = _HANDLERS[cfg.command](cfg)
    except ValidationError as exc:
        print(f"ckvlab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"ckvlab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(cfg.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"ckvlab: cannot write --out {cfg.out!r}: {exc}", file=sys.stderr)
            return EXIT_INVALID
    if cfg.strict and ambiguous:
        print("ckvlab: ambiguous singular-value spectrum (--strict)", file=sys.stderr)
        return EXIT_AMBIGUOUS
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ValidationError as exc:
        print(f"ckvlab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
