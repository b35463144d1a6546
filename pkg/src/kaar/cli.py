"""Command-line front end.

Subcommands::

    kaar run        --data D.csv --algo {kaar,aar,rr-prequential} [--kernel K] [--ridge A]
    kaar certify    --data D.csv [--kernel K] [--ridge A] [--ybound Y]
    kaar relations  --data D.csv [--kernel K] [--ridge A]
    kaar cap-select --data D.csv [--m-range 1-8] [--offset 1] [--ridge A] [--ybound Y]
    kaar verify     [--seed S] [--full]

Every subcommand accepts ``--out PATH`` (JSON; stdout when omitted). The exit
status is 0 on success and nonzero on any validation or numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .algebra import NumericalBreakdown
from .bounds import BoundHypothesisError, relation_report, theorem1_certificate
from .cap import PENALTY_CONVENTION, cap_select, polynomial_family
from .kernel import Kernel, LinearKernel, parse_kernel
from .predictors import AAR, KAAR, TrialRecord
from .verify import run_all

SCHEMA_VERSION = 1
ALGORITHMS = ("kaar", "aar", "rr-prequential")


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    signals: list[np.ndarray] = field(default_factory=list)
    outcomes: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.outcomes)

    def __iter__(self):
        return iter(zip(self.signals, self.outcomes))


def _parse_cell(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DatasetError(f"row {row}: column {column!r} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise DatasetError(f"row {row}: column {column!r} is not finite: {text!r}")
    return value


def iter_rows(path: str) -> Iterator[tuple[np.ndarray, float]]:
    """Stream ``(signal, outcome)`` pairs from a CSV file in file order.

    The header must name the signal columns ``x1..xn`` and the outcome
    column ``y``. Rows are numbered from 1 after the header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row expected") from None
        if "y" not in header:
            raise DatasetError(f"{path}: no 'y' column in header {header}")
        y_col = header.index("y")
        x_names = sorted(
            (h for h in header if h.startswith("x") and h[1:].isdigit()), key=lambda h: int(h[1:])
        )
        if [int(h[1:]) for h in x_names] != list(range(1, len(x_names) + 1)):
            raise DatasetError(f"{path}: signal columns must be x1..xn, got {x_names}")
        x_cols = [header.index(h) for h in x_names]
        for row, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise DatasetError(f"row {row}: expected {len(header)} cells, found {len(cells)}")
            x = np.array([_parse_cell(cells[j], row, header[j]) for j in x_cols])
            yield x, _parse_cell(cells[y_col], row, "y")


def parse_dataset(path: str) -> Dataset:
    ds = Dataset()
    for x, y in iter_rows(path):
        ds.signals.append(x)
        ds.outcomes.append(y)
    return ds


@dataclass
class ExperimentReport:
    config: dict
    trials: list[TrialRecord]
    step_seconds: list[float]
    certificate: dict | None = None

    @property
    def cumulative_loss(self) -> list[float]:
        out, total = [], 0.0
        for r in self.trials:
            total += r.step_loss
            out.append(total)
        return out

    @property
    def total_loss(self) -> float:
        curve = self.cumulative_loss
        return curve[-1] if curve else 0.0

    def to_dict(self) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "trials": [
                {
                    "t": r.index,
                    "signal": [float(v) for v in r.signal],
                    "prediction": r.prediction,
                    "outcome": r.outcome,
                    "step_loss": r.step_loss,
                }
                for r in self.trials
            ],
            "cumulative_loss": self.cumulative_loss,
            "total_loss": self.total_loss,
        }
        if self.certificate is not None:
            doc["certificate"] = self.certificate
        doc["timing"] = {"step_seconds": self.step_seconds, "total_seconds": sum(self.step_seconds)}
        return doc


def run_experiment(
    data: Iterable[tuple[np.ndarray, float]],
    algorithm: str,
    kernel: Kernel | None = None,
    ridge: float = 1.0,
    y_bound: float | None = None,
) -> ExperimentReport:
    """Run one predictor over ``data`` in protocol order.

    The signal of each trial is shown to the predictor, its prediction
    recorded, and only then is the outcome revealed.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    kernel = kernel if kernel is not None else LinearKernel()
    if algorithm == "aar" and not isinstance(kernel, LinearKernel):
        raise ValueError("aar works on raw signals; use --kernel linear or --algo kaar")
    config = {"algorithm": algorithm, "kernel": kernel.spec(), "ridge": ridge, "y_bound": y_bound}

    model = None
    trials: list[TrialRecord] = []
    timings: list[float] = []
    for t, (x, y) in enumerate(data, start=1):
        if y_bound is not None and abs(y) > y_bound:
            raise BoundHypothesisError(f"trial {t}: outcome {y} lies outside [-{y_bound}, {y_bound}]")
        start = time.perf_counter()
        try:
            if model is None:
                model = AAR(len(x), ridge) if algorithm == "aar" else KAAR(kernel, ridge)
            if algorithm == "aar":
                model.predict(x)
                rec = model.update(y)
            elif algorithm == "kaar":
                model.predict(x)
                rec = model.update(x, y)
            else:
                r = model.predict(x).rr_prediction
                model.update(x, y)
                rec = TrialRecord(t, np.asarray(x, dtype=float), r, float(y), (float(y) - r) ** 2)
        except (ArithmeticError, ValueError) as exc:
            raise type(exc)(f"trial {t}: {exc}") from exc
        timings.append(time.perf_counter() - start)
        trials.append(rec)
    return ExperimentReport(config, trials, timings)


def emit_report(doc: dict, out_path: str | None) -> None:
    """Write ``doc`` as JSON. Floats keep full precision (shortest round-trip repr)."""
    text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _m_range(text: str) -> list[int]:
    if "-" in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def _cmd_run(args) -> int:
    kernel = parse_kernel(args.kernel)
    report = run_experiment(iter_rows(args.data), args.algo, kernel, args.ridge, args.ybound)
    emit_report(report.to_dict(), args.out)
    return 0


def _cmd_certify(args) -> int:
    kernel = parse_kernel(args.kernel)
    report = run_experiment(iter_rows(args.data), "kaar", kernel, args.ridge, args.ybound)
    cert = theorem1_certificate(report.trials, kernel, args.ridge, args.ybound)
    report.certificate = cert.to_dict()
    emit_report(report.to_dict(), args.out)
    return 0


def _cmd_relations(args) -> int:
    kernel = parse_kernel(args.kernel)
    data = list(iter_rows(args.data))
    steps = []
    for t, (x, _) in enumerate(data):
        rep = relation_report(data[:t], x, kernel, args.ridge)
        steps.append(
            {
                "t": t + 1,
                "gamma": rep.gamma,
                "rr_prediction": rep.rr_prediction,
                "schur": rep.schur,
                "eq5_residual": rep.eq5_residual,
                "eq6_residual": rep.eq6_residual,
                "eq4_residual": rep.eq4_residual,
                "within_tolerance": rep.within(),
            }
        )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": {"kernel": kernel.spec(), "ridge": args.ridge},
        "steps": steps,
    }
    emit_report(doc, args.out)
    return 0 if all(s["within_tolerance"] for s in steps) else 1


def _cmd_cap_select(args) -> int:
    data = list(iter_rows(args.data))
    if args.ybound is None:
        y_bound = max((abs(y) for _, y in data), default=0.0)
        source = "inferred"
        if y_bound == 0:
            y_bound = 1.0
    else:
        y_bound, source = args.ybound, "declared"
    best, scores = cap_select(
        data,
        polynomial_family(args.offset),
        _m_range(args.m_range),
        args.ridge,
        y_bound,
        prequential=True,
        max_workers=args.jobs,
    )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "family": f"poly:m:{args.offset!r}",
            "ridge": args.ridge,
            "y_bound": y_bound,
            "y_bound_source": source,
            "penalty_convention": PENALTY_CONVENTION,
        },
        "selected_m": best,
        "scores": [s.to_dict() for s in scores],
    }
    emit_report(doc, args.out)
    return 0


def _cmd_verify(args) -> int:
    results = run_all(args.seed, full=args.full)
    for res in results:
        print(res.line(), file=sys.stderr)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": args.seed,
        "checks": [
            {"name": r.name, "passed": bool(r.passed), "worst": float(r.worst), "limit": r.limit}
            for r in results
        ],
    }
    emit_report(doc, args.out)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kaar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kernel=True):
        p.add_argument("--data", required=True, help="CSV with header x1..xn,y")
        if kernel:
            p.add_argument("--kernel", default="linear", help="linear | poly:<m>[:<offset>] | rbf:<width>")
        p.add_argument("--ridge", type=float, default=1.0, help="ridge parameter a > 0")
        p.add_argument("--out", default=None, help="output JSON path (default stdout)")
        p.add_argument("--seed", type=int, default=0, help="unused by deterministic commands")

    p = sub.add_parser("run", help="run a predictor over a dataset")
    common(p)
    p.add_argument("--algo", choices=ALGORITHMS, default="kaar")
    p.add_argument("--ybound", type=float, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("certify", help="run KAAR and attach the loss-bound certificate")
    common(p)
    p.add_argument("--ybound", type=float, default=None)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("relations", help="per-step KAAR / Ridge Regression identity residuals")
    common(p)
    p.set_defaults(func=_cmd_relations)

    p = sub.add_parser("cap-select", help="choose a polynomial kernel degree")
    common(p, kernel=False)
    p.add_argument("--ybound", type=float, default=None)
    p.add_argument("--m-range", default="1-8", help="e.g. 1-8 or 1,2,5")
    p.add_argument("--offset", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_cap_select)

    p = sub.add_parser("verify", help="run the invariant checks on random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true", help="use the full acceptance sizes")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, ArithmeticError, NumericalBreakdown) as exc:
        print(f"kaar {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
