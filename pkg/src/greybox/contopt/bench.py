"""Benchmark runner comparing simplex initialization rules.

Runs the full cross product of test functions, starting points, and
construction rules, and tabulates how the initial simplex conditioning
translates into evaluations-to-target.  Rows are deterministic given the
seed; cells are independent, so a parallel runner would merge them in the
same sorted order, but execution here is sequential.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import EvalCounter
from .neldermead import NMConfig, NMResult, evals_to_target, nelder_mead
from .simplex import InitRule, build_simplex, simplex_quality
from .testfunctions import TestFunction

# Replicates beyond the first perturb each start uniformly in
# [-PERTURBATION_RADIUS, PERTURBATION_RADIUS] per coordinate.
PERTURBATION_RADIUS = 0.05

CSV_HEADER = (
    "function",
    "start",
    "rule",
    "init_diameter",
    "edge_ratio",
    "evals_to_target",
    "best_f",
    "termination",
)


@dataclass(frozen=True)
class BenchRow:
    function: str
    start: tuple[float, ...]
    rule: str
    init_diameter: float
    edge_ratio: float
    evals_to_target: int | None
    best_f: float
    termination: str

    @property
    def start_label(self) -> str:
        return " ".join(repr(v) for v in self.start)


@dataclass(frozen=True)
class BenchTable:
    rows: tuple[BenchRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([
                row.function,
                row.start_label,
                row.rule,
                repr(row.init_diameter),
                repr(row.edge_ratio),
                "" if row.evals_to_target is None else row.evals_to_target,
                repr(row.best_f),
                row.termination,
            ])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            "| " + " | ".join(CSV_HEADER) + " |",
            "|" + "---|" * len(CSV_HEADER),
        ]
        for row in self.rows:
            lines.append(
                "| "
                + " | ".join([
                    row.function,
                    row.start_label,
                    row.rule,
                    f"{row.init_diameter:.6g}",
                    f"{row.edge_ratio:.6g}",
                    "-" if row.evals_to_target is None else str(row.evals_to_target),
                    f"{row.best_f:.6g}",
                    row.termination,
                ])
                + " |"
            )
        return "\n".join(lines) + "\n"


def benchmark_init_rules(
    functions: Sequence[TestFunction],
    starts: Sequence,
    rules: Sequence[InitRule],
    cfg: NMConfig,
    replicates: int = 1,
    seed: int = 0,
    target_offset: float = 1e-3,
) -> BenchTable:
    """Cross product of (function, start, rule) Nelder-Mead runs.

    ``evals_to_target`` counts evaluations until best-so-far drops below the
    function's optimal value plus ``target_offset`` (empty when the run never
    gets there).  Replicate k > 0 reruns every rule from the k-th perturbed
    copy of each start, so rules are always compared on identical starts.
    """
    if not functions or not starts or not rules:
        raise ValueError("functions, starts, and rules must be non-empty")
    if replicates < 1:
        raise ValueError("replicates must be at least 1")

    rng = np.random.default_rng(seed)
    start_variants: list[np.ndarray] = []
    for start in starts:
        base = np.atleast_1d(np.asarray(start, dtype=float))
        start_variants.append(base)
        for _ in range(1, replicates):
            offset = rng.uniform(-PERTURBATION_RADIUS, PERTURBATION_RADIUS, base.size)
            start_variants.append(base + offset)

    rows = []
    for fn in functions:
        for start in start_variants:
            if start.size != fn.dimension:
                raise ValueError(
                    f"start of dimension {start.size} does not fit {fn.name} "
                    f"(dimension {fn.dimension})"
                )
            for rule in rules:
                simplex = build_simplex(rule, start)
                quality = simplex_quality(simplex)
                counter = EvalCounter(fn.evaluate)
                result: NMResult = nelder_mead(counter, simplex, cfg)
                rows.append(BenchRow(
                    function=fn.name,
                    start=tuple(float(v) for v in start),
                    rule=rule.label,
                    init_diameter=quality.diameter,
                    edge_ratio=quality.edge_ratio,
                    evals_to_target=evals_to_target(result, fn.optimal_value + target_offset),
                    best_f=result.best_f,
                    termination=result.termination.value,
                ))

    rows.sort(key=lambda r: (r.function, r.start_label, r.rule))
    return BenchTable(rows=tuple(rows))
