"""Experiment planning: factor taxonomy, full-factorial designs, robust
configuration selection, and the seven-section report skeleton.

Factors are classified by what the experimenter can do with them:
controllable factors are set freely, observable factors are known but not
chosen (a problem's dimension, say), and noise factors are neither.  The
selection rule follows from the taxonomy: pick the best controllable
configuration per observable level, aggregating over every noise level, and
never condition a choice on noise.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

Level = Any  # JSON scalar: str | int | float | bool
Assignment = tuple[tuple[str, Level], ...]  # (factor, level) pairs, name-sorted


class FactorCategory(str, Enum):
    RESPONSE = "response"
    CONTROLLABLE = "controllable"
    OBSERVABLE = "observable"
    NOISE = "noise"


class ExperimentError(ValueError):
    pass


class DuplicateName(ExperimentError):
    pass


class ResponseWithLevels(ExperimentError):
    pass


class EmptyLevels(ExperimentError):
    pass


class NoiseConditioning(ExperimentError):
    """Selection may aggregate over noise factors but never condition on them."""


class MissingControllable(ExperimentError):
    pass


class MissingResponse(ExperimentError):
    pass


class IncompleteRuns(ExperimentError):
    def __init__(self, missing: list):
        self.missing = missing
        preview = ", ".join(str(m) for m in missing[:5])
        more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
        super().__init__(f"missing runs for: {preview}{more}")


class DuplicateRun(ExperimentError):
    pass


class UnknownResponse(ExperimentError):
    pass


@dataclass(frozen=True)
class FactorSpec:
    name: str
    category: FactorCategory
    levels: tuple[Level, ...] = ()

    def __post_init__(self):
        if self.category is FactorCategory.RESPONSE:
            if self.levels:
                raise ResponseWithLevels(f"response factor '{self.name}' must not declare levels")
        else:
            if not self.levels:
                raise EmptyLevels(f"factor '{self.name}' needs at least one level")
            if len(set(map(str, self.levels))) != len(self.levels):
                raise ExperimentError(f"factor '{self.name}' has duplicate level labels")


def classify_factors(raw: Iterable[tuple[str, FactorCategory | str, Sequence[Level]]]) -> list[FactorSpec]:
    """Validate (name, category, levels) triples into FactorSpecs."""
    factors: list[FactorSpec] = []
    seen: set[str] = set()
    for name, category, levels in raw:
        if name in seen:
            raise DuplicateName(f"duplicate factor name '{name}'")
        seen.add(name)
        category = category if isinstance(category, FactorCategory) else FactorCategory(category)
        factors.append(FactorSpec(name=name, category=category, levels=tuple(levels)))
    return factors


@dataclass(frozen=True)
class Design:
    """Full-factorial design: one cell per combination of non-response levels."""

    factors: tuple[FactorSpec, ...]
    cells: tuple[Assignment, ...]
    replicates: int

    def by_category(self, category: FactorCategory) -> tuple[FactorSpec, ...]:
        return tuple(f for f in self.factors if f.category is category)

    @property
    def responses(self) -> tuple[FactorSpec, ...]:
        return self.by_category(FactorCategory.RESPONSE)

    @property
    def total_runs(self) -> int:
        return len(self.cells) * self.replicates


def full_factorial(factors: Sequence[FactorSpec], replicates: int = 1) -> Design:
    """Cross every level of every controllable, observable, and noise factor.

    Cells are ordered lexicographically by factor name and then by declared
    level index, so the design is reproducible from its factor list alone.
    """
    if replicates < 1:
        raise ExperimentError("replicates must be at least 1")
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise DuplicateName("factor names must be unique")
    if not any(f.category is FactorCategory.CONTROLLABLE for f in factors):
        raise MissingControllable("a design needs at least one controllable factor")
    if not any(f.category is FactorCategory.RESPONSE for f in factors):
        raise MissingResponse("a design needs at least one response factor")
    axes = sorted(
        (f for f in factors if f.category is not FactorCategory.RESPONSE),
        key=lambda f: f.name,
    )
    cells = tuple(
        tuple((f.name, level) for f, level in zip(axes, combo))
        for combo in itertools.product(*(f.levels for f in axes))
    )
    return Design(factors=tuple(factors), cells=cells, replicates=replicates)


@dataclass(frozen=True)
class RunRecord:
    assignment: Assignment
    replicate: int
    responses: Mapping[str, float]
    seed: int = 0


def _project(assignment: Assignment, names: set[str]) -> Assignment:
    return tuple((k, v) for k, v in assignment if k in names)


class Aggregation(str, Enum):
    MEAN = "mean"
    WORST_CASE = "worst_case"


class Direction(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


def robust_select(
    design: Design,
    runs: Sequence[RunRecord],
    response: str,
    aggregation: Aggregation | str = Aggregation.MEAN,
    direction: Direction | str = Direction.MINIMIZE,
    condition_on: Sequence[str] | None = None,
) -> dict[Assignment, tuple[Assignment, float]]:
    """Best controllable configuration per observable level combination.

    For every combination of observable levels, the response is aggregated
    over all noise levels and replicates for each controllable combination,
    and the arg-best is returned.  ``worst_case`` aggregates with max when
    minimizing and min when maximizing.  Ties break toward the
    lexicographically smallest controllable assignment (factors in name
    order, levels by declared index).
    """
    aggregation = Aggregation(aggregation)
    direction = Direction(direction)

    by_category = {f.name: f.category for f in design.factors}
    if response not in by_category or by_category[response] is not FactorCategory.RESPONSE:
        raise UnknownResponse(f"'{response}' is not a declared response factor")

    observable = {f.name for f in design.by_category(FactorCategory.OBSERVABLE)}
    controllable = {f.name for f in design.by_category(FactorCategory.CONTROLLABLE)}
    if condition_on is None:
        condition = observable
    else:
        condition = set(condition_on)
        for name in sorted(condition):
            category = by_category.get(name)
            if category is FactorCategory.NOISE:
                raise NoiseConditioning(
                    f"'{name}' is a noise factor; selection may only aggregate over it"
                )
            if category is not FactorCategory.OBSERVABLE:
                raise ExperimentError(f"'{name}' is not an observable factor")

    level_index = {
        f.name: {str(level): i for i, level in enumerate(f.levels)}
        for f in design.factors
        if f.category is not FactorCategory.RESPONSE
    }

    indexed: dict[tuple[Assignment, int], RunRecord] = {}
    for run in runs:
        key = (tuple(sorted(run.assignment)), run.replicate)
        if key in indexed:
            raise DuplicateRun(f"duplicate run for {key[0]} replicate {key[1]}")
        indexed[key] = run

    missing = []
    for cell in design.cells:
        for replicate in range(design.replicates):
            key = (tuple(sorted(cell)), replicate)
            run = indexed.get(key)
            if run is None or response not in run.responses:
                missing.append((cell, replicate))
    if missing:
        raise IncompleteRuns(missing)

    groups: dict[Assignment, dict[Assignment, list[float]]] = {}
    for cell in design.cells:
        obs_key = _project(cell, condition)
        ctrl_key = _project(cell, controllable)
        bucket = groups.setdefault(obs_key, {}).setdefault(ctrl_key, [])
        for replicate in range(design.replicates):
            run = indexed[(tuple(sorted(cell)), replicate)]
            bucket.append(float(run.responses[response]))

    def aggregate(values: list[float]) -> float:
        if aggregation is Aggregation.MEAN:
            return sum(values) / len(values)
        return max(values) if direction is Direction.MINIMIZE else min(values)

    def tiebreak(ctrl: Assignment) -> tuple:
        return tuple(level_index[name][str(level)] for name, level in ctrl)

    selection: dict[Assignment, tuple[Assignment, float]] = {}
    for obs_key, candidates in groups.items():
        scored = [(aggregate(values), tiebreak(ctrl), ctrl) for ctrl, values in candidates.items()]
        if direction is Direction.MINIMIZE:
            best = min(scored, key=lambda t: (t[0], t[1]))
        else:
            best = max(scored, key=lambda t: (t[0], tuple(-i for i in t[1])))
        selection[obs_key] = (best[2], best[0])
    return selection


# --- structured reporting ---------------------------------------------------


class ReportSection(str, Enum):
    RESEARCH_QUESTION = "research_question"
    PRE_EXPERIMENTAL_PLANNING = "pre_experimental_planning"
    TASK = "task"
    SETUP = "setup"
    RESULTS = "results"
    OBSERVATIONS = "observations"
    DISCUSSION = "discussion"


SECTION_ORDER: tuple[ReportSection, ...] = tuple(ReportSection)

SECTION_TITLES = {
    ReportSection.RESEARCH_QUESTION: "Research Question",
    ReportSection.PRE_EXPERIMENTAL_PLANNING: "Pre-experimental Planning",
    ReportSection.TASK: "Task",
    ReportSection.SETUP: "Setup",
    ReportSection.RESULTS: "Results",
    ReportSection.OBSERVATIONS: "Observations",
    ReportSection.DISCUSSION: "Discussion",
}

# Guide prompts seeding the planning section when requested; they walk the
# team through the factor classification before any runs happen.
PLANNING_PROMPTS = (
    "Which process variables are responses, and in what units?",
    "Which factors can be set freely (controllable), which are known but not "
    "chosen (observable), and which are neither (noise)?",
    "What levels will each non-response factor take, and why those?",
    "How many replicates, and what is the total run budget?",
)


@dataclass(frozen=True)
class ReportSkeleton:
    """The seven report sections in fixed order.

    Keeping results separate from observations and discussion makes the
    boundary between objective numbers and subjective reading explicit.
    """

    sections: tuple[tuple[ReportSection, str], ...]

    def __post_init__(self):
        provided = {section: body for section, body in self.sections}
        normalized = tuple((section, provided.get(section, "")) for section in SECTION_ORDER)
        object.__setattr__(self, "sections", normalized)

    def body(self, section: ReportSection) -> str:
        for sec, text in self.sections:
            if sec is section:
                return text
        raise KeyError(section)


def report_skeleton(metadata: Mapping[str, Any] | None = None) -> ReportSkeleton:
    """Skeleton with bodies prefilled from metadata keys named after sections.

    ``guide_prompts=True`` seeds the planning section with the factor
    classification questions.
    """
    metadata = dict(metadata or {})
    sections = []
    for section in SECTION_ORDER:
        body = str(metadata.get(section.value, ""))
        if (
            section is ReportSection.PRE_EXPERIMENTAL_PLANNING
            and metadata.get("guide_prompts")
            and not body
        ):
            body = "\n".join(f"- {prompt}" for prompt in PLANNING_PROMPTS)
        sections.append((section, body))
    return ReportSkeleton(sections=tuple(sections))


def _assignment_label(assignment: Assignment) -> str:
    if not assignment:
        return "(overall)"
    return ", ".join(f"{name}={level}" for name, level in assignment)


def render_report(
    skeleton: ReportSkeleton,
    design: Design | None = None,
    selections: Mapping[Assignment, tuple[Assignment, float]] | None = None,
    title: str = "Experiment Report",
) -> str:
    """Render the report as Markdown.

    The results section always embeds the design dimensions and, when given,
    the robust-selection outcomes; authored text in that section is kept
    above the tables.
    """
    lines = [f"# {title}", ""]
    for section, body in skeleton.sections:
        lines.append(f"## {SECTION_TITLES[section]}")
        lines.append("")
        if body:
            lines.append(body)
            lines.append("")
        if section is ReportSection.RESULTS:
            if design is not None:
                lines.append("| factor | category | levels |")
                lines.append("|---|---|---|")
                for factor in design.factors:
                    levels = ", ".join(str(v) for v in factor.levels) or "-"
                    lines.append(f"| {factor.name} | {factor.category.value} | {levels} |")
                lines.append("")
                lines.append(
                    f"Cells: {len(design.cells)}; replicates: {design.replicates}; "
                    f"total runs: {design.total_runs}."
                )
                lines.append("")
            if selections is not None:
                lines.append("| observable levels | selected configuration | aggregated value |")
                lines.append("|---|---|---|")
                for obs_key in sorted(selections, key=_assignment_label):
                    ctrl, value = selections[obs_key]
                    lines.append(
                        f"| {_assignment_label(obs_key)} | {_assignment_label(ctrl)} | {value:.6g} |"
                    )
                lines.append("")
    return "\n".join(lines).rstrip() + "\n"


# --- CSV interchange ---------------------------------------------------------


def design_to_csv(design: Design) -> str:
    """Cells as CSV: cell index plus one column per non-response factor."""
    axes = sorted(
        (f.name for f in design.factors if f.category is not FactorCategory.RESPONSE)
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cell", *axes])
    for i, cell in enumerate(design.cells):
        values = dict(cell)
        writer.writerow([i, *(values[name] for name in axes)])
    return buf.getvalue()


def runs_to_csv(design: Design, runs: Sequence[RunRecord]) -> str:
    """Runs as CSV: factor columns (name-sorted), replicate, seed, responses."""
    axes = sorted(
        f.name for f in design.factors if f.category is not FactorCategory.RESPONSE
    )
    responses = sorted(f.name for f in design.responses)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*axes, "replicate", "seed", *responses])
    for run in runs:
        values = dict(run.assignment)
        writer.writerow([
            *(values.get(name, "") for name in axes),
            run.replicate,
            run.seed,
            *(run.responses.get(name, "") for name in responses),
        ])
    return buf.getvalue()


def runs_from_csv(design: Design, text: str) -> list[RunRecord]:
    """Parse runs written by :func:`runs_to_csv`, coercing levels by factor."""
    axes = {
        f.name: f for f in design.factors if f.category is not FactorCategory.RESPONSE
    }
    responses = {f.name for f in design.responses}
    reader = csv.DictReader(io.StringIO(text))
    runs = []
    for row in reader:
        assignment = []
        for name, factor in axes.items():
            raw = row.get(name)
            if raw is None:
                raise ExperimentError(f"runs file lacks a column for factor '{name}'")
            matched = [level for level in factor.levels if str(level) == raw]
            if not matched:
                raise ExperimentError(f"'{raw}' is not a level of factor '{name}'")
            assignment.append((name, matched[0]))
        run_responses = {}
        for name in responses:
            raw = row.get(name)
            if raw not in (None, ""):
                run_responses[name] = float(raw)
        runs.append(RunRecord(
            assignment=tuple(sorted(assignment)),
            replicate=int(row.get("replicate", 0)),
            responses=run_responses,
            seed=int(row.get("seed", 0) or 0),
        ))
    return runs
