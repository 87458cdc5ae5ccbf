"""Structured representation of an elicited optimization problem.

The types here mirror what an intake meeting produces: a goal, candidate
objectives (possibly decomposed into parts), decision variables, side
constraints with their four-letter codes, a chosen formulation, budget, and
responsibilities.  Local invariants (bound ordering, label consistency) are
enforced at construction; cross-entity rules (dangling references, missing
bounds) are reported as lint findings by :func:`validate_spec`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .qrak import QrakCode, Ternary, classify
from .serde import Fields, ParseError, VersionError, canonical_bytes, load_document

SCHEMA_VERSION = 1

_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")


class GoalKind(str, Enum):
    FIND_FEASIBLE = "find_feasible"
    FIND_ROBUST = "find_robust"
    FIND_BEST = "find_best"
    DETECT_LOCAL_OPTIMA = "detect_local_optima"
    APPROXIMATE_LEVEL_SET = "approximate_level_set"
    APPROXIMATE_PARETO_SET = "approximate_pareto_set"
    APPROXIMATE_PARETO_FRONT = "approximate_pareto_front"
    INTERACTIVE = "interactive"


class ObjectiveShape(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    CONVEX = "convex"
    MULTIMODAL = "multimodal"
    UNKNOWN = "unknown"


class GlobalStructure(str, Enum):
    FUNNEL = "funnel"
    SYMMETRIC = "symmetric"
    NONE = "none"
    UNKNOWN = "unknown"


class VarType(str, Enum):
    REAL = "real"
    INTEGER = "integer"
    CATEGORICAL = "categorical"
    BINARY = "binary"


class InfluenceLevel(str, Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"
    UNKNOWN = "unknown"


class TransformKind(str, Enum):
    NONE = "none"
    LOG = "log"
    SQRT = "sqrt"
    CUSTOM = "custom"


class CostKind(str, Enum):
    CONSTANT = "constant"
    RANGE = "range"
    DISTRIBUTION = "distribution"


class Paradigm(str, Enum):
    SINGLE_OBJECTIVE = "single_objective"
    MULTI_OBJECTIVE = "multi_objective"
    SCALARIZED = "scalarized"
    CONSTRAINT_SATISFACTION = "constraint_satisfaction"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


class EmptyObjectives(ValueError):
    """Conflict candidates need at least two declared objectives."""


def _check_identifier(name: str, what: str) -> None:
    if not isinstance(name, str) or not _IDENTIFIER.match(name):
        raise ValueError(
            f"{what} name must match [A-Za-z_][A-Za-z0-9_-]*, got {name!r}"
        )


@dataclass(frozen=True)
class CostEstimate:
    """Run time or abstract cost of one evaluation, or of a whole budget."""

    kind: CostKind = CostKind.CONSTANT
    low: float = 0.0
    high: float = 0.0
    unit: str = "seconds"
    distribution: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "low", float(self.low))
        object.__setattr__(self, "high", float(self.high))
        if self.low < 0:
            raise ValueError("cost lower estimate must be nonnegative")
        if self.low > self.high:
            raise ValueError("cost lower estimate must not exceed the upper estimate")
        if self.kind is CostKind.DISTRIBUTION and not self.distribution:
            raise ValueError("distribution cost estimates need a distribution label")
        if self.kind is not CostKind.DISTRIBUTION and self.distribution is not None:
            raise ValueError("distribution label is only valid for distribution kind")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True)
class Objective:
    """One objective function, possibly decomposed into parts with meanings
    of their own.  Question-style fields default to unknown: not knowing is
    recorded, never conflated with "no"."""

    name: str
    parts: tuple["Objective", ...] = ()
    additively_separable: Ternary = Ternary.UNKNOWN
    analytic_form: Ternary = Ternary.UNKNOWN
    gradient_available: Ternary = Ternary.UNKNOWN
    shape: ObjectiveShape = ObjectiveShape.UNKNOWN
    global_structure: GlobalStructure = GlobalStructure.UNKNOWN
    deterministic: Ternary = Ternary.UNKNOWN
    domain_vars: tuple[str, ...] = ()
    image_bounds: tuple[float, float] | None = None
    cost: CostEstimate = field(default_factory=CostEstimate)

    def __post_init__(self):
        _check_identifier(self.name, "objective")
        if self.image_bounds is not None:
            bounds = (float(self.image_bounds[0]), float(self.image_bounds[1]))
            object.__setattr__(self, "image_bounds", bounds)
            if bounds[0] > bounds[1]:
                raise ValueError(f"objective {self.name}: image lower bound exceeds upper")
        seen = {self.name}
        for node in self.walk():
            if node is self:
                continue
            if node.name in seen:
                raise ValueError(
                    f"objective {self.name}: part name {node.name!r} repeats an ancestor or sibling"
                )
            seen.add(node.name)

    def walk(self):
        """Yield this objective and all transitive parts, preorder."""
        yield self
        for part in self.parts:
            yield from part.walk()

    @property
    def leaves(self) -> tuple["Objective", ...]:
        if not self.parts:
            return (self,)
        out: list[Objective] = []
        for part in self.parts:
            out.extend(part.leaves)
        return tuple(out)


@dataclass(frozen=True)
class DecisionVariable:
    name: str
    dtype: VarType = VarType.REAL
    lower: float | None = None
    upper: float | None = None
    default: Any = None
    influence: Mapping[str, InfluenceLevel] = field(default_factory=dict)
    transform: TransformKind = TransformKind.NONE
    transform_label: str | None = None

    def __post_init__(self):
        _check_identifier(self.name, "variable")
        if self.lower is not None:
            object.__setattr__(self, "lower", float(self.lower))
        if self.upper is not None:
            object.__setattr__(self, "upper", float(self.upper))
        if self.lower is not None and self.upper is not None and not self.lower < self.upper:
            raise ValueError(f"variable {self.name}: lower bound must be below upper bound")
        if self.transform is TransformKind.LOG and self.lower is not None and self.lower <= 0:
            raise ValueError(f"variable {self.name}: log transform requires a positive lower bound")
        if self.transform is TransformKind.CUSTOM and not self.transform_label:
            raise ValueError(f"variable {self.name}: custom transform needs a label")
        if self.transform is not TransformKind.CUSTOM and self.transform_label is not None:
            raise ValueError(f"variable {self.name}: transform label only valid for custom")

    @property
    def bounded(self) -> bool:
        return self.lower is not None and self.upper is not None


@dataclass(frozen=True)
class ConstraintSpec:
    name: str
    known: bool = True
    a_priori: Ternary = Ternary.UNKNOWN
    relaxable: Ternary = Ternary.UNKNOWN
    quantifiable: Ternary = Ternary.UNKNOWN
    cost: CostEstimate = field(default_factory=CostEstimate)
    code: QrakCode | None = None

    def __post_init__(self):
        _check_identifier(self.name, "constraint")
        if not self.known:
            flags = (self.a_priori, self.relaxable, self.quantifiable)
            if any(f is not Ternary.NO for f in flags):
                raise ValueError(
                    f"constraint {self.name}: hidden constraints have all flags 'no'"
                )
            if self.code is not None and self.code.rendered != "NUSH":
                raise ValueError(f"constraint {self.name}: hidden constraints are coded NUSH")
        elif self.code is not None:
            derived = classify(True, self.a_priori, self.relaxable, self.quantifiable)
            if derived != self.code:
                raise ValueError(
                    f"constraint {self.name}: code {self.code.rendered} does not match flags"
                )

    @classmethod
    def derive(
        cls,
        name: str,
        known: bool,
        a_priori: Ternary = Ternary.UNKNOWN,
        relaxable: Ternary = Ternary.UNKNOWN,
        quantifiable: Ternary = Ternary.UNKNOWN,
        cost: CostEstimate | None = None,
    ) -> "ConstraintSpec":
        """Build a constraint with its code derived from the flags.

        Hidden constraints force all flags to "no" and code NUSH
        (raising if any flag was answered "yes").  Known constraints get a
        code only once every flag is answered; otherwise code stays None.
        """
        cost = cost if cost is not None else CostEstimate()
        if not known:
            code = classify(False, a_priori, relaxable, quantifiable)
            return cls(name, False, Ternary.NO, Ternary.NO, Ternary.NO, cost, code)
        flags = (a_priori, relaxable, quantifiable)
        code = None
        if all(f is not Ternary.UNKNOWN for f in flags):
            code = classify(True, a_priori, relaxable, quantifiable)
        return cls(name, True, a_priori, relaxable, quantifiable, cost, code)


@dataclass(frozen=True)
class Formulation:
    selected_objectives: tuple[str, ...]
    selected_variables: tuple[str, ...]
    selected_constraints: tuple[str, ...] = ()
    paradigm: Paradigm = Paradigm.SINGLE_OBJECTIVE

    def __post_init__(self):
        if not self.selected_objectives:
            raise ValueError("formulation must select at least one objective")
        if not self.selected_variables:
            raise ValueError("formulation must select at least one variable")
        for group, names in (
            ("objectives", self.selected_objectives),
            ("variables", self.selected_variables),
            ("constraints", self.selected_constraints),
        ):
            if len(set(names)) != len(names):
                raise ValueError(f"formulation selects duplicate {group}")


@dataclass(frozen=True)
class ProblemSpec:
    """Full structured output of an intake session.

    ``formulation`` is None only for drafts still under elicitation; a
    finalized spec always carries one (validate reports NO_FORMULATION as an
    error otherwise).
    """

    goal: GoalKind
    objectives: tuple[Objective, ...]
    variables: tuple[DecisionVariable, ...]
    formulation: Formulation | None
    background: str = ""
    constraints: tuple[ConstraintSpec, ...] = ()
    conflicts: tuple[tuple[str, str], ...] = ()
    cost_model: str = ""
    budget: CostEstimate = field(default_factory=CostEstimate)
    responsibilities: tuple[tuple[str, str], ...] = ()
    participants: tuple[tuple[str, str], ...] = ()
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        for what, names in (
            ("objective", [o.name for o in self.objectives]),
            ("variable", [v.name for v in self.variables]),
            ("constraint", [c.name for c in self.constraints]),
        ):
            dupes = sorted({n for n in names if names.count(n) > 1})
            if dupes:
                raise ValueError(f"duplicate {what} names: {', '.join(dupes)}")

    def objective_names(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.objectives)

    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def constraint_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.constraints)

    def objective(self, name: str) -> Objective:
        for obj in self.objectives:
            for node in obj.walk():
                if node.name == name:
                    return node
        raise KeyError(name)

    def variable(self, name: str) -> DecisionVariable:
        for var in self.variables:
            if var.name == name:
                return var
        raise KeyError(name)

    def constraint(self, name: str) -> ConstraintSpec:
        for con in self.constraints:
            if con.name == name:
                return con
        raise KeyError(name)


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    message: str
    subject: str


def _finding(severity: Severity, code: str, subject: str, message: str) -> Finding:
    return Finding(severity=severity, code=code, message=message, subject=subject)


def validate_spec(spec: ProblemSpec) -> list[Finding]:
    """Lint a spec; returns findings sorted by (subject, code).

    Pure and deterministic; an empty list means every rule passed.  Errors
    mark specs that must not be finalized; warnings and infos flag gaps worth
    discussing with the team.
    """
    findings: list[Finding] = []
    declared_objectives = {n for o in spec.objectives for n in (x.name for x in o.walk())}
    top_objectives = set(spec.objective_names())
    declared_variables = set(spec.variable_names())
    declared_constraints = set(spec.constraint_names())

    for obj in spec.objectives:
        for node in obj.walk():
            if node.additively_separable is Ternary.YES and len(node.parts) < 2:
                findings.append(_finding(
                    Severity.WARNING, "SEPARABLE_UNPARTITIONED", node.name,
                    f"objective '{node.name}' is marked additively separable but has "
                    "fewer than two parts",
                ))
            for var_name in node.domain_vars:
                if var_name not in declared_variables:
                    findings.append(_finding(
                        Severity.ERROR, "DANGLING_REF", var_name,
                        f"objective '{node.name}' names undeclared variable '{var_name}' "
                        "in its domain",
                    ))

    for var in spec.variables:
        if var.dtype in (VarType.REAL, VarType.INTEGER) and not var.bounded:
            missing = [side for side, b in (("lower", var.lower), ("upper", var.upper)) if b is None]
            findings.append(_finding(
                Severity.WARNING, "NO_BOUNDS", var.name,
                f"variable '{var.name}' has no {' or '.join(missing)} bound; unknown bounds "
                "often signal limited experience with the problem",
            ))
        for obj_name in var.influence:
            if obj_name not in declared_objectives:
                findings.append(_finding(
                    Severity.ERROR, "DANGLING_REF", obj_name,
                    f"variable '{var.name}' declares influence on undeclared objective "
                    f"'{obj_name}'",
                ))

    for con in spec.constraints:
        if con.code is None:
            findings.append(_finding(
                Severity.WARNING, "QRAK_UNDETERMINED", con.name,
                f"constraint '{con.name}' has unanswered classification flags; its "
                "treatment cannot be advised yet",
            ))

    for pair in spec.conflicts:
        for name in pair:
            if name not in top_objectives:
                findings.append(_finding(
                    Severity.ERROR, "DANGLING_REF", name,
                    f"conflict pair references undeclared objective '{name}'",
                ))

    if spec.formulation is None:
        findings.append(_finding(
            Severity.ERROR, "NO_FORMULATION", "formulation",
            "no problem formulation has been decided",
        ))
    else:
        form = spec.formulation
        for names, declared, what in (
            (form.selected_objectives, declared_objectives, "objective"),
            (form.selected_variables, declared_variables, "variable"),
            (form.selected_constraints, declared_constraints, "constraint"),
        ):
            for name in names:
                if name not in declared:
                    findings.append(_finding(
                        Severity.ERROR, "DANGLING_REF", name,
                        f"formulation selects undeclared {what} '{name}'",
                    ))
        for name in form.selected_variables:
            if name in declared_variables:
                var = spec.variable(name)
                if var.dtype is VarType.REAL and not var.bounded:
                    findings.append(_finding(
                        Severity.ERROR, "SELECTED_UNBOUNDED", name,
                        f"selected real variable '{name}' has no finite box bounds; "
                        "search-space normalization needs them",
                    ))
        if len(form.selected_objectives) > 1 and not spec.conflicts:
            findings.append(_finding(
                Severity.INFO, "CONFLICTS_UNEXAMINED", "conflicts",
                "more than one objective is selected but no conflicting pairs were "
                "discussed",
            ))
        if (
            spec.goal in (GoalKind.APPROXIMATE_PARETO_SET, GoalKind.APPROXIMATE_PARETO_FRONT)
            and len(form.selected_objectives) < 2
        ):
            findings.append(_finding(
                Severity.WARNING, "GOAL_FORMULATION_MISMATCH", "formulation",
                "a Pareto approximation goal needs at least two selected objectives",
            ))

    findings.sort(key=lambda f: (f.subject, f.code))
    return findings


def conflict_candidates(spec: ProblemSpec) -> list[tuple[str, str]]:
    """Unordered top-level objective pairs not yet declared as conflicts.

    Feeds the team discussion of which objective pairs might pull against
    each other; pairs already recorded in ``spec.conflicts`` are omitted.
    """
    names = spec.objective_names()
    if len(names) < 2:
        raise EmptyObjectives("need at least two objectives to discuss conflicts")
    declared = {tuple(sorted(pair)) for pair in spec.conflicts}
    ordered = sorted(names)
    return [
        (a, b)
        for i, a in enumerate(ordered)
        for b in ordered[i + 1:]
        if (a, b) not in declared
    ]


# --- serialization ---------------------------------------------------------


def _cost_payload(cost: CostEstimate) -> dict:
    return {
        "kind": cost.kind.value,
        "low": cost.low,
        "high": cost.high,
        "unit": cost.unit,
        "distribution": cost.distribution,
    }


def _objective_payload(obj: Objective) -> dict:
    return {
        "name": obj.name,
        "parts": [_objective_payload(p) for p in obj.parts],
        "additively_separable": obj.additively_separable.value,
        "analytic_form": obj.analytic_form.value,
        "gradient_available": obj.gradient_available.value,
        "shape": obj.shape.value,
        "global_structure": obj.global_structure.value,
        "deterministic": obj.deterministic.value,
        "domain_vars": list(obj.domain_vars),
        "image_bounds": list(obj.image_bounds) if obj.image_bounds else None,
        "cost": _cost_payload(obj.cost),
    }


def _variable_payload(var: DecisionVariable) -> dict:
    return {
        "name": var.name,
        "dtype": var.dtype.value,
        "lower": var.lower,
        "upper": var.upper,
        "default": var.default,
        "influence": {k: v.value for k, v in sorted(var.influence.items())},
        "transform": var.transform.value,
        "transform_label": var.transform_label,
    }


def _constraint_payload(con: ConstraintSpec) -> dict:
    return {
        "name": con.name,
        "known": con.known,
        "a_priori": con.a_priori.value,
        "relaxable": con.relaxable.value,
        "quantifiable": con.quantifiable.value,
        "cost": _cost_payload(con.cost),
        "code": con.code.rendered if con.code else None,
    }


def spec_to_payload(spec: ProblemSpec) -> dict:
    form = spec.formulation
    return {
        "schema_version": spec.schema_version,
        "goal": spec.goal.value,
        "background": spec.background,
        "objectives": [_objective_payload(o) for o in spec.objectives],
        "variables": [_variable_payload(v) for v in spec.variables],
        "constraints": [_constraint_payload(c) for c in spec.constraints],
        "conflicts": [list(pair) for pair in spec.conflicts],
        "formulation": None if form is None else {
            "selected_objectives": list(form.selected_objectives),
            "selected_variables": list(form.selected_variables),
            "selected_constraints": list(form.selected_constraints),
            "paradigm": form.paradigm.value,
        },
        "cost_model": spec.cost_model,
        "budget": _cost_payload(spec.budget),
        "responsibilities": [list(pair) for pair in spec.responsibilities],
        "participants": [list(pair) for pair in spec.participants],
    }


def _enum_from(enum_cls, value: Any, path: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ParseError(f"expected one of [{allowed}], got {value!r}", path) from None


def _cost_from(payload: Any, path: str) -> CostEstimate:
    f = Fields(payload, path)
    kind = _enum_from(CostKind, f.string("kind", required=False, default="constant"), f.child_path("kind"))
    cost_args = {
        "kind": kind,
        "low": f.number("low", required=False, default=0.0),
        "high": f.number("high", required=False, default=0.0),
        "unit": f.string("unit", required=False, default="seconds"),
        "distribution": f.string("distribution", required=False),
    }
    f.finish()
    try:
        return CostEstimate(**cost_args)
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def _pairs_from(raw: Any, path: str) -> tuple[tuple[str, str], ...]:
    pairs = []
    for i, entry in enumerate(raw):
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(x, str) for x in entry)
        ):
            raise ParseError("expected a [string, string] pair", f"{path}[{i}]")
        pairs.append((entry[0], entry[1]))
    return tuple(pairs)


def _objective_from(payload: Any, path: str) -> Objective:
    f = Fields(payload, path)
    name = f.string("name")
    parts = tuple(
        _objective_from(p, f"{f.child_path('parts')}[{i}]")
        for i, p in enumerate(f.array("parts", required=False))
    )
    image_raw = f.raw("image_bounds", required=False)
    image_bounds = None
    if image_raw is not None:
        if not isinstance(image_raw, list) or len(image_raw) != 2 or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in image_raw
        ):
            raise ParseError("expected [lower, upper] numbers", f.child_path("image_bounds"))
        image_bounds = (float(image_raw[0]), float(image_raw[1]))
    args = {
        "name": name,
        "parts": parts,
        "additively_separable": _enum_from(Ternary, f.string("additively_separable", required=False, default="unknown"), f.child_path("additively_separable")),
        "analytic_form": _enum_from(Ternary, f.string("analytic_form", required=False, default="unknown"), f.child_path("analytic_form")),
        "gradient_available": _enum_from(Ternary, f.string("gradient_available", required=False, default="unknown"), f.child_path("gradient_available")),
        "shape": _enum_from(ObjectiveShape, f.string("shape", required=False, default="unknown"), f.child_path("shape")),
        "global_structure": _enum_from(GlobalStructure, f.string("global_structure", required=False, default="unknown"), f.child_path("global_structure")),
        "deterministic": _enum_from(Ternary, f.string("deterministic", required=False, default="unknown"), f.child_path("deterministic")),
        "domain_vars": tuple(_strings_from(f.array("domain_vars", required=False), f.child_path("domain_vars"))),
        "image_bounds": image_bounds,
        "cost": _cost_from(f.raw("cost", required=False, default={}), f.child_path("cost")) if f.has("cost") else CostEstimate(),
    }
    f.finish()
    try:
        return Objective(**args)
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def _strings_from(raw: list, path: str) -> list[str]:
    for i, x in enumerate(raw):
        if not isinstance(x, str):
            raise ParseError("expected a string", f"{path}[{i}]")
    return list(raw)


def _variable_from(payload: Any, path: str) -> DecisionVariable:
    f = Fields(payload, path)
    influence_raw = f.raw("influence", required=False, default={})
    if not isinstance(influence_raw, dict):
        raise ParseError("expected an object", f.child_path("influence"))
    influence = {
        k: _enum_from(InfluenceLevel, v, f"{f.child_path('influence')}.{k}")
        for k, v in influence_raw.items()
    }
    default = f.raw("default", required=False)
    if default is not None and not isinstance(default, (str, int, float, bool)):
        raise ParseError("expected a scalar", f.child_path("default"))
    args = {
        "name": f.string("name"),
        "dtype": _enum_from(VarType, f.string("dtype", required=False, default="real"), f.child_path("dtype")),
        "lower": f.number("lower", required=False),
        "upper": f.number("upper", required=False),
        "default": default,
        "influence": influence,
        "transform": _enum_from(TransformKind, f.string("transform", required=False, default="none"), f.child_path("transform")),
        "transform_label": f.string("transform_label", required=False),
    }
    f.finish()
    try:
        return DecisionVariable(**args)
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def _constraint_from(payload: Any, path: str) -> ConstraintSpec:
    f = Fields(payload, path)
    code_raw = f.string("code", required=False)
    code = None
    if code_raw is not None:
        try:
            code = QrakCode.from_rendered(code_raw)
        except ValueError as exc:
            raise ParseError(str(exc), f.child_path("code")) from exc
    args = {
        "name": f.string("name"),
        "known": f.boolean("known", required=False, default=True),
        "a_priori": _enum_from(Ternary, f.string("a_priori", required=False, default="unknown"), f.child_path("a_priori")),
        "relaxable": _enum_from(Ternary, f.string("relaxable", required=False, default="unknown"), f.child_path("relaxable")),
        "quantifiable": _enum_from(Ternary, f.string("quantifiable", required=False, default="unknown"), f.child_path("quantifiable")),
        "cost": _cost_from(f.raw("cost", required=False, default={}), f.child_path("cost")) if f.has("cost") else CostEstimate(),
        "code": code,
    }
    f.finish()
    try:
        return ConstraintSpec(**args)
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def spec_from_payload(payload: Any, path: str = "") -> ProblemSpec:
    f = Fields(payload, path)
    version = f.integer("schema_version")
    if version != SCHEMA_VERSION:
        raise VersionError(f"unsupported schema_version {version}; this build reads {SCHEMA_VERSION}")
    form_raw = f.raw("formulation", required=False)
    formulation = None
    if form_raw is not None:
        ff = Fields(form_raw, f.child_path("formulation"))
        form_args = {
            "selected_objectives": tuple(_strings_from(ff.array("selected_objectives"), ff.child_path("selected_objectives"))),
            "selected_variables": tuple(_strings_from(ff.array("selected_variables"), ff.child_path("selected_variables"))),
            "selected_constraints": tuple(_strings_from(ff.array("selected_constraints", required=False), ff.child_path("selected_constraints"))),
            "paradigm": _enum_from(Paradigm, ff.string("paradigm", required=False, default="single_objective"), ff.child_path("paradigm")),
        }
        ff.finish()
        try:
            formulation = Formulation(**form_args)
        except ValueError as exc:
            raise ParseError(str(exc), f.child_path("formulation")) from exc
    args = {
        "schema_version": version,
        "goal": _enum_from(GoalKind, f.string("goal"), f.child_path("goal")),
        "background": f.string("background", required=False, default=""),
        "objectives": tuple(
            _objective_from(o, f"{f.child_path('objectives')}[{i}]")
            for i, o in enumerate(f.array("objectives"))
        ),
        "variables": tuple(
            _variable_from(v, f"{f.child_path('variables')}[{i}]")
            for i, v in enumerate(f.array("variables"))
        ),
        "constraints": tuple(
            _constraint_from(c, f"{f.child_path('constraints')}[{i}]")
            for i, c in enumerate(f.array("constraints", required=False))
        ),
        "conflicts": _pairs_from(f.array("conflicts", required=False), f.child_path("conflicts")),
        "formulation": formulation,
        "cost_model": f.string("cost_model", required=False, default=""),
        "budget": _cost_from(f.raw("budget", required=False, default={}), f.child_path("budget")) if f.has("budget") else CostEstimate(),
        "responsibilities": _pairs_from(f.array("responsibilities", required=False), f.child_path("responsibilities")),
        "participants": _pairs_from(f.array("participants", required=False), f.child_path("participants")),
    }
    f.finish()
    try:
        return ProblemSpec(**args)
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def parse_spec(document: bytes | str) -> ProblemSpec:
    """Decode a spec document; strict about unknown fields and versions."""
    return spec_from_payload(load_document(document))


def write_spec(spec: ProblemSpec) -> bytes:
    """Canonical UTF-8 JSON rendering; parse_spec(write_spec(s)) == s."""
    return canonical_bytes(spec_to_payload(spec))


def findings_payload(findings: list[Finding]) -> list[dict]:
    return [
        {"severity": f.severity.value, "code": f.code, "message": f.message, "subject": f.subject}
        for f in findings
    ]
