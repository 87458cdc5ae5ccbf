"""Rule-based mapping from problem features to algorithm-family rankings.

The rules live in a JSON table (``data/rule_table.json``), not in code, so
advice can grow without releases.  Each rule is a predicate over a small,
documented feature vector extracted from a finalized spec; every fired rule
lands in the recommendation's trace with a citation, so a ranking is always
auditable back to the features that produced it.

Predicate grammar (restricted boolean expressions over feature names):

    expr    := expr 'and' expr | expr 'or' expr | 'not' expr | '(' expr ')'
             | name OP literal | name
    OP      := '==' | '!=' | '<' | '<=' | '>' | '>='
    literal := quoted string | number | True | False

Nothing else parses: no calls, no attribute access, no arithmetic.
"""

from __future__ import annotations

import ast
import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Any, Mapping

from .problem import (
    GoalKind,
    ObjectiveShape,
    GlobalStructure,
    ProblemSpec,
    Ternary,
    VarType,
)

# An objective counts as expensive when the budget covers fewer evaluations
# than this; surrogate modeling is conventionally indicated at such budgets.
EXPENSIVE_EVALS_THRESHOLD = 1000


class Unfinalized(ValueError):
    """Recommendations need a spec with a decided formulation."""


class RuleTableError(ValueError):
    pass


class Family(str, Enum):
    ANALYTIC_SOLUTION = "analytic_solution"
    GRADIENT_BASED = "gradient_based"
    QUASI_NEWTON = "quasi_newton"
    LINEAR_PROGRAMMING = "linear_programming"
    QUADRATIC_PROGRAMMING = "quadratic_programming"
    DIRECT_SEARCH_LOCAL = "direct_search_local"
    RESTART_FUNNEL = "restart_funnel"
    GLOBAL_MULTISTART = "global_multistart"
    MODEL_BASED_SURROGATE = "model_based_surrogate"
    NOISE_TOLERANT = "noise_tolerant"
    MULTI_OBJECTIVE = "multi_objective"
    SCALARIZATION = "scalarization"


@dataclass(frozen=True)
class RuleFire:
    rule_id: str
    matched_features: tuple[tuple[str, Any], ...]
    citation: str


@dataclass(frozen=True)
class Recommendation:
    family: Family
    rank: int
    trace: tuple[RuleFire, ...]

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("ranks start at 1")
        if not self.trace:
            raise ValueError("a recommendation must cite at least one fired rule")


@dataclass(frozen=True)
class Rule:
    rule_id: str
    predicate: str
    family: Family
    rank_weight: float
    citation: str


@dataclass(frozen=True)
class RuleTable:
    version: int
    rules: tuple[Rule, ...]
    family_priority: tuple[Family, ...]


_ALLOWED_COMPARATORS = (ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE)


def _eval_node(node: ast.AST, features: Mapping[str, Any]) -> Any:
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, features)
    if isinstance(node, ast.BoolOp):
        values = (_eval_node(v, features) for v in node.values)
        return all(values) if isinstance(node.op, ast.And) else any(values)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
        return not _eval_node(node.operand, features)
    if isinstance(node, ast.Compare):
        if len(node.ops) != 1 or not isinstance(node.ops[0], _ALLOWED_COMPARATORS):
            raise RuleTableError("only single two-sided comparisons are allowed")
        left = _eval_node(node.left, features)
        right = _eval_node(node.comparators[0], features)
        op = node.ops[0]
        if isinstance(op, ast.Eq):
            return left == right
        if isinstance(op, ast.NotEq):
            return left != right
        if isinstance(op, ast.Lt):
            return left < right
        if isinstance(op, ast.LtE):
            return left <= right
        if isinstance(op, ast.Gt):
            return left > right
        return left >= right
    if isinstance(node, ast.Name):
        if node.id not in features:
            raise RuleTableError(f"unknown feature '{node.id}' in predicate")
        return features[node.id]
    if isinstance(node, ast.Constant) and isinstance(node.value, (str, int, float, bool)):
        return node.value
    raise RuleTableError(f"disallowed syntax in predicate: {ast.dump(node)}")


def _predicate_names(expr: str) -> list[str]:
    tree = ast.parse(expr, mode="eval")
    return sorted({n.id for n in ast.walk(tree) if isinstance(n, ast.Name)})


def evaluate_predicate(expr: str, features: Mapping[str, Any]) -> bool:
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise RuleTableError(f"unparsable predicate {expr!r}: {exc}") from exc
    return bool(_eval_node(tree, features))


def load_rule_table() -> RuleTable:
    raw = json.loads(
        resources.files("greybox").joinpath("data/rule_table.json").read_text("utf-8")
    )
    rules = tuple(
        Rule(
            rule_id=entry["rule_id"],
            predicate=entry["predicate"],
            family=Family(entry["family"]),
            rank_weight=float(entry["rank_weight"]),
            citation=entry["citation"],
        )
        for entry in raw["rules"]
    )
    priority = tuple(Family(name) for name in raw["family_priority"])
    if set(priority) != set(Family):
        raise RuleTableError("family_priority must list every family exactly once")
    return RuleTable(version=int(raw["table_version"]), rules=rules, family_priority=priority)


_TABLE: RuleTable | None = None


def rule_table() -> RuleTable:
    global _TABLE
    if _TABLE is None:
        _TABLE = load_rule_table()
    return _TABLE


def _aggregate_ternary(values: list[Ternary]) -> str:
    if not values:
        return Ternary.UNKNOWN.value
    if any(v is Ternary.NO for v in values):
        return Ternary.NO.value
    if all(v is Ternary.YES for v in values):
        return Ternary.YES.value
    return Ternary.UNKNOWN.value


_SHAPE_SEVERITY = [
    ObjectiveShape.LINEAR,
    ObjectiveShape.QUADRATIC,
    ObjectiveShape.CONVEX,
]


def extract_features(spec: ProblemSpec) -> dict[str, Any]:
    """Feature vector over the formulation-selected entities.

    Objective properties aggregate conservatively across the selected
    objectives' leaves: any "no" wins for ternary flags, the hardest shape
    wins, any funnel flag marks the landscape as funneled.
    """
    if spec.formulation is None:
        raise Unfinalized("spec has no formulation; finish the intake first")
    form = spec.formulation

    leaves = []
    for name in form.selected_objectives:
        try:
            leaves.extend(spec.objective(name).leaves)
        except KeyError:
            continue
    selected_vars = []
    for name in form.selected_variables:
        try:
            selected_vars.append(spec.variable(name))
        except KeyError:
            continue
    selected_cons = []
    for name in form.selected_constraints:
        try:
            selected_cons.append(spec.constraint(name))
        except KeyError:
            continue

    shapes = [o.shape for o in leaves]
    if any(s is ObjectiveShape.MULTIMODAL for s in shapes):
        shape = ObjectiveShape.MULTIMODAL
    elif any(s is ObjectiveShape.UNKNOWN for s in shapes) or not shapes:
        shape = ObjectiveShape.UNKNOWN
    else:
        shape = max(shapes, key=_SHAPE_SEVERITY.index)

    structures = [o.global_structure for o in leaves]
    if any(s is GlobalStructure.FUNNEL for s in structures):
        structure = GlobalStructure.FUNNEL
    elif any(s is GlobalStructure.SYMMETRIC for s in structures):
        structure = GlobalStructure.SYMMETRIC
    elif structures and all(s is GlobalStructure.NONE for s in structures):
        structure = GlobalStructure.NONE
    else:
        structure = GlobalStructure.UNKNOWN

    dtypes = {v.dtype for v in selected_vars}
    if dtypes <= {VarType.REAL}:
        var_types = "real"
    elif VarType.REAL not in dtypes:
        var_types = "discrete"
    else:
        var_types = "mixed"

    per_eval = sum(o.cost.midpoint for o in leaves)
    est_evals = math.inf if per_eval <= 0 else spec.budget.midpoint / per_eval

    selected_top = set(form.selected_objectives)
    has_conflicts = any(a in selected_top and b in selected_top for a, b in spec.conflicts)

    return {
        "goal": spec.goal.value,
        "paradigm": form.paradigm.value,
        "n_objectives": len(form.selected_objectives),
        "multi_objective": len(form.selected_objectives) > 1,
        "has_conflicts": has_conflicts,
        "analytic_form": _aggregate_ternary([o.analytic_form for o in leaves]),
        "gradient_available": _aggregate_ternary([o.gradient_available for o in leaves]),
        "shape": shape.value,
        "global_structure": structure.value,
        "deterministic": _aggregate_ternary([o.deterministic for o in leaves]),
        "var_types": var_types,
        "est_evals": est_evals,
        "sim_constraints": any(
            c.code is not None and not c.code.a_priori for c in selected_cons
        ),
        "hidden_constraints": any(
            c.code is not None and not c.code.known for c in selected_cons
        ),
        "all_bounded": all(v.bounded for v in selected_vars if v.dtype is VarType.REAL),
    }


def recommend(spec: ProblemSpec, table: RuleTable | None = None) -> list[Recommendation]:
    """Ranked algorithm families for a finalized spec.

    Deterministic: families are ordered by total weight of their fired
    rules, ties broken by the table's fixed priority list; ranks are
    contiguous from 1.
    """
    table = table or rule_table()
    features = extract_features(spec)

    fired: dict[Family, list[RuleFire]] = {}
    weights: dict[Family, float] = {}
    for rule in table.rules:
        if evaluate_predicate(rule.predicate, features):
            matched = tuple(
                (name, features[name]) for name in _predicate_names(rule.predicate)
            )
            fired.setdefault(rule.family, []).append(
                RuleFire(rule_id=rule.rule_id, matched_features=matched, citation=rule.citation)
            )
            weights[rule.family] = weights.get(rule.family, 0.0) + rule.rank_weight

    priority = {family: i for i, family in enumerate(table.family_priority)}
    ordered = sorted(weights, key=lambda fam: (-weights[fam], priority[fam]))
    return [
        Recommendation(family=family, rank=i + 1, trace=tuple(fired[family]))
        for i, family in enumerate(ordered)
    ]


def explain(rec: Recommendation) -> str:
    """Human-readable rationale: each fired rule with its citation."""
    lines = [f"{rec.family.value} (rank {rec.rank})"]
    for fire in rec.trace:
        matched = ", ".join(f"{name}={value}" for name, value in fire.matched_features)
        lines.append(f"  - rule {fire.rule_id} [{matched}]: {fire.citation}")
    return "\n".join(lines)


def recommendations_payload(recs: list[Recommendation]) -> list[dict]:
    return [
        {
            "family": rec.family.value,
            "rank": rec.rank,
            "trace": [
                {
                    "rule_id": fire.rule_id,
                    "matched_features": {
                        k: (None if isinstance(v, float) and math.isinf(v) else v)
                        for k, v in fire.matched_features
                    },
                    "citation": fire.citation,
                }
                for fire in rec.trace
            ],
        }
        for rec in recs
    ]


def recommendations_markdown(recs: list[Recommendation]) -> str:
    lines = ["| rank | family | fired rules |", "|---|---|---|"]
    for rec in recs:
        rules = "; ".join(fire.rule_id for fire in rec.trace)
        lines.append(f"| {rec.rank} | {rec.family.value} | {rules} |")
    lines.append("")
    for rec in recs:
        lines.append(explain(rec))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
