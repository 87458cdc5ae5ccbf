"""Session state machine walking a team through the intake checklist.

A session tracks one item instance per question actually on the table:
top-level items plus blocks spawned per objective (and per part of a
decomposed objective), per variable, and per constraint.  Answers may be
revised; the draft spec is rebuilt deterministically from the latest
answers, and instances are never deleted once created — re-answering a list
merely deactivates the blocks of entities no longer on it.

All engine functions are pure (session in, session out); persistence and
locking live with the callers.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Any, Iterable, Mapping, Sequence

from . import problem
from .qrak import InconsistentFlags, Ternary, classify
from .serde import Fields, ParseError, VersionError, canonical_bytes, load_document, timestamp

SESSION_SCHEMA_VERSION = 1


class Stage(str, Enum):
    PLANNING = "planning"
    DESIGN = "design"
    IMPLEMENTATION = "implementation"
    EXPERIMENTATION = "experimentation"
    APPLICATION = "application"


STAGE_ORDER = [
    Stage.PLANNING,
    Stage.DESIGN,
    Stage.IMPLEMENTATION,
    Stage.EXPERIMENTATION,
    Stage.APPLICATION,
]


class AnswerKind(str, Enum):
    FREE_TEXT = "free_text"
    GOAL_KIND = "goal_kind"
    OBJECTIVE_BLOCK = "objective_block"
    VARIABLE_BLOCK = "variable_block"
    CONSTRAINT_BLOCK = "constraint_block"
    PAIR_LIST = "pair_list"
    FORMULATION_BLOCK = "formulation_block"
    COST_BLOCK = "cost_block"
    RESPONSIBILITY_LIST = "responsibility_list"
    PARTICIPANT_LIST = "participant_list"


class ExpandsPer(str, Enum):
    OBJECTIVE = "objective"
    OBJECTIVE_PART = "objective_part"
    VARIABLE = "variable"
    CONSTRAINT = "constraint"


class InstanceStatus(str, Enum):
    PENDING = "pending"
    ANSWERED = "answered"
    SKIPPED = "skipped"


class ChecklistError(ValueError):
    pass


class EmptyParticipants(ChecklistError):
    pass


class UnknownInstance(ChecklistError):
    pass


class AnswerTypeMismatch(ChecklistError):
    pass


class QrakInconsistent(ChecklistError):
    pass


class RequiredItem(ChecklistError):
    pass


class EmptyReason(ChecklistError):
    pass


class InstanceNotPending(ChecklistError):
    pass


class InvalidStageTransition(ChecklistError):
    pass


class IncompleteSession(ChecklistError):
    def __init__(self, pending: list[str], required: list[str]):
        self.pending = pending
        self.required = required
        parts = []
        if required:
            parts.append(f"unanswered required items: {', '.join(required)}")
        if pending:
            parts.append(f"pending instances: {', '.join(pending)}")
        super().__init__("; ".join(parts) or "session incomplete")


class SpecInvalid(ChecklistError):
    def __init__(self, findings: list[problem.Finding]):
        self.findings = findings
        summary = "; ".join(f"{f.code}({f.subject})" for f in findings)
        super().__init__(f"finalized draft fails validation: {summary}")


@dataclass(frozen=True)
class Bullet:
    id: str
    prompt: str


@dataclass(frozen=True)
class Item:
    id: str
    number: int
    prompt: str
    answer_kind: AnswerKind
    expands_per: ExpandsPer | None = None
    required_for_finalize: bool = False
    bullets: tuple[Bullet, ...] = ()


@dataclass(frozen=True)
class ChecklistTemplate:
    version: int
    items: tuple[Item, ...]

    def __post_init__(self):
        ids = [item.id for item in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("template item ids must be unique")

    def item(self, item_id: str) -> Item:
        for item in self.items:
            if item.id == item_id:
                return item
        raise KeyError(item_id)


_DEFAULT_TEMPLATE: ChecklistTemplate | None = None


def default_template() -> ChecklistTemplate:
    global _DEFAULT_TEMPLATE
    if _DEFAULT_TEMPLATE is None:
        raw = json.loads(
            resources.files("greybox").joinpath("data/default_template.json").read_text("utf-8")
        )
        items = tuple(
            Item(
                id=entry["id"],
                number=int(entry["number"]),
                prompt=entry["prompt"],
                answer_kind=AnswerKind(entry["answer_kind"]),
                expands_per=ExpandsPer(entry["expands_per"]) if entry.get("expands_per") else None,
                required_for_finalize=bool(entry.get("required_for_finalize", False)),
                bullets=tuple(Bullet(b["id"], b["prompt"]) for b in entry.get("bullets", ())),
            )
            for entry in raw["items"]
        )
        _DEFAULT_TEMPLATE = ChecklistTemplate(version=int(raw["version"]), items=items)
    return _DEFAULT_TEMPLATE


@dataclass(frozen=True)
class ItemInstance:
    instance_id: str
    item_id: str
    bullet_id: str | None
    entity_path: str | None
    seq: int
    status: InstanceStatus
    answer: Any = None
    skip_reason: str | None = None


@dataclass(frozen=True)
class ChecklistSession:
    id: str
    template_version: int
    revision: int
    stage: Stage
    created_at: str
    updated_at: str
    participants: tuple[tuple[str, str], ...]
    instances: tuple[ItemInstance, ...] = ()

    def instance(self, instance_id: str) -> ItemInstance | None:
        for inst in self.instances:
            if inst.instance_id == instance_id:
                return inst
        return None


def _instance_id(item_id: str, bullet_id: str | None, path: str | None) -> str:
    if bullet_id is None:
        return item_id
    return f"{item_id}:{path}:{bullet_id}"


# --- answer payload validation ----------------------------------------------


def _mismatch(message: str) -> AnswerTypeMismatch:
    return AnswerTypeMismatch(message)


def _require_dict(payload: Any) -> dict:
    if not isinstance(payload, dict):
        raise _mismatch(f"expected an object answer, got {type(payload).__name__}")
    return payload


def _names_list(raw: Any, what: str) -> list[str]:
    if not isinstance(raw, list):
        raise _mismatch(f"{what} must be a list of names")
    seen = set()
    for name in raw:
        if not isinstance(name, str):
            raise _mismatch(f"{what} entries must be strings")
        try:
            problem._check_identifier(name, what)
        except ValueError as exc:
            raise _mismatch(str(exc)) from exc
        if name in seen:
            raise _mismatch(f"duplicate {what} name '{name}'")
        seen.add(name)
    return list(raw)


def _pairs_list(raw: Any, what: str) -> list[list[str]]:
    if not isinstance(raw, list):
        raise _mismatch(f"{what} must be a list of [name, name] pairs")
    for pair in raw:
        if not isinstance(pair, list) or len(pair) != 2 or not all(isinstance(x, str) for x in pair):
            raise _mismatch(f"{what} entries must be [string, string] pairs")
    return raw


def _ternary_field(payload: dict, name: str, required: bool = True) -> str | None:
    if name not in payload:
        if required:
            raise _mismatch(f"missing field '{name}'")
        return None
    value = payload[name]
    try:
        return Ternary(value).value
    except ValueError:
        raise _mismatch(f"'{name}' must be yes, no, or unknown; got {value!r}") from None


def _enum_field(payload: dict, name: str, enum_cls, required: bool = True) -> str | None:
    if name not in payload or payload[name] is None:
        if required:
            raise _mismatch(f"missing field '{name}'")
        return None
    try:
        return enum_cls(payload[name]).value
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise _mismatch(f"'{name}' must be one of [{allowed}]") from None


def _number_field(payload: dict, name: str) -> float | None:
    value = payload.get(name)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _mismatch(f"'{name}' must be a number")
    return float(value)


def _cost_fields(payload: Any, context: str) -> dict:
    payload = _require_dict(payload)
    allowed = {"kind", "low", "high", "unit", "distribution"}
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise _mismatch(f"{context}: unexpected field '{unknown[0]}'")
    _enum_field(payload, "kind", problem.CostKind, required=False)
    _number_field(payload, "low")
    _number_field(payload, "high")
    if "unit" in payload and not isinstance(payload["unit"], str):
        raise _mismatch(f"{context}: 'unit' must be a string")
    if "distribution" in payload and payload["distribution"] is not None and not isinstance(payload["distribution"], str):
        raise _mismatch(f"{context}: 'distribution' must be a string")
    try:
        problem.CostEstimate(**_cost_args(payload))
    except ValueError as exc:
        raise _mismatch(f"{context}: {exc}") from exc
    return payload


def _cost_args(payload: Mapping[str, Any] | None) -> dict:
    payload = payload or {}
    return {
        "kind": problem.CostKind(payload.get("kind", "constant")),
        "low": float(payload.get("low", 0.0)),
        "high": float(payload.get("high", 0.0)),
        "unit": payload.get("unit", "seconds"),
        "distribution": payload.get("distribution"),
    }


def _check_no_extra(payload: dict, allowed: Iterable[str], context: str) -> None:
    unknown = sorted(set(payload) - set(allowed))
    if unknown:
        raise _mismatch(f"{context}: unexpected field '{unknown[0]}'")


def _validate_top_level(kind: AnswerKind, payload: Any) -> Any:
    if kind is AnswerKind.GOAL_KIND:
        if isinstance(payload, str):
            payload = {"goal": payload}
        payload = _require_dict(payload)
        _check_no_extra(payload, {"goal"}, "goal answer")
        _enum_field(payload, "goal", problem.GoalKind)
        return payload
    if kind is AnswerKind.FREE_TEXT:
        payload = _require_dict(payload)
        allowed = {"relationships", "experience", "previous_attempts", "context"}
        _check_no_extra(payload, allowed, "background answer")
        for key, value in payload.items():
            if not isinstance(value, str):
                raise _mismatch(f"'{key}' must be a string")
        return payload
    if kind is AnswerKind.OBJECTIVE_BLOCK:
        payload = _require_dict(payload)
        _check_no_extra(payload, {"objectives"}, "objective list")
        _names_list(payload.get("objectives"), "objective")
        return payload
    if kind is AnswerKind.VARIABLE_BLOCK:
        payload = _require_dict(payload)
        _check_no_extra(payload, {"variables"}, "variable list")
        _names_list(payload.get("variables"), "variable")
        return payload
    if kind is AnswerKind.CONSTRAINT_BLOCK:
        payload = _require_dict(payload)
        _check_no_extra(payload, {"constraints"}, "constraint list")
        _names_list(payload.get("constraints"), "constraint")
        return payload
    if kind is AnswerKind.PAIR_LIST:
        payload = _require_dict(payload)
        _check_no_extra(payload, {"conflicts"}, "conflict pairs")
        _pairs_list(payload.get("conflicts", []), "conflicts")
        return payload
    if kind is AnswerKind.FORMULATION_BLOCK:
        payload = _require_dict(payload)
        allowed = {"selected_objectives", "selected_variables", "selected_constraints", "paradigm"}
        _check_no_extra(payload, allowed, "formulation")
        objectives = _names_list(payload.get("selected_objectives"), "objective")
        variables = _names_list(payload.get("selected_variables"), "variable")
        if not objectives or not variables:
            raise _mismatch("formulation must select at least one objective and one variable")
        _names_list(payload.get("selected_constraints", []), "constraint")
        _enum_field(payload, "paradigm", problem.Paradigm, required=False)
        return payload
    if kind is AnswerKind.COST_BLOCK:
        payload = _require_dict(payload)
        _check_no_extra(payload, {"cost_model", "budget"}, "cost model")
        if not isinstance(payload.get("cost_model"), str) or not payload["cost_model"].strip():
            raise _mismatch("'cost_model' must be a non-empty string")
        _cost_fields(payload.get("budget", {}), "budget")
        return payload
    if kind is AnswerKind.RESPONSIBILITY_LIST:
        payload = _require_dict(payload)
        _check_no_extra(payload, {"responsibilities"}, "responsibilities")
        pairs = _pairs_list(payload.get("responsibilities"), "responsibilities")
        if not pairs:
            raise _mismatch("at least one responsibility must be allocated")
        return payload
    if kind is AnswerKind.PARTICIPANT_LIST:
        payload = _require_dict(payload)
        _check_no_extra(payload, {"participants"}, "participants")
        pairs = _pairs_list(payload.get("participants"), "participants")
        if not pairs:
            raise EmptyParticipants("at least one participant is required")
        return payload
    raise _mismatch(f"no validator for answer kind {kind}")


def _validate_bullet(item: Item, bullet_id: str, payload: Any) -> Any:
    payload = _require_dict(payload)
    if item.expands_per in (ExpandsPer.OBJECTIVE, ExpandsPer.OBJECTIVE_PART):
        if bullet_id == "decomposition":
            allowed = {"decomposable", "additively_separable", "parts"}
            _check_no_extra(payload, allowed, "decomposition")
            decomposable = _ternary_field(payload, "decomposable")
            _ternary_field(payload, "additively_separable", required=False)
            parts = payload.get("parts", [])
            _names_list(parts, "part")
            if decomposable == "yes" and not parts:
                raise _mismatch("a decomposable objective must name its parts")
            if decomposable != "yes" and parts:
                raise _mismatch("parts are only valid when decomposable is 'yes'")
            return payload
        if bullet_id == "analytic":
            _check_no_extra(payload, {"analytic_form", "gradient_available"}, "analytic")
            _ternary_field(payload, "analytic_form")
            _ternary_field(payload, "gradient_available", required=False)
            return payload
        if bullet_id == "shape":
            _check_no_extra(payload, {"shape"}, "shape")
            _enum_field(payload, "shape", problem.ObjectiveShape)
            return payload
        if bullet_id == "structure":
            _check_no_extra(payload, {"global_structure"}, "structure")
            _enum_field(payload, "global_structure", problem.GlobalStructure)
            return payload
        if bullet_id == "deterministic":
            _check_no_extra(payload, {"deterministic"}, "deterministic")
            _ternary_field(payload, "deterministic")
            return payload
        if bullet_id == "domain_image":
            allowed = {"domain_vars", "image_lower", "image_upper"}
            _check_no_extra(payload, allowed, "domain and image")
            _names_list(payload.get("domain_vars", []), "variable")
            low = _number_field(payload, "image_lower")
            high = _number_field(payload, "image_upper")
            if (low is None) != (high is None):
                raise _mismatch("image bounds must be given as a pair or not at all")
            if low is not None and low > high:
                raise _mismatch("image lower bound exceeds upper bound")
            return payload
        if bullet_id == "cost":
            return _cost_fields(payload, "evaluation cost")
    if item.expands_per is ExpandsPer.VARIABLE:
        if bullet_id == "domain":
            _check_no_extra(payload, {"dtype", "lower", "upper"}, "variable domain")
            _enum_field(payload, "dtype", problem.VarType)
            low = _number_field(payload, "lower")
            high = _number_field(payload, "upper")
            if low is not None and high is not None and not low < high:
                raise _mismatch("lower bound must be strictly below upper bound")
            return payload
        if bullet_id == "default":
            _check_no_extra(payload, {"default"}, "default value")
            value = payload.get("default")
            if value is not None and not isinstance(value, (str, int, float, bool)):
                raise _mismatch("'default' must be a scalar")
            return payload
        if bullet_id == "influence":
            _check_no_extra(payload, {"influence"}, "influence")
            influence = payload.get("influence")
            if not isinstance(influence, dict):
                raise _mismatch("'influence' must map objective names to levels")
            for key, value in influence.items():
                try:
                    problem.InfluenceLevel(value)
                except ValueError:
                    raise _mismatch(
                        f"influence on '{key}' must be high, medium, low, or unknown"
                    ) from None
            return payload
        if bullet_id == "transform":
            _check_no_extra(payload, {"transform", "label"}, "transform")
            kind = _enum_field(payload, "transform", problem.TransformKind)
            label = payload.get("label")
            if kind == "custom" and not label:
                raise _mismatch("custom transforms need a label")
            if kind != "custom" and label:
                raise _mismatch("label is only valid for custom transforms")
            return payload
    if item.expands_per is ExpandsPer.CONSTRAINT:
        if bullet_id == "known":
            _check_no_extra(payload, {"known"}, "known flag")
            if not isinstance(payload.get("known"), bool):
                raise _mismatch("'known' must be true or false")
            return payload
        if bullet_id == "apriori":
            _check_no_extra(payload, {"a_priori", "cost"}, "a-priori flag")
            _ternary_field(payload, "a_priori")
            if "cost" in payload:
                _cost_fields(payload["cost"], "constraint cost")
            return payload
        if bullet_id == "relaxable":
            _check_no_extra(payload, {"relaxable"}, "relaxable flag")
            _ternary_field(payload, "relaxable")
            return payload
        if bullet_id == "quantifiable":
            _check_no_extra(payload, {"quantifiable"}, "quantifiable flag")
            _ternary_field(payload, "quantifiable")
            return payload
    raise _mismatch(f"no validator for bullet '{bullet_id}' of item '{item.id}'")


# --- expansion ---------------------------------------------------------------


def _answered(states: Mapping[str, ItemInstance], instance_id: str) -> Any:
    inst = states.get(instance_id)
    if inst is not None and inst.status is InstanceStatus.ANSWERED:
        return inst.answer
    return None


def _objective_paths(states: Mapping[str, ItemInstance]) -> list[str]:
    top = _answered(states, "item4")
    if not top:
        return []
    paths: list[str] = []

    def visit(path: str, depth: int) -> None:
        paths.append(path)
        if depth >= 4:
            return
        decomposition = _answered(states, _instance_id("item4", "decomposition", path))
        if decomposition and decomposition.get("decomposable") == "yes":
            for part in decomposition.get("parts", []):
                visit(f"{path}.{part}", depth + 1)

    for name in top.get("objectives", []):
        visit(name, 1)
    return paths


def _entity_names(states: Mapping[str, ItemInstance], item_id: str, key: str) -> list[str]:
    answer = _answered(states, item_id)
    return list(answer.get(key, [])) if answer else []


def _expected_keys(template: ChecklistTemplate, states: Mapping[str, ItemInstance]) -> list[tuple[str, str | None, str | None]]:
    keys: list[tuple[str, str | None, str | None]] = []
    for item in template.items:
        keys.append((item.id, None, None))
        if item.expands_per in (ExpandsPer.OBJECTIVE, ExpandsPer.OBJECTIVE_PART):
            for path in _objective_paths(states):
                for bullet in item.bullets:
                    if bullet.id == "structure":
                        shape = _answered(states, _instance_id(item.id, "shape", path))
                        if not shape or shape.get("shape") not in ("multimodal", "unknown"):
                            continue
                    keys.append((item.id, bullet.id, path))
        elif item.expands_per is ExpandsPer.VARIABLE:
            for name in _entity_names(states, item.id, "variables"):
                for bullet in item.bullets:
                    keys.append((item.id, bullet.id, name))
        elif item.expands_per is ExpandsPer.CONSTRAINT:
            for name in _entity_names(states, item.id, "constraints"):
                for bullet in item.bullets:
                    keys.append((item.id, bullet.id, name))
    return keys


def active_instance_ids(template: ChecklistTemplate, session: ChecklistSession) -> list[str]:
    """Instance ids currently on the table, in template-then-creation order."""
    states = {inst.instance_id: inst for inst in session.instances}
    expected = {
        _instance_id(item_id, bullet_id, path)
        for item_id, bullet_id, path in _expected_keys(template, states)
    }
    numbers = {item.id: item.number for item in template.items}
    active = [inst for inst in session.instances if inst.instance_id in expected]
    active.sort(key=lambda inst: (numbers.get(inst.item_id, 99), inst.seq))
    return [inst.instance_id for inst in active]


def _grow(template: ChecklistTemplate, instances: list[ItemInstance]) -> list[ItemInstance]:
    """Append Pending instances for newly expected keys; never delete."""
    states = {inst.instance_id: inst for inst in instances}
    next_seq = max((inst.seq for inst in instances), default=-1) + 1
    for item_id, bullet_id, path in _expected_keys(template, states):
        instance_id = _instance_id(item_id, bullet_id, path)
        if instance_id not in states:
            inst = ItemInstance(
                instance_id=instance_id,
                item_id=item_id,
                bullet_id=bullet_id,
                entity_path=path,
                seq=next_seq,
                status=InstanceStatus.PENDING,
            )
            instances.append(inst)
            states[instance_id] = inst
            next_seq += 1
    return instances


# --- engine operations -------------------------------------------------------


def new_session(
    template: ChecklistTemplate,
    participants: Sequence[tuple[str, str]],
    session_id: str | None = None,
) -> ChecklistSession:
    """Open a session; the introduction item is pre-answered from the roster."""
    participants = tuple((str(n), str(r)) for n, r in participants)
    if not participants:
        raise EmptyParticipants("a session needs at least one participant")
    now = timestamp()
    instances: list[ItemInstance] = []
    for seq, item in enumerate(template.items):
        if item.answer_kind is AnswerKind.PARTICIPANT_LIST:
            instances.append(ItemInstance(
                instance_id=item.id,
                item_id=item.id,
                bullet_id=None,
                entity_path=None,
                seq=seq,
                status=InstanceStatus.ANSWERED,
                answer={"participants": [list(p) for p in participants]},
            ))
        else:
            instances.append(ItemInstance(
                instance_id=item.id,
                item_id=item.id,
                bullet_id=None,
                entity_path=None,
                seq=seq,
                status=InstanceStatus.PENDING,
            ))
    return ChecklistSession(
        id=session_id or uuid.uuid4().hex,
        template_version=template.version,
        revision=1,
        stage=Stage.PLANNING,
        created_at=now,
        updated_at=now,
        participants=participants,
        instances=tuple(instances),
    )


def next_item(
    template: ChecklistTemplate,
    session: ChecklistSession,
    jump: str | None = None,
) -> ItemInstance | None:
    """First pending instance in checklist order, or None when done.

    ``jump`` requests a specific pending instance out of order (the
    objective/variable/constraint sections may be worked in any order).
    """
    active = active_instance_ids(template, session)
    states = {inst.instance_id: inst for inst in session.instances}
    if jump is not None:
        if jump not in active:
            raise UnknownInstance(f"no active instance '{jump}'")
        inst = states[jump]
        if inst.status is not InstanceStatus.PENDING:
            raise InstanceNotPending(f"instance '{jump}' is not pending")
        return inst
    for instance_id in active:
        if states[instance_id].status is InstanceStatus.PENDING:
            return states[instance_id]
    return None


def _check_qrak(states: Mapping[str, ItemInstance], path: str) -> None:
    known_answer = _answered(states, _instance_id("item6", "known", path))
    known = known_answer.get("known") if known_answer else None
    flags = {}
    for bullet_id, key in (("apriori", "a_priori"), ("relaxable", "relaxable"), ("quantifiable", "quantifiable")):
        answer = _answered(states, _instance_id("item6", bullet_id, path))
        flags[key] = Ternary(answer[key]) if answer else Ternary.UNKNOWN
    if known is False:
        try:
            classify(False, flags["a_priori"], flags["relaxable"], flags["quantifiable"])
        except InconsistentFlags as exc:
            raise QrakInconsistent(f"constraint '{path}': {exc}") from exc


def answer(
    template: ChecklistTemplate,
    session: ChecklistSession,
    instance_id: str,
    payload: Any,
) -> ChecklistSession:
    """Record an answer; spawns per-entity blocks and re-derives the draft.

    Re-answering is allowed (meetings revise earlier statements).  Constraint
    answers are checked against the classification rules immediately:
    contradictory flags reject the answer rather than storing an inconsistent
    draft.
    """
    states = {inst.instance_id: inst for inst in session.instances}
    active = set(active_instance_ids(template, session))
    inst = states.get(instance_id)
    if inst is None or instance_id not in active:
        raise UnknownInstance(f"no active instance '{instance_id}'")
    item = template.item(inst.item_id)
    if inst.bullet_id is None:
        payload = _validate_top_level(item.answer_kind, payload)
    else:
        payload = _validate_bullet(item, inst.bullet_id, payload)

    updated = replace(inst, status=InstanceStatus.ANSWERED, answer=payload, skip_reason=None)
    instances = [updated if i.instance_id == instance_id else i for i in session.instances]
    new_states = {i.instance_id: i for i in instances}
    if item.expands_per is ExpandsPer.CONSTRAINT and inst.bullet_id is not None:
        _check_qrak(new_states, inst.entity_path)

    instances = _grow(template, instances)
    participants = session.participants
    if item.answer_kind is AnswerKind.PARTICIPANT_LIST:
        participants = tuple((p[0], p[1]) for p in payload["participants"])
    return replace(
        session,
        participants=participants,
        instances=tuple(instances),
        revision=session.revision + 1,
        updated_at=timestamp(),
    )


def skip(
    template: ChecklistTemplate,
    session: ChecklistSession,
    instance_id: str,
    reason: str,
) -> ChecklistSession:
    """Mark a pending instance as skipped; the draft records unknown."""
    if not isinstance(reason, str) or not reason.strip():
        raise EmptyReason("a skip needs a reason")
    states = {inst.instance_id: inst for inst in session.instances}
    active = set(active_instance_ids(template, session))
    inst = states.get(instance_id)
    if inst is None or instance_id not in active:
        raise UnknownInstance(f"no active instance '{instance_id}'")
    item = template.item(inst.item_id)
    if inst.bullet_id is None and item.required_for_finalize:
        raise RequiredItem(f"item '{item.id}' must be answered before finalizing")
    if inst.status is not InstanceStatus.PENDING:
        raise InstanceNotPending(f"instance '{instance_id}' is not pending")
    updated = replace(inst, status=InstanceStatus.SKIPPED, skip_reason=reason.strip(), answer=None)
    instances = tuple(updated if i.instance_id == instance_id else i for i in session.instances)
    return replace(
        session,
        instances=instances,
        revision=session.revision + 1,
        updated_at=timestamp(),
    )


def set_stage(session: ChecklistSession, stage: Stage) -> ChecklistSession:
    """Advance the development-cycle stage; only forward moves or a reset to
    planning (a new iteration) are legal."""
    current = STAGE_ORDER.index(session.stage)
    target = STAGE_ORDER.index(stage)
    if target != 0 and target < current:
        raise InvalidStageTransition(f"cannot move back from {session.stage.value} to {stage.value}")
    return replace(session, stage=stage, revision=session.revision + 1, updated_at=timestamp())


# --- draft assembly ----------------------------------------------------------


_DEFAULT_COST = {"kind": "constant", "low": 0.0, "high": 0.0, "unit": "seconds", "distribution": None}


def _cost_payload_from(answer_payload: Mapping[str, Any] | None) -> dict:
    args = _cost_args(answer_payload)
    return {
        "kind": args["kind"].value,
        "low": args["low"],
        "high": args["high"],
        "unit": args["unit"],
        "distribution": args["distribution"],
    }


def _objective_payload(states: Mapping[str, ItemInstance], path: str) -> dict:
    name = path.rsplit(".", 1)[-1]
    decomposition = _answered(states, _instance_id("item4", "decomposition", path)) or {}
    analytic = _answered(states, _instance_id("item4", "analytic", path)) or {}
    shape = _answered(states, _instance_id("item4", "shape", path)) or {}
    structure = _answered(states, _instance_id("item4", "structure", path)) or {}
    deterministic = _answered(states, _instance_id("item4", "deterministic", path)) or {}
    domain_image = _answered(states, _instance_id("item4", "domain_image", path)) or {}
    cost = _answered(states, _instance_id("item4", "cost", path))

    parts = []
    if decomposition.get("decomposable") == "yes":
        parts = [
            _objective_payload(states, f"{path}.{part}")
            for part in decomposition.get("parts", [])
        ]
    image_bounds = None
    if domain_image.get("image_lower") is not None:
        image_bounds = [domain_image["image_lower"], domain_image["image_upper"]]
    return {
        "name": name,
        "parts": parts,
        "additively_separable": decomposition.get("additively_separable", "unknown"),
        "analytic_form": analytic.get("analytic_form", "unknown"),
        "gradient_available": analytic.get("gradient_available", "unknown"),
        "shape": shape.get("shape", "unknown"),
        "global_structure": structure.get("global_structure", "unknown"),
        "deterministic": deterministic.get("deterministic", "unknown"),
        "domain_vars": list(domain_image.get("domain_vars", [])),
        "image_bounds": image_bounds,
        "cost": _cost_payload_from(cost) if cost else dict(_DEFAULT_COST),
    }


def _variable_payload(states: Mapping[str, ItemInstance], name: str) -> dict:
    domain = _answered(states, _instance_id("item5", "domain", name)) or {}
    default = _answered(states, _instance_id("item5", "default", name)) or {}
    influence = _answered(states, _instance_id("item5", "influence", name)) or {}
    transform = _answered(states, _instance_id("item5", "transform", name)) or {}
    return {
        "name": name,
        "dtype": domain.get("dtype", "real"),
        "lower": domain.get("lower"),
        "upper": domain.get("upper"),
        "default": default.get("default"),
        "influence": dict(sorted((influence.get("influence") or {}).items())),
        "transform": transform.get("transform", "none"),
        "transform_label": transform.get("label"),
    }


def _constraint_payload(states: Mapping[str, ItemInstance], name: str) -> dict:
    known_answer = _answered(states, _instance_id("item6", "known", name))
    apriori = _answered(states, _instance_id("item6", "apriori", name)) or {}
    relaxable = _answered(states, _instance_id("item6", "relaxable", name)) or {}
    quantifiable = _answered(states, _instance_id("item6", "quantifiable", name)) or {}
    # A named, discussed constraint defaults to known; hidden-ness is asserted.
    known = known_answer.get("known", True) if known_answer else True
    flags = {
        "a_priori": apriori.get("a_priori", "unknown"),
        "relaxable": relaxable.get("relaxable", "unknown"),
        "quantifiable": quantifiable.get("quantifiable", "unknown"),
    }
    if not known:
        flags = {key: "no" for key in flags}
        code = "NUSH"
    elif all(v in ("yes", "no") for v in flags.values()):
        code = classify(
            True,
            Ternary(flags["a_priori"]),
            Ternary(flags["relaxable"]),
            Ternary(flags["quantifiable"]),
        ).rendered
    else:
        code = None
    return {
        "name": name,
        "known": known,
        **flags,
        "cost": _cost_payload_from(apriori.get("cost")) if apriori.get("cost") else dict(_DEFAULT_COST),
        "code": code,
    }


def _background_text(answer_payload: Mapping[str, Any] | None) -> str:
    if not answer_payload:
        return ""
    labels = (
        ("relationships", "Theoretical relationships"),
        ("experience", "Expert knowledge and experience"),
        ("previous_attempts", "Previous attempts and existing data"),
        ("context", "Context"),
    )
    parts = [
        f"{label}: {answer_payload[key]}"
        for key, label in labels
        if answer_payload.get(key)
    ]
    return "\n".join(parts)


def draft_payload(template: ChecklistTemplate, session: ChecklistSession) -> dict:
    """Current draft spec as a spec-file payload; partial fields are null."""
    active = set(active_instance_ids(template, session))
    states = {
        inst.instance_id: inst
        for inst in session.instances
        if inst.instance_id in active
    }
    goal_answer = _answered(states, "item2")
    formulation = _answered(states, "item8")
    cost_answer = _answered(states, "item9")
    responsibilities = _answered(states, "item10")
    conflicts = _answered(states, "item7")
    return {
        "schema_version": problem.SCHEMA_VERSION,
        "goal": goal_answer.get("goal") if goal_answer else None,
        "background": _background_text(_answered(states, "item3")),
        "objectives": [
            _objective_payload(states, name)
            for name in _entity_names(states, "item4", "objectives")
        ],
        "variables": [
            _variable_payload(states, name)
            for name in _entity_names(states, "item5", "variables")
        ],
        "constraints": [
            _constraint_payload(states, name)
            for name in _entity_names(states, "item6", "constraints")
        ],
        "conflicts": list(conflicts.get("conflicts", [])) if conflicts else [],
        "formulation": {
            "selected_objectives": list(formulation["selected_objectives"]),
            "selected_variables": list(formulation["selected_variables"]),
            "selected_constraints": list(formulation.get("selected_constraints", [])),
            "paradigm": formulation.get("paradigm", "single_objective"),
        } if formulation else None,
        "cost_model": cost_answer.get("cost_model", "") if cost_answer else "",
        "budget": _cost_payload_from(cost_answer.get("budget")) if cost_answer else dict(_DEFAULT_COST),
        "responsibilities": [list(p) for p in (responsibilities or {}).get("responsibilities", [])],
        "participants": [list(p) for p in session.participants],
    }


def export_spec(template: ChecklistTemplate, session: ChecklistSession) -> problem.ProblemSpec:
    """Build the finalized spec from the draft without touching the session.

    Requires every active instance resolved and the formulation, cost model,
    and responsibility items answered.  A goal discussion that was skipped
    defaults to find_best, the ordinary optimization goal.
    """
    states = {inst.instance_id: inst for inst in session.instances}
    active = active_instance_ids(template, session)
    pending = [i for i in active if states[i].status is InstanceStatus.PENDING]
    required = [
        item.id
        for item in template.items
        if item.required_for_finalize
        and states[item.id].status is not InstanceStatus.ANSWERED
    ]
    if pending or required:
        raise IncompleteSession(pending=pending, required=required)

    payload = draft_payload(template, session)
    if payload["goal"] is None:
        payload["goal"] = problem.GoalKind.FIND_BEST.value
    try:
        spec = problem.spec_from_payload(payload)
    except (ParseError, ValueError) as exc:
        finding = problem.Finding(
            severity=problem.Severity.ERROR,
            code="DRAFT_MALFORMED",
            message=str(exc),
            subject="draft",
        )
        raise SpecInvalid([finding]) from exc
    findings = problem.validate_spec(spec)
    errors = [f for f in findings if f.severity is problem.Severity.ERROR]
    if errors:
        raise SpecInvalid(errors)
    return spec


def finalize(
    template: ChecklistTemplate,
    session: ChecklistSession,
) -> tuple[problem.ProblemSpec, ChecklistSession]:
    """Freeze the draft into a ProblemSpec and advance the stage to design."""
    spec = export_spec(template, session)
    stage = Stage.DESIGN if session.stage is Stage.PLANNING else session.stage
    updated = replace(
        session,
        stage=stage,
        revision=session.revision + 1,
        updated_at=timestamp(),
    )
    return spec, updated


def reopen(session: ChecklistSession) -> ChecklistSession:
    """Start a new development-cycle iteration: back to planning."""
    return replace(
        session,
        stage=Stage.PLANNING,
        revision=session.revision + 1,
        updated_at=timestamp(),
    )


def progress(template: ChecklistTemplate, session: ChecklistSession) -> dict[str, int]:
    states = {inst.instance_id: inst for inst in session.instances}
    counts = {"answered": 0, "skipped": 0, "pending": 0}
    for instance_id in active_instance_ids(template, session):
        counts[states[instance_id].status.value] += 1
    return counts


def apply_script(
    template: ChecklistTemplate,
    session: ChecklistSession,
    script: Sequence[Mapping[str, Any]],
) -> ChecklistSession:
    """Apply a recorded sequence of answer/skip operations, in order."""
    for step in script:
        op = step.get("op", "answer")
        if op == "answer":
            session = answer(template, session, step["item"], step["answer"])
        elif op == "skip":
            session = skip(template, session, step["item"], step.get("reason", ""))
        else:
            raise ChecklistError(f"unknown script op '{op}'")
    return session


# --- persistence -------------------------------------------------------------


def session_to_payload(session: ChecklistSession) -> dict:
    return {
        "schema_version": SESSION_SCHEMA_VERSION,
        "id": session.id,
        "template_version": session.template_version,
        "revision": session.revision,
        "stage": session.stage.value,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "participants": [list(p) for p in session.participants],
        "instances": [
            {
                "id": inst.instance_id,
                "item": inst.item_id,
                "bullet": inst.bullet_id,
                "path": inst.entity_path,
                "seq": inst.seq,
                "status": inst.status.value,
                "answer": inst.answer,
                "reason": inst.skip_reason,
            }
            for inst in sorted(session.instances, key=lambda i: i.seq)
        ],
    }


def save_session(session: ChecklistSession) -> bytes:
    return canonical_bytes(session_to_payload(session))


def load_session(data: bytes | str, template: ChecklistTemplate | None = None) -> ChecklistSession:
    """Decode a session file; the template version must match."""
    template = template or default_template()
    payload = load_document(data)
    f = Fields(payload, "", schema_version=SESSION_SCHEMA_VERSION)
    version = f.integer("schema_version")
    if version != SESSION_SCHEMA_VERSION:
        raise VersionError(f"unsupported session schema_version {version}")
    template_version = f.integer("template_version")
    if template_version != template.version:
        raise VersionError(
            f"session was recorded against template version {template_version}, "
            f"engine has {template.version}"
        )
    try:
        stage = Stage(f.string("stage"))
    except ValueError:
        raise ParseError("unknown stage", "stage") from None
    instances = []
    for i, raw in enumerate(f.array("instances")):
        fi = Fields(raw, f"instances[{i}]", schema_version=SESSION_SCHEMA_VERSION)
        try:
            status = InstanceStatus(fi.string("status"))
        except ValueError:
            raise ParseError("unknown status", fi.child_path("status")) from None
        instances.append(ItemInstance(
            instance_id=fi.string("id"),
            item_id=fi.string("item"),
            bullet_id=fi.string("bullet", required=False),
            entity_path=fi.string("path", required=False),
            seq=fi.integer("seq"),
            status=status,
            answer=fi.raw("answer", required=False),
            skip_reason=fi.string("reason", required=False),
        ))
        fi.finish()
    session = ChecklistSession(
        id=f.string("id"),
        template_version=template_version,
        revision=f.integer("revision"),
        stage=stage,
        created_at=f.string("created_at"),
        updated_at=f.string("updated_at"),
        participants=tuple(
            (p[0], p[1]) for p in f.array("participants")
            if isinstance(p, list) and len(p) == 2
        ),
        instances=tuple(instances),
    )
    f.finish()
    return session
