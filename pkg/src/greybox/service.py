"""HTTP session API for the intake UI.

The endpoints speak the same canonical JSON as the files on disk, and every
mutation requires the caller to echo the session revision it last saw:
a mismatch returns 409 so a second scribe tab cannot silently clobber the
first.  Engine rejections (type mismatches, classification inconsistencies,
incomplete finalize) surface as 422 with the engine's error class and
message.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.staticfiles import StaticFiles

from . import checklist, problem
from .serde import compact_dumps
from .storage import SessionStore


def _json_response(payload: Any, status_code: int = 200) -> Response:
    return Response(
        content=compact_dumps(payload),
        status_code=status_code,
        media_type="application/json",
    )


class _ApiError(Exception):
    def __init__(self, status_code: int, payload: dict):
        self.status_code = status_code
        self.payload = payload


def _error(status_code: int, error: str, message: str, **extra) -> _ApiError:
    return _ApiError(status_code, {"error": error, "message": message, **extra})


def _engine_error(exc: checklist.ChecklistError) -> _ApiError:
    payload: dict[str, Any] = {
        "error": type(exc).__name__,
        "message": str(exc),
    }
    if isinstance(exc, checklist.IncompleteSession):
        payload["pending"] = exc.pending
        payload["required"] = exc.required
    if isinstance(exc, checklist.SpecInvalid):
        payload["findings"] = problem.findings_payload(exc.findings)
    return _ApiError(422, payload)


def _instance_view(template: checklist.ChecklistTemplate, inst: checklist.ItemInstance) -> dict:
    item = template.item(inst.item_id)
    if inst.bullet_id is None:
        prompt = item.prompt
        form_kind = item.answer_kind.value
    else:
        bullet = next(b for b in item.bullets if b.id == inst.bullet_id)
        prompt = bullet.prompt
        form_kind = f"{item.expands_per.value}_{inst.bullet_id}"
    return {
        "id": inst.instance_id,
        "item": inst.item_id,
        "number": item.number,
        "bullet": inst.bullet_id,
        "path": inst.entity_path,
        "prompt": prompt,
        "form_kind": form_kind,
        "status": inst.status.value,
        "answer": inst.answer,
        "skip_reason": inst.skip_reason,
    }


def _template_payload(template: checklist.ChecklistTemplate) -> dict:
    return {
        "version": template.version,
        "items": [
            {
                "id": item.id,
                "number": item.number,
                "prompt": item.prompt,
                "answer_kind": item.answer_kind.value,
                "expands_per": item.expands_per.value if item.expands_per else None,
                "required_for_finalize": item.required_for_finalize,
                "bullets": [{"id": b.id, "prompt": b.prompt} for b in item.bullets],
            }
            for item in template.items
        ],
    }


def _next_payload(store: SessionStore, session: checklist.ChecklistSession) -> dict:
    template = store.template
    current = checklist.next_item(template, session)
    states = {inst.instance_id: inst for inst in session.instances}
    pending = [
        _instance_view(template, states[instance_id])
        for instance_id in checklist.active_instance_ids(template, session)
        if states[instance_id].status is checklist.InstanceStatus.PENDING
    ]
    return {
        "revision": session.revision,
        "stage": session.stage.value,
        "done": current is None,
        "item": _instance_view(template, current) if current else None,
        "pending": pending,
        "progress": checklist.progress(template, session),
    }


def create_app(store: SessionStore, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="greybox intake service", docs_url=None, redoc_url=None)
    template = store.template

    @app.exception_handler(_ApiError)
    async def _handle_api_error(request: Request, exc: _ApiError):
        return _json_response(exc.payload, exc.status_code)

    def _load(session_id: str) -> checklist.ChecklistSession:
        try:
            return store.load(session_id)
        except KeyError:
            raise _error(404, "UnknownSession", f"no session '{session_id}'") from None

    def _check_revision(session: checklist.ChecklistSession, body: dict) -> None:
        revision = body.get("revision")
        if revision != session.revision:
            raise _error(
                409,
                "StaleRevision",
                f"session is at revision {session.revision}, request sent {revision}",
                revision=session.revision,
            )

    async def _body(request: Request) -> dict:
        try:
            payload = await request.json()
        except Exception:
            raise _error(400, "BadRequest", "request body must be JSON") from None
        if not isinstance(payload, dict):
            raise _error(400, "BadRequest", "request body must be a JSON object")
        return payload

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await _body(request)
        participants = body.get("participants") or []
        if not isinstance(participants, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(x, str) for x in p)
            for p in participants
        ):
            raise _error(400, "BadRequest", "participants must be [name, role] pairs")
        session_id = body.get("id")
        if session_id is not None and not isinstance(session_id, str):
            raise _error(400, "BadRequest", "id must be a string")
        if session_id and store.exists(session_id):
            raise _error(409, "SessionExists", f"session '{session_id}' already exists")
        try:
            session = checklist.new_session(
                template, [(p[0], p[1]) for p in participants], session_id=session_id
            )
        except checklist.ChecklistError as exc:
            raise _engine_error(exc) from None
        store.save(session)
        return _json_response({"id": session.id, **_next_payload(store, session)}, 201)

    @app.get("/sessions/{session_id}/next")
    async def get_next(session_id: str):
        session = _load(session_id)
        return _json_response(_next_payload(store, session))

    @app.post("/sessions/{session_id}/answers")
    async def post_answer(session_id: str, request: Request):
        body = await _body(request)
        instance_id = body.get("item")
        if not isinstance(instance_id, str):
            raise _error(400, "BadRequest", "field 'item' must name an instance")

        def apply(session: checklist.ChecklistSession) -> checklist.ChecklistSession:
            _check_revision(session, body)
            try:
                return checklist.answer(template, session, instance_id, body.get("answer"))
            except checklist.ChecklistError as exc:
                raise _engine_error(exc) from None

        try:
            session = store.mutate(session_id, apply)
        except KeyError:
            raise _error(404, "UnknownSession", f"no session '{session_id}'") from None
        return _json_response(_next_payload(store, session))

    @app.post("/sessions/{session_id}/skips")
    async def post_skip(session_id: str, request: Request):
        body = await _body(request)
        instance_id = body.get("item")
        if not isinstance(instance_id, str):
            raise _error(400, "BadRequest", "field 'item' must name an instance")

        def apply(session: checklist.ChecklistSession) -> checklist.ChecklistSession:
            _check_revision(session, body)
            try:
                return checklist.skip(template, session, instance_id, body.get("reason", ""))
            except checklist.ChecklistError as exc:
                raise _engine_error(exc) from None

        try:
            session = store.mutate(session_id, apply)
        except KeyError:
            raise _error(404, "UnknownSession", f"no session '{session_id}'") from None
        return _json_response(_next_payload(store, session))

    @app.post("/sessions/{session_id}/finalize")
    async def post_finalize(session_id: str, request: Request):
        body = await _body(request)
        result: dict[str, Any] = {}

        def apply(session: checklist.ChecklistSession) -> checklist.ChecklistSession:
            _check_revision(session, body)
            try:
                spec, updated = checklist.finalize(template, session)
            except checklist.ChecklistError as exc:
                raise _engine_error(exc) from None
            store.save_spec(session_id, spec)
            result["spec"] = problem.spec_to_payload(spec)
            return updated

        try:
            session = store.mutate(session_id, apply)
        except KeyError:
            raise _error(404, "UnknownSession", f"no session '{session_id}'") from None
        return _json_response({
            "revision": session.revision,
            "stage": session.stage.value,
            "spec": result["spec"],
        })

    @app.get("/sessions/{session_id}/spec")
    async def get_spec(session_id: str):
        session = _load(session_id)
        draft = checklist.draft_payload(template, session)
        findings: list[dict]
        finalized = False
        try:
            spec = checklist.export_spec(template, session)
            findings = problem.findings_payload(problem.validate_spec(spec))
            finalized = True
            draft = problem.spec_to_payload(spec)
        except checklist.IncompleteSession as exc:
            findings = [{
                "severity": "info",
                "code": "DRAFT_INCOMPLETE",
                "message": str(exc),
                "subject": "draft",
            }]
        except checklist.SpecInvalid as exc:
            findings = problem.findings_payload(exc.findings)
        return _json_response({
            "revision": session.revision,
            "finalized": finalized,
            "spec": draft,
            "findings": findings,
        })

    @app.get("/templates/default")
    async def get_template():
        return _json_response(_template_payload(template))

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(
    port: int = 8000,
    host: str = "127.0.0.1",
    data_dir: str | None = None,
    ui_dir: str | None = None,
) -> None:
    import uvicorn

    from .storage import resolve_data_dir

    store = SessionStore(resolve_data_dir(data_dir))
    app = create_app(store, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
