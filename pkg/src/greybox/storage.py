"""Local-filesystem persistence for sessions and exported specs.

One canonical JSON file per session or spec under a data directory
(``--data-dir`` flag or the GREYBOX_DATA_DIR environment variable).
Mutations on the same session id are serialized with an in-process lock;
reads see the last persisted snapshot.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path
from typing import Callable

from . import checklist, problem

ENV_DATA_DIR = "GREYBOX_DATA_DIR"


def resolve_data_dir(explicit: str | None = None) -> Path:
    path = explicit or os.environ.get(ENV_DATA_DIR) or ".greybox"
    return Path(path)


class SessionStore:
    def __init__(self, data_dir: str | Path, template: checklist.ChecklistTemplate | None = None):
        self.root = Path(data_dir)
        self.template = template or checklist.default_template()
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def session_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.session.json"

    def spec_path(self, session_id: str) -> Path:
        return self.root / "specs" / f"{session_id}.spec.json"

    def exists(self, session_id: str) -> bool:
        return self.session_path(session_id).exists()

    def load(self, session_id: str) -> checklist.ChecklistSession:
        path = self.session_path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        return checklist.load_session(path.read_bytes(), self.template)

    def save(self, session: checklist.ChecklistSession) -> None:
        path = self.session_path(session.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(checklist.save_session(session))

    def save_spec(self, session_id: str, spec: problem.ProblemSpec) -> Path:
        path = self.spec_path(session_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(problem.write_spec(spec))
        return path

    def load_spec(self, session_id: str) -> problem.ProblemSpec:
        path = self.spec_path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        return problem.parse_spec(path.read_bytes())

    def mutate(
        self,
        session_id: str,
        fn: Callable[[checklist.ChecklistSession], checklist.ChecklistSession],
    ) -> checklist.ChecklistSession:
        """Load-apply-save under the session's lock; returns the new state."""
        with self._lock(session_id):
            session = self.load(session_id)
            updated = fn(session)
            self.save(updated)
            return updated
