"""Canonical JSON helpers shared by spec files, session files, and HTTP bodies.

All persisted documents use the same canonical form: UTF-8, object keys
sorted lexicographically, two-space indentation, trailing newline.  Re-saving
an unchanged document is byte-identical, which golden files and the
cross-interface equivalence tests rely on.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from typing import Any


class ParseError(ValueError):
    """A document could not be decoded into a domain object."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class VersionError(ValueError):
    """A document declares an unsupported schema or template version."""


def canonical_dumps(payload: Any) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def canonical_bytes(payload: Any) -> bytes:
    return canonical_dumps(payload).encode("utf-8")


def compact_dumps(payload: Any) -> str:
    """Single-line rendering with sorted keys, used for HTTP responses."""
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def load_document(data: bytes | str) -> Any:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not valid UTF-8: {exc}") from exc
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def timestamp() -> str:
    """Current UTC time as ISO-8601.

    Honors the GREYBOX_CLOCK environment variable (a fixed ISO-8601 string)
    so scripted runs are reproducible byte-for-byte.
    """
    fixed = os.environ.get("GREYBOX_CLOCK")
    if fixed:
        return fixed
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class Fields:
    """Strict field reader over a decoded JSON object.

    Tracks the document path for error messages and rejects fields the
    schema does not define.
    """

    def __init__(self, payload: Any, path: str, schema_version: int = 1):
        if not isinstance(payload, dict):
            raise ParseError(f"expected an object, got {type(payload).__name__}", path)
        self._payload = payload
        self._path = path
        self._seen: set[str] = set()
        self._version = schema_version

    def child_path(self, name: str) -> str:
        return f"{self._path}.{name}" if self._path else name

    def has(self, name: str) -> bool:
        self._seen.add(name)
        return name in self._payload and self._payload[name] is not None

    def raw(self, name: str, required: bool = True, default: Any = None) -> Any:
        self._seen.add(name)
        if name not in self._payload or self._payload[name] is None:
            if required:
                raise ParseError(f"missing required field '{name}'", self._path)
            return default
        return self._payload[name]

    def string(self, name: str, required: bool = True, default: str | None = None) -> Any:
        value = self.raw(name, required, default)
        if value is default and not required:
            return default
        if not isinstance(value, str):
            raise ParseError("expected a string", self.child_path(name))
        return value

    def integer(self, name: str, required: bool = True, default: int | None = None) -> Any:
        value = self.raw(name, required, default)
        if value is default and not required:
            return default
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError("expected an integer", self.child_path(name))
        return value

    def number(self, name: str, required: bool = True, default: float | None = None) -> Any:
        value = self.raw(name, required, default)
        if value is default and not required:
            return default
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError("expected a number", self.child_path(name))
        return float(value)

    def boolean(self, name: str, required: bool = True, default: bool | None = None) -> Any:
        value = self.raw(name, required, default)
        if value is default and not required:
            return default
        if not isinstance(value, bool):
            raise ParseError("expected a boolean", self.child_path(name))
        return value

    def array(self, name: str, required: bool = True) -> Any:
        value = self.raw(name, required, [] if not required else None)
        if value is None or (not required and name not in self._payload):
            return []
        if not isinstance(value, list):
            raise ParseError("expected an array", self.child_path(name))
        return value

    def finish(self) -> None:
        unknown = sorted(set(self._payload) - self._seen)
        if unknown:
            raise ParseError(
                f"schema_version {self._version} does not define field '{unknown[0]}'",
                self._path,
            )
