"""Versioned state files: canonical JSON with a checksummed header.

A state file is two lines: a header naming the format, version, component
kind, and the sha256 of the body; then the body, serialized canonically
(sorted keys, fixed separators, repr-roundtrip floats). Canonical form makes
save -> load -> save byte-identical. NaN and infinity are rejected at write
time: state floats are finite by invariant, so a violation is a bug worth
crashing on.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Any

FORMAT_NAME = "georadar-state"
FORMAT_VERSION = 1


class StateFormatError(ValueError):
    """Unrecognized file layout or wrong component kind."""


class StateVersionError(StateFormatError):
    """Version tag newer or older than this code understands."""


class StateChecksumError(StateFormatError):
    """Body does not match the checksum in the header."""


def canonical_dumps(payload: Any) -> str:
    return json.dumps(
        payload,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def write_state_file(path: str, kind: str, payload: Any) -> None:
    body = canonical_dumps(payload)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    header = canonical_dumps(
        {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": kind,
            "sha256": digest,
        }
    )
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(header + "\n" + body + "\n")
    os.replace(tmp, path)


def read_state_file(path: str, kind: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        body = fh.read()
    if body.endswith("\n"):
        body = body[:-1]
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"unreadable state header in {path}") from exc
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise StateFormatError(f"{path} is not a {FORMAT_NAME} file")
    if header.get("version") != FORMAT_VERSION:
        raise StateVersionError(
            f"{path} has version {header.get('version')}, expected {FORMAT_VERSION}"
        )
    if header.get("kind") != kind:
        raise StateFormatError(
            f"{path} holds kind {header.get('kind')!r}, expected {kind!r}"
        )
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != header.get("sha256"):
        raise StateChecksumError(f"checksum mismatch in {path}")
    return json.loads(body)
