"""Local corpus ingestion: directory walking, candidate filtering, JSONL loading."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Iterator

from .extractors import derive_repo
from .syntax import detect_imports, parse_python

DEFAULT_SIZE_CAP = 2 * 1024 * 1024  # bytes

_VENDOR_DIRS = {"venv", "node_modules", "__pycache__"}


@dataclass
class FileRecord:
    """One corpus file; ``skipped_reason`` is set exactly when content is absent."""

    path: str  # relative, posix-style
    repo: str
    data: bytes | None
    size: int
    skipped_reason: str | None = None


def _pruned(name: str) -> bool:
    return name.startswith(".") or name in _VENDOR_DIRS


def walk(
    root: str | Path,
    size_cap: int = DEFAULT_SIZE_CAP,
    repo_depth: int = 2,
) -> Iterator[FileRecord]:
    """Yield ``*.py`` files under ``root`` in stable sorted-path order.

    Hidden and vendor directories are pruned; oversized or binary files are
    yielded as skipped records rather than silently dropped.
    """
    root = Path(root)
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if not _pruned(d))
        for filename in sorted(filenames):
            if not filename.endswith(".py"):
                continue
            full = Path(dirpath) / filename
            rel = PurePosixPath(full.relative_to(root).as_posix())
            repo = derive_repo(str(rel), repo_depth)
            try:
                size = full.stat().st_size
            except OSError:
                yield FileRecord(str(rel), repo, None, 0, skipped_reason="unreadable")
                continue
            if size > size_cap:
                yield FileRecord(str(rel), repo, None, size, skipped_reason="size")
                continue
            try:
                data = full.read_bytes()
            except OSError:
                yield FileRecord(str(rel), repo, None, size, skipped_reason="unreadable")
                continue
            if b"\x00" in data:
                yield FileRecord(str(rel), repo, None, size, skipped_reason="binary")
                continue
            yield FileRecord(str(rel), repo, data, size)


def is_candidate(record: FileRecord) -> bool:
    """True iff the file imports one of the target LLM libraries."""
    if record.data is None:
        return False
    return bool(detect_imports(parse_python(record.data)))


def load_jsonl_corpus(path: str | Path) -> Iterator[FileRecord]:
    """Records from newline-delimited ``{"repo","path","content"}`` objects.

    Malformed lines become skipped records; the stream never aborts.
    """
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            placeholder = f"<line {lineno}>"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                yield FileRecord(placeholder, "", None, 0, skipped_reason="json")
                continue
            if not isinstance(obj, dict):
                yield FileRecord(placeholder, "", None, 0, skipped_reason="schema")
                continue
            rel = obj.get("path")
            repo = obj.get("repo")
            content = obj.get("content")
            if not isinstance(rel, str) or not isinstance(repo, str) or not isinstance(content, str):
                path_label = rel if isinstance(rel, str) else placeholder
                yield FileRecord(path_label, repo if isinstance(repo, str) else "", None, 0, skipped_reason="schema")
                continue
            data = content.encode("utf-8")
            yield FileRecord(rel, repo, data, len(data))
