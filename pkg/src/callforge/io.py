"""JSONL reading/writing, checksums and atomic file output."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


class InputError(ValueError):
    """Malformed or inconsistent input data."""


def dumps(obj: Any) -> str:
    # Arabic stays readable; no \u escapes.
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, Any | InputError]]:
    """Yield ``(line_number, record)``; undecodable lines yield an InputError instead."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, InputError(f"{path}:{lineno}: {exc.msg}")


def read_jsonl(path: str | Path) -> list[Any]:
    rows = []
    for _, row in iter_jsonl(path):
        if isinstance(row, InputError):
            raise row
        rows.append(row)
    return rows


def jsonl_text(rows: Iterable[Any]) -> str:
    return "".join(dumps(r) + "\n" for r in rows)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write to a temp file in the same directory and rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: str | Path, rows: Iterable[Any]) -> None:
    atomic_write_text(path, jsonl_text(rows))


def write_json(path: str | Path, obj: Any) -> None:
    atomic_write_text(path, json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(obj: Any) -> str:
    return sha256_bytes(json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode())


def parallel_map(fn: Callable[[T], R], items: Sequence[T], jobs: int = 1, chunksize: int = 256) -> list[R]:
    """Map preserving input order; ``jobs > 1`` fans out to worker processes."""
    if jobs <= 1 or len(items) < 2 * chunksize:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
