"""Reader/writer for ``key=value`` text files (run configs and capture sidecars)."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable


class KvError(ValueError):
    pass


def parse_kv(text: str) -> list[tuple[str, str]]:
    """Parse ``key=value`` lines, keeping order and repeated keys.

    Blank lines and lines starting with ``#`` are skipped.
    """
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise KvError(f"line {lineno}: expected key=value, got {raw!r}")
        pairs.append((key.strip(), value.strip()))
    return pairs


def read_kv(path: str | Path) -> list[tuple[str, str]]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def format_kv(pairs: Iterable[tuple[str, object]]) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs)


def write_kv(path: str | Path, pairs: Iterable[tuple[str, object]]) -> None:
    Path(path).write_text(format_kv(pairs), encoding="utf-8")
