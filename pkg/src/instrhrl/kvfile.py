"""Lexer for the line-oriented ``key = value`` files (manifests, experiment configs)."""

from __future__ import annotations

from .errors import SyntaxConfigError


def parse_lines(text: str) -> list[tuple[int, str, str]]:
    """Split ``text`` into ``(lineno, key, value)`` triples.

    ``#`` starts a comment anywhere on a line; blank lines are skipped.
    Duplicate keys are a syntax error.
    """
    entries = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SyntaxConfigError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not key.replace("_", "").isalnum():
            raise SyntaxConfigError(lineno, f"invalid key {key!r}")
        if key in seen:
            raise SyntaxConfigError(lineno, f"duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        entries.append((lineno, key, value))
    return entries


def parse_float_list(value: str) -> list[float]:
    if not value.strip():
        return []
    return [float(item) for item in value.split(",")]


def format_float(x: float) -> str:
    """Shortest decimal that round-trips exactly."""
    return repr(float(x))
