"""Flat key = value experiment configs.

Grammar (one statement per line):

    config  := line*
    line    := (comment | assign | blank) NEWLINE
    comment := '#' .*
    assign  := key WS* '=' WS* value
    key     := [A-Za-z_][A-Za-z0-9_.-]*
    value   := list | scalar
    list    := scalar (',' WS* scalar)+ | scalar ','
    scalar  := 'true' | 'false' | int | float | string

Scalars are typed in that order; floats are printed with 17 significant
digits so parse(format(cfg)) == cfg exactly.
"""

from __future__ import annotations

import re

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


def _parse_scalar(tok: str):
    tok = tok.strip()
    if tok == "true":
        return True
    if tok == "false":
        return False
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        pass
    return tok


def _format_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def parse_config(text: str) -> dict:
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ValueError(f"config line {lineno}: bad key {key!r}")
        value = value.strip()
        if "," in value:
            items = [t for t in value.split(",") if t.strip()]
            out[key] = [_parse_scalar(t) for t in items]
        else:
            out[key] = _parse_scalar(value)
    return out


def format_config(cfg: dict) -> str:
    lines = []
    for key in cfg:
        v = cfg[key]
        if isinstance(v, (list, tuple)):
            body = ", ".join(_format_scalar(x) for x in v)
            if len(v) == 1:
                body += ","
        else:
            body = _format_scalar(v)
        lines.append(f"{key} = {body}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def get(cfg: dict, key: str, default):
    """Typed lookup: the default fixes the expected type."""
    if key not in cfg:
        return default
    v = cfg[key]
    if isinstance(default, list) and not isinstance(v, list):
        return [v]
    if isinstance(default, float) and isinstance(v, int):
        return float(v)
    if default is not None and not isinstance(v, type(default)) and not isinstance(default, list):
        raise ValueError(f"config key {key!r}: expected {type(default).__name__}, got {v!r}")
    return v
