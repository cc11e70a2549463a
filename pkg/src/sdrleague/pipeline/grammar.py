"""Parser for waveform description files.

Grammar (line oriented, ``#`` starts a comment, blank lines ignored)::

    [modules]
    name: type { key = value, key = value }

    [connections]
    source.port -> sink.port

Values are integers, floats, ``true``/``false``, double-quoted strings, or
bare words (no whitespace, commas or braces).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_MODULE_RE = re.compile(rf"^\s*({_IDENT})\s*:\s*({_IDENT})\s*\{{(.*)\}}\s*$")
_CONN_RE = re.compile(rf"^\s*({_IDENT})\s*\.\s*({_IDENT})\s*->\s*({_IDENT})\s*\.\s*({_IDENT})\s*$")
_SECTION_RE = re.compile(r"^\s*\[\s*([^\]]*?)\s*\]\s*$")
_PARAM_RE = re.compile(rf"\s*({_IDENT})\s*=\s*(\"(?:[^\"\\]|\\.)*\"|[^,\s{{}}\"]+)\s*(,|$)")
_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$|^[+-]?(inf|nan)$")


class WaveformSyntaxError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    type_id: str
    params: dict = field(hash=False)
    line: int = 0


@dataclass(frozen=True)
class Connection:
    src: str
    src_port: str
    dst: str
    dst_port: str
    line: int = 0

    def __str__(self) -> str:
        return f"{self.src}.{self.src_port} -> {self.dst}.{self.dst_port}"


@dataclass
class WaveformGraph:
    modules: list[ModuleDecl]
    connections: list[Connection]

    def module(self, name: str) -> ModuleDecl:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [m.name for m in self.modules]


def parse_value(token: str):
    if token.startswith('"'):
        return bytes(token[1:-1], "utf-8").decode("unicode_escape")
    low = token.lower()
    if low in ("true", "false"):
        return low == "true"
    if _INT_RE.match(token):
        return int(token)
    if _FLOAT_RE.match(low):
        return float(token)
    return token


def _parse_params(body: str, lineno: int, col0: int) -> dict:
    params: dict = {}
    pos = 0
    body_stripped = body.rstrip()
    if not body_stripped.strip():
        return params
    while pos < len(body_stripped):
        m = _PARAM_RE.match(body_stripped, pos)
        if not m:
            col = col0 + pos + (len(body_stripped[pos:]) - len(body_stripped[pos:].lstrip())) + 1
            raise WaveformSyntaxError(lineno, col, "expected 'key = value'")
        key = m.group(1)
        if key in params:
            raise WaveformSyntaxError(lineno, col0 + m.start(1) + 1, f"parameter {key!r} given twice")
        params[key] = parse_value(m.group(2))
        pos = m.end()
        if m.group(3) == "" and pos < len(body_stripped):
            raise WaveformSyntaxError(lineno, col0 + pos + 1, "expected ',' between parameters")
    return params


def _strip_comment(raw: str) -> str:
    in_str = False
    for i, ch in enumerate(raw):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return raw[:i]
    return raw


def find_cycle(names, edges) -> list[str] | None:
    """Return one cycle (as module names, first repeated last) or None."""
    succ = {n: [] for n in names}
    for a, b in edges:
        succ[a].append(b)
    color = dict.fromkeys(names, 0)
    stack: list[str] = []

    def visit(n):
        color[n] = 1
        stack.append(n)
        for m in succ[n]:
            if color[m] == 1:
                return stack[stack.index(m):] + [m]
            if color[m] == 0:
                found = visit(m)
                if found:
                    return found
        stack.pop()
        color[n] = 2
        return None

    for n in names:
        if color[n] == 0:
            found = visit(n)
            if found:
                return found
    return None


def parse_waveform(text: str, registry=None) -> WaveformGraph:
    """Parse a waveform description into a :class:`WaveformGraph`.

    With a registry (the built-in one by default) unknown module types are
    rejected here; port and parameter checks are left to ``validate``.
    """
    if registry is None:
        from .blocks import REGISTRY as registry
    modules: list[ModuleDecl] = []
    connections: list[Connection] = []
    seen: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip()) + 1
        sec = _SECTION_RE.match(line)
        if sec:
            section = sec.group(1)
            if section not in ("modules", "connections"):
                raise WaveformSyntaxError(lineno, indent, f"unknown section [{section}]")
            continue
        if section is None:
            raise WaveformSyntaxError(lineno, indent, "statement outside of any section")
        if section == "modules":
            m = _MODULE_RE.match(line)
            if not m:
                raise WaveformSyntaxError(lineno, indent, "expected 'name: type { key = value, ... }'")
            name, type_id = m.group(1), m.group(2)
            if name in seen:
                raise WaveformSyntaxError(lineno, m.start(1) + 1,
                                          f"duplicate module name {name!r} (first on line {seen[name]})")
            if registry is not None and type_id not in registry:
                raise WaveformSyntaxError(lineno, m.start(2) + 1, f"unknown module type {type_id!r}")
            params = _parse_params(m.group(3), lineno, m.start(3))
            seen[name] = lineno
            modules.append(ModuleDecl(name, type_id, params, lineno))
        else:
            m = _CONN_RE.match(line)
            if not m:
                raise WaveformSyntaxError(lineno, indent, "expected 'module.port -> module.port'")
            conn = Connection(m.group(1), m.group(2), m.group(3), m.group(4), lineno)
            for grp in (1, 3):
                if m.group(grp) not in seen:
                    raise WaveformSyntaxError(lineno, m.start(grp) + 1,
                                              f"connection references undeclared module {m.group(grp)!r}")
            connections.append(conn)
    cycle = find_cycle([m.name for m in modules], [(c.src, c.dst) for c in connections])
    if cycle:
        closing = next(c for c in connections if c.src == cycle[-2] and c.dst == cycle[-1])
        raise WaveformSyntaxError(closing.line, 1, "cycle detected: " + " -> ".join(cycle))
    return WaveformGraph(modules, connections)
