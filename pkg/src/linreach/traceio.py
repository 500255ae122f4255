"""Reading and writing traces: one JSON object per line, in execution order.

    {"a": "call", "op": "o1", "m": "Enq", "v": 1}
    {"a": "ret", "op": "o1", "m": "Enq", "v": 1}

Argumentless methods omit ``"v"``.
"""
from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Iterable, Union

from .core import CALL, RET, Action, Execution, TraceError, complete as complete_execution

PathLike = Union[str, Path]


class MalformedLine(TraceError):
    def __init__(self, lineno: int, line: str, message: str):
        super().__init__(f"line {lineno}: {message}: {line.strip()}")
        self.lineno = lineno
        self.line = line


class IoFailure(OSError):
    pass


def action_to_json(a: Action) -> str:
    d = {"a": a.kind, "op": a.op, "m": a.method}
    if a.value is not None:
        d["v"] = a.value
    return json.dumps(d, separators=(", ", ": "))


def _parse_line(lineno: int, line: str) -> Action:
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(lineno, line, f"not JSON ({exc.msg})") from None
    if not isinstance(d, dict):
        raise MalformedLine(lineno, line, "expected an object")
    kind, op, method = d.get("a"), d.get("op"), d.get("m")
    if kind not in (CALL, RET):
        raise MalformedLine(lineno, line, 'field "a" must be "call" or "ret"')
    if not isinstance(op, str) or not op:
        raise MalformedLine(lineno, line, 'field "op" must be a non-empty string')
    if not isinstance(method, str) or not method:
        raise MalformedLine(lineno, line, 'field "m" must be a method name')
    v = d.get("v")
    if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
        raise MalformedLine(lineno, line, 'field "v" must be a non-negative integer')
    return Action(kind, method, v, op)


def parse_lines(lines: Iterable[str], complete: bool = False) -> Execution:
    """Parse and validate; ``complete`` appends returns for pending calls."""
    actions = []
    calls, returned = {}, set()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        a = _parse_line(lineno, line)
        if a.kind == CALL:
            if a.op in calls:
                raise MalformedLine(lineno, line, f"operation {a.op} called twice")
            calls[a.op] = a
        else:
            c = calls.get(a.op)
            if c is None:
                raise MalformedLine(lineno, line, f"return of {a.op} before its call")
            if a.op in returned:
                raise MalformedLine(lineno, line, f"operation {a.op} returned twice")
            if (c.method, c.value) != (a.method, a.value):
                raise MalformedLine(lineno, line, f"return does not match the call of {a.op}")
            returned.add(a.op)
        actions.append(a)
    e = Execution(tuple(actions))
    return complete_execution(e) if complete else e


def parse_trace(path: PathLike, complete: bool = False) -> Execution:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_lines(fh, complete)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror}") from exc


def loads(text: str, complete: bool = False) -> Execution:
    return parse_lines(io.StringIO(text), complete)


def dumps(e: Execution) -> str:
    return "".join(action_to_json(a) + "\n" for a in e.actions)


def write_trace(e: Execution, path: PathLike) -> None:
    try:
        Path(path).write_text(dumps(e), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror}") from exc
