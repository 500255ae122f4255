"""Finite-state thread programs over shared variables.

A model is a JSON document::

    {
      "name": "queue-atomic",
      "spec": "queue",
      "threads": 2,                       # or "unbounded"
      "shared": {
        "full0": {"domain": [0, 1], "init": 0},   # finite control variable
        "cell0": {"data": true}                   # data cell, values 0..3
      },
      "registers": ["r"],                 # per-thread data registers
      "initial": "idle",
      "edges": [
        ["idle", [{"op": "fresh", "reg": "r"}, {"op": "call", "method": "Enq", "reg": "r"}], "enq"],
        ...
      ]
    }

Each edge carries a list of instructions executed atomically: if an
``assume`` fails the edge is disabled. Data values live in {1, 2, 3} with
0 meaning "no value"; they are copied around but never tested, except by
``assume_eq`` which validates a guessed return value.

Instructions::

    call / ret      {"method": M, "reg": r}  (reg omitted for argumentless methods)
    fresh / guess   {"reg": r}               r := any of 1, 2, 3
    load            {"reg": r, "var": c}     r := c
    store           {"var": c, "reg": r}     c := r
    copy            {"var": c, "from": d}    c := d (cells)
    clear           {"var": c} or {"reg": r} set to 0
    set             {"var": v, "value": k}   control variable
    assume          {"var": v, "value": k}   blocks unless v == k
    assume_ne       {"var": v, "value": k}
    assume_eq       {"reg": r, "var": c}     return-value validation
    skip
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..core import CALL, RET
from ..rules import builtin

DATA_VALUES = (1, 2, 3)
DATA_DOMAIN = (0, 1, 2, 3)

OPS = {"call", "ret", "fresh", "guess", "load", "store", "copy", "clear", "set",
       "assume", "assume_ne", "assume_eq", "skip"}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Var:
    name: str
    domain: tuple
    init: int
    data: bool = False


@dataclass(frozen=True)
class Instr:
    op: str
    reg: Optional[str] = None
    var: Optional[str] = None
    src: Optional[str] = None
    value: Optional[int] = None
    method: Optional[str] = None


@dataclass(frozen=True)
class Edge:
    src: str
    instrs: tuple
    dst: str

    def vars(self) -> tuple:
        out = []
        for i in self.instrs:
            for v in (i.var, i.src):
                if v is not None and v not in out:
                    out.append(v)
        return tuple(out)

    def emits(self) -> bool:
        return any(i.op in (CALL, RET) for i in self.instrs)


@dataclass(frozen=True)
class ProgramModel:
    name: str
    spec: str
    shared: tuple           # tuple[Var]
    registers: tuple
    initial: str
    edges: tuple            # tuple[Edge]
    threads: Optional[int] = 2   # None = unbounded
    states: tuple = field(default=())

    def var(self, name: str) -> Var:
        for v in self.shared:
            if v.name == name:
                return v
        raise KeyError(name)

    def var_index(self) -> dict:
        return {v.name: i for i, v in enumerate(self.shared)}

    def reg_index(self) -> dict:
        return {r: i for i, r in enumerate(self.registers)}

    def init_shared(self) -> tuple:
        return tuple(v.init for v in self.shared)

    def init_local(self) -> "Local":
        return Local(self.initial, (0,) * len(self.registers), None)

    def out_edges(self, state: str) -> list:
        return [e for e in self.edges if e.src == state]


@dataclass(frozen=True, order=True)
class Local:
    """Thread-local state: control location, register values, pending call."""
    control: str
    regs: tuple
    pending: Optional[tuple] = None   # (method, value) of the open call


def _instr(d: dict, where: str) -> Instr:
    op = d.get("op")
    if op not in OPS:
        raise ModelError(f"{where}: unknown instruction {op!r}")
    return Instr(op, d.get("reg"), d.get("var"), d.get("from"), d.get("value"), d.get("method"))


def load_model(source) -> ProgramModel:
    """Parse and validate a model from a path, JSON text or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        p = Path(source)
        text = p.read_text() if p.exists() else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model is not valid JSON: {exc}") from None
    shared = []
    for name, spec in doc.get("shared", {}).items():
        if spec.get("data"):
            dom = tuple(spec.get("domain", DATA_DOMAIN))
            if not set(dom) <= set(DATA_DOMAIN):
                raise ModelError(f"data variable {name}: values must lie in {DATA_DOMAIN}")
            shared.append(Var(name, DATA_DOMAIN, int(spec.get("init", 0)), True))
        else:
            dom = tuple(spec.get("domain", (0, 1)))
            init = spec.get("init", dom[0])
            if init not in dom:
                raise ModelError(f"variable {name}: initial value {init} outside its domain")
            shared.append(Var(name, dom, init))
    threads = doc.get("threads", 2)
    threads = None if threads == "unbounded" else int(threads)
    edges = []
    for k, raw in enumerate(doc.get("edges", [])):
        src, instrs, dst = raw
        if isinstance(instrs, dict):
            instrs = [instrs]
        edges.append(Edge(src, tuple(_instr(i, f"edge {k}") for i in instrs), dst))
    states = sorted({doc.get("initial", "idle")} | {e.src for e in edges} | {e.dst for e in edges})
    m = ProgramModel(doc.get("name", "model"), doc.get("spec", "queue"), tuple(shared),
                     tuple(doc.get("registers", [])), doc.get("initial", "idle"),
                     tuple(edges), threads, tuple(states))
    validate_model(m)
    return m


def validate_model(m: ProgramModel) -> None:
    S = builtin(m.spec)
    vars_ = {v.name: v for v in m.shared}
    regs = set(m.registers)
    if m.threads is not None and m.threads < 1:
        raise ModelError("thread count must be positive")
    for k, e in enumerate(m.edges):
        for i in e.instrs:
            where = f"edge {k} ({e.src} -> {e.dst}), {i.op}"
            if i.reg is not None and i.reg not in regs:
                raise ModelError(f"{where}: unknown register {i.reg!r}")
            for v in (i.var, i.src):
                if v is not None and v not in vars_:
                    raise ModelError(f"{where}: unknown variable {v!r}")
            if i.op in (CALL, RET):
                if i.method not in S.methods:
                    raise ModelError(f"{where}: method {i.method!r} not in {m.spec}")
            if i.op in ("load", "store", "assume_eq") and (i.reg is None or i.var is None):
                raise ModelError(f"{where}: needs reg and var")
            if i.op in ("load", "store", "copy", "assume_eq") and not vars_[i.var].data:
                raise ModelError(f"{where}: {i.var} is not a data variable")
            if i.op == "copy" and (i.src is None or not vars_[i.src].data):
                raise ModelError(f"{where}: copy needs a data source")
            if i.op in ("set", "assume", "assume_ne"):
                v = vars_.get(i.var)
                if v is None or v.data:
                    raise ModelError(f"{where}: data values may not be tested or set directly")
                if i.value not in v.domain:
                    raise ModelError(f"{where}: value {i.value} outside domain of {i.var}")
            if i.op in ("fresh", "guess") and i.reg is None:
                raise ModelError(f"{where}: needs a register")


# ---------------------------------------------------------------------------
# semantics


class Hole:
    """Placeholder for a guessed value during replay; bound by assume_eq."""

    _n = 0

    def __init__(self):
        Hole._n += 1
        self.id = Hole._n
        self.value = None

    def resolve(self):
        return self.value if self.value is not None else self

    def __repr__(self):
        return f"?{self.id}" if self.value is None else repr(self.value)


def _val(x):
    return x.resolve() if isinstance(x, Hole) else x


def run_edge(m: ProgramModel, edge: Edge, local: Local, shared: tuple,
             choices=DATA_VALUES, fresh=None, guess=None):
    """All outcomes of executing ``edge``: list of (local', shared', actions,
    picks). ``actions`` are (kind, method, value) triples; ``picks`` lists
    the values chosen for fresh/guess instructions, in order.

    For replay, ``fresh``/``guess`` are callables producing the single value
    to use instead of branching over ``choices``.
    """
    vidx, ridx = m.var_index(), m.reg_index()
    results = []

    def go(k, regs, sh, pending, acts, picks):
        if k == len(edge.instrs):
            results.append((Local(edge.dst, tuple(regs), pending), tuple(sh), acts, picks))
            return
        i = edge.instrs[k]
        op = i.op
        if op in ("fresh", "guess"):
            gen = fresh if op == "fresh" else guess
            options = [gen()] if gen is not None else list(choices)
            for v in options:
                r2 = list(regs)
                r2[ridx[i.reg]] = v
                go(k + 1, r2, sh, pending, acts, picks + [v])
            return
        regs, sh = list(regs), list(sh)
        if op in (CALL, RET):
            val = None if i.reg is None else regs[ridx[i.reg]]
            if op == CALL:
                if pending is not None:
                    raise ModelError(f"{edge.src}: call {i.method} while {pending[0]} is open")
                pending = (i.method, val)
            else:
                if pending is None or pending[0] != i.method or _val(pending[1]) != _val(val):
                    raise ModelError(f"{edge.src}: ret {i.method} does not match the open call")
                pending = None
            acts = acts + [(op, i.method, val)]
        elif op == "load":
            regs[ridx[i.reg]] = sh[vidx[i.var]]
        elif op == "store":
            sh[vidx[i.var]] = regs[ridx[i.reg]]
        elif op == "copy":
            sh[vidx[i.var]] = sh[vidx[i.src]]
        elif op == "clear":
            if i.reg is not None:
                regs[ridx[i.reg]] = 0
            else:
                sh[vidx[i.var]] = 0
        elif op == "set":
            sh[vidx[i.var]] = i.value
        elif op == "assume":
            if sh[vidx[i.var]] != i.value:
                return
        elif op == "assume_ne":
            if sh[vidx[i.var]] == i.value:
                return
        elif op == "assume_eq":
            a, b = regs[ridx[i.reg]], sh[vidx[i.var]]
            if isinstance(a, Hole) and a.value is None and b not in (0, None):
                a.value = _val(b)
            elif _val(a) != _val(b) or _val(a) == 0:
                return
        go(k + 1, regs, sh, pending, acts, picks)

    go(0, list(local.regs), list(shared), local.pending, [], [])
    return results
