"""Reading and writing model and scenario documents (JSON syntax).

Parsing is strict: unknown keys, missing keys and wrongly typed values are all
reported with the line and column where they occur. Syntax errors stop the
parse immediately; shape errors are collected so an author sees all of them.
Semantic rules (ordering of triangular parameters, loop targets, ...) are left
to :func:`schedrisk.model.validate_model`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

from . import jsonloc
from .jsonloc import Node
from .model import (
    Decision,
    Deterministic,
    DurationDistribution,
    Parallel,
    ProcessModel,
    Task,
    TaskCategory,
    Triangular,
)
from .scenario import (
    RemoveTasks,
    ReplaceDuration,
    Scenario,
    ScaleDuration,
    SetProbability,
    TransformOp,
)

ERROR_CODES = ("SYNTAX", "UNKNOWN_KEY", "MISSING_KEY", "TYPE_MISMATCH", "DUPLICATE_ID")


@dataclass(frozen=True)
class ParseIssue:
    code: str
    line: int
    column: int
    pointer: str
    message: str

    def format(self, source: str) -> str:
        return f"{source}:{self.line}:{self.column}: {self.message}"


class ParseError(Exception):
    """One or more problems found while reading a document.

    ``issues`` is never empty; ``code``, ``line`` and ``column`` describe the
    first one.
    """

    def __init__(self, source: str, issues: list[ParseIssue]):
        self.source = source
        self.issues = list(issues)
        first = self.issues[0]
        self.code = first.code
        self.line = first.line
        self.column = first.column
        self.pointer = first.pointer
        super().__init__("\n".join(f"{i.code} {i.format(source)}" for i in self.issues))


class _Collector:
    def __init__(self):
        self.issues: list[ParseIssue] = []

    def add(self, code: str, node: Node, pointer: str, message: str) -> None:
        self.issues.append(ParseIssue(code, node.line, node.column, pointer or "/", message))


_KIND_NAMES = {"object": "an object", "array": "an array", "string": "a string",
               "number": "a number", "bool": "a boolean", "null": "null"}


def _expect(node: Node, kind: str, ptr: str, errs: _Collector) -> bool:
    if node.kind != kind:
        errs.add("TYPE_MISMATCH", node, ptr, f"{ptr or '/'} must be {_KIND_NAMES[kind]}, got {_KIND_NAMES[node.kind]}")
        return False
    return True


def _fields(node: Node, ptr: str, required: tuple, optional: tuple, errs: _Collector) -> Optional[dict]:
    """Check an object's key set; returns key -> value node, or None if not an object."""
    if not _expect(node, "object", ptr, errs):
        return None
    out: dict[str, Node] = {}
    allowed = set(required) | set(optional)
    for key, value in node.members:
        if key.value in out:
            errs.add("SYNTAX", key, f"{ptr}/{key.value}", f"duplicate key {key.value!r}")
            continue
        if key.value not in allowed:
            errs.add("UNKNOWN_KEY", key, f"{ptr}/{key.value}",
                     f"unknown key {key.value!r} (allowed: {', '.join(required + optional)})")
            continue
        out[key.value] = value
    for key in required:
        if key not in out:
            errs.add("MISSING_KEY", node, ptr, f"missing required key {key!r} in {ptr or '/'}")
    return out


def _string(node: Optional[Node], ptr: str, errs: _Collector) -> Optional[str]:
    if node is None or not _expect(node, "string", ptr, errs):
        return None
    return node.value


def _number(node: Optional[Node], ptr: str, errs: _Collector) -> Optional[float]:
    if node is None or not _expect(node, "number", ptr, errs):
        return None
    try:
        value = float(node.value)
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        errs.add("TYPE_MISMATCH", node, ptr, f"{ptr} must be a finite number")
        return None
    return value


def _string_list(node: Optional[Node], ptr: str, errs: _Collector) -> Optional[tuple]:
    if node is None or not _expect(node, "array", ptr, errs):
        return None
    out = [_string(item, f"{ptr}/{i}", errs) for i, item in enumerate(node.items)]
    return None if any(s is None for s in out) else tuple(out)


def _optional_string(f: dict, key: str, ptr: str, errs: _Collector) -> Optional[str]:
    return _string(f[key], f"{ptr}/{key}", errs) if key in f else None


_DURATION_KEYS = {"triangular": (("type", "min", "mode", "max"), ()),
                  "deterministic": (("type", "value"), ())}


def _duration(node: Optional[Node], ptr: str, errs: _Collector) -> Optional[DurationDistribution]:
    if node is None or not _expect(node, "object", ptr, errs):
        return None
    type_node = next((v for k, v in node.members if k.value == "type"), None)
    if type_node is None:
        errs.add("MISSING_KEY", node, ptr, f"missing required key 'type' in {ptr}")
        return None
    kind = _string(type_node, f"{ptr}/type", errs)
    if kind is None:
        return None
    if kind not in _DURATION_KEYS:
        errs.add("TYPE_MISMATCH", type_node, f"{ptr}/type",
                 f"unknown duration type {kind!r} (expected triangular or deterministic)")
        return None
    required, optional = _DURATION_KEYS[kind]
    f = _fields(node, ptr, required, optional, errs)
    if f is None or any(k not in f for k in required):
        return None
    if kind == "triangular":
        vals = [_number(f[k], f"{ptr}/{k}", errs) for k in ("min", "mode", "max")]
        return None if None in vals else Triangular(*vals)
    value = _number(f["value"], f"{ptr}/value", errs)
    return None if value is None else Deterministic(value)


_CATEGORY_VALUES = {c.value: c for c in TaskCategory}


def _category(node: Optional[Node], ptr: str, errs: _Collector) -> Optional[TaskCategory]:
    name = _string(node, ptr, errs)
    if name is None:
        return None
    if name not in _CATEGORY_VALUES:
        errs.add("TYPE_MISMATCH", node, ptr,
                 f"unknown category {name!r} (expected one of {', '.join(_CATEGORY_VALUES)})")
        return None
    return _CATEGORY_VALUES[name]


_STEP_KEYS = {
    "task": (("kind", "id", "label", "stakeholder", "category", "duration"), ("provenance",)),
    "parallel": (("kind", "id", "branches"), ()),
    "decision": (("kind", "id", "label", "probability", "target"), ("provenance",)),
}


class _ModelReader:
    def __init__(self, errs: _Collector):
        self.errs = errs
        self.ids: dict[str, Node] = {}

    def _claim_id(self, node: Node, ptr: str) -> Optional[str]:
        sid = _string(node, ptr, self.errs)
        if sid is None:
            return None
        if sid in self.ids:
            first = self.ids[sid]
            self.errs.add("DUPLICATE_ID", node, ptr,
                          f"duplicate id {sid!r} (first used at line {first.line})")
        else:
            self.ids[sid] = node
        return sid

    def step(self, node: Node, ptr: str, allowed=("task", "parallel", "decision")):
        errs = self.errs
        if not _expect(node, "object", ptr, errs):
            return None
        kind_node = next((v for k, v in node.members if k.value == "kind"), None)
        if kind_node is None:
            errs.add("MISSING_KEY", node, ptr, f"missing required key 'kind' in {ptr}")
            return None
        kind = _string(kind_node, f"{ptr}/kind", errs)
        if kind is None:
            return None
        if kind not in allowed:
            what = "unknown step kind" if kind not in _STEP_KEYS else "step kind not allowed here"
            errs.add("TYPE_MISMATCH", kind_node, f"{ptr}/kind",
                     f"{what} {kind!r} (expected {' or '.join(allowed)})")
            return None
        required, optional = _STEP_KEYS[kind]
        f = _fields(node, ptr, required, optional, errs)
        sid = self._claim_id(f["id"], f"{ptr}/id") if "id" in f else None

        if kind == "task":
            label = _string(f.get("label"), f"{ptr}/label", errs)
            holder = _string(f.get("stakeholder"), f"{ptr}/stakeholder", errs)
            cat = _category(f.get("category"), f"{ptr}/category", errs)
            dur = _duration(f.get("duration"), f"{ptr}/duration", errs)
            prov = _optional_string(f, "provenance", ptr, errs)
            parts = (sid, label, holder, cat, dur)
            return None if None in parts else Task(sid, label, holder, cat, dur, prov)

        if kind == "decision":
            label = _string(f.get("label"), f"{ptr}/label", errs)
            prob = _number(f.get("probability"), f"{ptr}/probability", errs)
            target = _string(f.get("target"), f"{ptr}/target", errs)
            prov = _optional_string(f, "provenance", ptr, errs)
            parts = (sid, label, prob, target)
            return None if None in parts else Decision(sid, label, prob, target, prov)

        branches_node = f.get("branches")
        if branches_node is None or not _expect(branches_node, "array", f"{ptr}/branches", errs):
            return None
        branches = []
        ok = sid is not None
        for b, branch in enumerate(branches_node.items):
            bptr = f"{ptr}/branches/{b}"
            if not _expect(branch, "array", bptr, errs):
                ok = False
                continue
            tasks = [self.step(t, f"{bptr}/{i}", allowed=("task",)) for i, t in enumerate(branch.items)]
            ok = ok and None not in tasks
            branches.append(tuple(tasks))
        return Parallel(sid, tuple(branches)) if ok else None


def _decode_text(text: Union[str, bytes], source: str) -> Node:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(text).count(b"\n", 0, exc.start) + 1
            raise ParseError(source, [ParseIssue("SYNTAX", line, 1, "/", f"invalid UTF-8: {exc.reason}")]) from None
    if text.startswith("﻿"):
        text = text[1:]
    try:
        return jsonloc.loads(text)
    except jsonloc.JSONSyntaxError as exc:
        raise ParseError(source, [ParseIssue("SYNTAX", exc.line, exc.column, "", exc.message)]) from None


def parse_model(text: Union[str, bytes], source: str = "<model>") -> ProcessModel:
    """Read a model document. Raises :class:`ParseError` on any syntax or shape problem."""
    root = _decode_text(text, source)
    errs = _Collector()
    f = _fields(root, "", ("name", "stakeholders", "steps"), (), errs)
    model = None
    if f is not None:
        name = _string(f.get("name"), "/name", errs)
        holders = _string_list(f.get("stakeholders"), "/stakeholders", errs)
        reader = _ModelReader(errs)
        steps_node = f.get("steps")
        steps = None
        if steps_node is not None and _expect(steps_node, "array", "/steps", errs):
            steps = [reader.step(s, f"/steps/{i}") for i, s in enumerate(steps_node.items)]
        if None not in (name, holders, steps) and None not in steps:
            model = ProcessModel(name, holders, tuple(steps))
    if errs.issues:
        raise ParseError(source, errs.issues)
    return model


_OP_KEYS = {
    "remove_tasks": (("op", "ids"), ("provenance",)),
    "scale_duration": (("op", "selector", "factor"), ("provenance",)),
    "replace_duration": (("op", "id", "duration"), ("provenance",)),
    "set_probability": (("op", "id", "value"), ("provenance",)),
}


def _op(node: Node, ptr: str, errs: _Collector) -> Optional[TransformOp]:
    if not _expect(node, "object", ptr, errs):
        return None
    op_node = next((v for k, v in node.members if k.value == "op"), None)
    if op_node is None:
        errs.add("MISSING_KEY", node, ptr, f"missing required key 'op' in {ptr}")
        return None
    kind = _string(op_node, f"{ptr}/op", errs)
    if kind is None:
        return None
    if kind not in _OP_KEYS:
        errs.add("TYPE_MISMATCH", op_node, f"{ptr}/op",
                 f"unknown op {kind!r} (expected one of {', '.join(_OP_KEYS)})")
        return None
    required, optional = _OP_KEYS[kind]
    f = _fields(node, ptr, required, optional, errs)
    prov = _optional_string(f, "provenance", ptr, errs)
    n_before = len(errs.issues)

    if kind == "remove_tasks":
        ids = _string_list(f.get("ids"), f"{ptr}/ids", errs)
        if ids is not None and not ids:
            errs.add("TYPE_MISMATCH", f["ids"], f"{ptr}/ids", "ids must not be empty")
        return RemoveTasks(ids, prov) if len(errs.issues) == n_before and ids is not None else None

    if kind == "scale_duration":
        factor = _number(f.get("factor"), f"{ptr}/factor", errs)
        if factor is not None and not factor > 0:
            errs.add("TYPE_MISMATCH", f["factor"], f"{ptr}/factor", f"factor must be positive, got {factor}")
        sel = f.get("selector")
        ids = cat = None
        if sel is not None and _expect(sel, "object", f"{ptr}/selector", errs):
            keys = [k.value for k, _ in sel.members]
            if keys == ["ids"]:
                ids = _string_list(sel.members[0][1], f"{ptr}/selector/ids", errs)
                if ids is not None and not ids:
                    errs.add("TYPE_MISMATCH", sel.members[0][1], f"{ptr}/selector/ids", "ids must not be empty")
            elif keys == ["category"]:
                cat = _category(sel.members[0][1], f"{ptr}/selector/category", errs)
            else:
                bad = next(((k, v) for k, v in sel.members if k.value not in ("ids", "category")), None)
                if bad is not None:
                    errs.add("UNKNOWN_KEY", bad[0], f"{ptr}/selector/{bad[0].value}",
                             f"unknown key {bad[0].value!r} (selector takes exactly one of ids, category)")
                else:
                    errs.add("MISSING_KEY" if not keys else "TYPE_MISMATCH", sel, f"{ptr}/selector",
                             "selector takes exactly one of ids, category")
        if len(errs.issues) != n_before or factor is None or (ids is None and cat is None):
            return None
        return ScaleDuration(factor, ids=ids, category=cat, provenance=prov)

    if kind == "replace_duration":
        sid = _string(f.get("id"), f"{ptr}/id", errs)
        dur = _duration(f.get("duration"), f"{ptr}/duration", errs)
        return None if None in (sid, dur) else ReplaceDuration(sid, dur, prov)

    sid = _string(f.get("id"), f"{ptr}/id", errs)
    value = _number(f.get("value"), f"{ptr}/value", errs)
    if value is not None and not 0.0 <= value < 1.0:
        errs.add("TYPE_MISMATCH", f["value"], f"{ptr}/value", f"probability must lie in [0, 1), got {value}")
        return None
    return None if None in (sid, value) else SetProbability(sid, value, prov)


def parse_scenario(text: Union[str, bytes], source: str = "<scenario>") -> Scenario:
    """Read a scenario document. Raises :class:`ParseError` on any syntax or shape problem."""
    root = _decode_text(text, source)
    errs = _Collector()
    f = _fields(root, "", ("name", "ops"), (), errs)
    scenario = None
    if f is not None:
        name = _string(f.get("name"), "/name", errs)
        ops_node = f.get("ops")
        ops = None
        if ops_node is not None and _expect(ops_node, "array", "/ops", errs):
            ops = [_op(o, f"/ops/{i}", errs) for i, o in enumerate(ops_node.items)]
        if name is not None and ops is not None and None not in ops:
            scenario = Scenario(name, tuple(ops))
    if errs.issues:
        raise ParseError(source, errs.issues)
    return scenario


# -- canonical serialization -------------------------------------------------

def format_number(x: float) -> str:
    """Fixed 6-decimal rendering with trailing zeros trimmed (``60.0`` -> ``60``)."""
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _s(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def _duration_text(d: DurationDistribution) -> str:
    if isinstance(d, Triangular):
        return (f'{{"type": "triangular", "min": {format_number(d.min)}, '
                f'"mode": {format_number(d.mode)}, "max": {format_number(d.max)}}}')
    return f'{{"type": "deterministic", "value": {format_number(d.value)}}}'


def _task_text(t: Task) -> str:
    prov = f', "provenance": {_s(t.provenance)}' if t.provenance is not None else ""
    return (f'{{"kind": "task", "id": {_s(t.id)}, "label": {_s(t.label)}, '
            f'"stakeholder": {_s(t.stakeholder)}, "category": {_s(TaskCategory(t.category).value)}, '
            f'"duration": {_duration_text(t.duration)}{prov}}}')


def _block(items: list[str], indent: str) -> str:
    if not items:
        return "[]"
    inner = ",\n".join(indent + "  " + it for it in items)
    return f"[\n{inner}\n{indent}]"


def _step_text(step, indent: str) -> str:
    if isinstance(step, Task):
        return _task_text(step)
    if isinstance(step, Decision):
        prov = f', "provenance": {_s(step.provenance)}' if step.provenance is not None else ""
        return (f'{{"kind": "decision", "id": {_s(step.id)}, "label": {_s(step.label)}, '
                f'"probability": {format_number(step.probability)}, "target": {_s(step.target)}{prov}}}')
    inner_indent = indent + "  "
    branches = [_block([_task_text(t) for t in br], inner_indent) for br in step.branches]
    return f'{{"kind": "parallel", "id": {_s(step.id)}, "branches": {_block(branches, indent)}}}'


def serialize_model(model: ProcessModel) -> str:
    """Canonical text for ``model``: schema key order, one step per line, LF endings."""
    holders = _block([_s(h) for h in model.stakeholders], "  ")
    steps = _block([_step_text(s, "    ") for s in model.steps], "  ")
    return f'{{\n  "name": {_s(model.name)},\n  "stakeholders": {holders},\n  "steps": {steps}\n}}\n'


def _op_text(op: TransformOp) -> str:
    prov = f', "provenance": {_s(op.provenance)}' if op.provenance is not None else ""
    if isinstance(op, RemoveTasks):
        body = f'"op": "remove_tasks", "ids": [{", ".join(_s(i) for i in op.ids)}]'
    elif isinstance(op, ScaleDuration):
        if op.ids is not None:
            sel = f'{{"ids": [{", ".join(_s(i) for i in op.ids)}]}}'
        else:
            sel = f'{{"category": {_s(TaskCategory(op.category).value)}}}'
        body = f'"op": "scale_duration", "selector": {sel}, "factor": {format_number(op.factor)}'
    elif isinstance(op, ReplaceDuration):
        body = f'"op": "replace_duration", "id": {_s(op.id)}, "duration": {_duration_text(op.duration)}'
    else:
        body = f'"op": "set_probability", "id": {_s(op.id)}, "value": {format_number(op.value)}'
    return f"{{{body}{prov}}}"


def serialize_scenario(scenario: Scenario) -> str:
    ops = _block([_op_text(op) for op in scenario.ops], "  ")
    return f'{{\n  "name": {_s(scenario.name)},\n  "ops": {ops}\n}}\n'
