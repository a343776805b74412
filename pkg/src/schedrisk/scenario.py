"""Declarative what-if edits applied to a process model.

A scenario is an ordered list of operations. Each operation is applied to the
result of the previous one; the input model is never touched.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Union

from .model import (
    Decision,
    Deterministic,
    DurationDistribution,
    Parallel,
    ProcessModel,
    Task,
    TaskCategory,
    Triangular,
    validate_model,
)


@dataclass(frozen=True)
class RemoveTasks:
    ids: tuple[str, ...]
    provenance: Optional[str] = None


@dataclass(frozen=True)
class ScaleDuration:
    factor: float
    ids: Optional[tuple[str, ...]] = None
    category: Optional[TaskCategory] = None
    provenance: Optional[str] = None

    def __post_init__(self):
        if (self.ids is None) == (self.category is None):
            raise ValueError("ScaleDuration needs exactly one of ids or category")
        if not self.factor > 0:
            raise ValueError(f"scale factor must be positive, got {self.factor}")


@dataclass(frozen=True)
class ReplaceDuration:
    id: str
    duration: DurationDistribution
    provenance: Optional[str] = None


@dataclass(frozen=True)
class SetProbability:
    id: str
    value: float
    provenance: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.value < 1.0:
            raise ValueError(f"probability must lie in [0, 1), got {self.value}")


TransformOp = Union[RemoveTasks, ScaleDuration, ReplaceDuration, SetProbability]


@dataclass(frozen=True)
class Scenario:
    name: str
    ops: tuple[TransformOp, ...] = ()


class TransformError(Exception):
    """Raised when a scenario cannot be applied.

    ``code`` is one of UNKNOWN_ID, DANGLING_TARGET, NOT_A_DECISION, NOT_A_TASK,
    INVALID_RESULT.
    """

    def __init__(self, code: str, message: str, step_id: Optional[str] = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.step_id = step_id


def scale_distribution(dist: DurationDistribution, factor: float) -> DurationDistribution:
    if isinstance(dist, Triangular):
        return Triangular(dist.min * factor, dist.mode * factor, dist.max * factor)
    return Deterministic(dist.value * factor)


def _map_tasks(model: ProcessModel, fn) -> ProcessModel:
    """Rebuild ``model`` with ``fn`` applied to every task (top level and nested)."""
    steps = []
    for step in model.steps:
        if isinstance(step, Task):
            steps.append(fn(step))
        elif isinstance(step, Parallel):
            branches = tuple(tuple(fn(t) for t in branch) for branch in step.branches)
            steps.append(dataclasses.replace(step, branches=branches))
        else:
            steps.append(step)
    return dataclasses.replace(model, steps=tuple(steps))


def _require(model: ProcessModel, step_id: str):
    step = model.find(step_id)
    if step is None:
        raise TransformError("UNKNOWN_ID", f"no step with id {step_id!r}", step_id)
    return step


def _remove(model: ProcessModel, op: RemoveTasks) -> ProcessModel:
    doomed = set(op.ids)
    for sid in op.ids:
        _require(model, sid)
    steps = []
    for step in model.steps:
        if step.id in doomed:
            continue
        if isinstance(step, Parallel):
            # emptied branches stay; they contribute zero duration
            step = dataclasses.replace(
                step, branches=tuple(tuple(t for t in br if t.id not in doomed) for br in step.branches))
        steps.append(step)
    return dataclasses.replace(model, steps=tuple(steps))


def _scale(model: ProcessModel, op: ScaleDuration) -> ProcessModel:
    if op.ids is not None:
        wanted = set(op.ids)
        for sid in op.ids:
            if not isinstance(_require(model, sid), Task):
                raise TransformError("NOT_A_TASK", f"{sid!r} is not a task; only tasks have durations", sid)
        hit = lambda t: t.id in wanted
    else:
        hit = lambda t: t.category == op.category
    return _map_tasks(model, lambda t: dataclasses.replace(t, duration=scale_distribution(t.duration, op.factor))
                      if hit(t) else t)


def _replace(model: ProcessModel, op: ReplaceDuration) -> ProcessModel:
    if not isinstance(_require(model, op.id), Task):
        raise TransformError("NOT_A_TASK", f"{op.id!r} is not a task; only tasks have durations", op.id)
    return _map_tasks(model, lambda t: dataclasses.replace(t, duration=op.duration) if t.id == op.id else t)


def _set_probability(model: ProcessModel, op: SetProbability) -> ProcessModel:
    if not isinstance(_require(model, op.id), Decision):
        raise TransformError("NOT_A_DECISION", f"{op.id!r} is not a decision", op.id)
    steps = tuple(dataclasses.replace(s, probability=op.value) if s.id == op.id else s for s in model.steps)
    return dataclasses.replace(model, steps=steps)


_HANDLERS = {
    RemoveTasks: _remove,
    ScaleDuration: _scale,
    ReplaceDuration: _replace,
    SetProbability: _set_probability,
}


def apply_op(model: ProcessModel, op: TransformOp) -> ProcessModel:
    try:
        handler = _HANDLERS[type(op)]
    except KeyError:
        raise TypeError(f"unsupported transform op {op!r}") from None
    return handler(model, op)


def apply_scenario(model: ProcessModel, scenario: Scenario) -> ProcessModel:
    """Apply ``scenario`` to ``model`` and return the transformed copy.

    Referenced ids must exist when their op runs. Dangling decision targets are
    checked once every op has applied, so a scenario may remove a loop target
    and its decision in either order. The result is re-validated before return.
    """
    out = model
    for op in scenario.ops:
        out = apply_op(out, op)

    removed = set(model.iter_ids()) - set(out.iter_ids())
    for step in out.steps:
        if isinstance(step, Decision) and step.target in removed:
            raise TransformError(
                "DANGLING_TARGET",
                f"decision {step.id!r} jumps to removed step {step.target!r}; remove the decision as well",
                step.id)

    diags = validate_model(out)
    if diags:
        raise TransformError("INVALID_RESULT", "; ".join(str(d) for d in diags), diags[0].step_id)
    return out
