"""Process-model domain types and semantic validation.

A model is an ordered list of steps executed by a program counter. Tasks carry
a duration distribution, parallel blocks fan out into branches of tasks, and
decisions jump backward with a fixed probability (rework loops).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


class TaskCategory(str, enum.Enum):
    ELICITING_REQUIREMENTS = "eliciting_requirements"
    INFORMATION_EXCHANGE = "information_exchange"
    SYSTEM_MODELING = "system_modeling"
    DISCIPLINARY_MODELING = "disciplinary_modeling"
    REVIEW_MEETINGS = "review_meetings"


# Column order used by CSV export and reports.
CATEGORIES: tuple[TaskCategory, ...] = tuple(TaskCategory)


@dataclass(frozen=True)
class Triangular:
    min: float
    mode: float
    max: float


@dataclass(frozen=True)
class Deterministic:
    value: float


DurationDistribution = Union[Triangular, Deterministic]


@dataclass(frozen=True)
class Task:
    id: str
    label: str
    stakeholder: str
    category: TaskCategory
    duration: DurationDistribution
    provenance: Optional[str] = None


@dataclass(frozen=True)
class Parallel:
    id: str
    branches: tuple[tuple[Task, ...], ...] = ()


@dataclass(frozen=True)
class Decision:
    id: str
    label: str
    probability: float
    target: str
    provenance: Optional[str] = None


Step = Union[Task, Parallel, Decision]


@dataclass(frozen=True)
class ProcessModel:
    name: str
    stakeholders: tuple[str, ...]
    steps: tuple[Step, ...] = field(default_factory=tuple)

    def iter_tasks(self) -> Iterator[Task]:
        """All tasks in execution order, including those nested in parallel branches."""
        for step in self.steps:
            if isinstance(step, Task):
                yield step
            elif isinstance(step, Parallel):
                for branch in step.branches:
                    yield from branch

    def iter_ids(self) -> Iterator[str]:
        for step in self.steps:
            yield step.id
            if isinstance(step, Parallel):
                for branch in step.branches:
                    for task in branch:
                        yield task.id

    def find(self, step_id: str) -> Optional[Step]:
        for step in self.steps:
            if step.id == step_id:
                return step
            if isinstance(step, Parallel):
                for branch in step.branches:
                    for task in branch:
                        if task.id == step_id:
                            return task
        return None

    def index_of(self, step_id: str) -> Optional[int]:
        """Position of a top-level step, or None if absent at top level."""
        for i, step in enumerate(self.steps):
            if step.id == step_id:
                return i
        return None


@dataclass(frozen=True)
class Diagnostic:
    step_id: Optional[str]
    rule: str
    message: str

    def __str__(self) -> str:
        where = f" ({self.step_id})" if self.step_id else ""
        return f"{self.rule}{where}: {self.message}"


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def check_distribution(dist: DurationDistribution, step_id: Optional[str] = None) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if isinstance(dist, Triangular):
        vals = (dist.min, dist.mode, dist.max)
        if not all(_finite(v) for v in vals):
            return [Diagnostic(step_id, "NONFINITE", "triangular parameters must be finite numbers")]
        if dist.min < 0:
            out.append(Diagnostic(step_id, "NEGATIVE_DURATION", f"min {dist.min} is negative"))
        if dist.min > dist.mode:
            out.append(Diagnostic(step_id, "TRI_ORDER", f"min exceeds mode ({dist.min} > {dist.mode})"))
        if dist.mode > dist.max:
            out.append(Diagnostic(step_id, "TRI_ORDER", f"mode exceeds max ({dist.mode} > {dist.max})"))
    elif isinstance(dist, Deterministic):
        if not _finite(dist.value):
            return [Diagnostic(step_id, "NONFINITE", "deterministic value must be a finite number")]
        if dist.value < 0:
            out.append(Diagnostic(step_id, "NEGATIVE_DURATION", f"value {dist.value} is negative"))
    else:
        out.append(Diagnostic(step_id, "BAD_DISTRIBUTION", f"unsupported duration {dist!r}"))
    return out


def _check_task(task: Task, stakeholders: set[str]) -> list[Diagnostic]:
    out = []
    if task.stakeholder not in stakeholders:
        out.append(Diagnostic(task.id, "UNKNOWN_STAKEHOLDER",
                              f"stakeholder {task.stakeholder!r} is not declared"))
    if not isinstance(task.category, TaskCategory):
        out.append(Diagnostic(task.id, "BAD_CATEGORY", f"unknown category {task.category!r}"))
    out.extend(check_distribution(task.duration, task.id))
    return out


def validate_model(model: ProcessModel) -> list[Diagnostic]:
    """Return every semantic violation in ``model``; an empty list means valid.

    Never raises and never mutates the model.
    """
    diags: list[Diagnostic] = []
    if not model.steps:
        diags.append(Diagnostic(None, "EMPTY_MODEL", "model has no steps"))

    seen: set[str] = set()
    for sid in model.iter_ids():
        if sid in seen:
            diags.append(Diagnostic(sid, "DUPLICATE_ID", f"id {sid!r} is used more than once"))
        seen.add(sid)

    stakeholders = set(model.stakeholders)
    top_index = {}
    for i, step in enumerate(model.steps):
        top_index.setdefault(step.id, i)

    n_tasks = 0
    for i, step in enumerate(model.steps):
        if isinstance(step, Task):
            n_tasks += 1
            diags.extend(_check_task(step, stakeholders))
        elif isinstance(step, Parallel):
            for branch in step.branches:
                for item in branch:
                    if not isinstance(item, Task):
                        diags.append(Diagnostic(step.id, "BRANCH_KIND",
                                                f"parallel branches may only hold tasks, got {type(item).__name__}"))
                        continue
                    n_tasks += 1
                    diags.extend(_check_task(item, stakeholders))
        elif isinstance(step, Decision):
            p = step.probability
            if not _finite(p) or not 0.0 <= p < 1.0:
                diags.append(Diagnostic(step.id, "PROB_RANGE", f"probability {p} is outside [0, 1)"))
            j = top_index.get(step.target)
            if j is None:
                where = "is nested in a parallel branch" if step.target in seen else "does not exist"
                diags.append(Diagnostic(step.id, "UNKNOWN_TARGET",
                                        f"target {step.target!r} {where}; decisions must jump to a top-level step"))
            elif j >= i:
                diags.append(Diagnostic(step.id, "FORWARD_JUMP",
                                        f"target {step.target!r} does not precede the decision"))
        else:
            diags.append(Diagnostic(None, "BAD_STEP", f"unsupported step {step!r}"))

    if model.steps and n_tasks == 0:
        diags.append(Diagnostic(None, "NO_TASKS", "model contains no tasks"))
    return diags


def triangular_moments(dist: DurationDistribution) -> tuple[float, float]:
    """Closed-form (mean, variance) of a duration distribution."""
    if isinstance(dist, Deterministic):
        return float(dist.value), 0.0
    a, m, b = dist.min, dist.mode, dist.max
    mean = (a + m + b) / 3.0
    # same as (a^2 + m^2 + b^2 - am - ab - mb) / 18, without cancellation
    var = ((a - b) ** 2 + (a - m) ** 2 + (m - b) ** 2) / 36.0
    return mean, var
