from pathlib import Path

import pytest
from hypothesis import strategies as st

from schedrisk import fixture_path, parse_model, parse_scenario
from schedrisk.model import (
    CATEGORIES,
    Decision,
    Deterministic,
    Parallel,
    ProcessModel,
    Task,
    TaskCategory,
    Triangular,
)

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def asis_model():
    return parse_model(fixture_path("asis_model.json").read_bytes())


@pytest.fixture(scope="session")
def de_scenario():
    return parse_scenario(fixture_path("de_scenario.json").read_bytes())


def task(tid, dist, category=TaskCategory.SYSTEM_MODELING, who="IDT"):
    return Task(tid, tid, who, category, dist)


def det(tid, value, category=TaskCategory.SYSTEM_MODELING):
    return task(tid, Deterministic(value), category)


def model_of(*steps, name="m"):
    return ProcessModel(name, ("IDT",), tuple(steps))


# -- hypothesis strategies ---------------------------------------------------

# six-decimal grid so canonical serialization round-trips exactly
_grid = st.integers(min_value=0, max_value=200_000_000).map(lambda k: k / 1_000_000)


@st.composite
def distributions(draw):
    if draw(st.booleans()) and draw(st.booleans()):
        return Deterministic(draw(_grid))
    a, m, b = sorted(draw(st.tuples(_grid, _grid, _grid)))
    return Triangular(a, m, b)


@st.composite
def models(draw, max_steps=8, max_probability=0.6, allow_parallel=True):
    """Valid models with backward-only loops and unique ids."""
    counter = iter(range(10_000))

    def new_task():
        i = next(counter)
        return Task(f"T{i}", f"task {i}", draw(st.sampled_from(["IDT", "Team A"])),
                    draw(st.sampled_from(CATEGORIES)), draw(distributions()))

    steps = []
    n = draw(st.integers(min_value=1, max_value=max_steps))
    for k in range(n):
        kinds = ["task"]
        if allow_parallel:
            kinds.append("parallel")
        if steps:
            kinds.append("decision")
        kind = draw(st.sampled_from(kinds))
        if kind == "task" or k == 0:
            steps.append(new_task())
        elif kind == "parallel":
            n_br = draw(st.integers(min_value=0, max_value=3))
            branches = tuple(tuple(new_task() for _ in range(draw(st.integers(0, 3)))) for _ in range(n_br))
            steps.append(Parallel(f"P{next(counter)}", branches))
        else:
            target = draw(st.sampled_from(steps)).id
            p = draw(st.integers(0, int(max_probability * 1000))) / 1000
            steps.append(Decision(f"D{next(counter)}", "loop?", p, target))
    return ProcessModel("generated", ("IDT", "Team A"), tuple(steps))


def reduce_only_scenario(model, rng, name="reduce-only"):
    """Random scenario that only removes tasks/loops, scales by factors <= 1, or lowers probabilities."""
    from schedrisk.scenario import RemoveTasks, ScaleDuration, Scenario, SetProbability

    decisions = [s for s in model.steps if isinstance(s, Decision)]
    dropped_loops = {d.id for d in decisions if rng.random() < 0.25}
    # a loop may itself be the target of a surviving loop
    while True:
        kept_targets = {d.target for d in decisions if d.id not in dropped_loops}
        if not dropped_loops & kept_targets:
            break
        dropped_loops -= kept_targets
    protected = {d.target for d in decisions if d.id not in dropped_loops}
    tasks = [t.id for t in model.iter_tasks()]
    removable = [t for t in tasks if t not in protected]
    drop = [t for t in removable if rng.random() < 0.2][: len(tasks) - 1]

    ops = []
    if drop or dropped_loops:
        ids = drop + sorted(dropped_loops)
        rng.shuffle(ids)
        ops.append(RemoveTasks(tuple(ids)))
    remaining = [t for t in tasks if t not in drop]
    for _ in range(rng.randint(0, 3)):
        factor = rng.choice([1.0, round(rng.uniform(0.05, 0.99), 6)])
        if rng.random() < 0.5:
            ops.append(ScaleDuration(factor, category=rng.choice(CATEGORIES)))
        elif remaining:
            ops.append(ScaleDuration(factor, ids=tuple(rng.sample(remaining, min(3, len(remaining))))))
    for d in decisions:
        if d.id not in dropped_loops and rng.random() < 0.6:
            ops.append(SetProbability(d.id, round(rng.uniform(0, d.probability), 6)))
    rng.shuffle(ops)
    return Scenario(name, tuple(ops))
