import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schedrisk import parse_scenario
from schedrisk.model import Decision, Deterministic, Parallel, TaskCategory, Triangular, validate_model
from schedrisk.scenario import (
    RemoveTasks,
    ReplaceDuration,
    ScaleDuration,
    Scenario,
    SetProbability,
    TransformError,
    apply_op,
    apply_scenario,
)

from conftest import DATA, det, model_of, models, reduce_only_scenario, task


def test_table_removals(asis_model):
    out = apply_scenario(asis_model, Scenario("asot", (RemoveTasks(("F2.2", "F2.3", "F2.4", "F2.8")),)))
    ids = set(out.iter_ids())
    assert not ids & {"F2.2", "F2.3", "F2.4", "F2.8"}
    # the emptied configuration branch is kept and contributes nothing
    fan_out = out.find("F2.P")
    assert fan_out.branches[0] == ()
    assert len(fan_out.branches) == 4


def test_requirements_change_probability(asis_model):
    out = apply_scenario(asis_model, Scenario("s", (SetProbability("F3.35", 0.07),)))
    assert out.find("F3.35").probability == 0.07
    assert asis_model.find("F3.35").probability == 0.10


def test_review_scaling(asis_model):
    out = apply_scenario(asis_model, Scenario("s", (ScaleDuration(0.7, category=TaskCategory.REVIEW_MEETINGS),)))
    for before, after in zip(asis_model.iter_tasks(), out.iter_tasks()):
        if before.category is TaskCategory.REVIEW_MEETINGS:
            d0, d1 = before.duration, after.duration
            assert (d1.min, d1.mode, d1.max) == pytest.approx((0.7 * d0.min, 0.7 * d0.mode, 0.7 * d0.max))
        else:
            assert before == after


def test_identity(asis_model):
    assert apply_scenario(asis_model, Scenario("noop", ())) == asis_model


def test_deterministic_scaling():
    out = apply_op(model_of(det("a", 10)), ScaleDuration(0.5, ids=("a",)))
    assert out.steps[0].duration == Deterministic(5.0)


def test_replace_duration():
    out = apply_op(model_of(det("a", 10)), ReplaceDuration("a", Triangular(1, 2, 3)))
    assert out.steps[0].duration == Triangular(1, 2, 3)


def test_remove_a_whole_parallel_block():
    m = model_of(det("a", 1), Parallel("p", ((det("b", 1),),)))
    out = apply_scenario(m, Scenario("s", (RemoveTasks(("p",)),)))
    assert [s.id for s in out.steps] == ["a"]


def test_removing_the_last_task_is_invalid():
    with pytest.raises(TransformError) as exc:
        apply_scenario(model_of(det("a", 1)), Scenario("s", (RemoveTasks(("a",)),)))
    assert exc.value.code == "INVALID_RESULT"


def test_op_constructors_enforce_ranges():
    with pytest.raises(ValueError):
        ScaleDuration(0.0, ids=("a",))
    with pytest.raises(ValueError):
        ScaleDuration(1.0)
    with pytest.raises(ValueError):
        SetProbability("d", 1.0)


@pytest.mark.parametrize("name,code", [
    ("unknown_id.json", "UNKNOWN_ID"),
    ("removed_twice.json", "UNKNOWN_ID"),
    ("dangling_target.json", "DANGLING_TARGET"),
    ("not_a_decision.json", "NOT_A_DECISION"),
    ("not_a_task.json", "NOT_A_TASK"),
    ("invalid_result.json", "INVALID_RESULT"),
])
def test_broken_scenarios(asis_model, name, code):
    scenario = parse_scenario((DATA / "scenarios" / name).read_bytes())
    with pytest.raises(TransformError) as exc:
        apply_scenario(asis_model, scenario)
    assert exc.value.code == code


def test_target_and_loop_removed_together(asis_model):
    scenario = parse_scenario((DATA / "scenarios" / "remove_target_with_loop.json").read_bytes())
    out = apply_scenario(asis_model, scenario)
    assert out.find("F3.34") is None and out.find("F3.2") is None
    assert validate_model(out) == []


def test_input_is_not_mutated(asis_model, de_scenario):
    snapshot = dataclasses.replace(asis_model)
    apply_scenario(asis_model, de_scenario)
    assert asis_model == snapshot


def test_de_scenario_result_is_valid(asis_model, de_scenario):
    out = apply_scenario(asis_model, de_scenario)
    assert validate_model(out) == []
    assert out.find("F3.34").probability == 0.03


def _fold(model, scenario):
    out = model
    for op in scenario.ops:
        out = apply_scenario(out, Scenario("one", (op,)))
    return out


def test_op_by_op_equals_whole_on_bundled_scenario(asis_model, de_scenario):
    assert _fold(asis_model, de_scenario) == apply_scenario(asis_model, de_scenario)


def test_op_by_op_equals_whole_on_random_scenarios(asis_model):
    rng = random.Random(4)
    checked = 0
    for _ in range(100):
        s = reduce_only_scenario(asis_model, rng)
        try:
            folded = _fold(asis_model, s)
        except TransformError as exc:
            # a removal listed before the loop that guarded it; whole-scenario application allows it
            assert exc.code == "DANGLING_TARGET"
            continue
        assert folded == apply_scenario(asis_model, s)
        checked += 1
    assert checked > 50


@given(st.floats(0.01, 10), st.floats(0.01, 10))
def test_scale_composition(f1, f2):
    m = model_of(task("a", Triangular(7, 60, 120)), det("b", 3), task("c", Triangular(0, 7, 28)))
    two = apply_scenario(m, Scenario("s", (ScaleDuration(f1, ids=("a", "b", "c")), ScaleDuration(f2, ids=("a", "b", "c")))))
    one = apply_scenario(m, Scenario("s", (ScaleDuration(f1 * f2, ids=("a", "b", "c")),)))
    for t2, t1 in zip(two.iter_tasks(), one.iter_tasks()):
        v2 = (t2.duration.value,) if isinstance(t2.duration, Deterministic) else (t2.duration.min, t2.duration.mode, t2.duration.max)
        v1 = (t1.duration.value,) if isinstance(t1.duration, Deterministic) else (t1.duration.min, t1.duration.mode, t1.duration.max)
        assert v2 == pytest.approx(v1, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(models(), st.integers(0, 2**32))
def test_random_reduce_only_outputs_are_valid(m, seed):
    s = reduce_only_scenario(m, random.Random(seed))
    try:
        out = apply_scenario(m, s)
    except TransformError as exc:
        assert exc.code == "INVALID_RESULT"  # every task removed
        return
    assert validate_model(out) == []
