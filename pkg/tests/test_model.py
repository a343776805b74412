import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from schedrisk.model import (
    Decision,
    Deterministic,
    Parallel,
    ProcessModel,
    Task,
    TaskCategory,
    Triangular,
    triangular_moments,
    validate_model,
)

from conftest import det, model_of, models, task


def rules(model):
    return [d.rule for d in validate_model(model)]


def test_valid_two_task_model_has_no_diagnostics():
    assert validate_model(model_of(det("a", 3), det("b", 4))) == []


def test_min_above_mode():
    diags = validate_model(model_of(task("a", Triangular(5, 3, 10))))
    assert [d.rule for d in diags] == ["TRI_ORDER"]
    assert "min exceeds mode" in diags[0].message
    assert diags[0].step_id == "a"


def test_mode_above_max():
    diags = validate_model(model_of(task("a", Triangular(1, 12, 10))))
    assert [d.rule for d in diags] == ["TRI_ORDER"]
    assert "mode exceeds max" in diags[0].message


def test_point_mass_triangular_is_valid():
    assert validate_model(model_of(task("a", Triangular(5, 5, 5)))) == []


@pytest.mark.parametrize("p", [1.0, 1.5, -0.1, float("nan")])
def test_probability_outside_half_open_unit_interval(p):
    assert rules(model_of(det("a", 2), Decision("d", "again?", p, "a"))) == ["PROB_RANGE"]


def test_probability_zero_is_allowed():
    assert rules(model_of(det("a", 2), Decision("d", "again?", 0.0, "a"))) == []


def test_forward_jump_rejected():
    m = model_of(det("a", 2), Decision("d", "skip?", 0.2, "b"), det("b", 1))
    assert rules(m) == ["FORWARD_JUMP"]


def test_self_target_is_a_forward_jump():
    assert rules(model_of(det("a", 1), Decision("d", "again?", 0.2, "d"))) == ["FORWARD_JUMP"]


def test_target_inside_parallel_branch_is_not_top_level():
    m = model_of(Parallel("p", ((det("a", 1),),)), Decision("d", "again?", 0.2, "a"))
    diags = validate_model(m)
    assert [d.rule for d in diags] == ["UNKNOWN_TARGET"]
    assert "nested" in diags[0].message


def test_missing_target():
    assert rules(model_of(det("a", 1), Decision("d", "again?", 0.2, "zz"))) == ["UNKNOWN_TARGET"]


def test_duplicate_ids_across_branches():
    m = model_of(det("a", 1), Parallel("p", ((det("b", 1),), (det("a", 2),))))
    assert rules(m) == ["DUPLICATE_ID"]


def test_undeclared_stakeholder():
    m = ProcessModel("m", ("IDT",), (Task("a", "a", "Team Z", TaskCategory.REVIEW_MEETINGS, Deterministic(1)),))
    assert rules(m) == ["UNKNOWN_STAKEHOLDER"]


def test_negative_durations():
    assert rules(model_of(det("a", -1))) == ["NEGATIVE_DURATION"]
    assert "NEGATIVE_DURATION" in rules(model_of(task("a", Triangular(-1, 0, 1))))


def test_empty_and_taskless_models():
    assert rules(model_of()) == ["EMPTY_MODEL"]
    assert rules(model_of(Parallel("p", ()))) == ["NO_TASKS"]


def test_decision_in_branch_rejected():
    m = model_of(det("a", 1), Parallel("p", ((det("b", 1), Decision("d", "x", 0.1, "a")),)))
    assert rules(m) == ["BRANCH_KIND"]


def test_all_violations_reported_not_just_first():
    m = model_of(task("a", Triangular(5, 3, 10)), Decision("d", "x", 1.0, "a"), Decision("e", "y", 0.1, "f"),
                 det("f", 1))
    assert sorted(rules(m)) == ["FORWARD_JUMP", "PROB_RANGE", "TRI_ORDER"]


@given(models())
def test_validate_is_pure_and_generated_models_are_valid(m):
    first = validate_model(m)
    assert first == validate_model(m) == []


# -- moments -------------------------------------------------------------------

def test_moments_symmetric():
    mean, var = triangular_moments(Triangular(0, 1, 2))
    assert mean == pytest.approx(1.0)
    assert var == pytest.approx(1 / 6)


def test_moments_point_mass():
    assert triangular_moments(Deterministic(7)) == (7.0, 0.0)


def test_moments_vessel_cad_update():
    # range 113 and mode-min 53 fix min=7, mode=60, max=120; mean should read 62.3, std 23.1
    mean, var = triangular_moments(Triangular(7, 60, 120))
    assert mean == pytest.approx(62.3333333333, abs=1e-9)
    assert var == pytest.approx(532.7222222222, abs=1e-9)
    assert round(mean, 1) == 62.3
    assert round(math.sqrt(var), 1) == 23.1


def _quadrature_moments(a, m, b):
    def pdf(x):
        if x < m:
            return 2 * (x - a) / ((b - a) * (m - a))
        if x > m:
            return 2 * (b - x) / ((b - a) * (b - m))
        return 2 / (b - a)

    kw = dict(points=[m], epsabs=0, epsrel=1e-13, limit=200)
    mean = quad(lambda x: x * pdf(x), a, b, **kw)[0]
    var = quad(lambda x: (x - mean) ** 2 * pdf(x), a, b, **kw)[0]
    return mean, var


def test_moments_match_numeric_integration():
    rng = np.random.default_rng(20240601)
    for _ in range(100):
        a, m, b = np.sort(rng.uniform(0, 200, size=3))
        if b - a < 1e-6:
            continue
        mean, var = triangular_moments(Triangular(a, m, b))
        q_mean, q_var = _quadrature_moments(a, m, b)
        assert mean == pytest.approx(q_mean, rel=1e-9)
        assert var == pytest.approx(q_var, rel=1e-9)


@given(st.lists(st.integers(0, 10**10), min_size=3, max_size=3))
def test_moment_bounds(micro_days):
    a, m, b = sorted(v / 1e6 for v in micro_days)
    mean, var = triangular_moments(Triangular(a, m, b))
    assert a - 1e-9 <= mean <= b + 1e-9
    assert var >= 0
    if a == b:
        assert var == 0
    else:
        assert var > 0
