"""Monte Carlo schedule-risk analysis of engineering change processes."""

from importlib import resources

from .documents import ParseError, parse_model, parse_scenario, serialize_model, serialize_scenario
from .engine import (
    ExecutionCapExceeded,
    IterationOutcome,
    ResultSet,
    SimulationConfig,
    event_uniform,
    inverse_cdf,
    run_monte_carlo,
    simulate_once,
)
from .model import (
    CATEGORIES,
    Decision,
    Deterministic,
    Diagnostic,
    Parallel,
    ProcessModel,
    Task,
    TaskCategory,
    Triangular,
    triangular_moments,
    validate_model,
)
from .scenario import (
    RemoveTasks,
    ReplaceDuration,
    Scenario,
    ScaleDuration,
    SetProbability,
    TransformError,
    apply_scenario,
)
from .stats import (
    ComparisonReport,
    SummaryStatistics,
    boxplot_descriptor,
    compare,
    export_results_csv,
    percent_reduction,
    quantile,
    summarize,
)

__version__ = "0.1.0"


def fixture_path(name: str):
    """Path to a bundled fixture, e.g. ``fixture_path("asis_model.json")``."""
    return resources.files(__package__) / "fixtures" / name
