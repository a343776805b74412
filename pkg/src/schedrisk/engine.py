"""Monte Carlo interpreter for process models.

Every random draw is a pure function of (master seed, iteration, event id,
occurrence index). Nothing is consumed from a shared stream, so a scenario that
removes or rescales tasks still sees the same uniforms for every event it shares
with the baseline, and iterations can be split across workers freely.

Two interpreters are provided. :func:`simulate_once` walks one iteration in
plain Python and is the reference; :func:`run_monte_carlo` advances a whole
block of iterations at once with numpy and must agree with it bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import (
    CATEGORIES,
    Decision,
    Deterministic,
    DurationDistribution,
    Parallel,
    ProcessModel,
    Task,
    TaskCategory,
)

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)


class ExecutionCapExceeded(RuntimeError):
    def __init__(self, iteration: int, cap: int):
        super().__init__(f"iteration {iteration} executed more than {cap} steps")
        self.iteration = iteration
        self.cap = cap


# -- randomness ---------------------------------------------------------------

def _mix(z: int) -> int:
    # splitmix64 finalizer
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def event_hash(event_id: str) -> int:
    """FNV-1a over the UTF-8 bytes; stable across processes unlike ``hash()``."""
    h = 0xCBF29CE484222325
    for byte in event_id.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def event_uniform(master_seed: int, iteration: int, event_id: str, occurrence: int) -> float:
    """Uniform draw in [0, 1) with 53 bits of resolution for one event occurrence."""
    h = _mix(master_seed & MASK64)
    h = _mix(h ^ (iteration & MASK64))
    h = _mix(h ^ event_hash(event_id))
    h = _mix(h ^ (occurrence & MASK64))
    return (h >> 11) * _INV_2_53


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def event_uniform_array(master_seed: int, iterations: np.ndarray, event_id: str,
                        occurrences: np.ndarray) -> np.ndarray:
    """Vectorized :func:`event_uniform`; identical values element by element."""
    h0 = np.uint64(_mix(master_seed & MASK64))
    h = _mix_array(np.asarray(iterations, dtype=np.uint64) ^ h0)
    h = _mix_array(h ^ np.uint64(event_hash(event_id)))
    h = _mix_array(h ^ np.asarray(occurrences, dtype=np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * _INV_2_53


def derive_seed(master_seed: int, label: str) -> int:
    """Independent seed for an unpaired run, e.g. the transformed side of a comparison."""
    return _mix((master_seed & MASK64) ^ event_hash(label))


# -- sampling -----------------------------------------------------------------

def inverse_cdf(dist: DurationDistribution, u: float) -> float:
    if isinstance(dist, Deterministic):
        return float(dist.value)
    a, m, b = float(dist.min), float(dist.mode), float(dist.max)
    if b == a:
        return a
    if u <= (m - a) / (b - a):
        x = a + math.sqrt(u * (b - a) * (m - a))
    else:
        x = b - math.sqrt((1.0 - u) * (b - a) * (b - m))
    return min(max(x, a), b)


def inverse_cdf_array(dist: DurationDistribution, u: np.ndarray) -> np.ndarray:
    if isinstance(dist, Deterministic):
        return np.full(u.shape, float(dist.value))
    a, m, b = float(dist.min), float(dist.mode), float(dist.max)
    if b == a:
        return np.full(u.shape, a)
    lower = a + np.sqrt(u * (b - a) * (m - a))
    upper = b - np.sqrt((1.0 - u) * (b - a) * (b - m))
    x = np.where(u <= (m - a) / (b - a), lower, upper)
    return np.minimum(np.maximum(x, a), b)


# -- results ------------------------------------------------------------------

@dataclass(frozen=True)
class SimulationConfig:
    iterations: int = 10_000
    master_seed: int = 0
    execution_cap: int = 1_000_000

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.execution_cap < 1:
            raise ValueError("execution_cap must be positive")


@dataclass
class IterationOutcome:
    total: float
    category_work: dict[TaskCategory, float]
    loop_firings: dict[str, int]


@dataclass
class ResultSet:
    """Columnar Monte Carlo output; row ``i`` is iteration ``i``."""

    config: SimulationConfig
    model_name: str
    totals: np.ndarray
    category_work: dict[TaskCategory, np.ndarray]
    loop_firings: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.totals)

    def __getitem__(self, i: int) -> IterationOutcome:
        return IterationOutcome(
            total=float(self.totals[i]),
            category_work={c: float(v[i]) for c, v in self.category_work.items()},
            loop_firings={d: int(v[i]) for d, v in self.loop_firings.items()},
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResultSet):
            return NotImplemented
        return (self.config == other.config and self.model_name == other.model_name
                and np.array_equal(self.totals, other.totals)
                and self.category_work.keys() == other.category_work.keys()
                and all(np.array_equal(v, other.category_work[k]) for k, v in self.category_work.items())
                and self.loop_firings.keys() == other.loop_firings.keys()
                and all(np.array_equal(v, other.loop_firings[k]) for k, v in self.loop_firings.items()))

    def metric(self, name: str) -> np.ndarray:
        if name == "total":
            return self.totals
        return self.category_work[TaskCategory(name)]


# -- reference interpreter ----------------------------------------------------

Uniform = Callable[[int, int, str, int], float]


def simulate_once(model: ProcessModel, master_seed: int, iteration: int,
                  execution_cap: int = 1_000_000, uniform: Uniform = event_uniform) -> IterationOutcome:
    """Execute one pass through ``model`` and return its makespan and category work.

    ``uniform`` can be replaced by a stub with the same signature as
    :func:`event_uniform` to drive loop decisions by hand.
    """
    steps = model.steps
    work = {c: 0.0 for c in CATEGORIES}
    firings = {s.id: 0 for s in steps if isinstance(s, Decision)}
    counts: dict[str, int] = {}
    total = 0.0
    executed = 0

    def draw(task: Task) -> float:
        k = counts.get(task.id, 0)
        counts[task.id] = k + 1
        if isinstance(task.duration, Deterministic):
            return float(task.duration.value)
        return inverse_cdf(task.duration, uniform(master_seed, iteration, task.id, k))

    index = {s.id: i for i, s in enumerate(steps)}
    pc = 0
    while pc < len(steps):
        executed += 1
        if executed > execution_cap:
            raise ExecutionCapExceeded(iteration, execution_cap)
        step = steps[pc]
        if isinstance(step, Task):
            d = draw(step)
            total += d
            work[step.category] += d
            pc += 1
        elif isinstance(step, Parallel):
            best = 0.0
            for branch in step.branches:
                span = 0.0
                for task in branch:
                    d = draw(task)
                    span += d
                    work[task.category] += d
                best = max(best, span)
            total += best
            pc += 1
        else:
            k = counts.get(step.id, 0)
            counts[step.id] = k + 1
            if uniform(master_seed, iteration, step.id, k) < step.probability:
                firings[step.id] += 1
                pc = index[step.target]
            else:
                pc += 1
    return IterationOutcome(total, work, firings)


# -- batch interpreter --------------------------------------------------------

def _simulate_block(model: ProcessModel, master_seed: int, start: int, stop: int,
                    execution_cap: int) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    """Run iterations [start, stop) in lockstep.

    Each sweep walks the step list once; an iteration at step k executes it and
    moves to k+1, or jumps back and waits for the next sweep.
    """
    steps = model.steps
    n = stop - start
    iters = np.arange(start, stop, dtype=np.uint64)
    cat_row = {c: i for i, c in enumerate(CATEGORIES)}
    index = {s.id: i for i, s in enumerate(steps)}

    pc = np.zeros(n, dtype=np.int64)
    executed = np.zeros(n, dtype=np.int64)
    total = np.zeros(n)
    work = np.zeros((len(CATEGORIES), n))
    counts: dict[str, np.ndarray] = {}
    firings = {s.id: np.zeros(n, dtype=np.int64) for s in steps if isinstance(s, Decision)}

    def draw(task: Task, rows: np.ndarray) -> np.ndarray:
        occ = counts.setdefault(task.id, np.zeros(n, dtype=np.int64))
        k = occ[rows]
        occ[rows] = k + 1
        if isinstance(task.duration, Deterministic):
            return np.full(rows.size, float(task.duration.value))
        u = event_uniform_array(master_seed, iters[rows], task.id, k)
        return inverse_cdf_array(task.duration, u)

    end = len(steps)
    while True:
        live = pc < end
        if not live.any():
            break
        for k, step in enumerate(steps):
            rows = np.flatnonzero(pc == k)
            if rows.size == 0:
                continue
            executed[rows] += 1
            over = rows[executed[rows] > execution_cap]
            if over.size:
                raise ExecutionCapExceeded(int(iters[over].min()), execution_cap)
            if isinstance(step, Task):
                d = draw(step, rows)
                total[rows] += d
                work[cat_row[step.category], rows] += d
                pc[rows] = k + 1
            elif isinstance(step, Parallel):
                best = np.zeros(rows.size)
                for branch in step.branches:
                    span = np.zeros(rows.size)
                    for task in branch:
                        d = draw(task, rows)
                        span += d
                        work[cat_row[task.category], rows] += d
                    best = np.maximum(best, span)
                total[rows] += best
                pc[rows] = k + 1
            else:
                occ = counts.setdefault(step.id, np.zeros(n, dtype=np.int64))
                v = occ[rows]
                occ[rows] = v + 1
                u = event_uniform_array(master_seed, iters[rows], step.id, v)
                fire = u < step.probability
                firings[step.id][rows[fire]] += 1
                pc[rows] = np.where(fire, index[step.target], k + 1)
    return total, work, firings


def _block_worker(args):
    model, seed, start, stop, cap = args
    return _simulate_block(model, seed, start, stop, cap)


def run_monte_carlo(model: ProcessModel, config: SimulationConfig = SimulationConfig(),
                    workers: int = 1, block_size: int = 20_000) -> ResultSet:
    """Simulate ``config.iterations`` independent passes of ``model``.

    Iteration ``i`` equals ``simulate_once(model, config.master_seed, i)``
    regardless of ``workers`` or ``block_size``.
    """
    if config.execution_cap < len(model.steps):
        raise ValueError(f"execution_cap {config.execution_cap} is below the model's {len(model.steps)} steps")
    n = config.iterations
    if workers > 1:
        block_size = min(block_size, -(-n // workers))
    bounds = [(s, min(s + block_size, n)) for s in range(0, n, block_size)]
    jobs = [(model, config.master_seed, s, e, config.execution_cap) for s, e in bounds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_worker, jobs))
    else:
        parts = [_block_worker(j) for j in jobs]

    totals = np.concatenate([p[0] for p in parts])
    work = np.concatenate([p[1] for p in parts], axis=1)
    decision_ids = [s.id for s in model.steps if isinstance(s, Decision)]
    firings = {d: np.concatenate([p[2][d] for p in parts]) for d in decision_ids}
    return ResultSet(
        config=config,
        model_name=model.name,
        totals=totals,
        category_work={c: work[i] for i, c in enumerate(CATEGORIES)},
        loop_firings=firings,
    )
