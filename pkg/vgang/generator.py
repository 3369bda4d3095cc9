"""Random parallel taskset generation.

Periods are drawn one group at a time; every group holds N tasks sharing the
period. Tasks are added until the utilization target is met, the last task
having its WCET shrunk so that it exactly fills what is left.
"""
import enum
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from .errors import UnreachableTarget
from .model import DEMAND_DENOMINATOR, Task, Taskset, TimeValue

logger = logging.getLogger(__name__)


class TasksetType(enum.Enum):
    LIGHT = "light"
    MIXED = "mixed"
    HEAVY = "heavy"


@dataclass(frozen=True)
class GenSpec:
    m: int
    util_target: Fraction
    taskset_type: TasksetType = TasksetType.MIXED
    n_range: Tuple[int, int] = (2, 5)
    period_range: Tuple[TimeValue, TimeValue] = (10, 1500)
    wcet_fraction_range: Tuple[Fraction, Fraction] = (Fraction(1, 10), Fraction(1, 5))
    seed: int = 0
    max_retries: int = 100

    def __post_init__(self):
        object.__setattr__(self, "util_target", Fraction(str(self.util_target))
                           if isinstance(self.util_target, float) else Fraction(self.util_target))
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.util_target < 0:
            raise ValueError(f"util_target must be >= 0, got {self.util_target}")
        for name in ("n_range", "period_range", "wcet_fraction_range"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} is empty: {low} > {high}")
        if self.n_range[0] < 1 or self.period_range[0] < 1:
            raise ValueError("n_range and period_range must start at >= 1")
        if not 0 < self.wcet_fraction_range[0] <= self.wcet_fraction_range[1] <= 1:
            raise ValueError(f"wcet_fraction_range must lie in (0, 1], got {self.wcet_fraction_range}")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(seed: int, *key: int) -> int:
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def parallelism_range(m: int, taskset_type: TasksetType) -> Tuple[int, int]:
    boundary = math.ceil(Fraction(3, 10) * m)
    if taskset_type is TasksetType.LIGHT:
        return 1, boundary
    if taskset_type is TasksetType.HEAVY:
        return boundary, m
    return 1, m


def draw_parallelism(rng: np.random.Generator, m: int, taskset_type: TasksetType) -> int:
    low, high = parallelism_range(m, taskset_type)
    return int(rng.integers(low, high, endpoint=True))


def _draw_taskset(spec: GenSpec, rng: np.random.Generator) -> List[Task]:
    tasks: List[Task] = []
    remaining = spec.util_target
    group = 0
    low_fraction, high_fraction = spec.wcet_fraction_range
    while remaining > 0:
        period = int(rng.integers(spec.period_range[0], spec.period_range[1], endpoint=True))
        count = int(rng.integers(spec.n_range[0], spec.n_range[1], endpoint=True))
        c_low = max(1, math.ceil(period * low_fraction))
        c_high = max(c_low, math.floor(period * high_fraction))
        for index in range(count):
            c_iso = int(rng.integers(c_low, c_high, endpoint=True))
            h = draw_parallelism(rng, spec.m, spec.taskset_type)
            demand = Fraction(int(rng.integers(0, DEMAND_DENOMINATOR, endpoint=True)), DEMAND_DENOMINATOR)
            utilization = Fraction(c_iso * h, period)
            if utilization >= remaining:
                c_iso = math.floor(remaining * period / h)
                if c_iso >= 1:
                    tasks.append(Task(f"tau{group}_{index}", h, c_iso, period, demand))
                else:
                    logger.debug(f"Fill task of period {period} shrinks below one tick, dropped")
                return tasks
            tasks.append(Task(f"tau{group}_{index}", h, c_iso, period, demand))
            remaining -= utilization
        group += 1
    return tasks


def generate_taskset(spec: GenSpec) -> Taskset:
    rng = make_rng(spec.seed)
    for attempt in range(spec.max_retries):
        tasks = _draw_taskset(spec, rng)
        if tasks or spec.util_target == 0:
            ts = Taskset(entities=tuple(tasks), m=spec.m, util_target=spec.util_target)
            logger.debug(
                f"Generated {len(tasks)} tasks, utilization {float(ts.utilization()):.4f} "
                f"for target {float(spec.util_target)} (attempt {attempt + 1})"
            )
            return ts
    raise UnreachableTarget(
        f"No taskset reaches utilization {spec.util_target} within {spec.max_retries} attempts"
    )
