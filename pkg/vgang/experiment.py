"""Schedulability sweeps over random tasksets.

Each utilization point draws its tasksets from seeds derived from the sweep
seed, so every policy at a point sees the same tasksets and a rerun with the
same seed gives the same CSV. Gang-FTP and Threaded are judged by simulation
(no deadline miss over the simulated horizon); their labels end in SIM.
"""
import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

import pandas as pd

from .analysis import assign_priorities, schedulability_test
from .gangform import DEFAULT_TOLERANCE, Algorithm, form_gangs
from .generator import GenSpec, TasksetType, derive_seed, generate_taskset
from .interference import DemandInterferenceOracle, PolicyKind, ZeroInterferenceOracle, apply_interference
from .model import Taskset, as_gangs
from .simulator import DEFAULT_HORIZON_CAP, SchedPolicy, SimConfig, miss_stats, simulate

logger = logging.getLogger(__name__)

WORKERS_ENV = "VGANG_WORKERS"
CSV_COLUMNS = ["util", "policy", "type", "interference", "accept_ratio", "n"]


class SweepPolicy(enum.Enum):
    RT_GANG = "RT_GANG"
    RTG_SYNC_BFC = "RTG_SYNC_BFC"
    RTG_SYNC_GPC = "RTG_SYNC_GPC"
    GANG_FTP_SIM = "GANG_FTP_SIM"
    THREADED_SIM = "THREADED_SIM"


def default_util_grid(m: int) -> Tuple[Fraction, ...]:
    grid = []
    util = Fraction(1, 2)
    while util <= m:
        grid.append(util)
        util += Fraction(1, 4)
    return tuple(grid)


@dataclass(frozen=True)
class SweepSpec:
    m: int = 8
    taskset_type: TasksetType = TasksetType.MIXED
    utils: Optional[Tuple[Fraction, ...]] = None
    tasksets_per_point: int = 500
    policies: Tuple[SweepPolicy, ...] = tuple(SweepPolicy)
    interference: bool = False
    n_per_period: Optional[int] = None
    seed: int = 0
    tolerance: Fraction = DEFAULT_TOLERANCE
    horizon_cap: int = DEFAULT_HORIZON_CAP

    def __post_init__(self):
        if not self.util_grid():
            raise ValueError("Utilization grid is empty")
        if self.tasksets_per_point < 1:
            raise ValueError(f"tasksets_per_point must be >= 1, got {self.tasksets_per_point}")
        if not self.policies:
            raise ValueError("No policy selected")

    def util_grid(self) -> Tuple[Fraction, ...]:
        return self.utils if self.utils is not None else default_util_grid(self.m)

    def gen_spec(self, util: Fraction, seed: int) -> GenSpec:
        n_range = (self.n_per_period, self.n_per_period) if self.n_per_period else (2, 5)
        return GenSpec(m=self.m, util_target=util, taskset_type=self.taskset_type, n_range=n_range, seed=seed)


def evaluate(
    ts: Taskset,
    policy: SweepPolicy,
    interference: bool,
    tolerance: Fraction = DEFAULT_TOLERANCE,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> bool:
    if policy is SweepPolicy.RT_GANG:
        # one gang at a time: nothing ever co-runs, C = C*
        singles = as_gangs(ts.with_entities(task.with_wcet(None) for task in ts.tasks()))
        return schedulability_test(assign_priorities(singles)).schedulable

    if policy in (SweepPolicy.RTG_SYNC_BFC, SweepPolicy.RTG_SYNC_GPC):
        oracle = DemandInterferenceOracle() if interference else ZeroInterferenceOracle()
        algorithm = Algorithm.BFC if policy is SweepPolicy.RTG_SYNC_BFC else Algorithm.GPC
        gangs, _ = form_gangs(ts, algorithm, oracle, tolerance)
        return schedulability_test(assign_priorities(gangs)).schedulable

    kind, sched = (
        (PolicyKind.GANG_FTP, SchedPolicy.GANG_FTP)
        if policy is SweepPolicy.GANG_FTP_SIM
        else (PolicyKind.THREADED, SchedPolicy.THREADED)
    )
    prepared = apply_interference(ts, kind) if interference else ts
    cfg = SimConfig(policy=sched, horizon_cap=horizon_cap, stop_on_miss=True)
    trace = simulate(assign_priorities(prepared), cfg)
    return miss_stats(trace).misses == 0


def worker_count() -> int:
    configured = os.environ.get(WORKERS_ENV)
    if configured:
        return max(1, int(configured))
    return os.cpu_count() or 1


def _sweep_point(spec: SweepSpec, index: int, util: Fraction) -> Dict[SweepPolicy, int]:
    accepted = {policy: 0 for policy in spec.policies}
    for sample in range(spec.tasksets_per_point):
        ts = generate_taskset(spec.gen_spec(util, derive_seed(spec.seed, index, sample)))
        for policy in spec.policies:
            if evaluate(ts, policy, spec.interference, spec.tolerance, spec.horizon_cap):
                accepted[policy] += 1
    logger.info(
        f"util {float(util):.2f}: " + ", ".join(
            f"{policy.value}={count}/{spec.tasksets_per_point}" for policy, count in accepted.items()
        )
    )
    return accepted


def run_sweep(spec: SweepSpec) -> pd.DataFrame:
    grid = spec.util_grid()
    workers = min(worker_count(), len(grid))
    results: Dict[Fraction, Dict[SweepPolicy, int]] = {}
    logger.info(f"Sweep over {len(grid)} points with {workers} worker process(es)")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(_sweep_point, spec, index, util): util
            for index, util in enumerate(grid)
        }
        for future in as_completed(futures):
            util = futures[future]
            try:
                results[util] = future.result()
            except Exception as err:
                logger.warning(f"Sweep point {float(util)} failed: {err}")
                for pending in futures:
                    pending.cancel()
                raise

    rows = []
    for util in sorted(results):
        for policy in sorted(spec.policies, key=lambda policy: policy.value):
            rows.append({
                "util": float(util),
                "policy": policy.value,
                "type": spec.taskset_type.value,
                "interference": "on" if spec.interference else "off",
                "accept_ratio": results[util][policy] / spec.tasksets_per_point,
                "n": spec.tasksets_per_point,
            })
    return pd.DataFrame(rows, columns=CSV_COLUMNS)
