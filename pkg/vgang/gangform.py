"""Virtual gang formation over same-period candidate sets.

Two formation algorithms are provided. The brute-force one enumerates every
viable partition of the candidate set, ranks the partitions by completion
time and then refines the best one against an interference oracle until the
ranking settles. The greedy one packs tasks around the longest remaining
task and checks each resulting gang once.
"""
import enum
import logging
import math
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import ConfigSpaceTooLarge, ModelError, NotViable
from .interference import InterferenceOracle, ZeroInterferenceOracle
from .model import SystemConfig, Task, Taskset, TimeValue, VirtualGang, make_virtual_gang

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = Fraction(1, 5)
DEFAULT_CONFIG_CAP = 10 ** 7


class Algorithm(enum.Enum):
    BFC = "bfc"
    GPC = "gpc"


def as_tolerance(value: Union[int, float, str, Fraction]) -> Fraction:
    tolerance = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    if tolerance < 0:
        raise ValueError(f"Tolerance must be >= 0, got {value}")
    return tolerance


@dataclass(frozen=True)
class CandidateSet:
    tasks: Tuple[Task, ...]
    m: int

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.tasks:
            raise ModelError("Candidate set is empty")
        periods = {task.period for task in self.tasks}
        if len(periods) != 1:
            raise ModelError(f"Candidate set mixes periods {sorted(periods)}")
        for task in self.tasks:
            if task.h > self.m:
                raise NotViable(f"Task {task.id} needs {task.h} cores, platform has {self.m}")

    @property
    def period(self) -> TimeValue:
        return self.tasks[0].period


@dataclass(frozen=True)
class RankedConfigs:
    configs: Tuple[SystemConfig, ...]

    @property
    def best(self) -> SystemConfig:
        return self.configs[0]


@dataclass
class FormationStats:
    algorithm: str
    tolerance: Fraction
    period: TimeValue = 0
    iterations: int = 0
    oracle_calls: int = 0
    configs: int = 0
    completion_time: TimeValue = 0
    best_history: List[int] = field(default_factory=list)
    config_index: Optional[int] = None


def stirling2(N: int, k: int) -> int:
    """Stirling number of the second kind, by the alternating-sum formula."""
    if not 0 <= k <= N:
        raise ValueError(f"stirling2 needs 0 <= k <= N, got N={N}, k={k}")
    total = sum((-1) ** i * math.comb(k, i) * (k - i) ** N for i in range(k + 1))
    return total // math.factorial(k)


def config_count_bound(N: int, m: int) -> int:
    if N < 1 or m < 1:
        raise ValueError(f"config_count_bound needs N >= 1 and m >= 1, got N={N}, m={m}")
    return sum(stirling2(N, k) for k in range(-(-N // m), N + 1))


def _enumerate_partitions(hs: Sequence[int], m: int) -> List[Tuple[int, ...]]:
    """Viable set partitions as tuples of member bitmasks, finest first."""
    n = len(hs)
    found: List[Tuple[int, ...]] = []
    blocks: List[int] = []
    loads: List[int] = []

    def place(i: int):
        if i == n:
            found.append(tuple(blocks))
            return
        bit = 1 << i
        blocks.append(bit)
        loads.append(hs[i])
        place(i + 1)
        blocks.pop()
        loads.pop()
        for b in range(len(blocks)):
            if loads[b] + hs[i] <= m:
                blocks[b] |= bit
                loads[b] += hs[i]
                place(i + 1)
                blocks[b] &= ~bit
                loads[b] -= hs[i]

    place(0)
    # stable: keeps generation order inside each block count
    found.sort(key=len, reverse=True)
    return found


class _GangCache:
    """Member-set keyed gang objects and oracle measurements."""

    def __init__(self, cs: CandidateSet, oracle: InterferenceOracle):
        self.__cs = cs
        self.__oracle = oracle
        self.__lock = threading.Lock()
        self.__gangs: Dict[int, VirtualGang] = {}
        self.__measured: Dict[int, TimeValue] = {}
        self.oracle_calls = 0

    def gang(self, block: int) -> VirtualGang:
        with self.__lock:
            if block not in self.__gangs:
                members = [task for i, task in enumerate(self.__cs.tasks) if block >> i & 1]
                self.__gangs[block] = make_virtual_gang(members, self.__cs.m)
            return self.__gangs[block]

    def measure(self, block: int) -> TimeValue:
        gang = self.gang(block)
        with self.__lock:
            if block not in self.__measured:
                self.oracle_calls += 1
                c_eff = self.__oracle.measure(gang)
                logger.debug(f"Oracle {self.__oracle.name}: gang {gang.id} {gang.c_iso} -> {c_eff}")
                self.__measured[block] = max(c_eff, gang.c_iso)
            return self.__measured[block]


def generate_system_configs(cs: CandidateSet) -> List[SystemConfig]:
    cache = _GangCache(cs, ZeroInterferenceOracle())
    partitions = _enumerate_partitions([task.h for task in cs.tasks], cs.m)
    return [
        SystemConfig(gangs=tuple(cache.gang(block) for block in blocks), index=index)
        for index, blocks in enumerate(partitions)
    ]


def rank_configs(configs: Sequence[SystemConfig]) -> RankedConfigs:
    return RankedConfigs(configs=tuple(sorted(configs, key=lambda config: config.rank_key)))


def gang_formation_bruteforce(
    cs: CandidateSet,
    oracle: InterferenceOracle,
    tolerance: Union[float, Fraction] = DEFAULT_TOLERANCE,
    cap: int = DEFAULT_CONFIG_CAP,
    stats: Optional[FormationStats] = None,
) -> SystemConfig:
    tolerance = as_tolerance(tolerance)
    bound = config_count_bound(len(cs.tasks), cs.m)
    if bound > cap:
        raise ConfigSpaceTooLarge(bound, cap)

    cache = _GangCache(cs, oracle)
    partitions = _enumerate_partitions([task.h for task in cs.tasks], cs.m)
    wcet: Dict[int, TimeValue] = {}
    containing: Dict[int, List[int]] = defaultdict(list)
    for index, blocks in enumerate(partitions):
        for block in blocks:
            if block not in wcet:
                wcet[block] = cache.gang(block).c_iso
            containing[block].append(index)
    completion = [sum(wcet[block] for block in blocks) for blocks in partitions]

    def rank(index: int) -> Tuple[TimeValue, int, int]:
        return (completion[index], len(partitions[index]), index)

    best = min(range(len(partitions)), key=rank)
    selected = [best]
    iterations = 0
    while True:
        iterations += 1
        before = completion[best]
        for block in partitions[best]:
            c_eff = cache.measure(block)
            delta = c_eff - wcet[block]
            if delta:
                wcet[block] = c_eff
                for index in containing[block]:
                    completion[index] += delta
        after = completion[best]
        logger.debug(f"Iteration {iterations}: config {best} completion {before} -> {after}")
        if after <= (1 + tolerance) * before:
            break
        new_best = min(range(len(partitions)), key=rank)
        if new_best == best:
            break
        best = new_best
        if best in selected:
            # already fully measured, nothing left to refine
            break
        selected.append(best)

    config = SystemConfig(
        gangs=tuple(cache.gang(block).with_wcet(wcet[block]) for block in partitions[best]),
        index=best,
    )
    logger.info(
        f"BFC period {cs.period}: {len(partitions)} configs, best {[gang.id for gang in config.gangs]} "
        f"completion {config.completion_time} after {iterations} iteration(s)"
    )
    if stats is not None:
        stats.period = cs.period
        stats.iterations = iterations
        stats.oracle_calls = cache.oracle_calls
        stats.configs = len(partitions)
        stats.completion_time = config.completion_time
        stats.best_history = selected
        stats.config_index = best
    return config


def gang_formation_greedy(
    cs: CandidateSet,
    oracle: InterferenceOracle,
    tolerance: Union[float, Fraction] = DEFAULT_TOLERANCE,
    stats: Optional[FormationStats] = None,
) -> List[VirtualGang]:
    tolerance = as_tolerance(tolerance)
    remaining = sorted(cs.tasks, key=lambda task: (-task.c_iso, -task.h, task.id))
    packed: List[List[Task]] = []
    while remaining:
        members = [remaining.pop(0)]
        load = members[0].h
        for task in list(remaining):
            if load + task.h <= cs.m:
                remaining.remove(task)
                members.append(task)
                load += task.h
        packed.append(members)

    oracle_calls = 0
    gangs: List[VirtualGang] = []
    for members in packed:
        gang = make_virtual_gang(members, cs.m)
        c_eff = max(oracle.measure(gang), gang.c_iso)
        oracle_calls += 1
        if len(members) > 1 and c_eff > (1 + tolerance) * gang.c_iso:
            logger.warning(f"GPC rejected gang {gang.id}: WCET {gang.c_iso} -> {c_eff}")
            for member in members:
                single = make_virtual_gang([member], cs.m)
                gangs.append(single.with_wcet(max(oracle.measure(single), single.c_iso)))
                oracle_calls += 1
        else:
            gangs.append(gang.with_wcet(c_eff))

    completion_time = sum(gang.wcet for gang in gangs)
    logger.info(f"GPC period {cs.period}: gangs {[gang.id for gang in gangs]} completion {completion_time}")
    if stats is not None:
        stats.period = cs.period
        stats.iterations = 1
        stats.oracle_calls = oracle_calls
        stats.configs = 1
        stats.completion_time = completion_time
    return gangs


def candidate_sets(ts: Taskset) -> List[CandidateSet]:
    by_period: Dict[TimeValue, List[Task]] = defaultdict(list)
    for task in ts.tasks():
        by_period[task.period].append(task.with_wcet(None).with_priority(None))
    return [CandidateSet(tasks=tuple(by_period[period]), m=ts.m) for period in sorted(by_period)]


def form_gangs(
    ts: Taskset,
    algorithm: Algorithm,
    oracle: InterferenceOracle,
    tolerance: Union[float, Fraction] = DEFAULT_TOLERANCE,
    cap: int = DEFAULT_CONFIG_CAP,
) -> Tuple[Taskset, List[FormationStats]]:
    """Form virtual gangs for every candidate set of ts."""
    tolerance = as_tolerance(tolerance)
    gangs: List[VirtualGang] = []
    report: List[FormationStats] = []
    for cs in candidate_sets(ts):
        stats = FormationStats(algorithm=algorithm.value, tolerance=tolerance)
        if algorithm is Algorithm.BFC:
            try:
                gangs.extend(gang_formation_bruteforce(cs, oracle, tolerance, cap, stats).gangs)
            except ConfigSpaceTooLarge as err:
                logger.warning(f"Period {cs.period}: {err}, falling back to GPC")
                stats = FormationStats(algorithm=Algorithm.GPC.value, tolerance=tolerance)
                gangs.extend(gang_formation_greedy(cs, oracle, tolerance, stats))
        else:
            gangs.extend(gang_formation_greedy(cs, oracle, tolerance, stats))
        report.append(stats)
    return ts.with_entities(gangs), report
