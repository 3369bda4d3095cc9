"""Synthetic shared-resource interference model.

Every task carries a resource-demand factor r in [0, 1]. The worst-case
resource utilization R of a task is its own demand plus the largest combined
demand of the tasks that may run beside it under a given policy. The WCET
is scaled linearly once the resource saturates: C = ceil(C* x max(R, 1)).
"""
import enum
import heapq
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import List

from .errors import InvalidConfig, TaskNotInGang
from .model import Entity, Task, Taskset, TimeValue, VirtualGang

logger = logging.getLogger(__name__)


class PolicyKind(enum.Enum):
    RT_GANG = "rtgang"
    RTG_SYNC = "rtgsync"
    GANG_FTP = "gangftp"
    THREADED = "threaded"


@dataclass(frozen=True)
class ResourceUtilization:
    value: Fraction
    own_demand: Fraction

    def __post_init__(self):
        if self.value < self.own_demand:
            raise ValueError(f"Resource utilization {self.value} below own demand {self.own_demand}")


def scale_wcet(c_iso: TimeValue, R: ResourceUtilization) -> TimeValue:
    return math.ceil(c_iso * max(R.value, Fraction(1)))


def gang_resource_utilization(task: Task, gang: VirtualGang) -> ResourceUtilization:
    if task.id not in gang.member_ids:
        raise TaskNotInGang(f"Task {task.id} is not a member of gang {gang.id}")
    others = sum((member.demand for member in gang.members if member.id != task.id), Fraction(0))
    return ResourceUtilization(value=task.demand + others, own_demand=task.demand)


def _max_corunner_demand(capacity: int, others: List[Task]) -> Fraction:
    # 0/1 knapsack over core counts; values are exact rationals.
    best = [Fraction(0)] * (capacity + 1)
    for other in others:
        if other.h > capacity:
            continue
        for cores in range(capacity, other.h - 1, -1):
            candidate = best[cores - other.h] + other.demand
            if candidate > best[cores]:
                best[cores] = candidate
    return best[capacity]


def gangftp_resource_utilization(task: Task, ts: Taskset) -> ResourceUtilization:
    others = [other for other in ts.tasks() if other.id != task.id]
    corunners = _max_corunner_demand(ts.m - task.h, others)
    return ResourceUtilization(value=task.demand + corunners, own_demand=task.demand)


def threaded_resource_utilization(task: Task, ts: Taskset) -> ResourceUtilization:
    own_thread = task.demand / task.h
    threads: List[Fraction] = [own_thread] * (task.h - 1)
    for other in ts.tasks():
        if other.id == task.id:
            continue
        threads.extend([other.demand / other.h] * other.h)
    corunners = sum(heapq.nlargest(ts.m - 1, threads), Fraction(0))
    return ResourceUtilization(value=own_thread + corunners, own_demand=own_thread)


class InterferenceOracle(ABC):
    """Maps a virtual gang to its interference-adjusted WCET."""

    name = "oracle"

    @abstractmethod
    def measure(self, gang: VirtualGang) -> TimeValue:
        ...


class ZeroInterferenceOracle(InterferenceOracle):
    name = "zero"

    def measure(self, gang: VirtualGang) -> TimeValue:
        return gang.c_iso


class DemandInterferenceOracle(InterferenceOracle):
    name = "demand"

    def measure(self, gang: VirtualGang) -> TimeValue:
        return max(
            scale_wcet(member.c_iso, gang_resource_utilization(member, gang))
            for member in gang.members
        )


def apply_interference(ts: Taskset, policy: PolicyKind) -> Taskset:
    """Return the taskset with c_eff set on every entity as seen under policy."""
    oracle = DemandInterferenceOracle()
    entities: List[Entity] = []
    for entity in ts.entities:
        if policy is PolicyKind.RT_GANG:
            c_eff = entity.c_iso
        elif policy is PolicyKind.RTG_SYNC:
            c_eff = oracle.measure(entity) if isinstance(entity, VirtualGang) else entity.c_iso
        elif isinstance(entity, VirtualGang):
            raise InvalidConfig(f"Policy {policy.value} schedules bare tasks, got gang {entity.id}")
        elif policy is PolicyKind.GANG_FTP:
            c_eff = scale_wcet(entity.c_iso, gangftp_resource_utilization(entity, ts))
        else:
            c_eff = scale_wcet(entity.c_iso, threaded_resource_utilization(entity, ts))
        if c_eff != entity.c_iso:
            logger.debug(f"{policy.value}: {entity.id} WCET {entity.c_iso} -> {c_eff}")
        entities.append(entity.with_wcet(c_eff))
    return ts.with_entities(entities)
