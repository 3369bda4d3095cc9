import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .errors import ModelError, NotViable, PeriodMismatch

logger = logging.getLogger(__name__)

# Time is counted in integer ticks.
TimeValue = int

DEMAND_DENOMINATOR = 10 ** 6


def as_demand(value: Union[int, float, str, Fraction]) -> Fraction:
    """Quantize a demand factor onto the fixed 1e-6 grid."""
    exact = Fraction(value) if not isinstance(value, float) else Fraction(str(value))
    return Fraction(round(exact * DEMAND_DENOMINATOR), DEMAND_DENOMINATOR)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def lcm(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


@dataclass(frozen=True)
class Task:
    id: str
    h: int
    c_iso: TimeValue
    period: TimeValue
    demand: Fraction = Fraction(0)
    c_eff: Optional[TimeValue] = None
    priority: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "demand", as_demand(self.demand))
        if self.h < 1:
            raise ModelError(f"Task {self.id}: h must be >= 1, got {self.h}")
        if self.c_iso < 1:
            raise ModelError(f"Task {self.id}: c_iso must be >= 1 tick, got {self.c_iso}")
        if self.period < self.c_iso:
            raise ModelError(f"Task {self.id}: period {self.period} < c_iso {self.c_iso}")
        if not 0 <= self.demand <= 1:
            raise ModelError(f"Task {self.id}: demand {self.demand} outside [0, 1]")
        if self.c_eff is not None and self.c_eff < self.c_iso:
            raise ModelError(f"Task {self.id}: c_eff {self.c_eff} < c_iso {self.c_iso}")

    @property
    def wcet(self) -> TimeValue:
        return self.c_eff if self.c_eff is not None else self.c_iso

    @property
    def members(self) -> Tuple["Task", ...]:
        return (self,)

    def with_wcet(self, c_eff: Optional[TimeValue]) -> "Task":
        return replace(self, c_eff=c_eff)

    def with_priority(self, priority: Optional[int]) -> "Task":
        return replace(self, priority=priority)


@dataclass(frozen=True)
class VirtualGang:
    id: str
    members: Tuple[Task, ...]
    h: int
    c_iso: TimeValue
    period: TimeValue
    demand: Fraction
    c_eff: Optional[TimeValue] = None
    priority: Optional[int] = None

    def __post_init__(self):
        if not self.members:
            raise ModelError(f"Gang {self.id}: no members")
        periods = {member.period for member in self.members}
        if len(periods) != 1:
            raise PeriodMismatch(f"Gang {self.id}: member periods differ {sorted(periods)}")
        if self.period not in periods:
            raise PeriodMismatch(f"Gang {self.id}: period {self.period} != member period")
        ids = [member.id for member in self.members]
        if len(set(ids)) != len(ids):
            raise ModelError(f"Gang {self.id}: duplicate member ids {ids}")
        if self.h != sum(member.h for member in self.members):
            raise ModelError(f"Gang {self.id}: h {self.h} != sum of member h")
        if self.c_iso != max(member.c_iso for member in self.members):
            raise ModelError(f"Gang {self.id}: c_iso {self.c_iso} != max member c_iso")
        if self.c_eff is not None and self.c_eff < self.c_iso:
            raise ModelError(f"Gang {self.id}: c_eff {self.c_eff} < c_iso {self.c_iso}")

    @property
    def wcet(self) -> TimeValue:
        return self.c_eff if self.c_eff is not None else self.c_iso

    @property
    def member_ids(self) -> Tuple[str, ...]:
        return tuple(member.id for member in self.members)

    def with_wcet(self, c_eff: Optional[TimeValue]) -> "VirtualGang":
        return replace(self, c_eff=c_eff)

    def with_priority(self, priority: Optional[int]) -> "VirtualGang":
        return replace(self, priority=priority)


Entity = Union[Task, VirtualGang]


def make_virtual_gang(members: Sequence[Task], m: int, gang_id: Optional[str] = None) -> VirtualGang:
    if not members:
        raise ModelError("A virtual gang needs at least one member")
    periods = {member.period for member in members}
    if len(periods) != 1:
        raise PeriodMismatch(f"Cannot link tasks with periods {sorted(periods)}")
    h = sum(member.h for member in members)
    if h > m:
        raise NotViable(f"Gang of {[member.id for member in members]} needs {h} cores, platform has {m}")
    return VirtualGang(
        id=gang_id if gang_id is not None else "+".join(member.id for member in members),
        members=tuple(member.with_priority(None) for member in members),
        h=h,
        c_iso=max(member.c_iso for member in members),
        period=members[0].period,
        demand=sum((member.demand for member in members), Fraction(0)),
    )


@dataclass(frozen=True)
class SystemConfig:
    gangs: Tuple[VirtualGang, ...]
    index: int = 0

    @property
    def completion_time(self) -> TimeValue:
        return sum(gang.wcet for gang in self.gangs)

    @property
    def rank_key(self) -> Tuple[TimeValue, int, int]:
        return (self.completion_time, len(self.gangs), self.index)

    @property
    def tasks(self) -> List[Task]:
        return [member for gang in self.gangs for member in gang.members]


@dataclass(frozen=True)
class Taskset:
    entities: Tuple[Entity, ...]
    m: int
    util_target: Optional[Fraction] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        if self.m < 1:
            raise ModelError(f"Platform core count must be >= 1, got {self.m}")
        for entity in self.entities:
            if entity.h > self.m:
                raise NotViable(f"Entity {entity.id} needs {entity.h} cores, platform has {self.m}")
        ids = [entity.id for entity in self.entities]
        if len(set(ids)) != len(ids):
            raise ModelError(f"Duplicate entity ids in taskset: {ids}")

    def __len__(self) -> int:
        return len(self.entities)

    def tasks(self) -> List[Task]:
        return [member for entity in self.entities for member in entity.members]

    def utilization(self) -> Fraction:
        return sum((Fraction(entity.wcet * entity.h, entity.period) for entity in self.entities), Fraction(0))

    def hyperperiod(self) -> TimeValue:
        if not self.entities:
            return 0
        return lcm(entity.period for entity in self.entities)

    def max_period(self) -> TimeValue:
        return max((entity.period for entity in self.entities), default=0)

    def with_entities(self, entities: Iterable[Entity]) -> "Taskset":
        return Taskset(entities=tuple(entities), m=self.m, util_target=self.util_target)

    def entity(self, entity_id: str) -> Entity:
        for entity in self.entities:
            if entity.id == entity_id:
                return entity
        raise KeyError(entity_id)


def as_gangs(ts: Taskset) -> Taskset:
    """Wrap every bare task as a singleton gang, keeping its id, WCET and priority."""
    entities: List[Entity] = []
    for entity in ts.entities:
        if isinstance(entity, VirtualGang):
            entities.append(entity)
            continue
        gang = make_virtual_gang([entity], ts.m, gang_id=entity.id)
        entities.append(replace(gang, c_eff=entity.c_eff, priority=entity.priority))
    return ts.with_entities(entities)
