"""Fixed-priority response-time analysis for one-gang-at-a-time scheduling.

Only one gang entity runs at any instant, so the platform behaves as a
uniprocessor for gang entities and the classic unicore analysis is exact.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from .errors import PriorityNotAssigned
from .model import Entity, Taskset, TimeValue, ceil_div

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResponseTime:
    value: TimeValue
    converged: bool
    iterations: int


@dataclass(frozen=True)
class SchedVerdict:
    schedulable: bool
    per_entity: Dict[str, ResponseTime] = field(default_factory=dict)


def priority_key(entity: Entity):
    # rate-monotonic, shorter WCET first within a period, then id
    return (entity.period, entity.wcet, entity.id)


def assign_priorities(ts: Taskset) -> Taskset:
    order = sorted(ts.entities, key=priority_key)
    priorities = {entity.id: len(order) - rank for rank, entity in enumerate(order)}
    return ts.with_entities(entity.with_priority(priorities[entity.id]) for entity in ts.entities)


def response_time(entity: Entity, higher_priority: Sequence[Entity]) -> ResponseTime:
    wcet = entity.wcet
    response = wcet
    iterations = 0
    while response <= entity.period:
        iterations += 1
        following = wcet + sum(ceil_div(response, hp.period) * hp.wcet for hp in higher_priority)
        assert following >= response, "response-time iteration must be non-decreasing"
        logger.debug(f"{entity.id}: R^{iterations} = {following}")
        if following == response:
            return ResponseTime(value=response, converged=True, iterations=iterations)
        response = following
    return ResponseTime(value=response, converged=False, iterations=iterations)


def higher_priority_set(ts: Taskset, entity: Entity) -> List[Entity]:
    priority = entity.priority if entity.priority is not None else 0
    return [
        other for other in ts.entities
        if other.priority is not None and other.priority > priority
    ]


def schedulability_test(ts: Taskset) -> SchedVerdict:
    missing = [entity.id for entity in ts.entities if entity.priority is None]
    if missing:
        raise PriorityNotAssigned(f"Entities without priority: {missing}")

    per_entity: Dict[str, ResponseTime] = {}
    for entity in ts.entities:
        per_entity[entity.id] = response_time(entity, higher_priority_set(ts, entity))
    schedulable = all(
        result.converged and result.value <= ts.entity(entity_id).period
        for entity_id, result in per_entity.items()
    )
    logger.debug(f"RTA over {len(ts)} entities: schedulable={schedulable}")
    return SchedVerdict(schedulable=schedulable, per_entity=per_entity)
