import json
import logging
import sys
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd

from .analysis import SchedVerdict
from .errors import ModelError, SchemaError
from .gangform import FormationStats
from .generator import GenSpec
from .model import Entity, SystemConfig, Task, Taskset, VirtualGang, make_virtual_gang
from .simulator import SimTrace, gantt_segments
from .typings import (
    ConfigDict,
    GangDict,
    GenSpecDict,
    ProvenanceDict,
    TaskDict,
    TasksetDict,
    TraceEventDict,
    VerdictDict,
)

logger = logging.getLogger(__name__)

TASK_FIELDS = ("id", "h", "c_iso", "period", "demand")


def _require(data: Dict[str, Any], name: str, kind: type, where: str) -> Any:
    if name not in data:
        raise SchemaError(f"{where}: missing field '{name}'")
    value = data[name]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SchemaError(f"{where}: field '{name}' must be an integer, got {value!r}")
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise SchemaError(f"{where}: field '{name}' must be a number, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise SchemaError(f"{where}: field '{name}' must be a string, got {value!r}")
    return value


def _optional(data: Dict[str, Any], name: str, kind: type, where: str) -> Any:
    if data.get(name) is None:
        return None
    return _require(data, name, kind, where)


def task_parse(data: Dict[str, Any]) -> Task:
    if not isinstance(data, dict):
        raise SchemaError(f"Task entry must be an object, got {data!r}")
    where = f"task {data.get('id', '?')}"
    try:
        return Task(
            id=_require(data, "id", str, where),
            h=_require(data, "h", int, where),
            c_iso=_require(data, "c_iso", int, where),
            period=_require(data, "period", int, where),
            demand=_require(data, "demand", float, where),
            c_eff=_optional(data, "c_eff", int, where),
            priority=_optional(data, "priority", int, where),
        )
    except ModelError as err:
        raise SchemaError(str(err)) from err


def gang_parse(data: Dict[str, Any], m: int) -> VirtualGang:
    where = f"gang {data.get('id', '?')}"
    members = data.get("members")
    if not isinstance(members, list) or not members:
        raise SchemaError(f"{where}: 'members' must be a non-empty list")
    gang_id = _require(data, "id", str, where)
    tasks = [task_parse(member) for member in members]
    c_eff = _optional(data, "c_eff", int, where)
    priority = _optional(data, "priority", int, where)
    try:
        gang = make_virtual_gang(tasks, m, gang_id)
        return gang.with_wcet(c_eff).with_priority(priority)
    except ModelError as err:
        raise SchemaError(str(err)) from err


def taskset_parse(data: Dict[str, Any]) -> Taskset:
    if not isinstance(data, dict):
        raise SchemaError("Taskset document must be an object")
    m = _require(data, "m", int, "taskset")
    entries = data.get("tasks")
    if not isinstance(entries, list):
        raise SchemaError("taskset: 'tasks' must be a list")
    entities: List[Entity] = []
    for entry in entries:
        if isinstance(entry, dict) and "members" in entry:
            entities.append(gang_parse(entry, m))
        else:
            entities.append(task_parse(entry))
    util_target = data.get("util_target")
    try:
        return Taskset(
            entities=tuple(entities),
            m=m,
            util_target=Fraction(str(util_target)) if util_target is not None else None,
        )
    except ModelError as err:
        raise SchemaError(str(err)) from err


def taskset_load(path: str) -> Taskset:
    logger.debug(f"Load taskset: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: invalid JSON ({err})") from err
    return taskset_parse(data)


def task_dump(task: Task) -> TaskDict:
    task_dict: TaskDict = {
        "id": task.id,
        "h": task.h,
        "c_iso": task.c_iso,
        "period": task.period,
        "demand": float(task.demand),
    }
    if task.c_eff is not None:
        task_dict["c_eff"] = task.c_eff
    if task.priority is not None:
        task_dict["priority"] = task.priority
    return task_dict


def gang_dump(gang: VirtualGang) -> GangDict:
    gang_dict: GangDict = {
        "id": gang.id,
        "members": [task_dump(member) for member in gang.members],
    }
    if gang.c_eff is not None:
        gang_dict["c_eff"] = gang.c_eff
    if gang.priority is not None:
        gang_dict["priority"] = gang.priority
    return gang_dict


def gen_spec_dump(spec: GenSpec) -> GenSpecDict:
    return {
        "m": spec.m,
        "util_target": float(spec.util_target),
        "taskset_type": spec.taskset_type.value,
        "n_range": list(spec.n_range),
        "period_range": list(spec.period_range),
        "wcet_fraction_range": [float(value) for value in spec.wcet_fraction_range],
        "seed": spec.seed,
    }


def provenance_dump(stats: FormationStats) -> ProvenanceDict:
    return {
        "algorithm": stats.algorithm,
        "period": stats.period,
        "iterations": stats.iterations,
        "oracle_calls": stats.oracle_calls,
        "tolerance": float(stats.tolerance),
        "configs": stats.configs,
        "completion_time": stats.completion_time,
    }


def taskset_dump(
    ts: Taskset,
    gen_spec: Optional[GenSpec] = None,
    provenance: Optional[Iterable[FormationStats]] = None,
) -> TasksetDict:
    tasks: List[Dict] = []
    for entity in ts.entities:
        if isinstance(entity, VirtualGang):
            tasks.append(dict(gang_dump(entity)))
        else:
            tasks.append(dict(task_dump(entity)))
    taskset_dict: TasksetDict = {"m": ts.m, "tasks": tasks}
    if ts.util_target is not None:
        taskset_dict["util_target"] = float(ts.util_target)
    if gen_spec is not None:
        taskset_dict["gen_spec"] = gen_spec_dump(gen_spec)
    if provenance is not None:
        taskset_dict["provenance"] = [provenance_dump(stats) for stats in provenance]
    return taskset_dict


def config_dump(config: SystemConfig, stats: Optional[FormationStats] = None) -> ConfigDict:
    config_dict: ConfigDict = {
        "index": config.index,
        "completion_time": config.completion_time,
        "gangs": [gang_dump(gang) for gang in config.gangs],
    }
    if stats is not None:
        config_dict["provenance"] = provenance_dump(stats)
    return config_dict


def verdict_dump(verdict: SchedVerdict) -> VerdictDict:
    return {
        "schedulable": verdict.schedulable,
        "response_times": {entity_id: result.value for entity_id, result in verdict.per_entity.items()},
    }


def trace_dump_lines(trace: SimTrace) -> List[str]:
    lines = []
    for event in trace.events:
        event_dict: TraceEventDict = {
            "t": event.time,
            "kind": event.kind.value,
            "id": event.entity_id,
            "cores": list(event.cores),
        }
        lines.append(json.dumps(event_dict))
    return lines


def gantt_frame(trace: SimTrace) -> pd.DataFrame:
    rows = [
        {"entity": entity_id, "start": start, "end": end, "cores": " ".join(str(core) for core in cores)}
        for entity_id, start, end, cores in gantt_segments(trace)
    ]
    return pd.DataFrame(rows, columns=["entity", "start", "end", "cores"])


def write_json(path: Optional[str], document: Any):
    text = json.dumps(document, indent=2, sort_keys=False)
    if path is None or path == "-":
        sys.stdout.write(text + "\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    logger.info(f"Wrote {path}")


def write_lines(path: Optional[str], lines: Iterable[str]):
    if path is None or path == "-":
        for line in lines:
            sys.stdout.write(line + "\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
    logger.info(f"Wrote {path}")
