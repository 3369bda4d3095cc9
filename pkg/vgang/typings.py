from typing import Dict, List, TypedDict


class _TaskDictOptional(TypedDict, total=False):
    c_eff: int
    priority: int


class TaskDict(_TaskDictOptional):
    id: str
    h: int
    c_iso: int
    period: int
    demand: float


class _GangDictOptional(TypedDict, total=False):
    c_eff: int
    priority: int


class GangDict(_GangDictOptional):
    id: str
    members: List[TaskDict]


class GenSpecDict(TypedDict):
    m: int
    util_target: float
    taskset_type: str
    n_range: List[int]
    period_range: List[int]
    wcet_fraction_range: List[float]
    seed: int


class ProvenanceDict(TypedDict):
    algorithm: str
    period: int
    iterations: int
    oracle_calls: int
    tolerance: float
    configs: int
    completion_time: int


class _TasksetDictOptional(TypedDict, total=False):
    util_target: float
    gen_spec: GenSpecDict
    provenance: List[ProvenanceDict]


class TasksetDict(_TasksetDictOptional):
    m: int
    tasks: List[Dict]


class VerdictDict(TypedDict):
    schedulable: bool
    response_times: Dict[str, int]


class TraceEventDict(TypedDict):
    t: int
    kind: str
    id: str
    cores: List[int]


class _ConfigDictOptional(TypedDict, total=False):
    provenance: ProvenanceDict


class ConfigDict(_ConfigDictOptional):
    index: int
    completion_time: int
    gangs: List[GangDict]
