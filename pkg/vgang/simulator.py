"""Event-driven multicore scheduling simulator.

Time advances from one scheduling event to the next (release, completion,
deadline, member arrival), so traces are exact in ticks. Every job is split
into parts: one part for a rigid gang, one per member for an unsynchronized
virtual gang, one per thread under the threaded policy.
"""
import enum
import heapq
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import IncompleteTrace, InvalidConfig, PriorityNotAssigned
from .model import Entity, Taskset, TimeValue, VirtualGang

logger = logging.getLogger(__name__)

DEFAULT_HORIZON_CAP = 10 ** 6


class SchedPolicy(enum.Enum):
    RT_GANG = "rtgang"
    RTG_SYNC = "rtgsync"
    UNSYNC_VGANG = "unsync"
    GANG_FTP = "gangftp"
    THREADED = "threaded"


ONE_AT_A_TIME = (SchedPolicy.RT_GANG, SchedPolicy.RTG_SYNC, SchedPolicy.UNSYNC_VGANG)


class EventKind(enum.Enum):
    RELEASE = "RELEASE"
    START = "START"
    PREEMPT = "PREEMPT"
    RESUME = "RESUME"
    COMPLETE = "COMPLETE"
    DEADLINE_MISS = "DEADLINE_MISS"


@dataclass(frozen=True)
class SimEvent:
    time: TimeValue
    kind: EventKind
    entity_id: str
    cores: Tuple[int, ...] = ()
    job: int = 0


@dataclass(frozen=True)
class SimConfig:
    policy: SchedPolicy
    horizon: Optional[TimeValue] = None
    release_offsets: Mapping[str, TimeValue] = field(default_factory=dict)
    preemptive: bool = True
    preemption_cost: TimeValue = 0
    horizon_cap: TimeValue = DEFAULT_HORIZON_CAP
    stop_on_miss: bool = False


@dataclass(frozen=True)
class SimTrace:
    events: Tuple[SimEvent, ...]
    horizon: TimeValue
    m: int
    policy: SchedPolicy

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class MissStats:
    misses: int
    per_entity: Dict[str, int]
    max_lateness: TimeValue


class _Part:
    def __init__(self, part_id: str, h: int, remaining: TimeValue, arrival: TimeValue, home: Tuple[int, ...]):
        self.part_id = part_id
        self.h = h
        self.remaining = remaining
        self.arrival = arrival
        self.home = home
        self.cores: Tuple[int, ...] = ()
        self.started = False

    def is_ready(self, t: TimeValue) -> bool:
        return self.arrival <= t and self.remaining > 0


class _Job:
    def __init__(self, entity: Entity, index: int, release: TimeValue, parts: List[_Part], order: int):
        self.entity_id = entity.id
        self.priority = entity.priority if entity.priority is not None else 0
        self.index = index
        self.release = release
        self.deadline = release + entity.period
        self.parts = parts
        self.order = order
        self.missed = False

    @property
    def done(self) -> bool:
        return all(part.remaining == 0 for part in self.parts)

    def is_ready(self, t: TimeValue) -> bool:
        # an unsynchronized gang holds its slot from first arrival to last completion
        return not self.done and min(part.arrival for part in self.parts) <= t

    def rank(self) -> Tuple[int, TimeValue, int]:
        return (-self.priority, self.release, self.order)

    @property
    def cores(self) -> Tuple[int, ...]:
        return tuple(sorted({core for part in self.parts for core in (part.cores or part.home)}))


class Simulator:
    def __init__(self, ts: Taskset, cfg: SimConfig):
        missing = [entity.id for entity in ts.entities if entity.priority is None]
        if missing:
            raise PriorityNotAssigned(f"Entities without priority: {missing}")
        for entity_id, offset in cfg.release_offsets.items():
            if offset < 0:
                raise InvalidConfig(f"Negative release offset {offset} for {entity_id}")
        if cfg.preemption_cost < 0:
            raise InvalidConfig(f"Negative preemption cost {cfg.preemption_cost}")
        self.ts = ts
        self.cfg = cfg
        self.horizon = self._resolve_horizon(ts, cfg)
        self.__events: List[SimEvent] = []
        self.__running: List[_Part] = []
        self.__holder: Optional[_Job] = None
        self.__pending: Dict[int, Deque[_Job]] = defaultdict(deque)

    @staticmethod
    def _resolve_horizon(ts: Taskset, cfg: SimConfig) -> TimeValue:
        max_period = ts.max_period()
        if cfg.horizon is not None:
            if cfg.horizon < max_period:
                raise InvalidConfig(f"Horizon {cfg.horizon} shorter than the longest period {max_period}")
            return cfg.horizon
        hyperperiod = ts.hyperperiod()
        if hyperperiod > cfg.horizon_cap:
            horizon = max(cfg.horizon_cap, max_period)
            logger.warning(f"Hyperperiod {hyperperiod} exceeds cap {cfg.horizon_cap}, simulating {horizon} ticks")
            return horizon
        return hyperperiod

    def _emit(self, time: TimeValue, kind: EventKind, entity_id: str, cores: Sequence[int] = (), job: int = 0):
        self.__events.append(SimEvent(time=time, kind=kind, entity_id=entity_id, cores=tuple(cores), job=job))

    def _make_parts(self, entity: Entity, release: TimeValue) -> List[_Part]:
        policy = self.cfg.policy
        if policy is SchedPolicy.UNSYNC_VGANG and isinstance(entity, VirtualGang):
            parts = []
            first_core = 0
            for member in entity.members:
                home = tuple(range(first_core, first_core + member.h))
                arrival = release + self.cfg.release_offsets.get(member.id, 0)
                parts.append(_Part(member.id, member.h, member.wcet, arrival, home))
                first_core += member.h
            return parts
        if policy is SchedPolicy.THREADED:
            return [
                _Part(f"{entity.id}#{thread}", 1, entity.wcet, release, ())
                for thread in range(entity.h)
            ]
        home = tuple(range(entity.h)) if policy in ONE_AT_A_TIME else ()
        return [_Part(entity.id, entity.h, entity.wcet, release, home)]

    def _select(self, t: TimeValue) -> List[_Part]:
        # only the oldest pending job of an entity may run
        heads = [queue[0] for queue in self.__pending.values() if queue]
        ready = sorted((job for job in heads if job.is_ready(t)), key=_Job.rank)
        running = set(self.__running)
        policy = self.cfg.policy

        if policy in ONE_AT_A_TIME:
            chosen = ready[0] if ready else None
            holder = self.__holder
            if not self.cfg.preemptive and holder is not None and holder in ready:
                chosen = holder
            self.__holder = chosen
            if chosen is None:
                return []
            return [part for part in chosen.parts if part.is_ready(t)]

        if policy is SchedPolicy.GANG_FTP:
            jobs = ready
            if not self.cfg.preemptive:
                jobs = [job for job in ready if job.parts[0] in running] + \
                       [job for job in ready if job.parts[0] not in running]
            selected = []
            free = self.ts.m
            for job in jobs:
                part = job.parts[0]
                if part.h <= free:
                    selected.append(part)
                    free -= part.h
            return selected

        threads = [part for job in ready for part in job.parts if part.is_ready(t)]
        if not self.cfg.preemptive:
            threads = [part for part in threads if part in running] + \
                      [part for part in threads if part not in running]
        return threads[:self.ts.m]

    def _dispatch(self, t: TimeValue, selected: List[_Part], owner: Dict[_Part, _Job]):
        chosen = set(selected)
        for part in self.__running:
            if part not in chosen and part.remaining > 0:
                self._emit(t, EventKind.PREEMPT, part.part_id, part.cores, owner[part].index)
                part.remaining += self.cfg.preemption_cost
                part.cores = ()

        busy: Set[int] = {core for part in selected if part in self.__running for core in part.cores}
        for part in selected:
            if part in self.__running:
                continue
            if part.home:
                part.cores = part.home
            else:
                free = [core for core in range(self.ts.m) if core not in busy]
                part.cores = tuple(free[:part.h])
            busy.update(part.cores)
            kind = EventKind.RESUME if part.started else EventKind.START
            part.started = True
            self._emit(t, kind, part.part_id, part.cores, owner[part].index)

        used = sum(part.h for part in selected)
        assert used <= self.ts.m, f"{used} cores in use on a {self.ts.m}-core platform"
        assert len(busy) == used, "two parts share a core"
        self.__running = list(selected)

    def run(self) -> SimTrace:
        horizon = self.horizon
        releases: List[Tuple[TimeValue, int, int]] = []
        for order, entity in enumerate(self.ts.entities):
            if self.cfg.policy is SchedPolicy.UNSYNC_VGANG and isinstance(entity, VirtualGang):
                # members carry their own arrival offsets
                first = 0
            else:
                first = self.cfg.release_offsets.get(entity.id, 0)
            if first < horizon:
                heapq.heappush(releases, (first, order, 0))

        deadlines: List[Tuple[TimeValue, int, int, _Job]] = []
        owner: Dict[_Part, _Job] = {}
        t = 0
        while True:
            # completions
            finished: Dict[int, _Job] = {}
            for part in [part for part in self.__running if part.remaining == 0]:
                job = owner[part]
                if part.part_id != job.entity_id:
                    self._emit(t, EventKind.COMPLETE, part.part_id, part.cores, job.index)
                self.__running.remove(part)
                finished[id(job)] = job
            for job in sorted(finished.values(), key=lambda job: (job.release, job.order)):
                if not job.done:
                    continue
                self._emit(t, EventKind.COMPLETE, job.entity_id, job.cores, job.index)
                head = self.__pending[job.order].popleft()
                assert head is job, "jobs of one entity complete in release order"
                for part in job.parts:
                    del owner[part]
                if self.__holder is job:
                    self.__holder = None

            while releases and releases[0][0] == t and t < horizon:
                _, order, index = heapq.heappop(releases)
                entity = self.ts.entities[order]
                job = _Job(entity, index, t, self._make_parts(entity, t), order)
                self.__pending[order].append(job)
                heapq.heappush(deadlines, (job.deadline, order, index, job))
                for part in job.parts:
                    owner[part] = job
                self._emit(t, EventKind.RELEASE, entity.id, (), index)
                if t + entity.period < horizon:
                    heapq.heappush(releases, (t + entity.period, order, index + 1))

            missed = False
            while deadlines and deadlines[0][0] <= t:
                job = heapq.heappop(deadlines)[3]
                if not job.done:
                    job.missed = True
                    missed = True
                    self._emit(t, EventKind.DEADLINE_MISS, job.entity_id, (), job.index)

            if missed and self.cfg.stop_on_miss:
                logger.debug(f"Stopped at the first deadline miss, t={t}")
                horizon = t
                break
            if t >= horizon:
                break

            self._dispatch(t, self._select(t), owner)

            upcoming = [horizon]
            if releases:
                upcoming.append(releases[0][0])
            if deadlines:
                upcoming.append(deadlines[0][0])
            upcoming.extend(t + part.remaining for part in self.__running)
            upcoming.extend(
                part.arrival
                for queue in self.__pending.values() if queue
                for part in queue[0].parts if part.arrival > t
            )
            following = min(upcoming)
            for part in self.__running:
                part.remaining -= following - t
            t = following

        for part in self.__running:
            logger.debug(f"{part.part_id} still running at horizon {horizon}")
        logger.debug(f"Simulated {self.cfg.policy.value} for {horizon} ticks, {len(self.__events)} events")
        return SimTrace(events=tuple(self.__events), horizon=horizon, m=self.ts.m, policy=self.cfg.policy)


def simulate(ts: Taskset, cfg: SimConfig) -> SimTrace:
    return Simulator(ts, cfg).run()


def makespan(trace: SimTrace) -> TimeValue:
    releases: Dict[str, TimeValue] = {}
    completions: Dict[str, TimeValue] = {}
    for event in trace.events:
        if event.job != 0:
            continue
        if event.kind is EventKind.RELEASE:
            releases.setdefault(event.entity_id, event.time)
        elif event.kind is EventKind.COMPLETE:
            completions.setdefault(event.entity_id, event.time)
    if not releases:
        return 0
    unfinished = sorted(set(releases) - set(completions))
    if unfinished:
        raise IncompleteTrace(f"First jobs of {unfinished} never complete in the trace")
    return max(completions[entity_id] for entity_id in releases) - min(releases.values())


def miss_stats(trace: SimTrace) -> MissStats:
    per_entity: Dict[str, int] = defaultdict(int)
    missed_at: Dict[Tuple[str, int], TimeValue] = {}
    completed_at: Dict[Tuple[str, int], TimeValue] = {}
    for event in trace.events:
        key = (event.entity_id, event.job)
        if event.kind is EventKind.DEADLINE_MISS:
            per_entity[event.entity_id] += 1
            missed_at[key] = event.time
        elif event.kind is EventKind.COMPLETE:
            completed_at[key] = event.time
    max_lateness = max(
        (completed_at.get(key, trace.horizon) - deadline for key, deadline in missed_at.items()),
        default=0,
    )
    return MissStats(misses=sum(per_entity.values()), per_entity=dict(per_entity), max_lateness=max_lateness)


def gantt_segments(trace: SimTrace) -> List[Tuple[str, TimeValue, TimeValue, Tuple[int, ...]]]:
    """Execution intervals (entity, start, end, cores) reconstructed from the trace."""
    opened: Dict[str, Tuple[TimeValue, Tuple[int, ...]]] = {}
    segments = []
    for event in trace.events:
        if event.kind in (EventKind.START, EventKind.RESUME):
            opened[event.entity_id] = (event.time, event.cores)
        elif event.kind in (EventKind.PREEMPT, EventKind.COMPLETE) and event.entity_id in opened:
            start, cores = opened.pop(event.entity_id)
            if event.time > start:
                segments.append((event.entity_id, start, event.time, cores))
    for entity_id, (start, cores) in opened.items():
        if trace.horizon > start:
            segments.append((entity_id, start, trace.horizon, cores))
    return segments
