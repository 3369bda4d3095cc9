from typing import List

from vgang.model import Task, Taskset


def table1_tasks() -> List[Task]:
    return [
        Task("t1", 1, 1, 10, 0),
        Task("t2", 1, 2, 10, 0),
        Task("t3", 1, 3, 10, 0),
        Task("t4", 1, 4, 10, 0),
    ]


def five_tasks() -> List[Task]:
    return table1_tasks() + [Task("t5", 1, 3, 10, 0)]


def by_id(tasks: List[Task]) -> dict:
    return {task.id: task for task in tasks}


def table1_taskset() -> Taskset:
    return Taskset(entities=tuple(table1_tasks()), m=4)


def member_sets(gangs) -> set:
    return {frozenset(gang.member_ids) for gang in gangs}
