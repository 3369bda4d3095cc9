import itertools
import unittest
from fractions import Fraction

from vgang.errors import InvalidConfig, TaskNotInGang
from vgang.generator import make_rng
from vgang.interference import (
    DemandInterferenceOracle,
    PolicyKind,
    ResourceUtilization,
    ZeroInterferenceOracle,
    apply_interference,
    gang_resource_utilization,
    gangftp_resource_utilization,
    scale_wcet,
    threaded_resource_utilization,
)
from vgang.model import Task, Taskset, as_gangs, make_virtual_gang


def R(value) -> ResourceUtilization:
    return ResourceUtilization(value=Fraction(value), own_demand=Fraction(0))


def exhaustive_gangftp(task: Task, ts: Taskset) -> Fraction:
    others = [other for other in ts.tasks() if other.id != task.id]
    best = Fraction(0)
    for size in range(len(others) + 1):
        for subset in itertools.combinations(others, size):
            if sum(other.h for other in subset) <= ts.m - task.h:
                best = max(best, sum((other.demand for other in subset), Fraction(0)))
    return task.demand + best


class ScaleWcetTest(unittest.TestCase):
    def test_below_saturation(self):
        self.assertEqual(scale_wcet(10, R("0.8")), 10)
        self.assertEqual(scale_wcet(10, R(1)), 10)

    def test_linear_scaling(self):
        self.assertEqual(scale_wcet(10, R("1.2")), 12)

    def test_rounds_up(self):
        self.assertEqual(scale_wcet(7, R("1.5")), 11)

    def test_resource_utilization_floor(self):
        with self.assertRaises(ValueError):
            ResourceUtilization(value=Fraction(1, 10), own_demand=Fraction(1, 2))


class GangResourceUtilizationTest(unittest.TestCase):
    def test_singleton(self):
        task = Task("a", 1, 10, 20, 0.9)
        gang = make_virtual_gang([task], 4)
        self.assertEqual(gang_resource_utilization(task, gang).value, Fraction(9, 10))
        self.assertEqual(DemandInterferenceOracle().measure(gang), 10)

    def test_pair(self):
        a, b = Task("a", 1, 10, 20, 0.5), Task("b", 1, 10, 20, 0.7)
        gang = make_virtual_gang([a, b], 4)
        self.assertEqual(gang_resource_utilization(a, gang).value, Fraction(6, 5))
        self.assertEqual(DemandInterferenceOracle().measure(gang), 12)

    def test_below_saturation(self):
        tasks = [Task(name, 1, 10, 20, 0.3) for name in "abc"]
        gang = make_virtual_gang(tasks, 4)
        self.assertEqual(gang_resource_utilization(tasks[0], gang).value, Fraction(9, 10))
        self.assertEqual(DemandInterferenceOracle().measure(gang), 10)

    def test_not_in_gang(self):
        gang = make_virtual_gang([Task("a", 1, 10, 20, 0.3)], 4)
        with self.assertRaises(TaskNotInGang):
            gang_resource_utilization(Task("b", 1, 10, 20, 0.3), gang)

    def test_zero_oracle(self):
        gang = make_virtual_gang([Task("a", 1, 10, 20, 1), Task("b", 1, 10, 20, 1)], 4)
        self.assertEqual(ZeroInterferenceOracle().measure(gang), 10)


class GangFtpResourceUtilizationTest(unittest.TestCase):
    def test_no_room_for_corunners(self):
        task = Task("a", 4, 5, 20, 0.3)
        ts = Taskset(entities=(task, Task("b", 1, 5, 20, 1)), m=4)
        self.assertEqual(gangftp_resource_utilization(task, ts).value, Fraction(3, 10))

    def test_single_best_fit(self):
        task = Task("a", 2, 5, 20, 0.4)
        ts = Taskset(entities=(task, Task("b", 2, 5, 20, 0.5), Task("c", 2, 5, 20, 0.3), Task("d", 1, 5, 20, 0.2)), m=4)
        self.assertEqual(gangftp_resource_utilization(task, ts).value, Fraction(9, 10))

    def test_mixed_widths(self):
        task = Task("a", 1, 5, 20, 0.1)
        ts = Taskset(entities=(task, Task("b", 1, 5, 20, 0.6), Task("c", 1, 5, 20, 0.5), Task("d", 2, 5, 20, 0.9)), m=4)
        self.assertEqual(gangftp_resource_utilization(task, ts).value, Fraction(16, 10))

    def test_matches_exhaustive_search(self):
        rng = make_rng(5)
        for _ in range(60):
            m = int(rng.integers(2, 8, endpoint=True))
            n = int(rng.integers(1, 12, endpoint=True))
            tasks = tuple(
                Task(f"t{i}", int(rng.integers(1, m, endpoint=True)), 5, 20, Fraction(int(rng.integers(0, 1000)), 1000))
                for i in range(n)
            )
            ts = Taskset(entities=tasks, m=m)
            for task in tasks:
                self.assertEqual(gangftp_resource_utilization(task, ts).value, exhaustive_gangftp(task, ts))

    def test_monotonic_in_corunners(self):
        task = Task("a", 1, 5, 20, 0.2)
        base = Taskset(entities=(task, Task("b", 1, 5, 20, 0.3)), m=4)
        more = Taskset(entities=base.entities + (Task("c", 1, 5, 20, 0.1),), m=4)
        self.assertGreaterEqual(gangftp_resource_utilization(task, more).value, gangftp_resource_utilization(task, base).value)
        self.assertGreaterEqual(threaded_resource_utilization(task, more).value, threaded_resource_utilization(task, base).value)


class ThreadedResourceUtilizationTest(unittest.TestCase):
    def test_alone(self):
        task = Task("a", 1, 5, 20, 0.4)
        ts = Taskset(entities=(task,), m=4)
        self.assertEqual(threaded_resource_utilization(task, ts).value, Fraction(2, 5))

    def test_top_threads(self):
        task = Task("a", 1, 5, 20, 0.4)
        ts = Taskset(entities=(task, Task("b", 2, 5, 20, 1.0)), m=2)
        self.assertEqual(threaded_resource_utilization(task, ts).value, Fraction(9, 10))

    def test_sibling_threads(self):
        task = Task("a", 2, 5, 20, 0.8)
        ts = Taskset(entities=(task,), m=4)
        self.assertEqual(threaded_resource_utilization(task, ts).value, Fraction(4, 5))


class ApplyInterferenceTest(unittest.TestCase):
    def setUp(self):
        self.tasks = (Task("a", 2, 10, 20, 0.9), Task("b", 2, 10, 20, 0.8), Task("c", 1, 10, 40, 0.6))
        self.ts = Taskset(entities=self.tasks, m=4)

    def test_rt_gang_is_neutral(self):
        scaled = apply_interference(as_gangs(self.ts), PolicyKind.RT_GANG)
        self.assertEqual([entity.wcet for entity in scaled.entities], [10, 10, 10])
        scaled = apply_interference(as_gangs(self.ts), PolicyKind.RTG_SYNC)
        self.assertEqual([entity.wcet for entity in scaled.entities], [10, 10, 10])

    def test_rtg_sync_gang(self):
        gang = make_virtual_gang(self.tasks[:2], 4)
        ts = Taskset(entities=(gang, self.tasks[2]), m=4)
        scaled = apply_interference(ts, PolicyKind.RTG_SYNC)
        self.assertEqual([entity.wcet for entity in scaled.entities], [17, 10])

    def test_gang_ftp(self):
        scaled = apply_interference(self.ts, PolicyKind.GANG_FTP)
        # a: 0.9 + b 0.8 = 1.7; c: 0.6 + 0.9 = 1.5 (one 2-core gang fits beside it)
        self.assertEqual([entity.wcet for entity in scaled.entities], [17, 17, 15])

    def test_threaded(self):
        scaled = apply_interference(self.ts, PolicyKind.THREADED)
        # a: 0.45 + 0.45 + 0.6 + 0.4 = 1.9
        self.assertEqual(scaled.entities[0].wcet, 19)

    def test_gangs_need_gang_policies(self):
        gang = make_virtual_gang(self.tasks[:2], 4)
        with self.assertRaises(InvalidConfig):
            apply_interference(Taskset(entities=(gang,), m=4), PolicyKind.GANG_FTP)
