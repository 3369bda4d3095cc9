import io
import json
import os
import tempfile
import unittest
from unittest.mock import patch

from vgang.analysis import assign_priorities, schedulability_test
from vgang.codec import (
    config_dump,
    gantt_frame,
    taskset_dump,
    taskset_load,
    taskset_parse,
    trace_dump_lines,
    verdict_dump,
    write_json,
)
from vgang.errors import SchemaError
from vgang.gangform import Algorithm, CandidateSet, FormationStats, form_gangs, gang_formation_bruteforce
from vgang.generator import GenSpec, generate_taskset
from vgang.interference import ZeroInterferenceOracle
from vgang.model import Task, VirtualGang
from vgang.simulator import SchedPolicy, SimConfig, simulate

from tests.fixtures import five_tasks, table1_taskset


TASKSET_DOC = {
    "m": 4,
    "tasks": [
        {"id": "a", "h": 2, "c_iso": 3, "period": 10, "demand": 0.25},
        {
            "id": "g",
            "members": [
                {"id": "b", "h": 1, "c_iso": 2, "period": 20, "demand": 0.5},
                {"id": "c", "h": 2, "c_iso": 4, "period": 20, "demand": 0.1},
            ],
            "c_eff": 5,
        },
    ],
}


class TasksetParseTest(unittest.TestCase):
    def test_parse(self):
        ts = taskset_parse(TASKSET_DOC)
        self.assertEqual(ts.m, 4)
        self.assertEqual(ts.entity("a"), Task("a", 2, 3, 10, 0.25))
        gang = ts.entity("g")
        self.assertIsInstance(gang, VirtualGang)
        self.assertEqual(gang.member_ids, ("b", "c"))
        self.assertEqual((gang.h, gang.c_iso, gang.wcet), (3, 4, 5))

    def test_dump_parses_back(self):
        ts = taskset_parse(TASKSET_DOC)
        self.assertEqual(taskset_parse(json.loads(json.dumps(taskset_dump(ts)))), ts)

    def test_generated_taskset_with_gen_spec(self):
        spec = GenSpec(m=8, util_target=3, seed=9)
        ts = generate_taskset(spec)
        document = taskset_dump(ts, gen_spec=spec)
        self.assertEqual(document["gen_spec"]["seed"], 9)
        self.assertEqual(document["util_target"], 3.0)
        self.assertEqual(taskset_parse(document), ts)

    def test_missing_field(self):
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [{"id": "a", "h": 1, "period": 10, "demand": 0}]})
        with self.assertRaises(SchemaError):
            taskset_parse({"tasks": []})

    def test_wrong_types(self):
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [{"id": "a", "h": True, "c_iso": 1, "period": 10, "demand": 0}]})
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [{"id": "a", "h": 1, "c_iso": 1.5, "period": 10, "demand": 0}]})
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": {}})
        with self.assertRaises(SchemaError):
            taskset_parse([])

    def test_optional_field_types(self):
        task = {"id": "a", "h": 1, "c_iso": 3, "period": 10, "demand": 0}
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [dict(task, c_eff="3")]})
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [dict(task, priority=1.5)]})
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [dict(task, c_eff=True)]})
        gang = {"id": "g", "members": [task]}
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [dict(gang, c_eff="5")]})
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [dict(gang, priority="high")]})

        ts = taskset_parse({"m": 4, "tasks": [dict(task, c_eff=None, priority=None)]})
        self.assertIsNone(ts.entity("a").c_eff)
        ts = taskset_parse({"m": 4, "tasks": [dict(task, c_eff=4, priority=2)]})
        self.assertEqual((ts.entity("a").c_eff, ts.entity("a").priority), (4, 2))

    def test_invalid_model(self):
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 1, "tasks": [{"id": "a", "h": 2, "c_iso": 1, "period": 10, "demand": 0}]})
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [{"id": "a", "h": 1, "c_iso": 1, "period": 10, "demand": 2}]})

    def test_invalid_gang(self):
        mixed_periods = {
            "id": "g",
            "members": [
                {"id": "b", "h": 1, "c_iso": 2, "period": 20, "demand": 0},
                {"id": "c", "h": 1, "c_iso": 2, "period": 10, "demand": 0},
            ],
        }
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [mixed_periods]})
        with self.assertRaises(SchemaError):
            taskset_parse({"m": 4, "tasks": [{"id": "g", "members": []}]})

    def test_load(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "ts.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(TASKSET_DOC, fh)
            self.assertEqual(taskset_load(path), taskset_parse(TASKSET_DOC))

            with open(path, "w", encoding="utf-8") as fh:
                fh.write("{not json")
            with self.assertRaises(SchemaError):
                taskset_load(path)


class DumpTest(unittest.TestCase):
    def test_provenance(self):
        ts = table1_taskset().with_entities(five_tasks())
        gangs, report = form_gangs(ts, Algorithm.BFC, ZeroInterferenceOracle())
        document = taskset_dump(gangs, provenance=report)
        self.assertEqual(len(document["provenance"]), 1)
        self.assertEqual(document["provenance"][0]["algorithm"], "bfc")
        self.assertEqual(document["provenance"][0]["completion_time"], 5)
        self.assertEqual(sorted(len(entry["members"]) for entry in document["tasks"]), [1, 4])

    def test_config(self):
        stats = FormationStats(algorithm="bfc", tolerance=0)
        config = gang_formation_bruteforce(CandidateSet(tasks=tuple(five_tasks()), m=4), ZeroInterferenceOracle(), 0, stats=stats)
        document = config_dump(config, stats)
        self.assertEqual(document["completion_time"], 5)
        self.assertEqual(document["index"], config.index)
        self.assertEqual(sorted(gang["c_eff"] for gang in document["gangs"]), [1, 4])
        self.assertEqual(document["provenance"]["configs"], 51)
        self.assertNotIn("provenance", config_dump(config))

    def test_verdict(self):
        verdict = schedulability_test(assign_priorities(table1_taskset()))
        self.assertEqual(
            verdict_dump(verdict),
            {"schedulable": True, "response_times": {"t1": 1, "t2": 3, "t3": 6, "t4": 10}},
        )

    def test_write_json_stdout(self):
        with patch("sys.stdout", new_callable=io.StringIO) as stdout:
            write_json(None, {"m": 4})
        self.assertEqual(json.loads(stdout.getvalue()), {"m": 4})


class TraceTest(unittest.TestCase):
    def setUp(self):
        self.trace = simulate(assign_priorities(table1_taskset()), SimConfig(policy=SchedPolicy.RT_GANG))

    def test_trace_lines(self):
        lines = [json.loads(line) for line in trace_dump_lines(self.trace)]
        self.assertEqual(lines[0], {"t": 0, "kind": "RELEASE", "id": "t1", "cores": []})
        self.assertEqual(lines[4], {"t": 0, "kind": "START", "id": "t1", "cores": [0]})
        self.assertEqual(lines[-1], {"t": 10, "kind": "COMPLETE", "id": "t4", "cores": [0]})

    def test_gantt_frame(self):
        frame = gantt_frame(self.trace)
        self.assertEqual(list(frame.columns), ["entity", "start", "end", "cores"])
        self.assertEqual(list(frame["entity"]), ["t1", "t2", "t3", "t4"])
        self.assertEqual(list(frame["end"]), [1, 3, 6, 10])
        self.assertEqual(list(frame["cores"]), ["0", "0", "0", "0"])
