import argparse
import json
import logging
import sys
from collections import defaultdict
from fractions import Fraction
from typing import Dict, List, Optional

from .analysis import assign_priorities, schedulability_test
from .codec import (
    config_dump,
    gantt_frame,
    taskset_dump,
    taskset_load,
    trace_dump_lines,
    verdict_dump,
    write_json,
    write_lines,
)
from .errors import VGangError
from .gangform import DEFAULT_CONFIG_CAP, Algorithm, FormationStats, config_count_bound, form_gangs, stirling2
from .generator import GenSpec, TasksetType, generate_taskset
from .interference import DemandInterferenceOracle, PolicyKind, ZeroInterferenceOracle, apply_interference
from .experiment import SweepPolicy, SweepSpec, run_sweep
from .model import SystemConfig, Taskset, VirtualGang
from .simulator import SchedPolicy, SimConfig, makespan, miss_stats, simulate
from .typings import ConfigDict

logger = logging.getLogger(__name__)

SIM_INTERFERENCE = {
    SchedPolicy.RT_GANG: PolicyKind.RT_GANG,
    SchedPolicy.RTG_SYNC: PolicyKind.RTG_SYNC,
    SchedPolicy.UNSYNC_VGANG: PolicyKind.RTG_SYNC,
    SchedPolicy.GANG_FTP: PolicyKind.GANG_FTP,
    SchedPolicy.THREADED: PolicyKind.THREADED,
}


def _fraction(value: str) -> Fraction:
    try:
        return Fraction(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value}")


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def cmd_generate(args: argparse.Namespace) -> int:
    n_range = (args.n_per_period, args.n_per_period) if args.n_per_period else (2, 5)
    spec = GenSpec(
        m=args.m,
        util_target=args.util,
        taskset_type=TasksetType(args.type),
        n_range=n_range,
        seed=args.seed,
    )
    ts = generate_taskset(spec)
    logger.info(f"Generated {len(ts)} tasks at utilization {float(ts.utilization()):.4f}")
    write_json(args.out, taskset_dump(ts, gen_spec=spec))
    return 0


def cmd_form(args: argparse.Namespace) -> int:
    ts = taskset_load(args.taskset)
    oracle = DemandInterferenceOracle() if args.interference else ZeroInterferenceOracle()
    gangs, report = form_gangs(ts, Algorithm(args.alg), oracle, args.tolerance, args.cap)
    for stats in report:
        logger.info(f"Period {stats.period}: {stats.algorithm} completion {stats.completion_time}")
    write_json(args.out, taskset_dump(gangs, provenance=report))
    if args.config_out:
        write_json(args.config_out, _selected_configs(gangs, report))
    return 0


def _selected_configs(gangs: Taskset, report: List[FormationStats]) -> List[ConfigDict]:
    by_period: Dict[int, List[VirtualGang]] = defaultdict(list)
    for entity in gangs.entities:
        if isinstance(entity, VirtualGang):
            by_period[entity.period].append(entity)
    return [
        config_dump(SystemConfig(gangs=tuple(by_period[stats.period]), index=stats.config_index or 0), stats)
        for stats in report
    ]


def cmd_analyze(args: argparse.Namespace) -> int:
    ts = taskset_load(args.taskset)
    if any(entity.priority is None for entity in ts.entities):
        ts = assign_priorities(ts)
    verdict = schedulability_test(ts)
    logger.info(f"Schedulable: {verdict.schedulable}")
    write_json(args.out, verdict_dump(verdict))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    ts = taskset_load(args.taskset)
    policy = SchedPolicy(args.policy)
    if args.interference:
        ts = apply_interference(ts, SIM_INTERFERENCE[policy])
    if any(entity.priority is None for entity in ts.entities):
        ts = assign_priorities(ts)
    cfg = SimConfig(
        policy=policy,
        horizon=args.horizon,
        release_offsets={entity_id: int(offset) for entity_id, offset in args.offset},
    )
    trace = simulate(ts, cfg)
    if args.trace:
        write_lines(args.trace, trace_dump_lines(trace))
    if args.gantt:
        gantt_frame(trace).to_csv(args.gantt, index=False)
        logger.info(f"Wrote {args.gantt}")
    stats = miss_stats(trace)
    write_json(args.out, {
        "policy": policy.value,
        "horizon": trace.horizon,
        "makespan": makespan(trace),
        "misses": stats.misses,
        "max_lateness": stats.max_lateness,
        "misses_per_entity": stats.per_entity,
    })
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = SweepSpec(
        m=args.m,
        taskset_type=TasksetType(args.type),
        utils=tuple(args.util) if args.util else None,
        tasksets_per_point=args.tasksets,
        policies=tuple(SweepPolicy(policy) for policy in args.policy) if args.policy else tuple(SweepPolicy),
        interference=args.interference,
        n_per_period=args.n_per_period,
        seed=args.seed,
        tolerance=args.tolerance,
    )
    frame = run_sweep(spec)
    if args.out is None or args.out == "-":
        sys.stdout.write(frame.to_csv(index=False))
    else:
        frame.to_csv(args.out, index=False)
        logger.info(f"Wrote {args.out}")
    return 0


def cmd_stirling(args: argparse.Namespace) -> int:
    write_json(args.out, {
        "N": args.N,
        "m": args.m,
        "stirling": [stirling2(args.N, k) for k in range(args.N + 1)],
        "config_count_bound": config_count_bound(args.N, args.m),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vgang", description="Virtual gang formation, analysis and simulation")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file, stdout when omitted", default=None, type=str)
    common.add_argument("-v", "--verbose", help="debug logging", action="store_true")

    generate = subparsers.add_parser("generate", parents=[common], help="generate a random taskset")
    generate.add_argument("--m", help="platform core count", default=8, type=int)
    generate.add_argument("--type", help="taskset type", choices=[kind.value for kind in TasksetType], default="mixed")
    generate.add_argument("--util", help="target utilization", required=True, type=_fraction)
    generate.add_argument("--n-per-period", help="tasks per period (default: random in [2, 5])", default=None, type=int)
    generate.add_argument("--seed", help="generator seed", default=0, type=int)
    generate.set_defaults(handler=cmd_generate)

    form = subparsers.add_parser("form", parents=[common], help="form virtual gangs per period")
    form.add_argument("taskset", help="taskset JSON", type=str)
    form.add_argument("--alg", help="brute force or greedy packing", choices=[alg.value for alg in Algorithm], default="bfc")
    form.add_argument("--tolerance", help="interference tolerance", default=Fraction(1, 5), type=_fraction)
    form.add_argument("--interference", help="synthetic interference oracle", default=False, type=_on_off)
    form.add_argument("--cap", help="largest config space for bfc", default=DEFAULT_CONFIG_CAP, type=int)
    form.add_argument("--config-out", help="selected system config per period", default=None, type=str)
    form.set_defaults(handler=cmd_form)

    analyze = subparsers.add_parser("analyze", parents=[common], help="response-time analysis")
    analyze.add_argument("taskset", help="taskset JSON", type=str)
    analyze.set_defaults(handler=cmd_analyze)

    sim = subparsers.add_parser("simulate", parents=[common], help="simulate a taskset")
    sim.add_argument("taskset", help="taskset JSON", type=str)
    sim.add_argument("--policy", help="scheduling policy", choices=[policy.value for policy in SchedPolicy], default="rtgang")
    sim.add_argument("--horizon", help="ticks to simulate (default: hyperperiod)", default=None, type=int)
    sim.add_argument("--interference", help="scale WCETs per policy", default=False, type=_on_off)
    sim.add_argument(
        "--offset",
        help="release offset of an entity or unsynchronized gang member",
        action="append",
        nargs=2,
        metavar=("id", "ticks"),
        default=[],
    )
    sim.add_argument("--trace", help="JSON lines trace file", default=None, type=str)
    sim.add_argument("--gantt", help="Gantt CSV file", default=None, type=str)
    sim.set_defaults(handler=cmd_simulate)

    sweep = subparsers.add_parser("sweep", parents=[common], help="acceptance-ratio sweep")
    sweep.add_argument("--m", help="platform core count", default=8, type=int)
    sweep.add_argument("--type", help="taskset type", choices=[kind.value for kind in TasksetType], default="mixed")
    sweep.add_argument("--util", help="utilization point, repeatable (default: 0.5 to m step 0.25)", action="append", type=_fraction)
    sweep.add_argument("--tasksets", help="tasksets per point", default=500, type=int)
    sweep.add_argument("--policy", help="policy, repeatable (default: all)", action="append", choices=[policy.value for policy in SweepPolicy])
    sweep.add_argument("--interference", help="synthetic interference", default=False, type=_on_off)
    sweep.add_argument("--n-per-period", help="tasks per period (default: random in [2, 5])", default=None, type=int)
    sweep.add_argument("--tolerance", help="interference tolerance", default=Fraction(1, 5), type=_fraction)
    sweep.add_argument("--seed", help="sweep seed", default=0, type=int)
    sweep.set_defaults(handler=cmd_sweep)

    stirling = subparsers.add_parser("stirling", parents=[common], help="configuration-count calculator")
    stirling.add_argument("N", help="candidate set size", type=int)
    stirling.add_argument("--m", help="platform core count", default=8, type=int)
    stirling.set_defaults(handler=cmd_stirling)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    logger.debug(f"Arguments: {vars(args)}")
    try:
        return args.handler(args)
    except VGangError as err:
        sys.stderr.write(json.dumps(err.to_dict()) + "\n")
        return 1
    except ValueError as err:
        sys.stderr.write(json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n")
        return 1
