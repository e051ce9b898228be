"""
ANASTAARS Bench Command Line
Runs QAOA MaxCut optimizer sweeps, aggregates median trajectories and plots them
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from dotenv import load_dotenv

from benchmark import aggregate_experiment, load_experiment_spec, run_experiment
from diagnostics import run_selftest
from plotting import emit_plot
from qaoa import brute_force_maxcut, resolve_graph

load_dotenv()

logging.basicConfig(
    level=os.getenv('ANASTAARS_LOG_LEVEL', 'INFO').upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def default_output_dir() -> str:
    return os.getenv('ANASTAARS_OUTPUT_DIR', './results')


def default_jobs() -> int:
    return int(os.getenv('ANASTAARS_JOBS', '1'))


def default_seed() -> int:
    return int(os.getenv('ANASTAARS_SEED', '20250101'))


def cmd_run(args) -> int:
    spec = load_experiment_spec(args.spec)
    updates = {}
    if args.seed is not None:
        updates['base_seed'] = args.seed
    elif 'ANASTAARS_SEED' in os.environ:
        updates['base_seed'] = default_seed()
    if args.out is not None:
        updates['output_dir'] = args.out
    elif 'ANASTAARS_OUTPUT_DIR' in os.environ:
        updates['output_dir'] = default_output_dir()
    spec = spec.model_copy(update=updates)

    written = run_experiment(spec, jobs=args.jobs)
    print(f"Wrote {len(written) - 1} trajectories to {spec.output_dir}")
    return 0


def cmd_aggregate(args) -> int:
    written = aggregate_experiment(args.out, points=args.points)
    for path in written:
        print(path)
    return 0


def cmd_plot(args) -> int:
    out_dir = Path(args.out)
    tables = sorted(out_dir.glob('median_*.csv'))
    if not tables:
        logger.error(f"No median tables in {out_dir}; run 'aggregate' first")
        return 1
    for table_path in tables:
        table = pd.read_csv(table_path)
        suffix = '_ratio' if args.ratio else ''
        svg = emit_plot(table, table_path.with_name(f"{table_path.stem}{suffix}.svg"),
                        ratio=args.ratio, title=table_path.stem.replace('median_', ''))
        print(svg)
    return 0


def cmd_maxcut(args) -> int:
    graph = resolve_graph(args.graph)
    value, assignment = brute_force_maxcut(graph)
    print(f"{graph.name}: n={graph.n} edges={len(graph.edges)} maxcut={value:g} assignment={assignment}")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed)
    for result in results:
        status = 'PASS' if result.passed else 'FAIL'
        print(f"[{status}] {result.name}: {result.detail} ({result.seconds:.2f}s)")
    if args.report is not None:
        report = Path(args.report)
        report.write_text(json.dumps([r.to_dict() for r in results], indent=2) + "\n")
        logger.info(f"Self-test report written to {report}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='anastaars-bench',
        description="Noise-aware random-subspace trust-region benchmarks on QAOA MaxCut."
    )
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help="Execute an experiment spec file")
    run.add_argument('--spec', required=True, help="Flat key = value experiment spec")
    run.add_argument('--out', default=None, help="Output directory (overrides output_dir)")
    run.add_argument('--seed', type=int, default=None, help="Base seed (overrides base_seed)")
    run.add_argument('--jobs', type=int, default=default_jobs(), help="Parallel trial workers")
    run.set_defaults(func=cmd_run)

    aggregate = sub.add_parser('aggregate', help="Median trajectories of an experiment directory")
    aggregate.add_argument('--out', default=default_output_dir(), help="Experiment directory")
    aggregate.add_argument('--points', type=int, default=200, help="Shot grid resolution")
    aggregate.set_defaults(func=cmd_aggregate)

    plot = sub.add_parser('plot', help="SVG charts of the median tables")
    plot.add_argument('--out', default=default_output_dir(), help="Experiment directory")
    plot.add_argument('--ratio', action='store_true', help="Plot the approximation ratio instead")
    plot.set_defaults(func=cmd_plot)

    maxcut = sub.add_parser('maxcut', help="Brute-force MaxCut of a graph")
    maxcut.add_argument('graph', help="chvatal, cycle<N> or an edge-list file")
    maxcut.set_defaults(func=cmd_maxcut)

    selftest = sub.add_parser('selftest', help="Run the invariant self-test")
    selftest.add_argument('--seed', type=int, default=default_seed())
    selftest.add_argument('--report', default=None, help="Write the check results as JSON")
    selftest.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
