"""Command line entry point: ``p2ppl run|validate|print-defaults|list-presets``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConfigError, InvariantViolation, NoSnapshot
from .runner import PRESETS, export_topology, format_summary, preset, run, write_outputs
from .scenario import Scenario, defaults_text, load_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3

log = logging.getLogger("p2ppl")


def resolve(target: str) -> Scenario:
    """A preset name or a path to a scenario file."""
    if target in PRESETS and not Path(target).exists():
        return preset(target)
    return load_scenario(target)


def _one(sc: Scenario, out: Path | None, export_t: float | None) -> str:
    result = run(sc)
    if out is not None:
        write_outputs(result, out)
        if export_t is not None:
            export_topology(result, export_t, out / f"topology_{export_t:g}.edges")
    elif export_t is not None:
        export_topology(result, export_t)
    return format_summary(result.summary)


def cmd_run(args) -> int:
    sc = resolve(args.scenario)
    if args.seed is not None:
        sc = sc.replace(scenario__seed=args.seed)
    out = Path(args.out) if args.out else None
    if args.runs == 1:
        print(_one(sc, out, args.export_topology))
        return EXIT_OK
    jobs = []
    for i in range(args.runs):
        sc_i = sc.replace(scenario__seed=sc.seed + i)
        jobs.append((sc_i, out / f"run_{sc_i.seed}" if out else None, args.export_topology))
    if args.parallel:
        with ProcessPoolExecutor() as pool:
            summaries = list(pool.map(_one, *zip(*jobs)))
    else:
        summaries = [_one(*job) for job in jobs]
    for (sc_i, _, _), text in zip(jobs, summaries):
        print(f"# seed {sc_i.seed}")
        print(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = resolve(args.scenario)
    print(f"ok: overlay={sc['scenario.overlay']} seed={sc.seed} duration_s={sc.duration:g}")
    return EXIT_OK


def cmd_print_defaults(args) -> int:
    print(defaults_text(), end="")
    return EXIT_OK


def cmd_list_presets(args) -> int:
    for name in PRESETS:
        sc = preset(name)
        print(f"{name:<22} overlay={sc['scenario.overlay']} workload={sc['scenario.workload']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p2ppl", description="Deterministic P2P overlay simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file or preset")
    p.add_argument("scenario", help="scenario file or preset name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="directory for metrics.csv, summary.json, ...")
    p.add_argument("--export-topology", type=float, default=None, metavar="T",
                   help="write the overlay snapshot at time T as an edge list")
    p.add_argument("--runs", type=int, default=1, help="consecutive seeds starting at --seed")
    p.add_argument("--parallel", action="store_true", help="run seeds in separate processes")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a scenario without running it")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("print-defaults", help="all keys with their default values")
    p.set_defaults(func=cmd_print_defaults)

    p = sub.add_parser("list-presets", help="bundled scenario presets")
    p.set_defaults(func=cmd_list_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "runs", 1) < 1:
        print("error: --runs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoSnapshot as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
