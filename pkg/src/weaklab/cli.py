"""Command line: ``lab run``, ``lab compare``, ``lab catalog``.

Exit codes: 0 for a completed run (whatever the mathematical outcome) or an
empty comparison, 1 for I/O faults or a non-empty comparison, 2 for invalid
scenarios and runs of different scenarios.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .harness import DigestMismatch, RunRecord, ScenarioError, compare_runs, load_scenario, run
from .spectrum import catalog_entries


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as e:
        print(e, file=sys.stderr)
        return 2
    except OSError as e:
        print(f"cannot read scenario: {e}", file=sys.stderr)
        return 1
    try:
        record = run(scenario, args.out, args.threads)
    except OSError as e:
        print(f"run failed: {e}", file=sys.stderr)
        return 1
    print(json.dumps(record.outcome, sort_keys=True))
    return 0


def _cmd_compare(args) -> int:
    try:
        a, b = RunRecord.load(args.record_a), RunRecord.load(args.record_b)
    except (OSError, KeyError, json.JSONDecodeError) as e:
        print(f"cannot read run record: {e}", file=sys.stderr)
        return 1
    try:
        diff = compare_runs(a, b)
    except DigestMismatch as e:
        print(e, file=sys.stderr)
        return 2
    for line in diff:
        print(line)
    if not diff:
        print("no differences")
    return 1 if diff else 0


def _cmd_catalog(args) -> int:
    for e in catalog_entries():
        params = ", ".join(f"{k}={v:g}" for k, v in e.defaults.items())
        print(f"{e.family_id:28s} {e.formula:24s} [{params}]  {e.verdict.to_dict()['outcome']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    r.add_argument("--threads", type=int, default=1)
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("compare", help="diff two run records (run.json files or run directories)")
    c.add_argument("record_a")
    c.add_argument("record_b")
    c.set_defaults(func=_cmd_compare)

    k = sub.add_parser("catalog", help="list the parametric spectrum families")
    k.set_defaults(func=_cmd_catalog)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
