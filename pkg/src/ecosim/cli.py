"""Command line entry point: ``ecosim run|sweep|compare|reference``.

Exit codes: 0 success, 1 scenario error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench
from .errors import CosimError, NonPositiveStep, ScenarioError
from .scenario import load_scenario

log = logging.getLogger("ecosim")

DEFAULT_CACHE = Path.home() / ".cache" / "ecosim"


def _scenario(path: str, cache: str | None):
    sc = load_scenario(path)
    if sc.cache_dir is None:
        sc = sc.with_(cache_dir=str(cache or DEFAULT_CACHE))
    return sc


def _dts(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad step list {text!r}") from exc


def cmd_run(args) -> int:
    sc = _scenario(args.scenario, args.cache)
    res = bench.run_benchmark(sc, out_dir=args.out)
    sys.stdout.write(bench.summary_csv([res.summary]))
    return 0


def cmd_sweep(args) -> int:
    sc = _scenario(args.scenario, args.cache)
    table = bench.sweep_step_sizes(sc, args.dts)
    text = table.to_csv()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    rows = bench.read_summaries(args.summaries)
    print(bench.format_report(bench.compare_runs(rows)))
    return 0


def cmd_reference(args) -> int:
    sc = _scenario(args.scenario, args.cache)
    ref = bench.build_reference(sc, force=True)
    print(f"reference {ref.key()} written to {sc.cache_dir} ({len(ref.checkpoints)} checkpoints)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecosim", description="Quarter car co-simulation benchmarks")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--cache", help=f"reference cache directory (default {DEFAULT_CACHE})")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario, write trace and summary CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="constant-step convergence sweep")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dts", type=_dts, required=True, help="comma separated step sizes in seconds")
    p.add_argument("--out", help="write the table to this file as well")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="percent reductions between summary files")
    p.add_argument("summaries", nargs="+")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("reference", help="regenerate the cached reference solution")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_reference)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, NonPositiveStep, FileNotFoundError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except (CosimError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
