"""Command-line entry point: ``teleport-sim figure|sweep|check``."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .charfunc import ConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONVERGENCE = 2
EXIT_CHECK_FAILED = 3

log = logging.getLogger("teleport_sim")


def _parser() -> argparse.ArgumentParser:
    from .experiments.figures import FIGURE_IDS

    p = argparse.ArgumentParser(prog="teleport-sim", description="Teleportation fidelity sweeps in truncated Fock space.")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweep rows (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("figure", help="regenerate the data and plot of one figure")
    f.add_argument("id", choices=FIGURE_IDS)
    f.add_argument("--out", default="out", help="output directory (default ./out)")
    f.add_argument("--grid", choices=("coarse", "fine"), default="coarse")
    f.add_argument("--threads", type=int, default=None, dest="sub_threads")

    s = sub.add_parser("sweep", help="run a sweep described by a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=None, dest="sub_threads")

    c = sub.add_parser("check", help="run the acceptance suite")
    c.add_argument("--skip-figures", action="store_true", help="skip the figure-level sweep")
    c.add_argument("--threads", type=int, default=None, dest="sub_threads")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    threads = max(1, args.sub_threads or args.threads)
    try:
        if args.command == "figure":
            return _figure(args.id, args.out, args.grid, threads)
        if args.command == "sweep":
            return _sweep(args.config, args.out, threads)
        from .acceptance import run_all

        results = run_all(threads=threads, figures=not args.skip_figures)
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


def _figure(fid: str, out: str, grid: str, threads: int) -> int:
    from .experiments.figures import MonotonicityError, run_figure

    t0 = time.perf_counter()
    try:
        run = run_figure(fid, out, grid, threads)
    except MonotonicityError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"figure {fid}: {sum(len(r) for r in run.curves.values())} rows in {time.perf_counter() - t0:.1f} s")
    for path in run.files:
        print(f"  {path}")
    if run.unconverged:
        print(f"  warning: {run.unconverged} row(s) flagged unconverged", file=sys.stderr)
    return EXIT_OK


def _sweep(config: str, out: str, threads: int) -> int:
    from .experiments.figures import MonotonicityError, run_sweep
    from .experiments.spec import ConfigError, load_spec

    try:
        spec = load_spec(config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_sweep(spec, out, threads)
    except MonotonicityError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"sweep {spec.figure}: {len(rows)} rows written to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
