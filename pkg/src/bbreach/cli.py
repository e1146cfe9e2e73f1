"""Command line entry point: ``bbreach verify | simulate | synth``.

Exit codes: 0 verified, 1 unsafe intersection, 2 goal not reached or
inconclusive, 3 usage / input / IO error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import benchmarks
from .expr import ExprError
from .interval import IntervalError
from .policy import PolicyError, read_policy, write_policy
from .reach import GridMismatch, check_grid, reach_parallel
from .system import SpecError, read_spec

EXIT_USAGE = 3

log = logging.getLogger("bbreach")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_spec(arg):
    path = benchmarks.resolve(arg)
    try:
        return read_spec(path)
    except OSError as e:
        raise UsageError(f"cannot read spec {arg}: {e.strerror}") from None
    except SpecError as e:
        raise UsageError(f"spec {arg}: {e}") from None


def _load_policy(arg):
    path = benchmarks.resolve(arg, ".policy")
    try:
        return read_policy(path)
    except OSError as e:
        raise UsageError(f"cannot read policy {arg}: {e.strerror}") from None
    except (PolicyError, json.JSONDecodeError, IntervalError) as e:
        raise UsageError(f"policy {arg}: {e}") from None


def _projection(proj, dim: int) -> tuple[int, int]:
    """0-based plot dimensions; 1-D systems default to state against step."""
    if proj is None:
        return (0, 1) if dim > 1 else (0, 0)
    out = tuple(p - 1 for p in proj)
    if any(not 0 <= p < dim for p in out):
        raise UsageError(f"--proj: dimensions must be in 1..{dim}")
    return out


def cmd_verify(args) -> int:
    from .export import dumps_summary, flowpipe_csv, summary, svg_projection

    spec = _load_spec(args.spec)
    policy = _load_policy(args.policy)
    try:
        check_grid(spec, policy)
        spec.require_dynamics()
    except (GridMismatch, SpecError) as e:
        raise UsageError(str(e)) from None
    proj = _projection(args.proj, spec.dim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    results, verdict = reach_parallel(spec, policy, partitions=args.partitions,
                                      aggregation=not args.no_aggregate, workers=args.workers)
    elapsed = (time.perf_counter() - start) * 1e3

    pipes = [r.pipe for r in results if r.pipe is not None]
    for r in results:
        if r.pipe is not None:
            (out / f"flowpipe_p{r.index}.csv").write_text(flowpipe_csv(r.pipe))
    doc = summary(results, verdict, aggregation=not args.no_aggregate, wall_time_ms=elapsed)
    (out / "summary.json").write_text(dumps_summary(doc))
    if args.svg and pipes:
        (out / "flowpipe.svg").write_text(svg_projection(pipes, spec, proj))
    if args.plot and pipes:
        from .plotting import plot_flowpipe
        plot_flowpipe(pipes, spec, out / "flowpipe.png", proj)
    print(f"{spec.name}: {verdict}  [{elapsed:.0f} ms, boxes/step max {max(doc['boxes_per_step'])}]")
    return verdict.exit_code


def cmd_simulate(args) -> int:
    from .simulate import sample_starts, simulate, trajectories_csv

    spec = _load_spec(args.spec)
    policy = _load_policy(args.policy)
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    try:
        check_grid(spec, policy)
        dyn = spec.require_dynamics()
    except (GridMismatch, SpecError) as e:
        raise UsageError(str(e)) from None
    proj = _projection(args.proj, spec.dim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    starts = sample_starts(spec.initial, args.samples, args.seed)
    steps = spec.horizon if args.steps is None else args.steps
    states, _ = simulate(dyn, policy, starts, steps, spec.delta, micro=100)
    (out / "trajectories.csv").write_text(trajectories_csv(states))
    if args.plot:
        from .plotting import plot_trajectories
        plot_trajectories(states, spec, out / "trajectories.png", proj)
    print(f"{spec.name}: wrote {args.samples} trajectories of {steps} steps to {out}")
    return 0


def cmd_synth(args) -> int:
    from .synth import SynthConfig, synthesize

    spec = _load_spec(args.spec)
    if args.iters is not None and args.iters < 1:
        raise UsageError("iterations ≥ 1 required (--iters)")
    try:
        spec.require_dynamics()
        config = SynthConfig.from_spec(spec, iterations=args.iters, seed=args.seed)
    except (SpecError, ValueError, TypeError) as e:
        raise UsageError(str(e)) from None
    result = synthesize(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_policy(result.policy, out)
    stem = out.with_suffix("")
    Path(f"{stem}_rewards.csv").write_text(result.history_csv())
    if args.plot:
        from .plotting import plot_rewards
        plot_rewards(result.history, f"{stem}_rewards.png")
    flag = "" if result.reached_goal else " (warning: no goal-reaching candidate)"
    print(f"{spec.name}: best mean reward {result.best_reward:.3f}{flag}; policy written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bbreach", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="compute the flowpipe and check reach-avoid")
    v.add_argument("--spec", required=True, help="spec file or shipped benchmark name (e.g. b2)")
    v.add_argument("--policy", required=True, help="policy file or shipped policy name")
    v.add_argument("--out", default="out")
    v.add_argument("--partitions", type=int, default=None)
    v.add_argument("--workers", type=int, default=None, help="worker cap (default BBREACH_THREADS or CPU count)")
    v.add_argument("--no-aggregate", action="store_true")
    v.add_argument("--svg", action="store_true")
    v.add_argument("--no-plot", dest="plot", action="store_false", help="skip the PNG figure")
    v.add_argument("--proj", nargs=2, type=int, default=None, metavar=("I", "J"),
                   help="plot dimensions (default 1 2; state vs step for 1-D)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="write RK4 trajectories of the closed loop")
    s.add_argument("--spec", required=True)
    s.add_argument("--policy", required=True)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--out", default="out")
    s.add_argument("--no-plot", dest="plot", action="store_false")
    s.add_argument("--proj", nargs=2, type=int, default=None, metavar=("I", "J"),
                   help="plot dimensions (default 1 2; state vs step for 1-D)")
    s.set_defaults(func=cmd_simulate)

    y = sub.add_parser("synth", help="synthesize a table policy (cross-entropy method)")
    y.add_argument("--spec", required=True)
    y.add_argument("--iters", type=int, default=None)
    y.add_argument("--seed", type=int, default=None)
    y.add_argument("--out", required=True, help="policy file to write")
    y.add_argument("--no-plot", dest="plot", action="store_false")
    y.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ExprError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
