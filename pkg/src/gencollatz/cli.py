"""Command-line entry point: ``gencollatz <command> ...``.

Exit status: 0 success, 1 usage or parameter error (also a failed
``verify-paper`` or an exhausted budget), 2 a cycle avoiding 1 was found
where the command was asked to fail on one, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .cycles import (
    classify_start,
    detect_outcome,
    principal_cycle,
    stopping_time,
)
from .errors import BudgetExceeded, CollatzError, NonConvergent
from .mapcore import DEFAULT_MAX_BITS, DEFAULT_MAX_STEPS, Budget, make_params, trajectory
from .persistence import (
    load_checkpoint,
    paper_fixtures,
    save_report,
    verify_fixture,
    write_records,
)
from .search import ScanSpec, conjecture_scan, random_scan, scan_range

EXIT_OK, EXIT_USAGE, EXIT_COUNTEREXAMPLE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("gencollatz")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def nat(text: str) -> int:
    """Parse a non-negative decimal integer of any size."""
    text = text.strip().replace("_", "")
    if not text.isdigit():
        raise argparse.ArgumentTypeError(f"not a non-negative decimal integer: {text!r}")
    return int(text)


def pos(text: str) -> int:
    n = nat(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def default_jobs() -> int:
    env = os.environ.get("GENCOLLATZ_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer GENCOLLATZ_JOBS=%r", env)
    return os.cpu_count() or 1


def _budget_args(p):
    p.add_argument("--max-steps", type=pos, default=DEFAULT_MAX_STEPS,
                   help="elementary map applications per trajectory (default %(default)s)")
    p.add_argument("--max-bits", type=pos, default=DEFAULT_MAX_BITS,
                   help="bit-length ceiling for trajectory values (default %(default)s)")


def _scan_args(p):
    _budget_args(p)
    p.add_argument("--jobs", type=pos, default=None,
                   help="worker processes (default: $GENCOLLATZ_JOBS or CPU count)")
    p.add_argument("--out", help="write one JSON record per start to this file")
    p.add_argument("--report", help="write the JSON report to this file")
    p.add_argument("--fail-on-counterexample", action="store_true",
                   help="exit 2 if a cycle avoiding 1 is found")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gencollatz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("traj", help="print a trajectory")
    p.add_argument("b", type=nat)
    p.add_argument("m", type=nat)
    p.add_argument("s0", type=pos)
    p.add_argument("--limit", type=pos, default=10_000,
                   help="print at most this many values (default %(default)s)")
    p.add_argument("--max-bits", type=pos, default=DEFAULT_MAX_BITS)
    p.add_argument("--past-one", action="store_true",
                   help="keep going after 1 appears instead of stopping there")

    p = sub.add_parser("cycle", help="print the cycle through 1, or the cycle a start falls into")
    p.add_argument("b", type=nat)
    p.add_argument("m", type=nat)
    p.add_argument("--from", dest="s0", type=pos, default=None,
                   help="report the cycle reached from this start instead")
    _budget_args(p)

    p = sub.add_parser("classify", help="trivial / non-trivial start and trajectory outcome")
    p.add_argument("b", type=nat)
    p.add_argument("m", type=nat)
    p.add_argument("s0", type=pos)
    _budget_args(p)

    p = sub.add_parser("stopping-time", help="map applications until 1 appears")
    p.add_argument("b", type=nat)
    p.add_argument("m", type=nat)
    p.add_argument("s0", type=pos)
    _budget_args(p)

    p = sub.add_parser("scan", help="classify every start in [--from, --to)")
    p.add_argument("b", type=nat)
    p.add_argument("m", type=nat)
    p.add_argument("--from", dest="lo", type=pos, default=1)
    p.add_argument("--to", dest="hi", type=pos, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--skip-trivial", dest="skip_trivial", action="store_true", default=None)
    g.add_argument("--no-skip-trivial", dest="skip_trivial", action="store_false")
    p.add_argument("--fail-fast", action="store_true",
                   help="stop at the lowest start that enters a cycle avoiding 1")
    p.add_argument("--no-memo", action="store_true", help="disable outcome memoization")
    p.add_argument("--checkpoint", help="checkpoint file, rewritten as the scan advances")
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint")
    _scan_args(p)

    p = sub.add_parser("random-scan", help="classify random (b, m, s0) triples")
    p.add_argument("--b-range", type=pos, nargs=2, default=(2, 9), metavar=("LO", "HI"))
    p.add_argument("--m-range", type=pos, nargs=2, default=(1, 3), metavar=("LO", "HI"))
    p.add_argument("--s0-range", type=pos, nargs=2, default=(1, 10**6), metavar=("LO", "HI"))
    p.add_argument("--count", type=pos, default=1000)
    p.add_argument("--seed", type=nat, default=0)
    _scan_args(p)

    p = sub.add_parser("conjecture-scan", help="scan m = b - 1 for b in [2, --b-max]")
    p.add_argument("--b-max", type=pos, required=True)
    p.add_argument("--s0-max", type=pos, required=True)
    _scan_args(p)

    p = sub.add_parser("verify-paper", help="recompute every published value")
    p.add_argument("--skip-long", action="store_true",
                   help="skip fixtures flagged long-running")
    return parser


def _budget(args) -> Budget:
    return Budget(args.max_steps, args.max_bits)


def _fmt_cycle(cycle) -> str:
    return ",".join(map(str, cycle.elements))


def cmd_traj(args) -> int:
    params = make_params(args.b, args.m)
    values = []
    for i, n in enumerate(trajectory(params, args.s0, Budget(args.limit, args.max_bits))):
        values.append(n)
        if n == 1 and i > 0 and not args.past_one:
            break
    print(" ".join(map(str, values)))
    return EXIT_OK


def cmd_cycle(args) -> int:
    params = make_params(args.b, args.m)
    if args.s0 is None:
        print(_fmt_cycle(principal_cycle(params)))
        return EXIT_OK
    out = detect_outcome(params, args.s0, _budget(args))
    if out.cycle is not None:
        print(_fmt_cycle(out.cycle))
    elif out.steps_to_one is not None:
        print(_fmt_cycle(principal_cycle(params)))
    else:
        print(f"budget exceeded after {out.steps_consumed} steps", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def cmd_classify(args) -> int:
    params = make_params(args.b, args.m)
    cls = classify_start(params, args.s0)
    if cls.trivial:
        print(f"trivial s={cls.s} N={cls.N}")
    else:
        print("non-trivial")
    out = detect_outcome(params, args.s0, _budget(args))
    line = f"outcome={out.tag.value} steps={out.steps_consumed} peak_bits={out.peak_bits}"
    if out.cycle is not None:
        line += f" cycle_min={out.cycle.min_element} cycle_length={out.cycle.length}"
    print(line)
    return EXIT_OK


def cmd_stopping_time(args) -> int:
    params = make_params(args.b, args.m)
    try:
        print(stopping_time(params, args.s0, _budget(args)))
    except NonConvergent as exc:
        print(f"non-convergent: {exc}", file=sys.stderr)
        print(_fmt_cycle(exc.cycle))
        return EXIT_COUNTEREXAMPLE
    except BudgetExceeded as exc:
        print(f"{exc}; raise --max-steps / --max-bits", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _summarize(report, fail_on_cycle: bool) -> int:
    counts = " ".join(f"{k}={v}" for k, v in report.counts.items())
    print(f"scanned={report.scanned} skipped_trivial={report.skipped} {counts}")
    if report.max_stopping_time is not None:
        print(f"max_stopping_time={report.max_stopping_time} at s0={report.max_stopping_start}")
    for c in report.counterexamples:
        print(f"COUNTER-EXAMPLE b={c.params.b} m={c.params.m} "
              f"cycle_min={c.min_element} length={c.length}: {_fmt_cycle(c)}")
    print(f"wall_time={report.wall_time:.3f}s", file=sys.stderr)
    if fail_on_cycle and report.cycles:
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else default_jobs()


def cmd_scan(args) -> int:
    spec = ScanSpec(make_params(args.b, args.m), args.lo, args.hi, args.skip_trivial,
                    _budget(args), _jobs(args), args.fail_fast)
    resume = None
    if args.resume:
        if not args.checkpoint:
            raise CollatzError("--resume needs --checkpoint")
        resume = load_checkpoint(args.checkpoint)
    out_fh = None
    try:
        sink = None
        if args.out:
            out_fh = open(args.out, "a" if resume is not None else "w", encoding="utf-8")
            sink = lambda recs: write_records(out_fh, recs)  # noqa: E731
        report = scan_range(spec, sink=sink, memoize=not args.no_memo,
                            checkpoint_path=args.checkpoint, resume=resume)
    finally:
        if out_fh is not None:
            out_fh.close()
    if args.report:
        save_report(args.report, report)
    return _summarize(report, args.fail_on_counterexample)


def _write_random_records(path, args, budget):
    from .search import ScanRecord, draw_triples

    with open(path, "w", encoding="utf-8") as fh:
        recs = []
        for b, m, s0 in draw_triples(args.b_range, args.m_range, args.count, args.seed,
                                     args.s0_range):
            params = make_params(b, m)
            recs.append(ScanRecord.from_outcome(params, s0, detect_outcome(params, s0, budget)))
        write_records(fh, recs)


def cmd_random_scan(args) -> int:
    budget = _budget(args)
    report = random_scan(args.b_range, args.m_range, args.count, args.seed, budget,
                         s0_range=args.s0_range, workers=_jobs(args))
    if args.out:
        _write_random_records(args.out, args, budget)
    if args.report:
        save_report(args.report, report)
    return _summarize(report, args.fail_on_counterexample)


def cmd_conjecture_scan(args) -> int:
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else None
    try:
        sink = (lambda recs: write_records(out_fh, recs)) if out_fh else None
        report = conjecture_scan(args.b_max, args.s0_max, _budget(args), workers=_jobs(args),
                                 sink=sink)
    finally:
        if out_fh is not None:
            out_fh.close()
    if args.report:
        save_report(args.report, report)
    status = _summarize(report, args.fail_on_counterexample)
    if not report.cycles:
        print(f"no counter-example with m = b - 1 for b <= {args.b_max}, s0 < {args.s0_max}")
    return status


def cmd_verify_paper(args) -> int:
    failed = 0
    for fx in paper_fixtures():
        if fx.long_running and args.skip_long:
            print(f"SKIP {fx.id} (long-running)")
            continue
        ok, got = verify_fixture(fx)
        label = f"{fx.id} b={fx.params.b} m={fx.params.m} s0={fx.s0} {fx.kind}"
        if ok:
            note = "" if fx.printed == fx.expected else " (printed listing has a typo, see errata)"
            print(f"PASS {label}{note}")
        else:
            failed += 1
            print(f"FAIL {label}: expected {fx.expected}, computed {got}")
    return EXIT_USAGE if failed else EXIT_OK


COMMANDS = {
    "traj": cmd_traj,
    "cycle": cmd_cycle,
    "classify": cmd_classify,
    "stopping-time": cmd_stopping_time,
    "scan": cmd_scan,
    "random-scan": cmd_random_scan,
    "conjecture-scan": cmd_conjecture_scan,
    "verify-paper": cmd_verify_paper,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CollatzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
