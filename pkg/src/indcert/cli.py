"""Command-line entry point: solve, check-cert, eval and bench."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from indcert import __version__
from indcert import ast as A
from indcert import bench, certificate, engine, modeleval
from indcert.backend import SolverConfig, default_solver
from indcert.errors import BackendError, IndcertError, PropagatorFailed
from indcert.fragment import load_problem

EXIT_OK, EXIT_NO, EXIT_UNKNOWN, EXIT_USAGE, EXIT_BACKEND = 0, 1, 2, 3, 4

VERDICT_EXIT = {engine.SAT: EXIT_OK, engine.UNSAT: EXIT_NO, engine.UNKNOWN: EXIT_UNKNOWN}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as "unknown"
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--solver", metavar="PATH",
                        help="SMT solver executable (default: $INDCERT_SOLVER or z3 on PATH)")
    common.add_argument("--timeout-ms", type=int, default=30_000, metavar="N",
                        help="per-query solver timeout")
    common.add_argument("-v", "--verbose", action="count", default=0)

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--max-iters", type=int, default=64, metavar="N",
                        help="interval expansions before giving up")
    search.add_argument("--seed-from-ground", action="store_true",
                        help="start from the range of numerals in the ground part")
    search.add_argument("--init", nargs=2, type=int, metavar=("LO", "HI"),
                        help="initial interval")

    parser = _Parser(prog="indcert", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common, search], help="decide a problem")
    p.add_argument("file")
    p.add_argument("--emit-cert", metavar="PATH", help="write the certificate of a sat answer")

    p = sub.add_parser("check-cert", parents=[common], help="check a certificate")
    p.add_argument("problem")
    p.add_argument("cert")

    p = sub.add_parser("eval", parents=[common], help="value of f(n) in the certified model")
    p.add_argument("problem")
    p.add_argument("cert")
    p.add_argument("fsym")
    p.add_argument("n", type=int)

    p = sub.add_parser("bench", parents=[common, search], help="run a corpus")
    p.add_argument("corpus_dir")
    p.add_argument("--csv", metavar="PATH", help="write results as CSV")
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    p.add_argument("--baseline", metavar="CMD",
                   help="also run CMD FILE on every case and record its answer")
    return parser


def _config(args) -> SolverConfig:
    return SolverConfig(args.solver or default_solver(), timeout_ms=args.timeout_ms)


def _options(args) -> engine.EngineOptions:
    return engine.EngineOptions(max_iterations=args.max_iters,
                                init_interval=tuple(args.init) if args.init else None,
                                seed_from_ground=args.seed_from_ground)


def _problem(path):
    return load_problem(Path(path).read_text())


def cmd_solve(args) -> int:
    p = _problem(args.file)
    out = engine.solve(p, _options(args), _config(args))
    print(out.verdict)
    if out.reason:
        print(f"reason: {out.reason}", file=sys.stderr)
    print(f"iterations: {out.stats.iterations}, obligations: {out.stats.obligation_checks}, "
          f"blocked: {out.stats.blocked_patterns}", file=sys.stderr)
    if args.emit_cert:
        if out.certificate is None:
            print("no certificate: the answer is not sat", file=sys.stderr)
        else:
            certificate.save(out.certificate, args.emit_cert)
    return VERDICT_EXIT[out.verdict]


def cmd_check_cert(args) -> int:
    p = _problem(args.problem)
    cert = certificate.load(args.cert)
    verdict = certificate.check(p, cert, _config(args))
    if verdict.accepted:
        print("accepted")
        return EXIT_OK
    print("rejected")
    for f in verdict.failures:
        print(f"{f.obligation}: {f.description}")
    return EXIT_NO


def cmd_eval(args) -> int:
    p = _problem(args.problem)
    cert = certificate.load(args.cert)
    cfg = _config(args)
    verdict = certificate.check(p, cert, cfg)
    if not verdict.accepted:
        print("certificate rejected: " + ", ".join(sorted(verdict.ids())), file=sys.stderr)
        return EXIT_NO
    with modeleval.EvalContext(p, cert, config=cfg) as ctx:
        print(modeleval.val(ctx, A.Cell(args.fsym, args.n)))
    return EXIT_OK


def cmd_bench(args) -> int:
    cases = bench.load_cases(Path(args.corpus_dir))
    rows = bench.run_suite(cases, _config(args), _options(args), csv_path=args.csv,
                           jobs=args.jobs, baseline=args.baseline)
    if not args.csv:
        bench.write_csv(rows, sys.stdout, with_baseline=bool(args.baseline))
    bad = bench.mismatches(rows, cases)
    for ident, expected, got in bad:
        print(f"{ident}: expected {expected}, got {got}", file=sys.stderr)
    return EXIT_NO if bad else EXIT_OK


COMMANDS = {"solve": cmd_solve, "check-cert": cmd_check_cert, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"indcert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (BackendError, PropagatorFailed) as exc:
        print(f"indcert: solver error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (IndcertError, OSError, ValueError) as exc:
        print(f"indcert: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
