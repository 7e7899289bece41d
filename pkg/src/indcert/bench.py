"""Benchmark corpus, run harness and CSV output.

Each template under ``templates/`` is an unguarded problem.  Variants are
generated from it deterministically: ``unbounded`` (the template itself),
``lower`` (guard ``0 <= x``) and ``bounded-c`` for c in 1..5 (guard
``0 <= x <= 10^c``).  ``golden.txt`` holds the expected verdict of every
case as ``name/variant verdict`` lines.
"""
from __future__ import annotations

import csv
import logging
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from indcert import certificate
from indcert import engine
from indcert import smtlib
from indcert.backend import SolverConfig
from indcert.errors import BackendError, IndcertError
from indcert.fragment import DoublyBounded, LowerBounded, decompose, load_problem

log = logging.getLogger(__name__)

BOUND_EXPONENTS = (1, 2, 3, 4, 5)
VARIANTS = ("unbounded", "lower") + tuple(f"bounded-{c}" for c in BOUND_EXPONENTS)
CSV_COLUMNS = ["name", "variant", "verdict", "iterations", "obligations", "blocked", "ms"]
BASELINE_COLUMNS = ["baseline_verdict", "baseline_ms"]


@dataclass(frozen=True)
class BenchCase:
    name: str
    file: Path
    variant: str
    expected: str | None = None

    @property
    def ident(self) -> str:
        return f"{self.name}/{self.variant}"


@dataclass
class BenchRow:
    name: str
    variant: str
    verdict: str
    iterations: int = 0
    obligations: int = 0
    blocked: int = 0
    ms: float = 0.0
    detail: str = ""
    cert_accepted: bool | None = None
    baseline_verdict: str | None = None
    baseline_ms: float | None = None

    def csv_values(self, with_baseline=False) -> list:
        out = [self.name, self.variant, self.verdict, self.iterations,
               self.obligations, self.blocked, f"{self.ms:.1f}"]
        if with_baseline:
            ms = "" if self.baseline_ms is None else f"{self.baseline_ms:.1f}"
            out += [self.baseline_verdict or "", ms]
        return out


# -- variant generation -------------------------------------------------------

def variant_text(template: str, variant: str) -> str:
    """SMT-LIB text of ``variant`` for an unguarded template problem."""
    script = smtlib.parse_script(template)
    p = decompose(script.formula)
    if variant == "unbounded":
        guard = p.guard
    elif variant == "lower":
        guard = LowerBounded(0)
    elif variant.startswith("bounded-"):
        guard = DoublyBounded(0, 10 ** int(variant.split("-", 1)[1]))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    phi = replace(p, guard=guard).to_formula()
    return smtlib.to_script(phi, script.consts, script.funcs)


def generate(corpus: Path) -> list:
    """Write every variant of every template to ``corpus/generated``."""
    corpus = Path(corpus)
    out_dir = corpus / "generated"
    out_dir.mkdir(exist_ok=True)
    written = []
    for tpl in sorted((corpus / "templates").glob("*.smt2")):
        text = tpl.read_text()
        for v in VARIANTS:
            path = out_dir / f"{tpl.stem}.{v}.smt2"
            path.write_text(variant_text(text, v))
            written.append(path)
    return written


def read_golden(path: Path) -> dict:
    golden = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ident, verdict = line.split()
            golden[ident] = verdict
    return golden


def load_cases(corpus: Path) -> list:
    """All cases listed in the golden table, in table order."""
    corpus = Path(corpus)
    cases = []
    for ident, verdict in read_golden(corpus / "golden.txt").items():
        name, variant = ident.split("/")
        path = corpus / "generated" / f"{name}.{variant}.smt2"
        if not path.exists():
            path = corpus / "negative" / f"{name}.smt2"
        cases.append(BenchCase(name, path, variant, verdict))
    return cases


# -- running ----------------------------------------------------------------

def run_case(case: BenchCase, cfg: SolverConfig, opts: engine.EngineOptions,
             check_certificates: bool = False) -> BenchRow:
    start = time.perf_counter()
    row = BenchRow(case.name, case.variant, "error")
    try:
        p = load_problem(Path(case.file).read_text())
        out = engine.solve(p, opts, cfg)
        row.verdict = out.verdict
        row.iterations = out.stats.iterations
        row.obligations = out.stats.obligation_checks
        row.blocked = out.stats.blocked_patterns
        row.detail = out.reason or ""
        if check_certificates and out.certificate is not None:
            row.cert_accepted = certificate.check(p, out.certificate, cfg).accepted
    except BackendError as exc:
        row.detail = f"backend: {exc}"
    except IndcertError as exc:
        row.verdict = "invalid"
        row.detail = f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        row.detail = str(exc)
    row.ms = (time.perf_counter() - start) * 1000
    return row


def run_baseline(case: BenchCase, solver_cmd, timeout: float) -> tuple:
    """Run an external solver on the raw file; return (verdict, ms)."""
    cmd = solver_cmd.split() if isinstance(solver_cmd, str) else list(solver_cmd)
    start = time.perf_counter()
    try:
        proc = subprocess.run([*cmd, str(case.file)], capture_output=True,
                              text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return "timeout", (time.perf_counter() - start) * 1000
    except OSError:
        return "error", (time.perf_counter() - start) * 1000
    ms = (time.perf_counter() - start) * 1000
    lines = proc.stdout.split()
    first = lines[0] if lines else ""
    if first in ("sat", "unsat", "unknown"):
        return first, ms
    return "error", ms


def run_suite(cases, cfg: SolverConfig | None = None, opts: engine.EngineOptions | None = None,
              csv_path=None, jobs: int = 1, baseline=None, baseline_timeout: float = 600.0,
              check_certificates: bool = False) -> list:
    """Run every case; failures are recorded per row and never abort the suite."""
    cfg = cfg or SolverConfig()
    opts = opts or engine.EngineOptions()

    def one(case):
        row = run_case(case, cfg, opts, check_certificates)
        if baseline:
            row.baseline_verdict, row.baseline_ms = run_baseline(case, baseline, baseline_timeout)
        log.info("%s: %s (%.0f ms)", case.ident, row.verdict, row.ms)
        return row

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(one, cases))
    if csv_path is not None:
        write_csv(rows, csv_path, with_baseline=bool(baseline))
    return rows


def write_csv(rows, dest, with_baseline=False):
    """Write ``rows`` to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_rows(dest, rows, with_baseline)
        return
    with open(dest, "w", newline="") as fh:
        _write_rows(fh, rows, with_baseline)


def _write_rows(fh, rows, with_baseline):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS + (BASELINE_COLUMNS if with_baseline else []))
    for row in rows:
        w.writerow(row.csv_values(with_baseline))


def mismatches(rows, cases) -> list:
    expected = {c.ident: c.expected for c in cases}
    return [(f"{r.name}/{r.variant}", expected.get(f"{r.name}/{r.variant}"), r.verdict)
            for r in rows if expected.get(f"{r.name}/{r.variant}") not in (None, r.verdict)]
