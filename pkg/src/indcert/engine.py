"""Interval-based satisfiability search with lazily enforced propagability.

The base interval ``B`` grows until either the finite instantiation over
``B`` is refuted (unsat) or selector patterns exist in every required
direction whose extremal, clash and propagability obligations all hold
(sat, with a certificate).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from indcert import ast as A
from indcert import backend
from indcert import encoder as E
from indcert.backend import SolverConfig, Status, Validity
from indcert.certificate import Certificate
from indcert.errors import IncompleteModel, SolverTimeout
from indcert.fragment import (
    DoublyBounded,
    FragmentProblem,
    Unbounded,
    cell_of,
    guard_hi,
    guard_lo,
)

log = logging.getLogger(__name__)

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"
BUDGET, SOLVER_UNKNOWN, UNSUPPORTED_OBLIGATION = "budget", "solver-unknown", "unsupported-obligation"


@dataclass
class EngineOptions:
    max_iterations: int = 64
    init_interval: tuple | None = None
    seed_from_ground: bool = False
    # bounded guards with at most this many instances are decided by plain
    # instantiation when the induction search runs out of budget
    finite_threshold: int = 1000
    # constant-specific refutations of one pattern tolerated per interval
    value_block_limit: int = 8

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.init_interval is not None and self.init_interval[0] > self.init_interval[1]:
            raise ValueError(f"empty initial interval {self.init_interval}")


@dataclass
class Stats:
    iterations: int = 0
    obligation_checks: int = 0
    memo_hits: int = 0
    blocked_patterns: int = 0
    wall_time: float = 0.0


@dataclass
class ObligationRecord:
    direction: int
    selected: frozenset      # canonical term keys
    constants: tuple         # fixed constant values, empty when checked for all
    validity: Validity


@dataclass
class SatOutcome:
    verdict: str
    certificate: Certificate | None = None
    reason: str | None = None
    stats: Stats = field(default_factory=Stats)
    refuted: list | None = None           # the finite conjunction shown unsat
    interval: tuple | None = None
    obligations: list = field(default_factory=list)

    def __str__(self):
        return self.verdict


def directions(p: FragmentProblem) -> tuple:
    return (E.UP, E.DOWN) if isinstance(p.guard, Unbounded) else (E.UP,)


def initial_interval(p: FragmentProblem, opts: EngineOptions) -> tuple:
    if opts.init_interval is not None:
        b_min, b_max = opts.init_interval
    elif opts.seed_from_ground:
        nums = []
        for app in A.apps(p.F):
            v = A.eval_ground(app.arg, {})
            if v is not None:
                nums.append(v)
        b_min, b_max = min([0, *nums]), max([0, *nums])
    else:
        b_min, b_max = 0, 0
    lo, hi = guard_lo(p.guard), guard_hi(p.guard)
    if lo is not None:
        b_min = lo
        b_max = max(b_max, lo)
    if hi is not None:
        b_max = min(b_max, hi)
    return b_min, b_max


def expand(p: FragmentProblem, B: tuple) -> tuple:
    b_min, b_max = B
    if isinstance(p.guard, Unbounded):
        return b_min - 1, b_max + 1
    hi = guard_hi(p.guard)
    return b_min, b_max + 1 if hi is None else min(hi, b_max + 1)


class _Search:
    def __init__(self, p: FragmentProblem, opts: EngineOptions, cfg: SolverConfig):
        self.p = p
        self.opts = opts
        self.cfg = cfg
        self.dirs = directions(p)
        self.svars = {s: E.selector_vars(p, s) for s in (E.UP, E.DOWN)}
        self.memo: dict = {}
        self.stats = Stats()
        self.records: list = []
        self.checked_keys: set = set()
        self.unknown_obligation = False
        self.value_blocks: dict = {}
        self.session = backend.Session(cfg)
        self.instances: list = []
        # declared once at the outermost level: a selector may occur in no
        # constraint, yet blocking clauses and model queries still name it
        atoms = [v.atom for vs in self.svars.values() for v in vs]
        if atoms:
            self.session.declare_for(A.And(tuple(atoms)))
        self.session.add(p.F)

    # -- base conjunction
    def instantiate(self, B):
        have = set(self.instances)
        for z in range(B[0], B[1] + 1):
            if z not in have and self.p.in_guard(z):
                self.session.add(self.p.instance(z))
                self.instances.append(z)

    def refuted(self) -> list:
        return [self.p.F] + [self.p.instance(z) for z in sorted(self.instances)]

    # -- obligations
    def _validity(self, key, phi) -> Validity:
        if key in self.memo:
            self.stats.memo_hits += 1
            return self.memo[key]
        assert key not in self.checked_keys
        self.checked_keys.add(key)
        self.stats.obligation_checks += 1
        v = backend.check_validity(self.cfg, phi)
        self.memo[key] = v
        return v

    def obligation(self, S: E.SubsetPattern, consts: dict):
        """Check the propagability of ``S``.

        Returns ``(ok, clause, local)``; when not ok, ``clause`` must be
        asserted, permanently or (``local``) only for the current interval.
        """
        phi = E.propagability(self.p, S)
        free = A.constants(phi)
        block = E.blocking_clause(self.svars[S.direction], S)
        if not free:
            v = self._validity((S.key, ()), phi)
            self.records.append(ObligationRecord(S.direction, S.key, (), v))
            if v is Validity.UNKNOWN:
                self.unknown_obligation = True
            return v is Validity.VALID, block, False
        v = self._validity((S.key, "all"), E.close_over_constants(phi))
        if v is Validity.VALID:
            self.records.append(ObligationRecord(S.direction, S.key, (), v))
            return True, block, False
        # does any choice of the constants make the obligation valid?
        closed = E.close_over_constants(phi)
        never = self._validity((S.key, "none"),
                               A.Forall(closed.vars, A.Not(closed.body)))
        if never is Validity.VALID:
            self.records.append(ObligationRecord(S.direction, S.key, (), Validity.INVALID))
            return False, block, False
        fixed = tuple((c, consts[c]) for c in free)
        v = self._validity((S.key, fixed), E.fix_constants(phi, dict(fixed)))
        self.records.append(ObligationRecord(S.direction, S.key, fixed, v))
        if v is Validity.VALID:
            return True, block, False
        if v is Validity.UNKNOWN:
            self.unknown_obligation = True
        n = self.value_blocks.get(S.key, 0) + 1
        self.value_blocks[S.key] = n
        if n > self.opts.value_block_limit:
            # give up on this pattern until the interval grows
            return False, block, True
        # only this combination of pattern and constant values is refuted
        diff = [A.Atom("!=", A.Const(c), A.num(val)) for c, val in fixed]
        return False, A.disj(block, *diff), False

    # -- certificate
    def needed_cells(self, B, consts: dict) -> list:
        env = {A.Cell(c): v for c, v in consts.items()}
        cells = {}
        for app in A.apps(self.p.F):
            n = A.eval_ground(app.arg, env)
            if n is None:
                raise IncompleteModel(app)
            cells[A.Cell(app.fsym, n)] = None
        for z in range(B[0], B[1] + 1):
            if self.p.in_guard(z):
                for t in self.p.qterms:
                    cells[cell_of(self.p, t, z, env)] = None
        return list(cells)

    def certificate(self, B, consts: dict, patterns: dict) -> Certificate:
        cells = self.needed_cells(B, consts)
        values = self.session.get_values(cells)
        for cell in cells:
            if values.get(cell) is None:
                raise IncompleteModel(cell)

        def keys(s):
            if s not in patterns:
                return None
            return tuple(t.key for t in self.p.qterms if t in patterns[s].selected)

        return Certificate(
            interval=tuple(B),
            guard=self.p.guard,
            consts=dict(consts),
            cells={(c.symbol, c.arg): values[c] for c in cells},
            sel_up=keys(E.UP),
            sel_down=keys(E.DOWN),
            verified_by=self.cfg.describe() if patterns else None,
        )

    def const_values(self) -> dict:
        if not self.p.consts:
            return {}
        vals = self.session.get_values([A.Cell(c) for c in self.p.consts])
        return {c: vals[A.Cell(c)] for c in self.p.consts}

    # -- the two queries of one iteration
    def base_only(self, B) -> SatOutcome | None:
        """Decide when ``B`` covers every instance the guard admits."""
        st = self.session.check_sat()
        if st is Status.UNSAT:
            return SatOutcome(UNSAT, refuted=self.refuted(), interval=tuple(B))
        if st is Status.UNKNOWN:
            return SatOutcome(UNKNOWN, reason=SOLVER_UNKNOWN, interval=tuple(B))
        consts = self.const_values()
        return SatOutcome(SAT, certificate=self.certificate(B, consts, {}), interval=tuple(B))

    def select(self, B) -> SatOutcome | None:
        """Search selector patterns for ``B``; None means expand the interval."""
        encodings = [E.psi_selector(self.p, s, B, self.svars[s])[0] for s in self.dirs]
        self.value_blocks = {}
        while True:
            self.session.push()
            try:
                self.session.add(A.conj(*encodings))
                st = self.session.check_sat()
                if st is Status.UNSAT:
                    return None
                if st is Status.UNKNOWN:
                    return SatOutcome(UNKNOWN, reason=SOLVER_UNKNOWN, interval=tuple(B))
                names = [v.name for s in self.dirs for v in self.svars[s]]
                sel = self.session.get_values(names)
                consts = self.const_values()
                patterns = {s: E.pattern_from_model(self.svars[s], sel, s) for s in self.dirs}
                blocks = []
                failed = False
                for s in self.dirs:
                    ok, clause, local = self.obligation(patterns[s], consts)
                    if not ok:
                        failed = True
                        (encodings if local else blocks).append(clause)
                        self.stats.blocked_patterns += 1
                if not failed:
                    cert = self.certificate(B, consts, patterns)
                    return SatOutcome(SAT, certificate=cert, interval=tuple(B))
            finally:
                if not self.session.dead:
                    self.session.pop()
            for b in blocks:
                self.session.add(b)

    def run(self) -> SatOutcome:
        p, opts = self.p, self.opts
        B = initial_interval(p, opts)
        hi = guard_hi(p.guard)
        for it in range(1, opts.max_iterations + 1):
            self.stats.iterations = it
            log.debug("iteration %d, B = %s", it, B)
            self.instantiate(B)
            # nothing to propagate without a quantified part
            if p.Q == A.TRUE or (hi is not None and B[1] >= hi):
                return self.base_only(B)
            st = self.session.check_sat()
            if st is Status.UNSAT:
                return SatOutcome(UNSAT, refuted=self.refuted(), interval=tuple(B))
            if st is Status.UNKNOWN:
                return SatOutcome(UNKNOWN, reason=SOLVER_UNKNOWN, interval=tuple(B))
            out = self.select(B)
            if out is not None:
                return out
            B = expand(p, B)
        if isinstance(p.guard, DoublyBounded) and p.guard.hi - p.guard.lo + 1 <= opts.finite_threshold:
            B = (p.guard.lo, p.guard.hi)
            self.instantiate(B)
            return self.base_only(B)
        reason = UNSUPPORTED_OBLIGATION if self.unknown_obligation else BUDGET
        return SatOutcome(UNKNOWN, reason=reason, interval=tuple(B))

    def close(self):
        self.session.close()


def solve(p: FragmentProblem, opts: EngineOptions | None = None,
          cfg: SolverConfig | None = None) -> SatOutcome:
    """Decide ``p``; Sat outcomes carry a certificate."""
    opts = opts or EngineOptions()
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    search = _Search(p, opts, cfg)
    try:
        out = search.run()
    except SolverTimeout:
        out = SatOutcome(UNKNOWN, reason=SOLVER_UNKNOWN)
    finally:
        search.close()
    search.stats.wall_time = time.perf_counter() - start
    out.stats = search.stats
    out.obligations = search.records
    return out


def assemble_certificate(p: FragmentProblem, B, base_model: dict, patterns: dict,
                         verified_by: str | None = None) -> Certificate:
    """Build a certificate from a model of the base conjunction.

    ``base_model`` maps Cell to value and must define every constant and
    every cell touched by F or by an instance over ``B`` inside the guard.
    """
    consts = {c: base_model[A.Cell(c)] for c in p.consts if A.Cell(c) in base_model}
    missing = [c for c in p.consts if c not in consts]
    if missing:
        raise IncompleteModel(missing[0])
    env = {A.Cell(c): v for c, v in consts.items()}
    cells = {}
    wanted = [A.Cell(app.fsym, A.eval_ground(app.arg, env)) for app in A.apps(p.F)]
    for z in range(B[0], B[1] + 1):
        if p.in_guard(z):
            wanted.extend(cell_of(p, t, z, env) for t in p.qterms)
    for cell in wanted:
        if cell not in base_model:
            raise IncompleteModel(cell)
        cells[(cell.symbol, cell.arg)] = base_model[cell]

    def keys(s):
        if s not in patterns:
            return None
        return tuple(t.key for t in p.qterms if t in patterns[s].selected)

    return Certificate(tuple(B), p.guard, consts, cells, keys(E.UP), keys(E.DOWN), verified_by)


def selector_search(p: FragmentProblem, B, s: int, cfg: SolverConfig | None = None,
                    opts: EngineOptions | None = None):
    """Run the lazy selector search for direction ``s`` at a fixed interval.

    Returns the accepted pattern, or None when no pattern over ``B``
    survives (including when the base conjunction itself is unsat).
    """
    opts = opts or EngineOptions(value_block_limit=10**6)
    search = _Search(p, opts, cfg or SolverConfig())
    search.dirs = (s,)
    try:
        search.instantiate(B)
        if search.session.check_sat() is not Status.SAT:
            return None
        out = search.select(B)
    finally:
        search.close()
    if out is None or out.verdict != SAT:
        return None
    return out.certificate.selection(s)
