"""Evaluate the model a certificate describes, one cell at a time.

Cells outside the certificate are either propagated cells of some instance
``z`` outside the base interval, whose values come from a solver query on the
single ground instance ``Q[z]``, or unconstrained and read as 0.  Evaluation
is iterative: an explicit stack replaces the recursion, so long propagation
chains do not hit the interpreter's recursion limit.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from indcert import ast as A
from indcert import backend
from indcert import encoder as E
from indcert.backend import SolverConfig, Status
from indcert.certificate import Certificate
from indcert.errors import PropagatorFailed
from indcert.fragment import FragmentProblem, cell_of, offset_value

DEFAULT_VALUE = 0
DEPTH_CAP = 1_000_000


@dataclass
class EvalContext:
    problem: FragmentProblem
    cert: Certificate
    memo: dict = field(default_factory=dict)
    session: backend.Session | None = None
    config: SolverConfig | None = None
    instance_queries: int = 0
    max_depth: int = 0

    def __post_init__(self):
        self._defined = self.cert.interpretation()
        self._consts = self.cert.const_env()
        self._selected = {}
        for s in (E.UP, E.DOWN):
            keys = self.cert.selection(s)
            if keys:
                self._selected[s] = [self.problem.qterm(k) for k in keys]

    def defined(self, u: A.Cell):
        return self._defined.get(u)

    def known(self, u: A.Cell):
        v = self._defined.get(u)
        return self.memo.get(u) if v is None else v

    def _session(self) -> backend.Session:
        if self.session is None:
            self.session = backend.Session(self.config or SolverConfig())
            eqs = [A.eq(A.Const(c), A.num(v)) for c, v in self.cert.consts.items()]
            if eqs:
                self.session.add(A.conj(*eqs))
        return self.session

    def close(self):
        if self.session is not None:
            self.session.close()
            self.session = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _inst(ctx: EvalContext, u: A.Cell):
    """Return ``(z, direction)`` for the instance propagating ``u``, or None."""
    if u.arg is None:
        return None
    p, c = ctx.problem, ctx.cert
    for s in (E.UP, E.DOWN):
        for t in ctx._selected.get(s, ()):
            if t.fsym != u.symbol or t.coeff == 0:
                continue
            diff = u.arg - offset_value(p, t, ctx._consts)
            if diff % t.coeff:
                continue
            z = diff // t.coeff
            beyond = z > c.b_max if s == E.UP else z < c.b_min
            if beyond and p.in_guard(z):
                return z, s
    return None


def inst(ctx: EvalContext, u: A.Cell):
    """The instance ``z`` whose propagated cells contain ``u``, or None."""
    hit = _inst(ctx, u)
    return None if hit is None else hit[0]


def _rank(ctx: EvalContext, hit) -> tuple:
    z, s = hit
    if s == E.UP:
        return 0, z - ctx.cert.b_max
    return 1, ctx.cert.b_min - z


def propagated_cells(ctx: EvalContext, z: int, s: int) -> list:
    cells = []
    for t in ctx._selected.get(s, ()):
        cell = cell_of(ctx.problem, t, z, ctx._consts)
        if cell not in cells:
            cells.append(cell)
    return cells


def _propagate(ctx: EvalContext, z: int, s: int, fixed: dict, targets: list):
    """Solve ``Q[z]`` with ``fixed`` cell values and return values for ``targets``."""
    sess = ctx._session()
    facts = [ctx.problem.instance(z)]
    for cell, v in fixed.items():
        if cell.arg is not None:
            facts.append(A.eq(A.App(cell.symbol, A.num(cell.arg)), A.num(v)))
    ctx.instance_queries += 1
    res = sess.check(facts, targets)
    if res.status is not Status.SAT:
        raise PropagatorFailed(z, f"instance query returned {res.status.value} "
                                  f"with {len(fixed)} fixed cells")
    return res.model


def val(ctx: EvalContext, u: A.Cell) -> int:
    """Value of cell ``u`` in the model constructed from the certificate."""
    v = ctx.known(u)
    if v is not None:
        return v
    stack = [u]
    ranks = [None]
    while stack:
        if len(stack) > DEPTH_CAP:
            raise RecursionError(f"evaluation depth exceeded {DEPTH_CAP} at {stack[-1]}")
        ctx.max_depth = max(ctx.max_depth, len(stack))
        cell = stack[-1]
        if ctx.known(cell) is not None:
            stack.pop()
            ranks.pop()
            continue
        hit = _inst(ctx, cell)
        if hit is None:
            ctx.memo[cell] = DEFAULT_VALUE
            stack.pop()
            ranks.pop()
            continue
        z, s = hit
        rank = _rank(ctx, hit)
        parent = ranks[-1]
        assert parent is None or rank < parent, (
            f"evaluation of {cell} at instance {z} does not descend toward the base interval")
        targets = propagated_cells(ctx, z, s)
        relevant = []
        for t in ctx.problem.qterms:
            c = cell_of(ctx.problem, t, z, ctx._consts)
            if c not in targets and c not in relevant:
                relevant.append(c)
        pending = [c for c in relevant if ctx.known(c) is None]
        if pending:
            # the current frame is revisited once these are known
            for c in pending:
                stack.append(c)
                ranks.append(rank)
            continue
        fixed = {c: ctx.known(c) for c in relevant}
        model = _propagate(ctx, z, s, fixed, targets)
        for c in targets:
            ctx.memo[c] = model[c]
        stack.pop()
        ranks.pop()
    return ctx.known(u)


def instance_env(ctx: EvalContext, z: int) -> dict:
    """Values of every cell ``Q[z]`` touches, plus the constants."""
    env = dict(ctx._consts)
    for t in ctx.problem.qterms:
        c = cell_of(ctx.problem, t, z, ctx._consts)
        env[c] = val(ctx, c)
    return env


def sample_points(ctx: EvalContext, n: int = 50, seed: int = 0, spread: int = 40) -> list:
    """Instances inside B, above b_max and below b_min, as the guard allows."""
    rng = random.Random(seed)
    p, c = ctx.problem, ctx.cert
    pools = [range(c.b_min, c.b_max + 1),
             range(c.b_max + 1, c.b_max + 1 + spread),
             range(c.b_min - spread, c.b_min)]
    pools = [[z for z in pool if p.in_guard(z)] for pool in pools]
    pools = [pool for pool in pools if pool]
    return [rng.choice(pools[i % len(pools)]) for i in range(n)]


def model_check(ctx: EvalContext, points) -> list:
    """Return the instances in ``points`` whose evaluation is not true."""
    bad = []
    f_env = dict(ctx._consts)
    for app in A.apps(ctx.problem.F):
        n = A.eval_ground(app.arg, ctx._consts)
        f_env[A.Cell(app.fsym, n)] = val(ctx, A.Cell(app.fsym, n))
    if A.eval_formula(ctx.problem.F, f_env) is not True:
        bad.append("F")
    for z in points:
        if A.eval_formula(ctx.problem.instance(z), instance_env(ctx, z)) is not True:
            bad.append(z)
    return bad
