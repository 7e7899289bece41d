"""Satisfiability certificates: data, text format, and an independent checker.

A certificate carries only data (interval, cell values, selected terms).
The checker re-derives every obligation from the problem itself; only the
two propagability validities need a solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from indcert import ast as A
from indcert import backend
from indcert import encoder as E
from indcert.errors import BackendError, MalformedCertificate, UndefinedOffset
from indcert.fragment import (
    DoublyBounded,
    FragmentProblem,
    GuardKind,
    LowerBounded,
    Unbounded,
    guard_hi,
    guard_lo,
)
from indcert.smtlib import SList, Token, read_sexprs, SmtSyntaxError

BASE, EXTREMAL, CLASH, PROPAGABILITY, COVERAGE, SELECTION = (
    "base", "extremal", "clash", "propagability", "coverage", "selection")


@dataclass(frozen=True)
class Certificate:
    interval: tuple
    guard: GuardKind
    consts: dict = field(default_factory=dict)   # name -> int
    cells: dict = field(default_factory=dict)    # (fsym, n) -> int
    sel_up: tuple | None = None                  # canonical QTerm keys
    sel_down: tuple | None = None
    verified_by: str | None = None

    def __post_init__(self):
        if self.interval[0] > self.interval[1]:
            raise ValueError(f"empty interval {self.interval}")

    @property
    def b_min(self) -> int:
        return self.interval[0]

    @property
    def b_max(self) -> int:
        return self.interval[1]

    def interpretation(self) -> dict:
        """The cell interpretation ``consts | cells`` keyed by Cell."""
        env = {A.Cell(c): v for c, v in self.consts.items()}
        env.update({A.Cell(f, n): v for (f, n), v in self.cells.items()})
        return env

    def const_env(self) -> dict:
        return {A.Cell(c): v for c, v in self.consts.items()}

    def selection(self, s: int):
        return self.sel_up if s == E.UP else self.sel_down


@dataclass
class Failure:
    obligation: str
    description: str


@dataclass
class Verdict:
    failures: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.failures

    def ids(self) -> set:
        return {f.obligation for f in self.failures}

    def fail(self, obligation, description):
        self.failures.append(Failure(obligation, description))


# -- text format ------------------------------------------------------------

def _int(n: int) -> str:
    return str(n)


def _guard_text(g: GuardKind) -> str:
    if isinstance(g, LowerBounded):
        return f"(lower {g.lo})"
    if isinstance(g, DoublyBounded):
        return f"(bounded {g.lo} {g.hi})"
    return "none"


def serialize(c: Certificate) -> str:
    fields = [
        f"(interval {_int(c.b_min)} {_int(c.b_max)})",
        f"(guard {_guard_text(c.guard)})",
        "(" + " ".join(["consts"] + [f"({A.symbol(k)} {_int(v)})" for k, v in sorted(c.consts.items())]) + ")",
        "(" + " ".join(["cells"] + [f"(({A.symbol(f)} {_int(n)}) {_int(v)})"
                                    for (f, n), v in sorted(c.cells.items())]) + ")",
    ]
    if c.sel_up is not None:
        fields.append("(" + " ".join(["select-up", *c.sel_up]) + ")")
    if c.sel_down is not None:
        fields.append("(" + " ".join(["select-down", *c.sel_down]) + ")")
    if c.verified_by is not None:
        fields.append(f"(verified-by {A.symbol(c.verified_by)})")
    return "(certificate " + " ".join(fields) + " )"


def _text(e) -> str:
    if isinstance(e, Token):
        return ("|" + e.text + "|") if e.quoted else e.text
    return "(" + " ".join(_text(x) for x in e) + ")"


def _where(e):
    return getattr(e, "pos", None)


def _to_int(e) -> int:
    if isinstance(e, Token) and not e.quoted:
        try:
            return int(e.text)
        except ValueError:
            pass
    if isinstance(e, SList) and len(e) == 2 and isinstance(e[0], Token) and e[0].text == "-":
        return -_to_int(e[1])
    raise MalformedCertificate(f"expected an integer, got {_text(e)}", _where(e))


def _sym(e) -> str:
    if not isinstance(e, Token):
        raise MalformedCertificate(f"expected a symbol, got {_text(e)}", _where(e))
    return e.text


def _canonical_key(e) -> str:
    """Normalize a selected-term identifier through the term printer."""
    if not (isinstance(e, SList) and len(e) == 2 and isinstance(e[0], Token)):
        raise MalformedCertificate(f"expected a term (f arg), got {_text(e)}", _where(e))
    return A.to_smt(A.App(e[0].text, _term(e[1])))


def _term(e) -> A.Term:
    if isinstance(e, Token):
        if e.text == "x":
            return A.Var("x")
        try:
            return A.IntConst(int(e.text))
        except ValueError:
            return A.Const(e.text)
    head = _sym(e[0]) if e else None
    args = [_term(a) for a in e[1:]]
    if head == "+" and args:
        return A.add(*args)
    if head == "-" and len(args) == 1:
        return A.IntConst(-args[0].value) if isinstance(args[0], A.IntConst) and isinstance(e[1], Token) else A.Neg(args[0])
    if head == "-" and len(args) > 1:
        out = args[0]
        for a in args[1:]:
            out = A.Add(out, A.Neg(a))
        return out
    if head == "*" and len(args) == 2 and isinstance(args[0], A.IntConst):
        return A.Mul(args[0].value, args[1])
    raise MalformedCertificate(f"unsupported term {_text(e)}", _where(e))


def deserialize(text: str) -> Certificate:
    try:
        top = read_sexprs(text)
    except SmtSyntaxError as exc:
        raise MalformedCertificate(str(exc), exc.position) from exc
    if len(top) != 1 or not isinstance(top[0], SList) or not top[0] or _text(top[0][0]) != "certificate":
        raise MalformedCertificate("expected exactly one (certificate ...) form")
    items = list(top[0][1:])
    order = ["interval", "guard", "consts", "cells", "select-up", "select-down", "verified-by"]
    seen: dict = {}
    last = -1
    for item in items:
        if not isinstance(item, SList) or not item or not isinstance(item[0], Token):
            raise MalformedCertificate(f"unexpected field {_text(item)}", _where(item))
        name = item[0].text
        if name not in order:
            raise MalformedCertificate(f"unknown field {name}", item.pos)
        idx = order.index(name)
        if idx <= last:
            raise MalformedCertificate(f"field {name} out of order or repeated", item.pos)
        last = idx
        seen[name] = item
    for required in order[:4]:
        if required not in seen:
            raise MalformedCertificate(f"missing field {required}")

    iv = seen["interval"]
    if len(iv) != 3:
        raise MalformedCertificate("interval needs two bounds", iv.pos)
    interval = (_to_int(iv[1]), _to_int(iv[2]))
    if interval[0] > interval[1]:
        raise MalformedCertificate(f"empty interval {interval}", iv.pos)

    g = seen["guard"]
    if len(g) != 2:
        raise MalformedCertificate("guard needs one value", g.pos)
    gv = g[1]
    if isinstance(gv, Token) and gv.text == "none":
        guard = Unbounded()
    elif isinstance(gv, SList) and gv and _text(gv[0]) == "lower" and len(gv) == 2:
        guard = LowerBounded(_to_int(gv[1]))
    elif isinstance(gv, SList) and gv and _text(gv[0]) == "bounded" and len(gv) == 3:
        guard = DoublyBounded(_to_int(gv[1]), _to_int(gv[2]))
    else:
        raise MalformedCertificate(f"bad guard {_text(gv)}", _where(gv))

    consts = {}
    for pair in seen["consts"][1:]:
        if not isinstance(pair, SList) or len(pair) != 2:
            raise MalformedCertificate(f"bad constant entry {_text(pair)}", _where(pair))
        consts[_sym(pair[0])] = _to_int(pair[1])

    cells = {}
    for pair in seen["cells"][1:]:
        if not (isinstance(pair, SList) and len(pair) == 2 and isinstance(pair[0], SList) and len(pair[0]) == 2):
            raise MalformedCertificate(f"bad cell entry {_text(pair)}", _where(pair))
        key = (_sym(pair[0][0]), _to_int(pair[0][1]))
        if key in cells:
            raise MalformedCertificate(f"cell {key} given twice", pair.pos)
        cells[key] = _to_int(pair[1])

    def selection(name):
        if name not in seen:
            return None
        return tuple(_canonical_key(e) for e in seen[name][1:])

    verified_by = None
    if "verified-by" in seen:
        vb = seen["verified-by"]
        if len(vb) != 2:
            raise MalformedCertificate("verified-by needs one value", vb.pos)
        verified_by = _sym(vb[1])
    return Certificate(interval, guard, consts, cells, selection("select-up"),
                       selection("select-down"), verified_by)


def load(path) -> Certificate:
    with open(path) as fh:
        return deserialize(fh.read())


def save(c: Certificate, path):
    with open(path, "w") as fh:
        fh.write(serialize(c) + "\n")


# -- checking ---------------------------------------------------------------

def directions(guard: GuardKind) -> tuple:
    return (E.UP, E.DOWN) if isinstance(guard, Unbounded) else (E.UP,)


def base_instances(p: FragmentProblem, c: Certificate) -> list:
    return [z for z in range(c.b_min, c.b_max + 1) if p.in_guard(z)]


def base_formula(p: FragmentProblem, c: Certificate) -> A.Formula:
    return A.conj(p.F, *[p.instance(z) for z in base_instances(p, c)])


def _pattern(p: FragmentProblem, keys, s: int, verdict: Verdict):
    terms = []
    for k in keys:
        try:
            terms.append(p.qterm(k))
        except KeyError:
            verdict.fail(SELECTION, f"{E.direction_name(s)}: {k} is not a term of the quantified part")
            return None
    if len(set(terms)) != len(terms):
        verdict.fail(SELECTION, f"{E.direction_name(s)}: a term is selected twice")
        return None
    return E.SubsetPattern(s, frozenset(terms))


def _needed(p: FragmentProblem, c: Certificate, s: int) -> bool:
    """Whether propagation in direction ``s`` is required at all."""
    lo, hi = guard_lo(c.guard), guard_hi(c.guard)
    if s == E.UP:
        return hi is None or c.b_max < hi
    return lo is None or c.b_min > lo


def check_coverage(p: FragmentProblem, c: Certificate, verdict: Verdict):
    if c.guard != p.guard:
        verdict.fail(COVERAGE, f"certificate guard {c.guard} differs from problem guard {p.guard}")
        return
    lo = guard_lo(c.guard)
    if lo is not None and c.b_min != lo:
        verdict.fail(COVERAGE, f"interval must start at the guard bound {lo}, starts at {c.b_min}")
    if p.Q == A.TRUE:
        return
    for s in (E.UP, E.DOWN):
        if _needed(p, c, s) and c.selection(s) is None:
            verdict.fail(COVERAGE, f"no selection for the {E.direction_name(s)} direction")


def check_obligation(p: FragmentProblem, c: Certificate, S: E.SubsetPattern, config) -> backend.Validity:
    phi = E.fix_constants(E.propagability(p, S), c.consts)
    if A.constants(phi):
        return backend.Validity.INVALID
    return backend.check_validity(config, phi)


def check(p: FragmentProblem, c: Certificate, config=None, propagability=True) -> Verdict:
    """Verify every obligation of ``c`` against ``p``, reporting each failure."""
    verdict = Verdict()
    env = c.interpretation()
    consts = c.const_env()

    missing = [k for k in p.consts if k not in c.consts]
    if missing:
        verdict.fail(BASE, f"constants without a value: {', '.join(missing)}")

    base = base_formula(p, c)
    value = A.eval_formula(base, env)
    if value is not True:
        bad = [z for z in base_instances(p, c) if A.eval_formula(p.instance(z), env) is not True]
        where = "F" if A.eval_formula(p.F, env) is not True else f"instances {bad[:5]}"
        verdict.fail(BASE, f"base conjunction evaluates to {value} ({where})")

    check_coverage(p, c, verdict)

    patterns = []
    for s in directions(c.guard):
        keys = c.selection(s)
        if keys is None:
            continue
        S = _pattern(p, keys, s, verdict)
        if S is None:
            continue
        patterns.append(S)
        name = E.direction_name(s)
        try:
            ext = A.eval_formula(E.extremal(p, S), consts)
            cl = A.eval_formula(E.clash(p, S, c.interval), consts)
        except (UndefinedOffset, ValueError) as exc:
            verdict.fail(EXTREMAL, f"{name}: {exc}")
            continue
        if ext is not True:
            verdict.fail(EXTREMAL, f"{name}: extremal condition evaluates to {ext}")
        if cl is not True:
            verdict.fail(CLASH, f"{name}: clash condition evaluates to {cl}")
    if isinstance(c.guard, LowerBounded) or isinstance(c.guard, DoublyBounded):
        if c.sel_down is not None:
            verdict.fail(SELECTION, "downward selection given although the guard bounds x from below")

    if propagability:
        config = config or backend.SolverConfig()
        for S in patterns:
            name = E.direction_name(S.direction)
            try:
                validity = check_obligation(p, c, S, config)
            except BackendError as exc:
                verdict.fail(PROPAGABILITY, f"{name}: solver error: {exc}")
                continue
            if validity is not backend.Validity.VALID:
                verdict.fail(PROPAGABILITY, f"{name}: propagability obligation is {validity.value}")
    return verdict
