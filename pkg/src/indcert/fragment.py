"""Decomposition of an input formula into ``F and forall x. [guard =>] Q``.

The resulting :class:`FragmentProblem` carries the inventory every encoder
needs: the argument terms of each function symbol inside ``Q`` (with their
shared coefficient of ``x``) and the ground arguments of each symbol in
``F``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from indcert import ast as A
from indcert import smtlib
from indcert.errors import (
    MultipleQuantifiedConjuncts,
    MultiVariableQuantifier,
    NestedFunctionArgument,
    NestedQuantifier,
    NonUniformCoefficient,
    UndefinedOffset,
    UnsupportedGuard,
    VariableOutsideQuantifier,
)


@dataclass(frozen=True)
class Unbounded:
    def __str__(self):
        return "none"


@dataclass(frozen=True)
class LowerBounded:
    lo: int

    def __str__(self):
        return f"x >= {self.lo}"


@dataclass(frozen=True)
class DoublyBounded:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise UnsupportedGuard(f"{self.lo} <= x <= {self.hi}")

    def __str__(self):
        return f"{self.lo} <= x <= {self.hi}"


GuardKind = Union[Unbounded, LowerBounded, DoublyBounded]


def guard_lo(g: GuardKind):
    return getattr(g, "lo", None)


def guard_hi(g: GuardKind):
    return getattr(g, "hi", None)


def in_guard(g: GuardKind, z: int) -> bool:
    lo, hi = guard_lo(g), guard_hi(g)
    return (lo is None or z >= lo) and (hi is None or z <= hi)


def guard_formula(g: GuardKind, var: str) -> A.Formula:
    x = A.Var(var)
    if isinstance(g, LowerBounded):
        return A.Atom("<=", A.num(g.lo), x)
    if isinstance(g, DoublyBounded):
        return A.And((A.Atom("<=", A.num(g.lo), x), A.Atom("<=", x, A.num(g.hi))))
    return A.TRUE


@dataclass(frozen=True)
class QTerm:
    """An application ``f(coeff*x + offset)`` occurring in the quantified part."""

    fsym: str
    coeff: int
    ground_offset: A.Term  # the argument with x := 0
    original: A.Term       # the full argument term
    var: str = field(default="x", compare=False)

    @property
    def app(self) -> A.App:
        return A.App(self.fsym, self.original)

    @property
    def key(self) -> str:
        """Canonical printed form, with the variable literally named x."""
        arg = self.original if self.var == "x" else A.rename_var(self.original, self.var, "x")
        return A.to_smt(A.App(self.fsym, arg))

    def at(self, z) -> A.Term:
        """The argument term with the quantified variable replaced by ``z``."""
        return A.substitute(self.original, self.var, z)

    def __str__(self):
        return self.key


@dataclass(frozen=True)
class FuncInfo:
    fsym: str
    coeffs: frozenset       # distinct coefficients seen in Q (one after validation)
    qterms: tuple           # QTerm, in order of first occurrence in Q
    f_args: tuple           # ground argument terms of fsym in F

    @property
    def coeff(self) -> int | None:
        if len(self.coeffs) == 1:
            return next(iter(self.coeffs))
        return None

    @property
    def sign(self) -> int:
        """coeffsign as +1 / -1, and 0 for the zero-coefficient flag."""
        c = self.coeff or 0
        return (c > 0) - (c < 0)

    @property
    def zero_coeff(self) -> bool:
        return bool(self.qterms) and self.coeff == 0


@dataclass(frozen=True)
class FragmentProblem:
    F: A.Formula
    Q: A.Formula
    var: str
    guard: GuardKind
    funcs: dict             # fsym -> FuncInfo
    consts: tuple

    @property
    def qterms(self) -> tuple:
        """All argument terms of the quantified part (the set T)."""
        return tuple(t for info in self.funcs.values() for t in info.qterms)

    @property
    def qfuncs(self) -> tuple:
        return tuple(f for f, info in self.funcs.items() if info.qterms)

    def qterm(self, key: str) -> QTerm:
        for t in self.qterms:
            if t.key == key:
                return t
        raise KeyError(key)

    def instance(self, z: int) -> A.Formula:
        return A.substitute(self.Q, self.var, A.num(z))

    def in_guard(self, z: int) -> bool:
        return in_guard(self.guard, z)

    def to_formula(self) -> A.Formula:
        """Re-assemble ``F and forall x. guard => Q``."""
        g = guard_formula(self.guard, self.var)
        body = self.Q if g == A.TRUE else A.Implies(g, self.Q)
        return A.conj(self.F, A.Forall((self.var,), body))


# -- decomposition ----------------------------------------------------------

def _conjuncts(phi: A.Formula) -> list:
    if isinstance(phi, A.And):
        out = []
        for a in phi.args:
            out.extend(_conjuncts(a))
        return out
    if phi == A.TRUE:
        return []
    return [phi]


def _ground_int(t: A.Term, guard) -> int:
    if A.constants(t) or A.apps(t) or A.free_vars(t):
        raise UnsupportedGuard(guard)
    return A.eval_ground(t, {})


def _bound(atom, var):
    """Classify ``atom`` as ('lo', value) or ('hi', value) for ``var``."""
    if not isinstance(atom, A.Atom) or atom.rel not in ("<=", ">="):
        return None
    x = A.Var(var)
    small, big = (atom.lhs, atom.rhs) if atom.rel == "<=" else (atom.rhs, atom.lhs)
    if big == x and x not in A.walk(small):
        return "lo", small
    if small == x and x not in A.walk(big):
        return "hi", big
    return None


def extract_guard(body: A.Formula, var: str):
    """Split ``lo <= x [and x <= hi] => Q`` into (guard, Q)."""
    if not isinstance(body, A.Implies):
        return Unbounded(), body
    g = body.lhs
    parts = list(g.args) if isinstance(g, A.And) else [g]
    bounds = [_bound(p, var) for p in parts]
    if any(b is None for b in bounds) or not 1 <= len(bounds) <= 2:
        return Unbounded(), body
    kinds = sorted(b[0] for b in bounds)
    if kinds == ["lo"]:
        return LowerBounded(_ground_int(bounds[0][1], g)), body.rhs
    if kinds == ["hi", "lo"]:
        lo = next(t for k, t in bounds if k == "lo")
        hi = next(t for k, t in bounds if k == "hi")
        return DoublyBounded(_ground_int(lo, g), _ground_int(hi, g)), body.rhs
    return Unbounded(), body


def decompose(phi: A.Formula) -> FragmentProblem:
    ground, quantified = [], []
    for c in _conjuncts(phi):
        if isinstance(c, A.Forall):
            quantified.append(c)
        elif A.has_quantifier(c):
            raise NestedQuantifier(c)
        else:
            ground.append(c)
    if len(quantified) > 1:
        raise MultipleQuantifiedConjuncts(len(quantified))
    F = A.conj(*ground)
    if quantified:
        q = quantified[0]
        if len(q.vars) != 1:
            raise MultiVariableQuantifier(q.vars)
        if A.has_quantifier(q.body):
            raise NestedQuantifier(q)
        var = q.vars[0]
        guard, Q = extract_guard(q.body, var)
    else:
        var, guard, Q = "x", Unbounded(), A.TRUE

    funcs: dict = {}
    qterm_lists: dict = {}
    for app in A.apps(Q):
        qt = QTerm(app.fsym, A.var_coefficient(app.arg, var),
                   A.substitute(app.arg, var, A.num(0)), app.arg, var)
        qterm_lists.setdefault(app.fsym, []).append(qt)
    f_arg_lists: dict = {}
    for app in A.apps(F):
        args = f_arg_lists.setdefault(app.fsym, [])
        if app.arg not in args:
            args.append(app.arg)
    for fsym in list(qterm_lists) + [f for f in f_arg_lists if f not in qterm_lists]:
        qts = qterm_lists.get(fsym, [])
        funcs[fsym] = FuncInfo(fsym, frozenset(t.coeff for t in qts), tuple(qts),
                               tuple(f_arg_lists.get(fsym, ())))
    return FragmentProblem(F, Q, var, guard, funcs, tuple(A.constants(phi)))


# -- validation -------------------------------------------------------------

def validate(p: FragmentProblem) -> None:
    """Raise the first violated fragment restriction; return None when ok."""
    extra = A.free_vars(p.F)
    if extra:
        raise VariableOutsideQuantifier(sorted(extra)[0])
    extra = A.free_vars(p.Q) - {p.var}
    if extra:
        raise VariableOutsideQuantifier(sorted(extra)[0])
    for part in (p.F, p.Q):
        for app in A.apps(part):
            if A.apps(app.arg):
                raise NestedFunctionArgument(app)
    for info in p.funcs.values():
        if len(info.coeffs) > 1:
            raise NonUniformCoefficient(info.fsym, info.coeffs)


def load_problem(text: str) -> FragmentProblem:
    p = decompose(smtlib.parse(text))
    validate(p)
    return p


# -- relevant cells ---------------------------------------------------------

def offset_value(p: FragmentProblem, t: QTerm, consts) -> int:
    v = A.eval_ground(t.ground_offset, consts)
    if v is None:
        missing = [c for c in A.constants(t.ground_offset) if A.Cell(c) not in consts]
        raise UndefinedOffset(missing[0] if missing else t.key)
    return v


def cell_of(p: FragmentProblem, t: QTerm, z: int, consts) -> A.Cell:
    """The cell ``f(t[x := z])`` under the constant values in ``consts``."""
    return A.Cell(t.fsym, t.coeff * z + offset_value(p, t, consts))


def relevant_cells(p: FragmentProblem, I, z: int) -> set:
    return {cell_of(p, t, z, I) for t in p.qterms}
