"""Terms and formulas over linear integer arithmetic with unary functions.

All nodes are immutable dataclasses.  Structural equality ignores source
positions, so a parsed formula compares equal to a hand-built one.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Union

Position = tuple  # (line, column), 1-based


class Cell(NamedTuple):
    """A constant (``arg is None``) or a function applied to an integer."""

    symbol: str
    arg: int | None = None

    def __str__(self):
        if self.arg is None:
            return self.symbol
        return f"{self.symbol}({self.arg})"


# A finite partial map from cells to values; selector Booleans are stored
# under Cell(name) as well.
CellInterpretation = dict


# -- terms ------------------------------------------------------------------

class Term:
    __slots__ = ()

    def __str__(self):
        return to_smt(self)


@dataclass(frozen=True)
class IntConst(Term):
    value: int


@dataclass(frozen=True)
class Const(Term):
    name: str


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    coeff: int
    t: Term


@dataclass(frozen=True)
class Neg(Term):
    t: Term


@dataclass(frozen=True)
class App(Term):
    fsym: str
    arg: Term
    pos: Position | None = field(default=None, compare=False, repr=False)


# -- formulas ---------------------------------------------------------------

class Formula:
    __slots__ = ()

    def __str__(self):
        return to_smt(self)


RELATIONS = ("=", "<=", "<", ">=", ">", "!=")


@dataclass(frozen=True)
class Atom(Formula):
    rel: str
    lhs: Term
    rhs: Term
    pos: Position | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Forall(Formula):
    vars: tuple
    body: Formula
    pos: Position | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Exists(Formula):
    vars: tuple
    body: Formula


@dataclass(frozen=True)
class BoolVar(Formula):
    name: str


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)

Node = Union[Term, Formula]


# -- constructors -----------------------------------------------------------

def num(n: int) -> IntConst:
    return IntConst(int(n))


def as_term(t) -> Term:
    return IntConst(t) if isinstance(t, int) else t


def add(*terms) -> Term:
    terms = [as_term(t) for t in terms]
    if not terms:
        return IntConst(0)
    acc = terms[0]
    for t in terms[1:]:
        acc = Add(acc, t)
    return acc


def sub(a, b) -> Term:
    return Add(as_term(a), Neg(as_term(b)))


def conj(*fs) -> Formula:
    """Conjunction, flattening nested And and dropping True."""
    out = []
    for f in fs:
        if isinstance(f, And):
            out.extend(f.args)
        elif f != TRUE:
            out.append(f)
    if any(f == FALSE for f in out):
        return FALSE
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*fs) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, Or):
            out.extend(f.args)
        elif f != FALSE:
            out.append(f)
    if any(f == TRUE for f in out):
        return TRUE
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def lt(a, b) -> Atom:
    return Atom("<", as_term(a), as_term(b))


def eq(a, b) -> Atom:
    return Atom("=", as_term(a), as_term(b))


# -- traversal --------------------------------------------------------------

def children(node: Node) -> tuple:
    if isinstance(node, (Add,)):
        return (node.left, node.right)
    if isinstance(node, (Mul, Neg)):
        return (node.t,)
    if isinstance(node, App):
        return (node.arg,)
    if isinstance(node, Atom):
        return (node.lhs, node.rhs)
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, Implies):
        return (node.lhs, node.rhs)
    if isinstance(node, (Forall, Exists)):
        return (node.body,)
    return ()


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal of every sub-node."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def apps(node: Node) -> list:
    """Function applications in order of first occurrence, without duplicates."""
    seen = {}
    for n in walk(node):
        if isinstance(n, App) and n not in seen:
            seen[n] = None
    return list(seen)


def constants(node: Node) -> list:
    seen = {}
    for n in walk(node):
        if isinstance(n, Const):
            seen.setdefault(n.name, None)
    return list(seen)


def free_vars(node: Node, bound=frozenset()) -> set:
    if isinstance(node, Var):
        return set() if node.name in bound else {node.name}
    if isinstance(node, (Forall, Exists)):
        return free_vars(node.body, bound | set(node.vars))
    out = set()
    for c in children(node):
        out |= free_vars(c, bound)
    return out


def has_quantifier(node: Node) -> bool:
    return any(isinstance(n, (Forall, Exists)) for n in walk(node))


# -- substitution -----------------------------------------------------------

def substitute(s: Node, var: str, t) -> Node:
    """Replace every free occurrence of variable ``var`` in ``s`` by ``t``."""
    t = as_term(t)
    return _subst(s, var, t)


def _subst(s, var, t):
    if isinstance(s, Var):
        return t if s.name == var else s
    if isinstance(s, (IntConst, Const, BoolConst, BoolVar)):
        return s
    if isinstance(s, Add):
        return Add(_subst(s.left, var, t), _subst(s.right, var, t))
    if isinstance(s, Mul):
        return Mul(s.coeff, _subst(s.t, var, t))
    if isinstance(s, Neg):
        return Neg(_subst(s.t, var, t))
    if isinstance(s, App):
        return App(s.fsym, _subst(s.arg, var, t), s.pos)
    if isinstance(s, Atom):
        return Atom(s.rel, _subst(s.lhs, var, t), _subst(s.rhs, var, t), s.pos)
    if isinstance(s, Not):
        return Not(_subst(s.arg, var, t))
    if isinstance(s, And):
        return And(tuple(_subst(a, var, t) for a in s.args))
    if isinstance(s, Or):
        return Or(tuple(_subst(a, var, t) for a in s.args))
    if isinstance(s, Implies):
        return Implies(_subst(s.lhs, var, t), _subst(s.rhs, var, t))
    if isinstance(s, Forall):
        return s if var in s.vars else Forall(s.vars, _subst(s.body, var, t), s.pos)
    if isinstance(s, Exists):
        return s if var in s.vars else Exists(s.vars, _subst(s.body, var, t))
    raise TypeError(f"not a term or formula: {s!r}")


def replace_terms(s: Node, mapping: dict) -> Node:
    """Simultaneously replace whole sub-terms (e.g. applications) by terms."""
    if isinstance(s, Term) and s in mapping:
        return mapping[s]
    if isinstance(s, (IntConst, Const, Var, BoolConst, BoolVar)):
        return s
    if isinstance(s, Add):
        return Add(replace_terms(s.left, mapping), replace_terms(s.right, mapping))
    if isinstance(s, Mul):
        return Mul(s.coeff, replace_terms(s.t, mapping))
    if isinstance(s, Neg):
        return Neg(replace_terms(s.t, mapping))
    if isinstance(s, App):
        return App(s.fsym, replace_terms(s.arg, mapping), s.pos)
    if isinstance(s, Atom):
        return Atom(s.rel, replace_terms(s.lhs, mapping), replace_terms(s.rhs, mapping), s.pos)
    if isinstance(s, Not):
        return Not(replace_terms(s.arg, mapping))
    if isinstance(s, And):
        return And(tuple(replace_terms(a, mapping) for a in s.args))
    if isinstance(s, Or):
        return Or(tuple(replace_terms(a, mapping) for a in s.args))
    if isinstance(s, Implies):
        return Implies(replace_terms(s.lhs, mapping), replace_terms(s.rhs, mapping))
    if isinstance(s, Forall):
        return Forall(s.vars, replace_terms(s.body, mapping), s.pos)
    if isinstance(s, Exists):
        return Exists(s.vars, replace_terms(s.body, mapping))
    raise TypeError(f"not a term or formula: {s!r}")


def rename_var(s: Node, old: str, new: str) -> Node:
    return substitute(s, old, Var(new))


# -- linear normal form -----------------------------------------------------

def linearize(t: Term) -> tuple[dict, int]:
    """Return ``(coeffs, k)`` with ``t == sum(c * atom) + k``.

    Atoms are Var, Const and App nodes; zero coefficients are dropped, so
    syntactically identical applications cancel.
    """
    coeffs: dict = {}
    k = _lin(t, 1, coeffs)
    return {a: c for a, c in coeffs.items() if c != 0}, k


def _lin(t, scale, coeffs):
    if isinstance(t, IntConst):
        return scale * t.value
    if isinstance(t, (Var, Const, App)):
        coeffs[t] = coeffs.get(t, 0) + scale
        return 0
    if isinstance(t, Add):
        return _lin(t.left, scale, coeffs) + _lin(t.right, scale, coeffs)
    if isinstance(t, Mul):
        return _lin(t.t, scale * t.coeff, coeffs)
    if isinstance(t, Neg):
        return _lin(t.t, -scale, coeffs)
    raise TypeError(f"not a term: {t!r}")


def var_coefficient(t: Term, var: str) -> int:
    coeffs, _ = linearize(t)
    return coeffs.get(Var(var), 0)


# -- ground evaluation ------------------------------------------------------

def _resolve(coeffs: dict, k: int, env) -> int | None:
    """Evaluate a linear form, merging atoms that denote the same cell."""
    by_cell: dict = {}
    for atom, c in coeffs.items():
        if isinstance(atom, Var):
            raise ValueError(f"variable {atom.name} in ground evaluation")
        if isinstance(atom, Const):
            cell = Cell(atom.name)
        else:
            n = eval_ground(atom.arg, env)
            if n is None:
                return None
            cell = Cell(atom.fsym, n)
        by_cell[cell] = by_cell.get(cell, 0) + c
    total = k
    for cell, c in by_cell.items():
        if c == 0:
            continue
        v = env.get(cell)
        if v is None:
            return None
        total += c * v
    return total


def eval_ground(t: Term, env) -> int | None:
    """Value of a variable-free term under a cell interpretation, or None."""
    coeffs, k = linearize(t)
    return _resolve(coeffs, k, env)


_COMPARE = {
    "=": lambda d: d == 0,
    "!=": lambda d: d != 0,
    "<": lambda d: d < 0,
    "<=": lambda d: d <= 0,
    ">": lambda d: d > 0,
    ">=": lambda d: d >= 0,
}


def eval_formula(phi: Formula, env) -> bool | None:
    """Three-valued evaluation; None stands for undefined."""
    if isinstance(phi, BoolConst):
        return phi.value
    if isinstance(phi, BoolVar):
        v = env.get(Cell(phi.name))
        return None if v is None else bool(v)
    if isinstance(phi, Atom):
        coeffs, k = linearize(Add(phi.lhs, Neg(phi.rhs)))
        d = _resolve(coeffs, k, env)
        return None if d is None else _COMPARE[phi.rel](d)
    if isinstance(phi, Not):
        v = eval_formula(phi.arg, env)
        return None if v is None else not v
    if isinstance(phi, And):
        vals = [eval_formula(a, env) for a in phi.args]
        if False in vals:
            return False
        return None if None in vals else True
    if isinstance(phi, Or):
        vals = [eval_formula(a, env) for a in phi.args]
        if True in vals:
            return True
        return None if None in vals else False
    if isinstance(phi, Implies):
        return eval_formula(Or((Not(phi.lhs), phi.rhs)), env)
    raise ValueError(f"cannot evaluate quantified formula {phi}")


# -- printing ---------------------------------------------------------------

_SIMPLE_SYMBOL = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*\Z")


def symbol(name: str) -> str:
    if _SIMPLE_SYMBOL.match(name):
        return name
    return "|" + name + "|"


def numeral(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


_REL_SMT = {"=": "=", "<=": "<=", "<": "<", ">=": ">=", ">": ">"}


def to_smt(node: Node) -> str:
    """Print a term or formula in SMT-LIB v2 concrete syntax."""
    if isinstance(node, IntConst):
        return numeral(node.value)
    if isinstance(node, (Const, Var)):
        return symbol(node.name)
    if isinstance(node, Add):
        if isinstance(node.right, Neg):
            return f"(- {to_smt(node.left)} {to_smt(node.right.t)})"
        parts = [node.right]
        left = node.left
        while isinstance(left, Add) and not isinstance(left.right, Neg):
            parts.append(left.right)
            left = left.left
        parts.append(left)
        return "(+ " + " ".join(to_smt(p) for p in reversed(parts)) + ")"
    if isinstance(node, Mul):
        return f"(* {numeral(node.coeff)} {to_smt(node.t)})"
    if isinstance(node, Neg):
        return f"(- {to_smt(node.t)})"
    if isinstance(node, App):
        return f"({symbol(node.fsym)} {to_smt(node.arg)})"
    if isinstance(node, Atom):
        if node.rel == "!=":
            return f"(not (= {to_smt(node.lhs)} {to_smt(node.rhs)}))"
        return f"({_REL_SMT[node.rel]} {to_smt(node.lhs)} {to_smt(node.rhs)})"
    if isinstance(node, Not):
        return f"(not {to_smt(node.arg)})"
    if isinstance(node, And):
        return "(and " + " ".join(to_smt(a) for a in node.args) + ")"
    if isinstance(node, Or):
        return "(or " + " ".join(to_smt(a) for a in node.args) + ")"
    if isinstance(node, Implies):
        return f"(=> {to_smt(node.lhs)} {to_smt(node.rhs)})"
    if isinstance(node, (Forall, Exists)):
        q = "forall" if isinstance(node, Forall) else "exists"
        binders = " ".join(f"({symbol(v)} Int)" for v in node.vars)
        return f"({q} ({binders}) {to_smt(node.body)})"
    if isinstance(node, BoolVar):
        return symbol(node.name)
    if isinstance(node, BoolConst):
        return "true" if node.value else "false"
    raise TypeError(f"not a term or formula: {node!r}")
