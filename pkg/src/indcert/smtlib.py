"""Reader for the SMT-LIB v2 input subset and a matching script printer.

Canonical forms produced by the reader: ``(- 5)`` becomes the numeral -5,
and both ``(not (= a b))`` and ``(distinct a b)`` become a ``!=`` atom.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from indcert import ast as A
from indcert.errors import ArityTooHigh, SmtSyntaxError, UnsupportedConstruct


@dataclass(frozen=True)
class Token:
    text: str
    pos: tuple
    quoted: bool = False


_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>;[^\n]*)
      | (?P<lpar>\()
      | (?P<rpar>\))
      | (?P<qsym>\|[^|]*\|)
      | (?P<string>"(?:[^"]|"")*")
      | (?P<atom>[^\s()|";]+)
    """,
    re.VERBOSE,
)


def tokenize(text: str):
    line, line_start = 1, 0
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise SmtSyntaxError(f"unexpected character {text[i]!r}", (line, i - line_start + 1))
        kind = m.lastgroup
        pos = (line, i - line_start + 1)
        chunk = m.group()
        if kind == "lpar":
            yield "(", pos
        elif kind == "rpar":
            yield ")", pos
        elif kind == "qsym":
            yield Token(chunk[1:-1], pos, quoted=True), pos
        elif kind in ("atom", "string"):
            yield Token(chunk, pos), pos
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = i + chunk.rindex("\n") + 1
        i = m.end()


class SList(list):
    """A parenthesized s-expression remembering where it started."""

    pos: tuple = (0, 0)


def read_sexprs(text: str) -> list:
    stack: list = [SList()]
    for tok, pos in tokenize(text):
        if tok == "(":
            lst = SList()
            lst.pos = pos
            stack.append(lst)
        elif tok == ")":
            if len(stack) == 1:
                raise SmtSyntaxError("unbalanced ')'", pos)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SmtSyntaxError("missing ')'", stack[-1].pos)
    return stack[0]


def _pos(e):
    return e.pos if isinstance(e, (Token, SList)) else None


def _head(e):
    if isinstance(e, SList) and e and isinstance(e[0], Token) and not e[0].quoted:
        return e[0].text
    return None


_NUMERAL = re.compile(r"(0|[1-9][0-9]*)\Z")

_IGNORED = {"set-logic", "set-info", "set-option", "check-sat", "get-model", "exit"}
_UNSUPPORTED_OPS = {"let", "ite", "div", "mod", "abs", "exists", "!", "select", "store",
                    "to_real", "to_int", "is_int", "/", "xor", "match"}


class _Reader:
    def __init__(self):
        self.consts: list = []
        self.funcs: list = []
        self.asserts: list = []

    # commands
    def command(self, e):
        head = _head(e)
        if head is None:
            raise SmtSyntaxError("expected a command", _pos(e))
        if head in _IGNORED:
            return
        if head == "declare-const":
            self._expect_len(e, 3)
            self._int_sort(e[2])
            self._declare(e[1], 0, e)
        elif head == "declare-fun":
            self._expect_len(e, 4)
            if not isinstance(e[2], SList):
                raise SmtSyntaxError("expected a sort list", _pos(e[2]))
            for s in e[2]:
                self._int_sort(s)
            self._int_sort(e[3])
            self._declare(e[1], len(e[2]), e)
        elif head == "assert":
            self._expect_len(e, 2)
            self.asserts.append(self.formula(e[1], {}))
        else:
            raise UnsupportedConstruct(head, e.pos)

    def _expect_len(self, e, n):
        if len(e) != n:
            raise SmtSyntaxError(f"{_head(e)} expects {n - 1} arguments", e.pos)

    def _int_sort(self, s):
        if not (isinstance(s, Token) and s.text == "Int"):
            name = s.text if isinstance(s, Token) else "compound sort"
            raise UnsupportedConstruct(f"sort {name}", _pos(s))

    def _declare(self, name_tok, arity, e):
        if not isinstance(name_tok, Token):
            raise SmtSyntaxError("expected a symbol", _pos(name_tok))
        name = name_tok.text
        if name in self.consts or name in self.funcs:
            raise SmtSyntaxError(f"symbol {name} declared twice", name_tok.pos)
        if arity == 0:
            self.consts.append(name)
        elif arity == 1:
            self.funcs.append(name)
        else:
            raise ArityTooHigh(name, arity, e.pos)

    # formulas
    def formula(self, e, scope) -> A.Formula:
        if isinstance(e, Token):
            if e.text == "true" and not e.quoted:
                return A.TRUE
            if e.text == "false" and not e.quoted:
                return A.FALSE
            raise SmtSyntaxError(f"expected a formula, got {e.text}", e.pos)
        head = _head(e)
        if head is None:
            raise SmtSyntaxError("expected a formula", _pos(e))
        args = e[1:]
        if head == "not":
            self._arity(e, 1)
            inner = self.formula(args[0], scope)
            if isinstance(inner, A.Atom) and inner.rel == "=":
                return A.Atom("!=", inner.lhs, inner.rhs, e.pos)
            return A.Not(inner)
        if head == "and":
            fs = tuple(self.formula(a, scope) for a in args)
            return A.And(fs) if fs else A.TRUE
        if head == "or":
            fs = tuple(self.formula(a, scope) for a in args)
            return A.Or(fs) if fs else A.FALSE
        if head == "=>":
            if len(args) < 2:
                raise SmtSyntaxError("=> expects at least 2 arguments", e.pos)
            fs = [self.formula(a, scope) for a in args]
            out = fs[-1]
            for f in reversed(fs[:-1]):
                out = A.Implies(f, out)
            return out
        if head == "forall":
            return self._forall(e, scope)
        if head == "distinct":
            if len(args) != 2:
                raise UnsupportedConstruct("distinct with more than two arguments", e.pos)
            return A.Atom("!=", self.term(args[0], scope), self.term(args[1], scope), e.pos)
        if head in ("=", "<=", "<", ">=", ">"):
            if len(args) < 2:
                raise SmtSyntaxError(f"{head} expects at least 2 arguments", e.pos)
            ts = [self.term(a, scope) for a in args]
            atoms = tuple(A.Atom(head, ts[i], ts[i + 1], e.pos) for i in range(len(ts) - 1))
            return atoms[0] if len(atoms) == 1 else A.And(atoms)
        if head in _UNSUPPORTED_OPS:
            raise UnsupportedConstruct(head, e.pos)
        raise SmtSyntaxError(f"expected a formula, got ({head} ...)", e.pos)

    def _arity(self, e, n):
        if len(e) - 1 != n:
            raise SmtSyntaxError(f"{_head(e)} expects {n} argument(s)", e.pos)

    def _forall(self, e, scope):
        self._arity(e, 2)
        binders = e[1]
        if not isinstance(binders, SList) or not binders:
            raise SmtSyntaxError("expected a non-empty binder list", _pos(binders))
        names = []
        for b in binders:
            if not (isinstance(b, SList) and len(b) == 2 and isinstance(b[0], Token)):
                raise SmtSyntaxError("malformed binder", _pos(b))
            self._int_sort(b[1])
            names.append(b[0].text)
        inner = dict(scope)
        for n in names:
            inner[n] = True
        return A.Forall(tuple(names), self.formula(e[2], inner), e.pos)

    # terms
    def term(self, e, scope) -> A.Term:
        if isinstance(e, Token):
            text = e.text
            if not e.quoted and _NUMERAL.match(text):
                return A.IntConst(int(text))
            if not e.quoted and re.match(r"[0-9]", text):
                raise UnsupportedConstruct(f"numeral {text}", e.pos)
            if text in scope:
                return A.Var(text)
            if text in self.consts:
                return A.Const(text)
            if text in self.funcs:
                raise SmtSyntaxError(f"function {text} used without an argument", e.pos)
            raise SmtSyntaxError(f"undeclared symbol {text}", e.pos)
        head = _head(e)
        if head is None:
            raise SmtSyntaxError("expected a term", _pos(e))
        args = e[1:]
        if head == "+":
            if not args:
                raise SmtSyntaxError("+ expects arguments", e.pos)
            return A.add(*[self.term(a, scope) for a in args])
        if head == "-":
            if not args:
                raise SmtSyntaxError("- expects arguments", e.pos)
            ts = [self.term(a, scope) for a in args]
            if len(ts) == 1:
                t = ts[0]
                if isinstance(t, A.IntConst):
                    # keeps parse(print(t)) a fixpoint: no Neg over a numeral
                    return A.IntConst(-t.value)
                return A.Neg(t)
            out = ts[0]
            for t in ts[1:]:
                out = A.Add(out, A.Neg(t))
            return out
        if head == "*":
            if len(args) < 2:
                raise SmtSyntaxError("* expects at least 2 arguments", e.pos)
            ts = [self.term(a, scope) for a in args]
            rest = [t for t in ts if not isinstance(t, A.IntConst)]
            if len(rest) > 1:
                raise UnsupportedConstruct("non-linear multiplication", e.pos)
            if not rest:
                # all numerals: the last one plays the multiplied term
                rest = [ts[-1]]
                ts = ts[:-1]
            coeff = 1
            for t in ts:
                if isinstance(t, A.IntConst):
                    coeff *= t.value
            return A.Mul(coeff, rest[0])
        if head in self.funcs:
            if len(args) != 1:
                raise SmtSyntaxError(f"{head} expects 1 argument", e.pos)
            return A.App(head, self.term(args[0], scope), e.pos)
        if head in self.consts:
            raise SmtSyntaxError(f"constant {head} applied to arguments", e.pos)
        if head in _UNSUPPORTED_OPS:
            raise UnsupportedConstruct(head, e.pos)
        raise SmtSyntaxError(f"unknown function {head}", e.pos)


@dataclass
class Script:
    formula: A.Formula
    consts: list
    funcs: list


def parse_script(text: str) -> Script:
    r = _Reader()
    for e in read_sexprs(text):
        r.command(e)
    if len(r.asserts) == 1:
        phi = r.asserts[0]
    else:
        phi = A.conj(*r.asserts)
    return Script(phi, r.consts, r.funcs)


def parse(text: str) -> A.Formula:
    """Parse an SMT-LIB v2 script and return the conjunction of its assertions."""
    return parse_script(text).formula


def to_script(phi: A.Formula, consts=None, funcs=None, logic="UFLIA", check_sat=True) -> str:
    """Print a formula as a complete SMT-LIB script with declarations."""
    if consts is None:
        consts = A.constants(phi)
    if funcs is None:
        funcs = list(dict.fromkeys(a.fsym for a in A.apps(phi)))
    lines = []
    if logic:
        lines.append(f"(set-logic {logic})")
    for f in funcs:
        lines.append(f"(declare-fun {A.symbol(f)} (Int) Int)")
    for c in consts:
        lines.append(f"(declare-const {A.symbol(c)} Int)")
    conjuncts = phi.args if isinstance(phi, A.And) and _split_ok(phi) else (phi,)
    for f in conjuncts:
        lines.append(f"(assert {A.to_smt(f)})")
    if check_sat:
        lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _split_ok(phi):
    # splitting into several asserts re-parses to the same And only if no
    # conjunct is itself an And or True
    return len(phi.args) > 1 and not any(isinstance(a, A.And) or a == A.TRUE for a in phi.args)
