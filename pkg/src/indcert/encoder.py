"""Formulas for interval-based induction over the quantified variable.

Directions are the integers +1 (upward, increasing x) and -1 (downward).
A subset pattern selects argument terms of the quantified part; the
extremal, propagability and clash conditions decide whether the selected
cells can be propagated outward from an interval ``B = (b_min, b_max)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from indcert import ast as A
from indcert.fragment import FragmentProblem, QTerm

UP, DOWN = 1, -1


def direction_name(s: int) -> str:
    return "up" if s == UP else "down"


@dataclass(frozen=True)
class SubsetPattern:
    direction: int
    selected: frozenset  # of QTerm

    @property
    def key(self) -> frozenset:
        return frozenset(t.key for t in self.selected)


@dataclass(frozen=True)
class SelectorVar:
    term: QTerm
    direction: int
    name: str

    @property
    def atom(self) -> A.BoolVar:
        return A.BoolVar(self.name)


def strict(a: A.Term, b: A.Term, sign: int) -> A.Atom:
    """``a`` strictly before ``b`` in direction ``sign``: < for +, > for -."""
    return A.Atom("<" if sign > 0 else ">", a, b)


def ivbound(B, s: int) -> int:
    return B[1] if s == UP else B[0]


def instantiate_Q(p: FragmentProblem, z: int) -> A.Formula:
    return p.instance(z)


def _by_symbol(terms):
    out: dict = {}
    for t in terms:
        out.setdefault(t.fsym, []).append(t)
    return out


def extremal(p: FragmentProblem, S: SubsetPattern) -> A.Formula:
    """Selected terms agree and lie strictly beyond the other terms of their symbol."""
    parts = []
    selected = _by_symbol(S.selected)
    for fsym in p.qfuncs:
        chosen = [t for t in p.funcs[fsym].qterms if t in S.selected]
        if not chosen:
            continue
        info = p.funcs[fsym]
        if info.zero_coeff:
            # such a cell is relevant at every instance and can never be propagated
            return A.FALSE
        sign = info.sign * S.direction
        for t, t2 in itertools.combinations(chosen, 2):
            parts.append(A.eq(t.ground_offset, t2.ground_offset))
        for t in chosen:
            for other in info.qterms:
                if other not in selected[fsym]:
                    parts.append(strict(other.ground_offset, t.ground_offset, sign))
    return A.conj(*parts)


def _fresh(base: str, taken: set) -> str:
    name, i = base, 0
    while name in taken:
        i += 1
        name = f"{base}{i}"
    taken.add(name)
    return name


def _taken_names(p: FragmentProblem) -> set:
    return set(p.consts) | set(p.funcs) | {p.var}


def propagability(p: FragmentProblem, S: SubsetPattern) -> A.Formula:
    """``forall x, u. exists v. Q'`` with non-selected terms as u, selected as v.

    All selected terms of one symbol denote the same cell (the extremal
    condition forces their arguments equal), so they share one v.
    """
    taken = _taken_names(p)
    mapping: dict = {}
    us, vs = [], []
    v_of_symbol: dict = {}
    for i, t in enumerate(p.qterms):
        if t in S.selected:
            if t.fsym not in v_of_symbol:
                v_of_symbol[t.fsym] = _fresh(f"v!{t.fsym}", taken)
                vs.append(v_of_symbol[t.fsym])
            mapping[t.app] = A.Var(v_of_symbol[t.fsym])
        else:
            name = _fresh(f"u!{i}", taken)
            us.append(name)
            mapping[t.app] = A.Var(name)
    body = A.replace_terms(p.Q, mapping)
    if vs:
        body = A.Exists(tuple(vs), body)
    return A.Forall((p.var, *us), body)


def clash(p: FragmentProblem, S: SubsetPattern, B) -> A.Formula:
    """Propagated boundary cells stay strictly beyond every ground argument in F."""
    parts = []
    bound = A.num(ivbound(B, S.direction))
    for t in p.qterms:
        if t not in S.selected:
            continue
        info = p.funcs[t.fsym]
        sign = info.sign * S.direction
        for a in info.f_args:
            parts.append(strict(a, t.at(bound), sign))
    return A.conj(*parts)


def psi(p: FragmentProblem, s: int, S: SubsetPattern, B) -> A.Formula:
    if S.direction != s:
        S = SubsetPattern(s, S.selected)
    return A.conj(extremal(p, S), propagability(p, S), clash(p, S, B))


def selector_vars(p: FragmentProblem, s: int) -> list:
    taken = _taken_names(p)
    tag = "up" if s == UP else "dn"
    return [SelectorVar(t, s, _fresh(f"sel_{tag}!{i}", taken)) for i, t in enumerate(p.qterms)]


def psi_selector(p: FragmentProblem, s: int, B, svars=None):
    """Selector encoding of the extremal and clash conditions for direction ``s``.

    Propagability is not expanded here; the engine enforces it lazily with
    blocking clauses.
    """
    if svars is None:
        svars = selector_vars(p, s)
    if not svars:
        return A.TRUE, []
    parts = []
    by_term = {v.term: v for v in svars}
    bound = A.num(ivbound(B, s))
    for fsym in p.qfuncs:
        info = p.funcs[fsym]
        if info.zero_coeff:
            parts.extend(A.Not(by_term[t].atom) for t in info.qterms)
            continue
        sign = info.sign * s
        for t, t2 in itertools.permutations(info.qterms, 2):
            pt, pt2 = by_term[t].atom, by_term[t2].atom
            parts.append(A.Implies(A.And((pt, pt2)), A.eq(t.ground_offset, t2.ground_offset)))
            parts.append(A.Implies(A.And((pt, A.Not(pt2))),
                                   strict(t2.ground_offset, t.ground_offset, sign)))
        for t in info.qterms:
            for a in info.f_args:
                parts.append(A.Implies(by_term[t].atom, strict(a, t.at(bound), sign)))
    return A.conj(*parts), svars


def blocking_clause(svars, pattern: SubsetPattern) -> A.Formula:
    """Exclude exactly the total assignment described by ``pattern``."""
    lits = []
    for v in svars:
        lits.append(A.Not(v.atom) if v.term in pattern.selected else v.atom)
    if not lits:
        return A.FALSE
    return lits[0] if len(lits) == 1 else A.Or(tuple(lits))


def pattern_from_model(svars, model, s: int) -> SubsetPattern:
    return SubsetPattern(s, frozenset(v.term for v in svars if model[v.name]))


# -- constants inside obligations -------------------------------------------

def fix_constants(phi: A.Formula, values: dict) -> A.Formula:
    """Replace every constant ``c`` by its value ``values[c]``."""
    mapping = {A.Const(c): A.num(v) for c, v in values.items()}
    return A.replace_terms(phi, mapping)


def close_over_constants(phi: A.Formula) -> A.Formula:
    """Universally quantify the constants left free in ``phi``."""
    names = A.constants(phi)
    if not names:
        return phi
    taken = set(names)
    renamed = {c: _fresh(f"k!{c}", taken) for c in names}
    body = A.replace_terms(phi, {A.Const(c): A.Var(v) for c, v in renamed.items()})
    return A.Forall(tuple(renamed.values()), body)
