import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indcert import ast as A
from indcert import encoder as E
from indcert.backend import Validity, check_validity
from indcert.fragment import load_problem
from tests.conftest import PIVOT, PROBLEM_2

UP, DOWN = E.UP, E.DOWN


def pattern(p, s, *keys):
    return E.SubsetPattern(s, frozenset(p.qterm(k) for k in keys))


def holds(phi, **consts):
    return A.eval_formula(phi, {A.Cell(k): v for k, v in consts.items()})


@pytest.fixture
def pivot():
    return load_problem(PIVOT)


def test_instantiate_q(p1):
    phi = E.instantiate_Q(p1, 9)
    assert phi == A.Atom("=", A.App("f", A.Add(A.num(9), A.num(1))),
                         A.Add(A.App("f", A.num(9)), A.num(1)))


def test_extremal_pivot_up(pivot):
    phi = E.extremal(pivot, pattern(pivot, UP, "(f (+ x 4))", "(g (+ x 2))"))
    assert holds(phi, c=0) and holds(phi, c=-5)
    assert not holds(phi, c=1)


def test_extremal_pivot_down(pivot):
    phi = E.extremal(pivot, pattern(pivot, DOWN, "(f (+ x 1))", "(h x)"))
    assert holds(phi, c=-1) and holds(phi, c=7)
    assert not holds(phi, c=-2)


def test_extremal_empty_pattern_is_true(pivot):
    assert E.extremal(pivot, E.SubsetPattern(UP, frozenset())) == A.TRUE


def test_extremal_two_selected_terms_must_agree(pivot):
    phi = E.extremal(pivot, pattern(pivot, UP, "(f (+ x c 3))", "(f (+ x 4))"))
    assert holds(phi, c=1)
    assert not holds(phi, c=2)


def test_extremal_negative_coefficient_flips_order():
    p = load_problem("""(declare-fun f (Int) Int)
    (assert (forall ((x Int)) (= (f (- 3 x)) (+ (f (- 5 x)) 1))))""")
    # under x -> -x the cell f(3 - x) is the one that moves up
    assert holds(E.extremal(p, pattern(p, UP, "(f (- 3 x))")))
    assert not holds(E.extremal(p, pattern(p, UP, "(f (- 5 x))")))


@pytest.mark.needs_solver
def test_propagability_problem_1(cfg, p1):
    for s, key in ((UP, "(f (+ x 1))"), (DOWN, "(f x)")):
        phi = E.propagability(p1, pattern(p1, s, key))
        assert check_validity(cfg, phi) is Validity.VALID


@pytest.mark.needs_solver
def test_propagability_invalid_conjunction(cfg):
    p = load_problem("""(declare-fun f (Int) Int)
    (assert (forall ((x Int)) (and (= (f (+ x 1)) (+ (f x) 1)) (= (f (+ x 1)) (* 2 (f x))))))""")
    phi = E.propagability(p, pattern(p, UP, "(f (+ x 1))"))
    assert check_validity(cfg, phi) is Validity.INVALID


@pytest.mark.needs_solver
def test_propagability_problem_2_down(cfg):
    p = load_problem(PROBLEM_2)
    phi = E.propagability(p, pattern(p, DOWN, "(f (- x 1))"))
    assert check_validity(cfg, E.close_over_constants(phi)) is Validity.VALID


def test_propagability_shares_one_witness_per_symbol(pivot):
    phi = E.propagability(pivot, pattern(pivot, UP, "(f (+ x c 3))", "(f (+ x 4))"))
    assert isinstance(phi, A.Forall) and isinstance(phi.body, A.Exists)
    assert len(phi.body.vars) == 1


def test_propagability_names_avoid_collisions():
    p = load_problem("""(declare-const u!0 Int)(declare-fun f (Int) Int)
    (assert (forall ((x Int)) (= (f (+ x 1)) (+ (f x) u!0))))""")
    phi = E.propagability(p, pattern(p, UP, "(f (+ x 1))"))
    assert "u!0" not in phi.vars
    assert "u!0" in A.constants(phi)


@pytest.mark.parametrize("B, s, key, ok", [
    ((0, 3), UP, "(f (+ x 1))", False),
    ((0, 4), UP, "(f (+ x 1))", True),
    ((-4, 4), DOWN, "(f x)", True),
    ((4, 4), DOWN, "(f x)", False),
])
def test_clash_problem_1(p1, B, s, key, ok):
    assert holds(E.clash(p1, pattern(p1, s, key), B)) is ok


def test_psi_is_conjunction(p1):
    S = pattern(p1, UP, "(f (+ x 1))")
    phi = E.psi(p1, UP, S, (-4, 4))
    assert phi == A.conj(E.extremal(p1, S), E.propagability(p1, S), E.clash(p1, S, (-4, 4)))


def test_blocking_clause_excludes_only_that_assignment(pivot):
    svars = E.selector_vars(pivot, UP)
    S = pattern(pivot, UP, "(f (+ x 4))", "(g (+ x 2))")
    clause = E.blocking_clause(svars, S)
    for bits in itertools.product((0, 1), repeat=len(svars)):
        env = {A.Cell(v.name): b for v, b in zip(svars, bits)}
        chosen = frozenset(v.term for v, b in zip(svars, bits) if b)
        assert A.eval_formula(clause, env) is (chosen != S.selected)


def test_blocking_clause_without_terms():
    assert E.blocking_clause([], E.SubsetPattern(UP, frozenset())) == A.FALSE


def test_selector_names_are_fresh(pivot):
    names = [v.name for s in (UP, DOWN) for v in E.selector_vars(pivot, s)]
    assert len(set(names)) == len(names) == 2 * len(pivot.qterms)


def test_pattern_from_model(pivot):
    svars = E.selector_vars(pivot, DOWN)
    model = {v.name: v.term.fsym == "h" for v in svars}
    assert E.pattern_from_model(svars, model, DOWN) == pattern(pivot, DOWN, "(h x)")


def test_fix_and_close_constants(pivot):
    phi = E.extremal(pivot, pattern(pivot, UP, "(f (+ x 4))"))
    assert not A.constants(E.fix_constants(phi, {"c": 0}))
    closed = E.close_over_constants(phi)
    assert isinstance(closed, A.Forall) and not A.constants(closed)


# -- the selector encoding agrees with the direct conditions -----------------

def _selector_env(svars, chosen, consts):
    env = {A.Cell(v.name): v.term in chosen for v in svars}
    env.update({A.Cell(k): v for k, v in consts.items()})
    return env


@settings(max_examples=60, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(0, 6), st.sampled_from([UP, DOWN]))
def test_selector_encoding_matches_extremal_and_clash(cv, lo, width, s):
    p = load_problem(PIVOT.replace("(assert (forall", "(assert (= (f 2) (g (- 1))))\n(assert (forall"))
    B = (lo, lo + width)
    phi, svars = E.psi_selector(p, s, B)
    consts = {"c": cv}
    for r in range(len(p.qterms) + 1):
        for chosen in itertools.combinations(p.qterms, r):
            S = E.SubsetPattern(s, frozenset(chosen))
            direct = A.conj(E.extremal(p, S), E.clash(p, S, B))
            env = _selector_env(svars, S.selected, consts)
            assert A.eval_formula(phi, env) == A.eval_formula(direct, env)


def test_selector_forbids_mixed_offsets_within_symbol(pivot):
    phi, svars = E.psi_selector(pivot, UP, (0, 0))
    chosen = {pivot.qterm("(f (+ x 4))"), pivot.qterm("(f (+ x 1))")}
    assert A.eval_formula(phi, _selector_env(svars, chosen, {"c": 0})) is False


def test_selector_zero_coefficient_never_selected():
    p = load_problem("""(declare-const c Int)(declare-fun f (Int) Int)(declare-fun g (Int) Int)
    (assert (forall ((x Int)) (= (g (+ x 1)) (+ (g x) (f c)))))""")
    phi, svars = E.psi_selector(p, UP, (0, 0))
    chosen = {p.qterm("(f c)")}
    assert A.eval_formula(phi, _selector_env(svars, chosen, {"c": 0})) is False
    assert E.extremal(p, E.SubsetPattern(UP, frozenset(chosen))) == A.FALSE


def test_selector_without_terms():
    p = load_problem("(declare-const c Int)(assert (= c 3))")
    assert E.psi_selector(p, UP, (0, 0)) == (A.TRUE, [])
