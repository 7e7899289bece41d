import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indcert import ast as A
from indcert import smtlib
from indcert.errors import ArityTooHigh, SmtSyntaxError, UnsupportedConstruct
from tests.conftest import PROBLEM_1

f = lambda t: A.App("f", A.as_term(t))
x, c = A.Var("x"), A.Const("c")


# -- parsing -------------------------------------------------------------------

def test_parse_problem_1():
    phi = smtlib.parse(PROBLEM_1)
    expected = A.And((
        A.Atom("=", f(4), A.num(7)),
        A.Forall(("x",), A.Atom("=", f(A.Add(x, A.num(1))), A.Add(f(x), A.num(1)))),
    ))
    assert phi == expected


def test_parse_true():
    assert smtlib.parse("(assert true)") == A.TRUE


def test_parse_accepts_non_uniform_coefficients():
    text = "(declare-fun f (Int) Int)(assert (forall ((x Int)) (= (f (+ (* 2 x) 3)) (f (+ x 1)))))"
    phi = smtlib.parse(text)
    assert isinstance(phi, A.Forall)
    assert [A.var_coefficient(a.arg, "x") for a in A.apps(phi)] == [2, 1]


def test_parse_ignores_solver_commands():
    text = "(set-logic UFLIA)(set-info :status sat)(declare-const c Int)(assert (>= c 5))(check-sat)(exit)"
    assert smtlib.parse(text) == A.Atom(">=", c, A.num(5))


def test_negative_numeral_and_distinct():
    text = "(declare-const c Int)(assert (distinct c (- 3)))"
    assert smtlib.parse(text) == A.Atom("!=", c, A.num(-3))


def test_subtraction_and_negation():
    text = "(declare-const c Int)(assert (= (- c 1) (- c)))"
    phi = smtlib.parse(text)
    assert phi == A.Atom("=", A.Add(c, A.Neg(A.num(1))), A.Neg(c))


def test_nullary_function_is_a_constant():
    assert smtlib.parse("(declare-fun k () Int)(assert (= k 2))") == A.Atom("=", A.Const("k"), A.num(2))


@pytest.mark.parametrize("text, exc", [
    ("(assert (= 1", SmtSyntaxError),
    ("(assert (= y 1))", SmtSyntaxError),
    ("(declare-const a Bool)", UnsupportedConstruct),
    ("(declare-const a Int)(assert (= (ite true a 1) 1))", UnsupportedConstruct),
    ("(declare-const a Int)(assert (let ((b 1)) (= a b)))", UnsupportedConstruct),
    ("(declare-fun f (Int Int) Int)", ArityTooHigh),
    ("(declare-const a Int)(declare-const b Int)(assert (= (* a b) 1))", UnsupportedConstruct),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        smtlib.parse(text)


def test_syntax_error_has_position():
    with pytest.raises(SmtSyntaxError) as info:
        smtlib.parse("(declare-const c Int)\n(assert (= q 1))")
    assert info.value.position[0] == 2


def test_arity_error_is_also_unsupported():
    with pytest.raises(UnsupportedConstruct):
        smtlib.parse("(declare-fun f (Int Int) Int)")


# -- substitution ---------------------------------------------------------------

def test_substitute_numeral():
    phi = A.Atom("=", f(A.Add(x, A.num(1))), A.Add(f(x), A.num(1)))
    out = A.substitute(phi, "x", A.num(9))
    assert out == A.Atom("=", f(A.Add(A.num(9), A.num(1))), A.Add(f(A.num(9)), A.num(1)))


def test_substitute_term():
    assert A.substitute(x, "x", A.Add(c, A.num(1))) == A.Add(c, A.num(1))


def test_substitute_absent_variable():
    phi = A.Atom("=", A.App("g", A.Var("y")), A.num(0))
    assert A.substitute(phi, "x", A.num(5)) == phi


def test_substitute_respects_binding():
    phi = A.And((A.Atom("=", x, A.num(1)), A.Forall(("x",), A.Atom("=", x, A.num(2)))))
    out = A.substitute(phi, "x", A.num(7))
    assert out.args[0] == A.Atom("=", A.num(7), A.num(1))
    assert out.args[1] == phi.args[1]


# -- evaluation -----------------------------------------------------------------

def test_eval_ground_defined_cell():
    assert A.eval_ground(f(0), {A.Cell("f", 0): 7}) == 7


def test_eval_ground_undefined_cell():
    assert A.eval_ground(f(1), {A.Cell("f", 0): 7}) is None


def test_eval_ground_cancellation():
    assert A.eval_ground(A.sub(f(1), f(1)), {A.Cell("f", 0): 7}) == 0


def test_eval_ground_nested_argument():
    env = {A.Cell("c"): 2, A.Cell("f", 3): 10}
    assert A.eval_ground(A.Mul(3, f(A.Add(c, A.num(1)))), env) == 30


def test_eval_formula_constant():
    assert A.eval_formula(A.Atom(">=", c, A.num(5)), {A.Cell("c"): 5}) is True


def test_eval_formula_identical_sides():
    assert A.eval_formula(A.Atom("=", f(1), f(1)), {}) is True


def test_eval_formula_undefined():
    assert A.eval_formula(A.Atom("=", f(1), A.num(0)), {}) is None


def test_eval_formula_kleene():
    undef = A.Atom("=", f(1), A.num(0))
    assert A.eval_formula(A.Or((undef, A.TRUE)), {}) is True
    assert A.eval_formula(A.And((undef, A.FALSE)), {}) is False
    assert A.eval_formula(A.Implies(A.FALSE, undef), {}) is True
    assert A.eval_formula(A.Not(undef), {}) is None


def test_eval_formula_rejects_quantifier():
    with pytest.raises(ValueError):
        A.eval_formula(A.Forall(("x",), A.TRUE), {})


# -- printing -------------------------------------------------------------------

def test_print_forms():
    assert A.to_smt(A.num(-3)) == "(- 3)"
    assert A.to_smt(A.Atom("!=", c, A.num(0))) == "(not (= c 0))"
    assert A.to_smt(A.Add(c, A.Neg(A.num(1)))) == "(- c 1)"
    assert A.to_smt(A.Add(A.Add(x, c), A.num(1))) == "(+ x c 1)"
    assert A.to_smt(A.Mul(-2, x)) == "(* (- 2) x)"


def test_quoted_symbols_round_trip():
    text = "(declare-const |odd name| Int)(assert (= |odd name| 1))"
    phi = smtlib.parse(text)
    assert smtlib.parse(smtlib.to_script(phi)) == phi


# -- properties -----------------------------------------------------------------

NAMES = ("a", "b", "c")
FUNCS = ("f", "g")


def _terms(var_ok):
    leaves = [st.integers(-50, 50).map(A.num), st.sampled_from(NAMES).map(A.Const)]
    if var_ok:
        leaves.append(st.just(x))
    base = st.one_of(*leaves)

    def extend(inner):
        return st.one_of(
            st.tuples(inner, inner).map(lambda p: A.Add(*p)),
            st.tuples(st.integers(-5, 5).filter(lambda k: k not in (0, 1, -1)), inner)
              .map(lambda p: A.Mul(*p)),
            inner.map(A.Neg),
            st.tuples(st.sampled_from(FUNCS), base).map(lambda p: A.App(*p)),
        )
    return st.recursive(base, extend, max_leaves=6)


def _formulas(var_ok):
    atoms = st.builds(A.Atom, st.sampled_from(["=", "<=", "<", ">=", ">", "!="]),
                      _terms(var_ok), _terms(var_ok))

    def extend(inner):
        return st.one_of(
            inner.map(A.Not),
            st.lists(inner, min_size=2, max_size=3).map(lambda a: A.And(tuple(a))),
            st.lists(inner, min_size=2, max_size=3).map(lambda a: A.Or(tuple(a))),
            st.tuples(inner, inner).map(lambda p: A.Implies(*p)),
        )
    return st.recursive(atoms, extend, max_leaves=5)


def _normal(phi):
    # the printer folds negated numerals and nests additions n-ary
    return smtlib.parse(smtlib.to_script(phi, NAMES, FUNCS))


def _full_env(phi, values):
    env = {A.Cell(k): values[k] for k in NAMES}
    for _ in range(3):
        for app in A.apps(phi):
            n = A.eval_ground(app.arg, env)
            if n is not None:
                env.setdefault(A.Cell(app.fsym, n), (7 * n + len(app.fsym)) % 11 - 5)
    return env


@settings(max_examples=150, deadline=None)
@given(_formulas(var_ok=True), _formulas(var_ok=False))
def test_round_trip(body, ground):
    phi = A.And((ground, A.Forall(("x",), body)))
    once = _normal(phi)
    # parser output is already in printed normal form
    assert _normal(once) == once


@settings(max_examples=150, deadline=None)
@given(_formulas(var_ok=False), st.fixed_dictionaries({k: st.integers(-9, 9) for k in NAMES}))
def test_round_trip_preserves_meaning(phi, values):
    once = _normal(phi)
    env = _full_env(phi, values)
    assert A.eval_formula(once, env) == A.eval_formula(phi, env)


@settings(max_examples=150, deadline=None)
@given(_terms(var_ok=False), st.dictionaries(st.sampled_from(NAMES), st.integers(-100, 100)))
def test_eval_ground_matches_naive(t, values):
    env = {A.Cell(k): v for k, v in values.items()}

    def naive(t):
        if isinstance(t, A.IntConst):
            return t.value
        if isinstance(t, A.Const):
            return values.get(t.name)
        if isinstance(t, A.Add):
            l, r = naive(t.left), naive(t.right)
            return None if l is None or r is None else l + r
        if isinstance(t, A.Mul):
            v = naive(t.t)
            return None if v is None else t.coeff * v
        if isinstance(t, A.Neg):
            v = naive(t.t)
            return None if v is None else -v
        return None

    if A.apps(t):
        return
    assert A.eval_ground(t, env) == naive(t)


@settings(max_examples=100, deadline=None)
@given(_formulas(var_ok=True), st.integers(-20, 20))
def test_substitute_idempotent(phi, k):
    once = A.substitute(phi, "x", A.num(k))
    assert A.substitute(once, "x", A.num(k)) == once
    assert "x" not in A.free_vars(once)
