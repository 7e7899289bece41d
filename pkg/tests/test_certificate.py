from dataclasses import replace

import pytest

from indcert import certificate as C
from indcert import engine
from indcert.backend import SolverConfig
from indcert.errors import MalformedCertificate
from indcert.fragment import DoublyBounded, LowerBounded, Unbounded, load_problem
from tests.conftest import CORPUS

GOLDEN = sorted((CORPUS / "certs").glob("*.cert"))

P1_LOWER_CERT = ("(certificate (interval 0 4) (guard (lower 0)) (consts) "
                 "(cells ((f 0) 3) ((f 1) 4) ((f 2) 5) ((f 3) 6) ((f 4) 7) ((f 5) 8)) "
                 "(select-up (f (+ x 1))) )")


def p1_lower_cert():
    cells = {("f", n): n + 3 for n in range(6)}
    return C.Certificate((0, 4), LowerBounded(0), {}, cells, ("(f (+ x 1))",), None)


@pytest.fixture(scope="module")
def p1_cert():
    from tests.conftest import PROBLEM_1
    p = load_problem(PROBLEM_1)
    return p, engine.solve(p).certificate


def test_serialize_problem_1_lower():
    assert C.serialize(p1_lower_cert()) == P1_LOWER_CERT


def test_serialize_empty_problem():
    assert C.serialize(C.Certificate((0, 0), Unbounded())) == \
        "(certificate (interval 0 0) (guard none) (consts) (cells) )"


def test_serialize_guards_and_constants():
    c = C.Certificate((-3, 2), DoublyBounded(-3, 9), {"d": -2, "c": 5}, {("g", -1): -7},
                      ("(g (+ x d))",), None, "z3")
    text = C.serialize(c)
    assert "(guard (bounded -3 9))" in text
    assert "(consts (c 5) (d -2))" in text
    assert text.endswith("(verified-by z3) )")
    assert C.deserialize(text) == c


def test_deserialize_accepts_smtlib_negation():
    text = "(certificate (interval (- 2) 0) (guard none) (consts (c (- 5))) (cells) )"
    c = C.deserialize(text)
    assert c.interval == (-2, 0) and c.consts == {"c": -5}


def test_deserialize_normalizes_selected_terms():
    text = "(certificate (interval 0 0) (guard none) (consts) (cells) (select-up (f (+  x\n 1))) )"
    assert C.deserialize(text).sel_up == ("(f (+ x 1))",)


@pytest.mark.parametrize("path", GOLDEN, ids=lambda p: p.name)
def test_golden_round_trip(path):
    c = C.load(path)
    assert C.deserialize(C.serialize(c)) == c


def test_golden_corpus_present():
    assert len(GOLDEN) == 104


def test_save_and_load(tmp_path):
    c = p1_lower_cert()
    C.save(c, tmp_path / "a.cert")
    assert C.load(tmp_path / "a.cert") == c


@pytest.mark.parametrize("text", [
    "",
    "(certificate",
    "(proof (interval 0 0))",
    "(certificate (interval 0 0) (guard none) (consts) )",
    "(certificate (interval 1 0) (guard none) (consts) (cells) )",
    "(certificate (interval 0) (guard none) (consts) (cells) )",
    "(certificate (guard none) (interval 0 0) (consts) (cells) )",
    "(certificate (interval 0 0) (guard (upper 3)) (consts) (cells) )",
    "(certificate (interval 0 0) (guard none) (consts (c x)) (cells) )",
    "(certificate (interval 0 0) (guard none) (consts) (cells ((f 0) 1) ((f 0) 2)) )",
    "(certificate (interval 0 0) (guard none) (consts) (cells (f 0 1)) )",
    "(certificate (interval 0 0) (guard none) (consts) (cells) (colour red) )",
    "(certificate (interval 0 0) (guard none) (consts) (cells) )(certificate)",
])
def test_malformed(text):
    with pytest.raises(MalformedCertificate):
        C.deserialize(text)


def test_malformed_has_position():
    with pytest.raises(MalformedCertificate) as info:
        C.deserialize("(certificate\n  (interval 0 0) (guard none) (consts) (cells) (colour red) )")
    assert info.value.position is not None and info.value.position[0] == 2


def test_certificate_rejects_empty_interval():
    with pytest.raises(ValueError):
        C.Certificate((1, 0), Unbounded())


# -- checking ---------------------------------------------------------------

@pytest.mark.needs_solver
def test_engine_certificate_accepted(p1_cert, cfg):
    p, cert = p1_cert
    v = C.check(p, cert, cfg)
    assert v.accepted and v.failures == []


@pytest.mark.needs_solver
def test_hand_certificate_accepted(p1_lower, cfg):
    assert C.check(p1_lower, p1_lower_cert(), cfg).accepted


@pytest.mark.needs_solver
def test_narrowed_interval_fails_clash(p1_cert, cfg):
    p, cert = p1_cert
    bad = replace(cert, interval=(cert.b_min, 3))
    assert C.check(p, bad, cfg).ids() == {C.CLASH}


@pytest.mark.needs_solver
def test_wrong_selection_fails_extremal(p1_cert, cfg):
    p, cert = p1_cert
    bad = replace(cert, sel_up=("(f x)",))
    assert C.EXTREMAL in C.check(p, bad, cfg).ids()


def test_perturbed_cell_fails_base(p1_cert):
    p, cert = p1_cert
    cells = dict(cert.cells)
    cells[("f", 0)] += 1
    v = C.check(p, replace(cert, cells=cells), propagability=False)
    assert v.ids() == {C.BASE}


def test_missing_cell_fails_base(p1_cert):
    p, cert = p1_cert
    cells = dict(cert.cells)
    del cells[("f", 4)]
    assert C.check(p, replace(cert, cells=cells), propagability=False).ids() == {C.BASE}


def test_dropped_direction_fails_coverage(p1_cert):
    p, cert = p1_cert
    assert C.check(p, replace(cert, sel_down=None), propagability=False).ids() == {C.COVERAGE}


def test_lower_guard_interval_must_start_at_bound(p1_lower):
    cert = p1_lower_cert()
    cells = dict(cert.cells)
    cells[("f", -1)] = 2
    bad = replace(cert, interval=(-1, 4), cells=cells)
    assert C.COVERAGE in C.check(p1_lower, bad, propagability=False).ids()


def test_unknown_term_fails_selection(p1_cert):
    p, cert = p1_cert
    bad = replace(cert, sel_up=("(f (+ x 7))",))
    assert C.check(p, bad, propagability=False).ids() == {C.SELECTION}


def test_down_selection_under_lower_guard(p1_lower):
    bad = replace(p1_lower_cert(), sel_down=("(f x)",))
    assert C.SELECTION in C.check(p1_lower, bad, propagability=False).ids()


def test_solver_failure_is_a_rejection(p1_lower):
    v = C.check(p1_lower, p1_lower_cert(), SolverConfig("/nonexistent/solver"))
    assert not v.accepted and v.ids() == {C.PROPAGABILITY}


@pytest.mark.needs_solver
def test_invalid_propagability_is_reported(cfg):
    p = load_problem("""(declare-fun f (Int) Int)(assert (= (f 0) 1))
    (assert (forall ((x Int)) (=> (<= 0 x) (= (f (+ x 1)) (* 2 (f x))))))""")
    cert = C.Certificate((0, 0), LowerBounded(0), {}, {("f", 0): 1, ("f", 1): 2},
                         ("(f (+ x 1))",), None)
    assert C.check(p, cert, cfg).accepted
    # 2 f(x+1) = f(x) has no integer solution when f(x) is odd
    q = load_problem("""(declare-fun f (Int) Int)(assert (= (f 0) 2))
    (assert (forall ((x Int)) (=> (<= 0 x) (= (* 2 (f (+ x 1))) (f x)))))""")
    cert = C.Certificate((0, 0), LowerBounded(0), {}, {("f", 0): 2, ("f", 1): 1},
                         ("(f (+ x 1))",), None)
    assert C.check(q, cert, cfg).ids() == {C.PROPAGABILITY}


def test_failures_are_reported_separately(p1_cert):
    p, cert = p1_cert
    cells = dict(cert.cells)
    cells[("f", 0)] += 1
    bad = replace(cert, cells=cells, interval=(cert.b_min, 3), sel_down=None)
    assert C.check(p, bad, propagability=False).ids() == {C.BASE, C.CLASH, C.COVERAGE}


@pytest.mark.needs_solver
@pytest.mark.parametrize("path", GOLDEN[::13], ids=lambda p: p.name)
def test_golden_certificates_accepted(path, cfg):
    name, variant = path.name.split(".")[:2]
    problem = CORPUS / "generated" / f"{name}.{variant}.smt2"
    p = load_problem(problem.read_text())
    assert C.check(p, C.load(path), cfg).accepted
