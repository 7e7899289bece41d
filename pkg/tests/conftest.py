import shutil
import sys
from pathlib import Path

import pytest

from indcert.backend import SolverConfig, default_solver
from indcert.fragment import load_problem

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
DATA = Path(__file__).resolve().parent / "data"

PROBLEM_1 = """
(declare-fun f (Int) Int)
(assert (= (f 4) 7))
(assert (forall ((x Int)) (= (f (+ x 1)) (+ (f x) 1))))
"""

PROBLEM_1_LOWER = """
(declare-fun f (Int) Int)
(assert (= (f 4) 7))
(assert (forall ((x Int)) (=> (<= 0 x) (= (f (+ x 1)) (+ (f x) 1)))))
"""

PROBLEM_2 = """
(declare-const d Int)
(declare-fun f (Int) Int)
(declare-fun g (Int) Int)
(assert (> d 1))
(assert (= (f 0) 0))
(assert (> (g 2) (f (+ d 1))))
(assert (forall ((x Int)) (= (f (- x 1)) (+ (f x) (g x) (g (+ x d))))))
"""

EXAMPLE_1 = """
(declare-const c Int)
(declare-fun f (Int) Int)
(declare-fun g (Int) Int)
(assert (= (f 0) 0))
(assert (forall ((x Int)) (= (f (+ (* (- 2) x) 3)) (- (+ (g x) (f (+ (* (- 2) x) c 1))) c))))
"""

SHIFTED = """
(declare-const c Int)
(declare-fun f (Int) Int)
(assert (>= c 5))
(assert (forall ((x Int)) (= (f (+ x c 1)) (+ (f (+ x c)) 1))))
"""

PIVOT = """
(declare-const c Int)
(declare-fun f (Int) Int)
(declare-fun g (Int) Int)
(declare-fun h (Int) Int)
(assert (forall ((x Int)) (= (+ (f (+ x c 3)) (f (+ x 4)) (f (+ x 1))) (+ (g (+ x 2)) (h x)))))
"""

FINITE_UNSAT = """
(declare-fun f (Int) Int)
(assert (= (f 0) 0))
(assert (= (f 1) 5))
(assert (forall ((x Int)) (= (f (+ x 1)) (f x))))
"""

NEEDS_INDUCTION = """
(declare-const c Int)
(declare-fun f (Int) Int)
(assert (= (f 0) 0))
(assert (not (= (f c) 0)))
(assert (forall ((x Int)) (= (f x) (f (+ x 1)))))
"""


def pytest_collection_modifyitems(config, items):
    if shutil.which(default_solver()) is None:
        skip = pytest.mark.skip(reason="no SMT solver executable found")
        for item in items:
            if "needs_solver" in item.keywords:
                item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line("markers", "needs_solver: test drives an external SMT solver")


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig()


@pytest.fixture
def p1():
    return load_problem(PROBLEM_1)


@pytest.fixture
def p1_lower():
    return load_problem(PROBLEM_1_LOWER)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("tests.test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        ok, detail = lines[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
