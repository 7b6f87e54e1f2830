import shutil
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symgc.solver import (
    ArrayDef,
    BuiltinSolver,
    Constraint,
    ExternalSolver,
    Read,
    Sat,
    Unknown,
    Unsat,
    make_backend,
    parse_sexprs,
    to_smtlib,
    validate_model,
)
from symgc.symbolic import BOOL, BinOp, Const, Not, SymName, Var

X1, X2, Z1, Z2 = (SymName(i, label=l) for i, l in enumerate(["X1", "X2", "Z1", "Z2"], 1))
X, Y = X1, SymName(9, label="Y")
F = SymName(20, array=True, hint="F")
R = SymName(21, label="R")


def c(*atoms):
    return Constraint(tuple(atoms))


def eq(a, b):
    return BinOp("=", a, b)


needs_z3 = pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not installed")
BACKENDS = [BuiltinSolver()] + ([ExternalSolver()] if shutil.which("z3") else [])

M1_CONDITION = c(BinOp("!=", Var(X), Var(Y)))
M2_FIRST = c(eq(Var(X1), Const(0)), BinOp(">=", Var(X1), Var(Z1)), BinOp(">", Var(X1), Const(0)))
M2_SECOND = c(eq(Var(X1), Const(0)), BinOp("<", Var(X1), Var(Z1)),
              eq(Var(X2), BinOp("+", Var(X1), Const(1))), BinOp(">=", Var(X2), Var(Z2)),
              BinOp(">", Var(X2), Const(0)))
ARRAY = Constraint((eq(Var(R), Const(7)),), (ArrayDef(F, Const(0), ((Const(1), Const(7)),)),),
                   (Read(F, Const(1), R),))


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
@pytest.mark.parametrize("constraint, sat", [
    (M1_CONDITION, True), (M2_FIRST, False), (M2_SECOND, True), (ARRAY, True), (c(), True),
])
def test_examples(backend, constraint, sat):
    r = backend.check(constraint)
    if sat:
        assert isinstance(r, Sat) and validate_model(constraint, r.model)
    else:
        assert isinstance(r, Unsat)


def test_builtin_models_are_small_and_deterministic():
    assert BuiltinSolver().check(M1_CONDITION).model == {X: 0, Y: 1}
    r = BuiltinSolver().check(M2_SECOND)
    assert r.model[X1] == 0 and r.model[X2] == 1


def test_validate_model():
    assert validate_model(M2_SECOND, {X1: 0, Z1: 1, X2: 1, Z2: 0})
    assert not validate_model(M1_CONDITION, {X: 0, Y: 0})
    assert validate_model(c(), {X: 5})
    assert not validate_model(M1_CONDITION, {X: 0})  # not total
    assert not validate_model(ARRAY, {R: 0})


def test_builtin_unknown_when_box_too_small():
    far = c(eq(BinOp("*", Var(X), Var(X)), Const(10_000)))
    assert isinstance(BuiltinSolver(bound=8).check(far), Unknown)
    assert isinstance(BuiltinSolver(bound=200).check(far), Sat)


def test_booleans():
    b = SymName(1, BOOL)
    r = BuiltinSolver().check(c(Var(b), eq(Var(X), Const(3))))
    assert r.model[b] is True and r.model[X] == 3
    assert isinstance(BuiltinSolver().check(c(Var(b), Not(Var(b)))), Unsat)


def test_euclidean_division_agrees():
    # -7 / 2 is -4 with remainder 1
    con = c(eq(Var(X), Const(-7)), eq(Var(Y), BinOp("/", Var(X), Const(2))),
            eq(Var(R), BinOp("%", Var(X), Const(2))))
    for backend in BACKENDS:
        r = backend.check(con)
        assert isinstance(r, Sat) and (r.model[Y], r.model[R]) == (-4, 1)


def test_division_by_zero_is_excluded():
    con = c(eq(Var(Y), BinOp("/", Const(1), Var(X))))
    for backend in BACKENDS:
        r = backend.check(con)
        assert isinstance(r, Sat) and r.model[X] != 0


def test_smtlib_is_reproducible():
    text = to_smtlib(M1_CONDITION)
    assert text == to_smtlib(M1_CONDITION)
    assert "(declare-const" in text and "(assert (distinct" in text and "(check-sat)" in text


def test_parse_sexprs():
    assert parse_sexprs("sat\n((i1 (- 3)) (b1 true))") == ["sat", [["i1", ["-", "3"]], ["b1", "true"]]]


def test_solver_answers_are_validated():
    assert isinstance(ExternalSolver.read_answer(M1_CONDITION, "sat\n((i1 0) (i9 0))"), Unknown)
    r = ExternalSolver.read_answer(M1_CONDITION, "sat\n((i1 2) (i9 (- 1)))")
    assert isinstance(r, Sat) and r.model == {X: 2, Y: -1}
    assert isinstance(ExternalSolver.read_answer(M1_CONDITION, "unsat\n"), Unsat)
    assert isinstance(ExternalSolver.read_answer(M1_CONDITION, "(error"), Unknown)


def test_missing_solver_is_unknown():
    r = ExternalSolver("definitely-not-a-solver-binary").check(M1_CONDITION)
    assert isinstance(r, Unknown) and "not found" in r.reason


def test_exec_backend_runs_any_command():
    script = "import sys; sys.stdin.read(); print('unsat')"
    backend = make_backend(f"exec:{sys.executable} -c \"{script}\"")
    assert isinstance(backend.check(M1_CONDITION), Unsat)
    with pytest.raises(ValueError):
        make_backend("yices-please")


@settings(max_examples=60, deadline=None)
@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(1, 8))
def test_builtin_monotone_in_bound(a, b, bound):
    con = c(eq(BinOp("+", Var(X), Var(Y)), Const(a)), BinOp("<=", Var(X), Const(b)))
    small, large = BuiltinSolver(bound=bound).check(con), BuiltinSolver(bound=bound + 5).check(con)
    if isinstance(small, Sat):
        assert isinstance(large, Sat)
