import pytest
from hypothesis import given
from hypothesis import strategies as st

from symgc.symbolic import (
    BOOL,
    ArrayValue,
    BinOp,
    Bind,
    Cell,
    ConcreteMove,
    Const,
    EvaluationError,
    NamePool,
    Not,
    Select,
    SymName,
    Var,
    conj,
    ediv,
    emod,
    evaluate,
    mk,
    names_of,
    render_guard,
    render_word,
    simplify,
)

X, Y = SymName(1, label="X"), SymName(2, label="Y")
B = SymName(1, BOOL)


@given(st.integers(-50, 50), st.integers(-50, 50).filter(bool))
def test_euclidean_division(a, b):
    q, r = ediv(a, b), emod(a, b)
    assert a == b * q + r
    assert 0 <= r < abs(b)


def test_division_by_zero():
    with pytest.raises(EvaluationError):
        evaluate(BinOp("/", Const(1), Const(0)), {})


def test_const_keeps_bool_and_int_apart():
    assert Const(True) != Const(1)
    assert Const(False) != Const(0)
    assert len({Const(True), Const(1)}) == 2


def test_name_pool_minimal_unused():
    pool = NamePool()
    a, b = pool.fresh(), pool.fresh()
    c = pool.fresh(BOOL)
    assert (a.index, b.index, c.index) == (1, 2, 1)
    assert a != b and c.dtype == BOOL


def test_evaluate_and_select():
    arr = ArrayValue(0).store(2, 7)
    F = SymName(3, array=True, hint="F")
    env = {X: 2, Y: 5, F: arr}
    assert evaluate(BinOp("+", Select(F, Var(X)), Var(Y)), env) == 12
    assert evaluate(Select(F, Const(1)), env) == 0
    with pytest.raises(EvaluationError):
        evaluate(Var(SymName(9)), env)


values = st.integers(-6, 6)


@given(values, values, st.sampled_from(["+", "-", "*", "<", "<=", "=", "!="]))
def test_simplify_preserves_value(a, b, op):
    e = Not(BinOp(op, BinOp("+", Var(X), Const(0)), Var(Y))) if op in "<<==!=" else \
        BinOp(op, BinOp("+", Var(X), Const(0)), Var(Y))
    env = {X: a, Y: b}
    assert evaluate(simplify(e), env) == evaluate(e, env)


def test_simplify_pushes_negation():
    assert simplify(Not(BinOp("<", Var(X), Var(Y)))) == BinOp(">=", Var(X), Var(Y))
    assert simplify(Not(Not(Var(B)))) == Var(B)
    assert simplify(BinOp("and", Const(True), Var(B))) == Var(B)


def test_rendering():
    g = conj((BinOp("!=", Var(X), Var(Y)),), (BinOp("and", Const(True), Var(B)),))
    assert render_guard(g) == "X≠Y ∧ B1"
    assert render_guard(()) == "tt"
    assert str(Bind(X, BinOp("+", Var(Y), Const(1)))) == "?X=Y+1"


def test_names_of_includes_binding_sites():
    assert names_of(Bind(X, Var(Y))) == {X, Y}


def test_letters():
    q = mk("q", "x")
    assert q.is_question and q.tags == ("x",)
    a = mk("answer", "x", binder=X)
    assert not a.is_question and a.binder == X
    assert a.names() == set()  # only names read count
    assert mk("answer", payload=BinOp("+", Var(X), Var(Y))).names() == {X, Y}
    assert str(a) == "?X^{x}"
    cell = mk("read", Cell("a", Var(X)))
    assert str(cell) == "read^{a[X]}"


def test_concrete_moves():
    w = (ConcreteMove("run"), ConcreteMove("answer", 3, ("x",)), ConcreteMove("write", True, (1,)))
    assert render_word(w) == "run · 3^{x} · write(tt)^{1}"
    assert ConcreteMove("answer", 1) != ConcreteMove("answer", True)
    assert len({ConcreteMove("answer", 1), ConcreteMove("answer", 1)}) == 1
