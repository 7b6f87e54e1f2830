import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symgc.syntax import (
    COM,
    EXPINT,
    App,
    ArrayDecl,
    ArrayElem,
    Assign,
    BinTerm,
    Deref,
    Ident,
    If,
    Lam,
    Lit,
    NewArray,
    NewVar,
    NotTerm,
    ParseError,
    Seq,
    Skip,
    TypeCheckError,
    UnsupportedConstruct,
    While,
    beta_normalize,
    fun,
    is_beta_normal,
    parse_judgement,
    parse_term,
    pretty,
    pretty_judgement,
    typecheck,
)

names = st.sampled_from(["x", "y", "f", "v", "abort"])
lits = st.one_of(st.integers(0, 20), st.booleans()).map(Lit)


def _terms(children):
    return st.one_of(
        st.builds(BinTerm, st.sampled_from(["+", "-", "*", "/", "%", "=", "!=", "<", "<=",
                                            ">", ">=", "and", "or"]), children, children),
        st.builds(NotTerm, children),
        st.builds(Seq, children, children),
        st.builds(If, children, children, children),
        st.builds(While, children, children),
        st.builds(Assign, names.map(Ident), children),
        st.builds(Deref, names.map(Ident)),
        st.builds(App, names.map(Ident), children),
        st.builds(ArrayElem, st.just("a"), children),
        st.builds(NewVar, st.sampled_from(["int", "bool"]), st.just("z"), lits, children),
        st.builds(NewArray, st.just("int"), st.just("b"), st.integers(1, 4),
                  st.just(Lit(0)), children),
    )


terms = st.recursive(st.one_of(names.map(Ident), lits, st.just(Skip())), _terms, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(terms)
def test_pretty_parse_round_trip(t):
    assert parse_term(pretty(t)) == t


def test_parse_m1():
    ctx, t, ty = parse_judgement(
        "f : com -> com, abort : com, x : expint, y : expint |- f (if x != y then abort) : com")
    assert ctx.lookup("f") == fun(COM, COM)
    assert ty == fun(COM)
    assert t == App(Ident("f"), If(BinTerm("!=", Ident("x"), Ident("y")), Ident("abort"), Skip()))
    assert typecheck(ctx, t) == fun(COM)


def test_judgement_round_trip():
    text = "x[k] : varint, y : expint, abort : com |- new_int i := 0 in while !i < k do i := !i + 1 : com"
    ctx, t, ty = parse_judgement(text)
    ctx2, t2, ty2 = parse_judgement(pretty_judgement(ctx, t, ty))
    assert (ctx2, t2, ty2) == (ctx, t, ty)
    assert ctx.lookup("x") == ArrayDecl("int", "k")


def test_unicode_and_comments():
    a = parse_term("# leading comment\nx ≠ y ∧ ¬b")
    b = parse_term("x != y && not b")
    assert a == b


@pytest.mark.parametrize("text, err", [
    ("x : expint |- x := 1 : com", TypeCheckError),
    ("c : com |- c + 1 : expint", TypeCheckError),
    ("|- y : expint", TypeCheckError),
    ("abort : expint |- skip : com", ParseError),
    ("x : expint, x : com |- skip : com", ParseError),
    ("|- (1 : expint", ParseError),
    ("|- new_int x := 0 in mkvar : com", UnsupportedConstruct),
])
def test_rejects(text, err):
    with pytest.raises(err):
        ctx, t, _ = parse_judgement(text)
        typecheck(ctx, t)


def test_error_positions():
    with pytest.raises(ParseError) as info:
        parse_term("x +\n  ) ")
    assert "2:" in str(info.value)


def test_beta_normalize():
    t = App(Lam("y", EXPINT, BinTerm("+", Ident("y"), Ident("y"))), Lit(3))
    assert not is_beta_normal(t)
    n = beta_normalize(t)
    assert is_beta_normal(n)
    assert n == BinTerm("+", Lit(3), Lit(3))


def test_beta_normalize_avoids_capture():
    # (λy. λx. y + x) x  must not capture the free x
    t = App(Lam("y", EXPINT, Lam("x", EXPINT, BinTerm("+", Ident("y"), Ident("x")))), Ident("x"))
    n = beta_normalize(t)
    assert isinstance(n, Lam) and n.name != "x"
    assert n.body == BinTerm("+", Ident("x"), Ident(n.name))
