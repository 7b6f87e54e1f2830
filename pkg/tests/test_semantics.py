import pytest

from corpus import CORPUS
from symgc.automata import plain_words
from symgc.oracle import gamma
from symgc.safety import has_unsafe_play, unsafe_plays, instantiate
from symgc.semantics import TranslationError, construct_strategy, free_identifier, interpret
from symgc.solver import BuiltinSolver, Sat
from symgc.symbolic import BinOp, Var
from symgc.syntax import (EXPINT, App, BinTerm, Context, Ident, Lam, Lit, Seq, Skip, fun,
                          parse_judgement)


def words(a, n=12):
    return {" · ".join(str(l) for l in w) for w in plain_words(a, n)}


def sem(text, **kw):
    ctx, t, _ = parse_judgement(text)
    return interpret(ctx, t, **kw).automaton


def test_constants():
    assert words(sem("|- skip : com")) == {"run · done"}
    assert words(sem("|- 5 : expint")) == {"q · 5"}


def test_free_expression_identifier():
    assert words(free_identifier("x", fun(EXPINT))) == {"q · q^{x} · ?X1^{x} · X1"}


def test_function_identifier_shape():
    a = free_identifier("f", fun(EXPINT, EXPINT))
    ws = sorted(words(a, 12), key=len)
    assert ws[0].startswith("q · q^{f} · ?") and ws[0].count("^{f,1}") == 0
    one_call = ws[1].split(" · ")
    assert one_call[2:6][0] == "q^{f,1}" and one_call[3] == "q^{1}"
    assert one_call[4].startswith("?") and one_call[4].endswith("^{1}")
    assert one_call[5].endswith("^{f,1}")


def test_construct_strategies():
    assert words(construct_strategy(";")) == {"run · run^{1} · done^{1} · run^{2} · done^{2} · done"}
    (deref,) = words(construct_strategy("!"))
    parts = deref.split(" · ")
    assert parts[:2] == ["q", "read^{1}"] and parts[2].startswith("?Z")
    assert parts[3] == parts[2][1:].split("^")[0]


def test_if_without_else():
    a = sem("b : expbool, c : com |- if b then c : com", simplify=True)
    shapes = {tuple(w.split(" · ")[i] for i in (0, 1, -1)) + (w.count(" · "),) for w in words(a)}
    assert ("run", "q^{b}", "done", 3) in shapes  # the else arm contributes nothing
    skips = [t for t in a.transitions if t.letter is not None and str(t.letter) == "done"
             and t.src != a.initial and any(str(g).startswith("¬") for g in t.guard)]
    assert skips


def test_local_variable_play_is_consistent():
    a = sem("abort : com |- new_int x := 0 in x := 1; if !x = 1 then abort : com")
    plays = list(unsafe_plays(a, 12))
    assert plays
    assert isinstance(BuiltinSolver().check(instantiate(plays[0]).constraint), Sat)


def test_untouched_local_only_initialises():
    plain = sem("c : com |- c : com")
    local = sem("c : com |- new_int x := 3 in c : com")
    assert words(plain) == words(local)


def test_array_literal_index_folds():
    a = sem("x[3] : varint |- !x[1] : expint", simplify=True)
    assert any("read^{x[1]}" in w for w in words(a))


def test_array_symbolic_length_guard():
    a = sem("x[k] : varint, e : expint |- !x[e] : expint", simplify=True)
    assert any(isinstance(g, BinOp) and g.op == "<" and isinstance(g.right, Var)
               and str(g.right) == "k" for t in a.transitions for g in t.guard)


def test_out_of_bounds_aborts_only_when_checked():
    text = "x[3] : varint, abort : com |- x[5] := 1 : com"
    assert not has_unsafe_play(sem(text))
    checked = sem(text, bounds_check=True)
    assert has_unsafe_play(checked)
    (play,) = list(unsafe_plays(checked, 12))
    assert isinstance(BuiltinSolver().check(instantiate(play).constraint), Sat)


def test_bounds_check_needs_abort():
    with pytest.raises(TranslationError):
        sem("x[3] : varint |- x[5] := 1 : com", bounds_check=True)


def test_rejects_non_beta_normal():
    t = App(Lam("y", EXPINT, Ident("y")), Lit(1))
    with pytest.raises(TranslationError):
        interpret(Context(()), t)


def test_top_level_lambda_becomes_argument():
    t = Lam("y", EXPINT, BinTerm("+", Ident("y"), Lit(1)))
    s = interpret(Context(()), t)
    assert s.tags.get(1) == "y"
    assert any("q^{1}" in w for w in words(s.automaton))


def _balanced(word) -> bool:
    answers = {"q": "answer", "run": "done", "read": "answer", "write": "ok"}
    stack = []
    for letter in word:
        base, tags = letter.move.base, letter.tags
        if base in answers:
            stack.append((answers[base], tags))
        elif not stack or stack.pop() != (base, tags):
            return False
    return not stack


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_plays_are_complete_and_bracketed(name):
    a = sem(CORPUS[name])
    assert all(_balanced(w) for w in plain_words(a, 14))


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_tracker_and_cell_elimination_agree(name):
    ctx, t, _ = parse_judgement(CORPUS[name])
    a = interpret(ctx, t).automaton
    b = interpret(ctx, t, elimination="cell").automaton
    assert gamma(a, 2, 14) == gamma(b, 2, 14)


@pytest.mark.parametrize("name", [n for n, s in CORPUS.items() if s.endswith(": com")])
def test_skip_is_a_unit(name):
    ctx, t, _ = parse_judgement(CORPUS[name])
    a = interpret(ctx, t).automaton
    b = interpret(ctx, Seq(Skip(), t)).automaton
    assert gamma(a, 2, 12) == gamma(b, 2, 12)
