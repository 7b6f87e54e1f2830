import pytest

from corpus import BOUNDS, CORPUS
from symgc.oracle import M, NFA, alt, cat, concrete_language, determinize, gamma, star, word, words
from symgc.semantics import interpret
from symgc.symbolic import render_word
from symgc.syntax import parse_judgement


def rendered(ws):
    return sorted(render_word(w) for w in ws)


def lang(text, n, max_len, **kw):
    ctx, t, _ = parse_judgement(text)
    return concrete_language(ctx, t, n, max_len, **kw)


def test_nfa_combinators():
    a, b = M("run"), M("done")
    assert words(cat(word(a), word(b)), 4) == {(a, b)}
    assert words(alt(word(a), word(b)), 4) == {(a,), (b,)}
    assert words(star(word(a)), 3) == {(), (a,), (a, a), (a, a, a)}


def test_determinize_keeps_language():
    a, b = M("run"), M("done")
    nfa = alt(cat(star(word(a)), word(b)), cat(word(a), word(b)))
    d = determinize(nfa)
    assert isinstance(d, NFA) and words(d, 5) == words(nfa, 5)


def test_constants():
    assert rendered(lang("|- 5 : expint", 8, 4)) == ["q · 5"]
    assert rendered(lang("|- skip : com", 2, 4)) == ["run · done"]
    assert rendered(lang("x : expbool |- x : expbool", 2, 4)) == [
        "q · q^{x} · ff^{x} · ff", "q · q^{x} · tt^{x} · tt"]


def test_values_outside_the_domain_are_dropped():
    assert lang("|- 5 : expint", 2, 4) == set()
    assert gamma(interpret(*parse_judgement("|- 5 : expint")[:2]).automaton, 2, 4) == set()


def test_m1_zero_calls():
    ws = rendered(lang(CORPUS["m1"], 2, 4))
    assert ws == ["run · run^{f} · done^{f} · done"]


def test_local_abort_is_reachable():
    ws = rendered(lang(CORPUS["local"], 2, 6))
    assert ws == ["run · run^{abort} · done^{abort} · done"]


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_symbolic_model_matches_concrete(name):
    ctx, t, _ = parse_judgement(CORPUS[name])
    expected = concrete_language(ctx, t, 2, 12)
    assert gamma(interpret(ctx, t).automaton, 2, 12) == expected
    assert gamma(interpret(ctx, t, simplify=True).automaton, 2, 12) == expected


@pytest.mark.parametrize("name", BOUNDS)
def test_bounds_checked_model_matches_concrete(name):
    ctx, t, _ = parse_judgement(CORPUS[name])
    expected = concrete_language(ctx, t, 3, 12, bounds_check=True)
    assert gamma(interpret(ctx, t, bounds_check=True).automaton, 3, 12) == expected
