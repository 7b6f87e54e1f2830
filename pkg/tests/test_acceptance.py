"""The acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import random
import shutil
import time

import pytest

from corpus import BOUNDS, CORPUS, TERMS_DIR
from symgc.automata import eliminate_epsilon, language, plain_words, prune_unreachable, trim
from symgc.oracle import gamma, language_equal
from symgc.safety import Unsafe, check
from symgc.semantics import Translator, free_identifier, interpret
from symgc.solver import BuiltinSolver, Constraint, ExternalSolver, Sat, Unsat, validate_model
from symgc.symbolic import BOOL, INT, BinOp, ConcreteMove, Const, Not, SymName, Var, evaluate
from symgc.syntax import BaseType, fun, parse_judgement


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, what: str):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {what}")
        return ok
    return emit


def load(name: str):
    ctx, term, _ = parse_judgement((TERMS_DIR / f"{name}.ia").read_text())
    return ctx, term


def has_atom(condition, op, left, right) -> bool:
    """Some atom ``left op right``; a string matches names with that prefix, an int a constant."""
    def matches(e, want):
        if isinstance(want, int):
            return e == Const(want)
        return isinstance(e, Var) and str(e.name).startswith(want)
    return any(isinstance(a, BinOp) and a.op == op and matches(a.left, left)
               and matches(a.right, right) for a in condition)


def m2_variant(threshold: int) -> str:
    return ("N : expint, abort : com |- new_int x := 0 in while !x < N do x := !x + 1; "
            f"if !x > {threshold} then abort : com")


def loop_count(concrete) -> int:
    return sum(1 for m in concrete if m.base == "q" and m.tags == ("N",)) - 1


# --------------------------------------------------------------------------


def test_m1_counterexample(report):
    t0 = time.perf_counter()
    ctx, term = load("m1")
    v = check(interpret(ctx, term, simplify=True).automaton, BuiltinSolver())
    elapsed = time.perf_counter() - t0
    ok = (isinstance(v, Unsafe) and len(v.play) == 12
          and has_atom(v.play.condition, "!=", "X", "Y")
          and validate_model(v.play.constraint, v.model) and elapsed < 1.0)
    report(1, ok, f"M1 unsafe, 12-move play with X≠Y, model validates ({elapsed:.3f}s)")
    assert ok, str(v)


def test_m2_second_play_is_the_counterexample(report):
    t0 = time.perf_counter()
    ctx, term = load("m2")
    v = check(interpret(ctx, term, simplify=True).automaton, BuiltinSolver())
    elapsed = time.perf_counter() - t0
    ok = isinstance(v, Unsafe) and len(v.attempts) == 2
    if ok:
        first, second = v.attempts
        cond = first.play.condition
        ok = (isinstance(first.result, Unsat) and isinstance(second.result, Sat)
              and has_atom(cond, "=", "X", 0) and has_atom(cond, ">=", "X", "N")
              and has_atom(cond, ">", "X", 0))
        c = v.concrete
        shape = [(m.base, m.tags) for m in c]
        ok = ok and shape == [("run", ()), ("q", ("N",)), ("answer", ("N",)), ("q", ("N",)),
                              ("answer", ("N",)), ("run", ("abort",)), ("done", ("abort",)),
                              ("done", ())]
        ok = ok and c[2].value > 0 and c[4].value <= 1 and loop_count(c) == 1
    ok = ok and elapsed < 1.0
    report(2, ok, f"M2 first play unsat, second sat with one iteration ({elapsed:.3f}s)")
    assert ok, str(v)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_m2_threshold_unrolls(report, k):
    ctx, term, _ = parse_judgement(m2_variant(k))
    v = check(interpret(ctx, term, simplify=True).automaton, BuiltinSolver())
    ok = (isinstance(v, Unsafe) and len(v.attempts) == k + 2
          and all(isinstance(a.result, Unsat) for a in v.attempts[:k + 1])
          and loop_count(v.concrete) == k + 1)
    report(3, ok, f"modified M2, k={k}: {k + 1} unsat plays, then {k + 1} iterations")
    assert ok, str(v)


def test_linear_search(report):
    t0 = time.perf_counter()
    ctx, term = load("linear_search")
    a = interpret(ctx, term, simplify=True).automaton
    v = check(a, BuiltinSolver())
    elapsed = time.perf_counter() - t0
    cond = v.play.condition if isinstance(v, Unsafe) else ()
    ok = (len(a.states) == 9 and isinstance(v, Unsafe) and has_atom(cond, "=", "P", "Y")
          and has_atom(cond, "<", "I", "k") and has_atom(cond, "=", "Z", "P")
          and elapsed < 1.0)
    report(4, ok, f"linear search: {len(a.states)} states, unsafe with P=Y, I<k, Z=P "
                  f"({elapsed:.3f}s)")
    assert ok, str(v)


def test_concretisation_matches_concrete_semantics(report):
    assert len(CORPUS) >= 10
    t0 = time.perf_counter()
    bad = []
    runs = [(name, False) for name in CORPUS] + [(name, True) for name in BOUNDS]
    for name, bounds in runs:
        ctx, term, _ = parse_judgement(CORPUS[name])
        a = interpret(ctx, term, bounds_check=bounds).automaton
        for n in (2, 3):
            if language_equal(a, ctx, term, n, 20, bounds_check=bounds):
                bad.append((name, bounds, n))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60.0
    report(5, ok, f"{len(runs)} term runs x n in {{2,3}}, words ≤ 20: "
                  f"{len(bad)} discrepancies ({elapsed:.1f}s)")
    assert ok, bad


class _Recorder(Translator):
    """Keeps every raw composition (before ε-elimination) with its tag."""

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.raw = []
        inner = self.compose

        def recording(a1, a2, tag):
            out = inner(a1, a2, tag)
            self.raw.append((out, tag))
            return out
        self.compose = recording


def test_automata_algebra(report):
    problems = []
    for name, src in CORPUS.items():
        ctx, term, _ = parse_judgement(src)
        rec = _Recorder(ctx)
        rec.interpret(term)
        for raw, tag in rec.raw:
            if any(t.letter is not None and t.letter.tags == (tag,) for t in raw.transitions):
                problems.append((name, "tag survives composition"))
            want = language(raw, 12)
            if language(eliminate_epsilon(raw), 12) != want:
                problems.append((name, "ε-elimination"))
            if language(prune_unreachable(raw), 12) != want or language(trim(raw), 12) != want:
                problems.append((name, "pruning"))
        product = interpret(ctx, term).automaton
        flat = interpret(ctx, term, composition="flat").automaton
        if language(product, 12) != language(flat, 12):
            problems.append((name, "product vs flat composition"))
    ok = not problems
    report(6, ok, f"ε-elimination, pruning and composition on {len(CORPUS)} terms: "
                  f"{len(problems)} problems")
    assert ok, problems


def _random_constraint(rng: random.Random, box: int):
    """Conjunction built around a planted model inside ``[-box, box]``."""
    names = [SymName(i, INT, label=f"X{i}") for i in range(1, rng.randint(2, 4) + 1)]
    flags = [SymName(i, BOOL, label=f"B{i}") for i in range(1, rng.randint(0, 2) + 1)]
    model = {x: rng.randint(-box, box) for x in names}
    model.update({b: rng.random() < 0.5 for b in flags})

    def term():
        x = Var(rng.choice(names))
        r = rng.random()
        if r < 0.4:
            return x
        if r < 0.6:
            return Const(rng.randint(-3, 3))
        return BinOp(rng.choice("+-*"), x, Var(rng.choice(names)) if rng.random() < 0.5
                     else Const(rng.randint(-3, 3)))

    atoms = []
    while len(atoms) < rng.randint(1, 5):
        a = BinOp(rng.choice(["=", "!=", "<", "<=", ">", ">="]), term(), term())
        if evaluate(a, model) is not True:
            a = Not(a)
        atoms.append(a)
    for b in flags:
        atoms.append(Var(b) if model[b] else Not(Var(b)))
    return Constraint(tuple(atoms)), model


def test_solver_agreement(report):
    rng = random.Random(2024)
    builtin = BuiltinSolver(bound=8)
    external = ExternalSolver("z3 -in") if shutil.which("z3") else None
    disagreements, invalid = 0, 0
    for _ in range(500):
        c, planted = _random_constraint(rng, 8)
        assert validate_model(c, planted)
        r1 = builtin.check(c)
        results = [r1]
        if external is not None:
            r2 = external.check(c)
            results.append(r2)
            if type(r1) is not type(r2):
                disagreements += 1
        for r in results:
            if not isinstance(r, Sat) or not validate_model(c, r.model):
                invalid += 1
    ok = disagreements == 0 and invalid == 0
    side = "builtin vs z3" if external else "builtin only (no z3 found)"
    report(7, ok, f"500 constraints, {side}: {disagreements} disagreements, "
                  f"{invalid} missing or invalid models")
    assert ok


def _well_bracketed(word) -> bool:
    answers = {"q": "answer", "run": "done", "read": "answer", "write": "ok"}
    stack = []
    for letter in word:
        base, tags = letter.move.base, letter.tags
        if base in answers:
            stack.append((answers[base], tags))
        elif not stack or stack.pop() != (base, tags):
            return False
    return not stack


def test_free_identifier_two_evaluations(report):
    a = free_identifier("f", fun(BaseType("exp", INT), BaseType("exp", INT)))
    M = lambda base, value=None, *tags: ConcreteMove(base, value, tags)
    play = (M("q"), M("q", None, "f"),
            M("q", None, "f", 1), M("q", None, 1), M("answer", 1, 1), M("answer", 1, "f", 1),
            M("q", None, "f", 1), M("q", None, 1), M("answer", 2, 1), M("answer", 2, "f", 1),
            M("answer", 0, "f"), M("answer", 0))
    accepted = play in gamma(a, 3, 12)
    words = plain_words(a, 12)
    unmatched = [w for w in words if not _well_bracketed(w)]
    ok = accepted and not unmatched
    report(8, ok, f"f : expint -> expint accepts the two-evaluation play; "
                  f"{len(unmatched)} of {len(words)} words unmatched")
    assert ok
