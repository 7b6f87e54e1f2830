"""Concrete reference semantics over finite data, and concretisation.

The concrete translation works on plain NFAs whose letters are
:class:`ConcreteMove` values drawn from ``int_n = {0..n-1}`` and the
booleans.  It shares no automaton code with the symbolic translation:
composition is the classic "parallel composition with hiding" against the
iterated argument strategy, and local state is a product with explicit cells.
Arithmetic that leaves ``int_n`` or divides by zero has no plays.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable

from .symbolic import (
    BOOL,
    ArrayValue,
    ArrInit,
    ArrStore,
    Bind,
    Cell,
    ConcreteMove,
    EvaluationError,
    SymName,
    defined_name,
    evaluate,
    names_of,
)
from .syntax import (
    App,
    ArrayDecl,
    ArrayElem,
    Assign,
    BaseType,
    BinTerm,
    Context,
    Deref,
    FunType,
    Ident,
    If,
    Lam,
    Lit,
    NewArray,
    NewVar,
    NotTerm,
    Seq,
    Skip,
    Term,
    While,
    typecheck,
)

_ids = itertools.count()


def _new() -> int:
    return next(_ids)


@dataclass(frozen=True)
class NFA:
    initial: object
    finals: frozenset
    trans: tuple  # (src, move | None, dst)

    @cached_property
    def out(self) -> dict:
        table = defaultdict(list)
        for s, m, d in self.trans:
            table[s].append((m, d))
        return table

    def closure(self, states: Iterable) -> frozenset:
        seen = set(states)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for m, d in self.out.get(s, ()):
                if m is None and d not in seen:
                    seen.add(d)
                    stack.append(d)
        return frozenset(seen)


def empty() -> NFA:
    return NFA(_new(), frozenset(), ())


def word(*moves: ConcreteMove) -> NFA:
    states = [_new() for _ in range(len(moves) + 1)]
    return NFA(states[0], frozenset({states[-1]}),
               tuple((states[i], m, states[i + 1]) for i, m in enumerate(moves)))


def cat(*parts: NFA) -> NFA:
    if not parts:
        return word()
    trans = [t for p in parts for t in p.trans]
    for a, b in zip(parts, parts[1:]):
        trans += [(f, None, b.initial) for f in a.finals]
    return NFA(parts[0].initial, parts[-1].finals, tuple(trans))


def alt(*parts: NFA) -> NFA:
    i = _new()
    trans = [t for p in parts for t in p.trans] + [(i, None, p.initial) for p in parts]
    return NFA(i, frozenset().union(*(p.finals for p in parts)), tuple(trans))


def star(a: NFA) -> NFA:
    i = _new()
    trans = list(a.trans) + [(i, None, a.initial)] + [(f, None, i) for f in a.finals]
    return NFA(i, frozenset({i}), tuple(trans))


def relabel(a: NFA, f: Callable) -> NFA:
    return NFA(a.initial, a.finals,
               tuple((s, None if m is None else f(m), d) for s, m, d in a.trans))


def product(a: NFA, b: NFA, shared: Callable) -> NFA:
    """Synchronise on shared moves, interleave the rest; finals are pairs of finals."""
    start = (a.initial, b.initial)
    seen, stack, trans = {start}, [start], []
    while stack:
        p, q = s = stack.pop()
        steps = []
        for m, d in a.out.get(p, ()):
            if m is None or not shared(m):
                steps.append((m, (d, q)))
            else:
                steps += [(m, (d, d2)) for m2, d2 in b.out.get(q, ()) if m2 == m]
        for m, d in b.out.get(q, ()):
            if m is None or not shared(m):
                steps.append((m, (p, d)))
        for m, d in steps:
            trans.append((s, m, d))
            if d not in seen:
                seen.add(d)
                stack.append(d)
    finals = frozenset(s for s in seen if s[0] in a.finals and s[1] in b.finals)
    return NFA(start, finals, tuple(trans))


def determinize(a: NFA) -> NFA:
    """Minimal DFA (as an NFA without epsilons) for the language of ``a``."""
    start = a.closure([a.initial])
    index = {start: 0}
    todo = [start]
    delta: dict = {}
    while todo:
        S = todo.pop()
        step = defaultdict(set)
        for s in S:
            for m, d in a.out.get(s, ()):
                if m is not None:
                    step[m].add(d)
        row = {}
        for m, ds in step.items():
            T = a.closure(ds)
            if T not in index:
                index[T] = len(index)
                todo.append(T)
            row[m] = index[T]
        delta[index[S]] = row
    finals = {i for S, i in index.items() if S & a.finals}
    # drop states that cannot reach a final state
    back = defaultdict(set)
    for i, row in delta.items():
        for d in row.values():
            back[d].add(i)
    live, stack = set(finals), list(finals)
    while stack:
        for p in back[stack.pop()]:
            if p not in live:
                live.add(p)
                stack.append(p)
    if 0 not in live:
        return empty()
    delta = {i: {m: d for m, d in row.items() if d in live} for i, row in delta.items() if i in live}
    # Moore partition refinement
    block = {i: int(i in finals) for i in delta}
    while True:
        sig = {i: (block[i], frozenset((m, block[d]) for m, d in row.items()))
               for i, row in delta.items()}
        ids: dict = {}
        new = {i: ids.setdefault(sig[i], len(ids)) for i in delta}
        if len(ids) == len(set(block.values())):
            break
        block = new
    tag = _new()
    trans = {((tag, block[i]), m, (tag, block[d])) for i, row in delta.items() for m, d in row.items()}
    return NFA((tag, block[0]), frozenset((tag, block[i]) for i in finals), tuple(trans))


def hide(a: NFA, pick: Callable) -> NFA:
    return relabel(a, lambda m: None if pick(m) else m)


def words(a: NFA, max_len: int) -> set:
    """All accepted words of at most ``max_len`` moves (subset construction on the fly)."""
    out = set()
    stack = [(a.closure([a.initial]), ())]
    while stack:  # the walk over state sets is deterministic: no word is met twice
        states, w = stack.pop()
        if states & a.finals:
            out.add(w)
        if len(w) == max_len:
            continue
        step = defaultdict(set)
        for s in states:
            for m, d in a.out.get(s, ()):
                if m is not None:
                    step[m].add(d)
        for m, ds in step.items():
            stack.append((a.closure(ds), w + (m,)))
    return out


# --------------------------------------------------------------------------
# concrete translation


def M(base: str, value=None, *tags) -> ConcreteMove:
    return ConcreteMove(base, value, tuple(tags))


def _arith(op: str, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op in ("/", "%"):
        if b == 0:
            return None
        q = a // b if b > 0 else -((-a) // b)
        return q if op == "/" else a - b * q
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "and":
        return a and b
    if op == "or":
        return a or b
    raise ValueError(op)


class ConcreteSemantics:
    """Plays of a term with data from ``int_n`` and the booleans."""

    def __init__(self, ctx: Context, n: int, *, bounds_check: bool = False,
                 lengths: dict | None = None):
        self.ctx = ctx
        self.n = n
        self.bounds_check = bounds_check
        self.env: dict = {}
        self.lengths = dict(lengths or {})
        for name, t in ctx:
            self.env[name] = t
            if isinstance(t, ArrayDecl) and isinstance(t.length, str):
                self.env[t.length] = ("length", self.lengths[t.length])

    def values(self, dtype: str) -> list:
        return [False, True] if dtype == BOOL else list(range(self.n))

    def ok(self, v, dtype: str) -> bool:
        if dtype == BOOL:
            return isinstance(v, bool)
        return not isinstance(v, bool) and isinstance(v, int) and 0 <= v < self.n

    def _length(self, decl: ArrayDecl, name: str) -> int:
        if isinstance(decl.length, int):
            return decl.length
        key = decl.length if isinstance(decl.length, str) else f"k_{name}"
        return self.lengths[key]

    # -- building blocks

    def compose(self, a1: NFA, a2: NFA, i: int) -> NFA:
        """Feed copies of ``a2`` (its own moves tagged ``i``) to the ``i`` moves of ``a1``."""
        tagged = relabel(a2, lambda m: ConcreteMove(m.base, m.value, (i,)) if not m.tags else m)
        is_i = lambda m: m.tags == (i,)
        return determinize(hide(product(a1, star(tagged), is_i), is_i))

    def copycat(self, x: str, t: FunType) -> NFA:
        def arg(i: int, b: BaseType) -> NFA:
            if b.kind == "exp":
                return alt(*(word(M("q", None, x, i), M("q", None, i), M("answer", v, i),
                                  M("answer", v, x, i)) for v in self.values(b.dtype)))
            if b.kind == "com":
                return word(M("run", None, x, i), M("run", None, i), M("done", None, i),
                            M("done", None, x, i))
            return alt(*(word(M("read", None, x, i), M("read", None, i), M("answer", v, i),
                              M("answer", v, x, i)) for v in self.values(b.dtype)),
                       *(word(M("write", v, x, i), M("write", v, i), M("ok", None, i),
                              M("ok", None, x, i)) for v in self.values(b.dtype)))

        def body() -> NFA:  # fresh states on every use, since cat links by state
            return star(alt(*(arg(i, b) for i, b in enumerate(t.args, 1)))) if t.args else word()

        r = t.result
        if r.kind == "exp":
            return cat(word(M("q"), M("q", None, x)), body(),
                       alt(*(word(M("answer", v, x), M("answer", v)) for v in self.values(r.dtype))))
        if r.kind == "com":
            return cat(word(M("run"), M("run", None, x)), body(), word(M("done", None, x), M("done")))
        reads = [cat(word(M("read"), M("read", None, x)), body(),
                     alt(*(word(M("answer", v, x), M("answer", v)) for v in self.values(r.dtype))))]
        writes = [cat(word(M("write", v), M("write", v, x)), body(), word(M("ok", None, x), M("ok")))
                  for v in self.values(r.dtype)]
        return alt(*reads, *writes)

    def cell(self, x: str, dtype: str, init) -> NFA:
        """Explicit memory cell for local variable ``x``."""
        trans = []
        for v in self.values(dtype):
            trans.append((("idle", v), M("read", None, x), ("read", v)))
            trans.append((("read", v), M("answer", v, x), ("idle", v)))
            for u in self.values(dtype):
                trans.append((("idle", v), M("write", u, x), ("write", u)))
            trans.append((("write", v), M("ok", None, x), ("idle", v)))
        return NFA(("idle", init), frozenset(("idle", v) for v in self.values(dtype)), tuple(trans))

    def array_cells(self, x: str, dtype: str, k: int, init) -> NFA:
        trans = []
        vals = self.values(dtype)
        for store in itertools.product(vals, repeat=k):
            for j in range(k):
                tag = (x, j)
                trans.append((store, M("read", None, tag), ("read", store, j)))
                trans.append((("read", store, j), M("answer", store[j], tag), store))
                for u in vals:
                    new = store[:j] + (u,) + store[j + 1:]
                    trans.append((store, M("write", u, tag), ("write", new, j)))
                trans.append((("write", store, j), M("ok", None, tag), store))
        finals = frozenset(itertools.product(vals, repeat=k))
        return NFA((init,) * k, finals, tuple(trans))

    def element(self, x: str, dtype: str, k: int) -> NFA:
        """The strategy of ``x[-]`` with the index supplied as argument 1."""
        zero = False if dtype == BOOL else 0
        reads, writes = [], []
        for z in self.values("int"):
            if z < k:
                reads += [word(M("read"), M("q", None, 1), M("answer", z, 1),
                               M("read", None, (x, z)), M("answer", v, (x, z)), M("answer", v))
                          for v in self.values(dtype)]
                writes += [word(M("write", v), M("q", None, 1), M("answer", z, 1),
                                M("write", v, (x, z)), M("ok", None, (x, z)), M("ok"))
                           for v in self.values(dtype)]
            elif self.bounds_check:
                reads.append(word(M("read"), M("q", None, 1), M("answer", z, 1),
                                  M("run", None, "abort"), M("done", None, "abort"),
                                  M("answer", zero)))
                writes += [word(M("write", v), M("q", None, 1), M("answer", z, 1),
                                M("run", None, "abort"), M("done", None, "abort"), M("ok"))
                           for v in self.values(dtype)]
        return alt(*reads, *writes) if reads or writes else empty()

    # -- terms

    def dtype_of(self, t: Term) -> str:
        env = Context(tuple((n, ty) for n, ty in self.env.items() if not isinstance(ty, tuple)))
        return typecheck(env, t).result.dtype

    def _apply(self, head: NFA, args: list) -> NFA:
        for i, a in enumerate(args, 1):
            head = self.compose(head, self.term(a), i)
        return head

    def term(self, t: Term) -> NFA:
        if isinstance(t, Lit):
            dtype = BOOL if isinstance(t.value, bool) else "int"
            if not self.ok(t.value, dtype):
                return empty()
            return word(M("q"), M("answer", t.value))
        if isinstance(t, Skip):
            return word(M("run"), M("done"))
        if isinstance(t, Ident):
            ty = self.env[t.name]
            if isinstance(ty, tuple):
                return word(M("q"), M("answer", ty[1])) if self.ok(ty[1], "int") else empty()
            return determinize(self.copycat(t.name, ty))
        if isinstance(t, (BinTerm, NotTerm)):
            args = [t.arg] if isinstance(t, NotTerm) else [t.left, t.right]
            kinds = [self.dtype_of(a) for a in args]
            out_type = "int" if isinstance(t, BinTerm) and t.op in ("+", "-", "*", "/", "%") else BOOL
            plays = []
            for vals in itertools.product(*(self.values(k) for k in kinds)):
                r = (not vals[0]) if isinstance(t, NotTerm) else _arith(t.op, *vals)
                if r is None or not self.ok(r, out_type):
                    continue
                moves = [M("q")]
                for i, v in enumerate(vals, 1):
                    moves += [M("q", None, i), M("answer", v, i)]
                plays.append(word(*moves, M("answer", r)))
            return self._apply(alt(*plays) if plays else empty(), args)
        if isinstance(t, Seq):
            head = word(M("run"), M("run", None, 1), M("done", None, 1), M("run", None, 2),
                        M("done", None, 2), M("done"))
            return self._apply(head, [t.first, t.second])
        if isinstance(t, If):
            head = cat(word(M("run"), M("q", None, 1)),
                       alt(word(M("answer", True, 1), M("run", None, 2), M("done", None, 2)),
                           word(M("answer", False, 1), M("run", None, 3), M("done", None, 3))),
                       word(M("done")))
            return self._apply(head, [t.cond, t.then, t.orelse])
        if isinstance(t, While):
            head = cat(word(M("run"), M("q", None, 1)),
                       star(word(M("answer", True, 1), M("run", None, 2), M("done", None, 2),
                                 M("q", None, 1))),
                       word(M("answer", False, 1), M("done")))
            return self._apply(head, [t.cond, t.body])
        if isinstance(t, Assign):
            d = self.dtype_of(t.value)
            head = alt(*(word(M("run"), M("q", None, 2), M("answer", v, 2), M("write", v, 1),
                              M("ok", None, 1), M("done")) for v in self.values(d)))
            return self._apply(head, [t.target, t.value])
        if isinstance(t, Deref):
            d = self.dtype_of(t)
            head = alt(*(word(M("q"), M("read", None, 1), M("answer", v, 1), M("answer", v))
                         for v in self.values(d)))
            return self._apply(head, [t.var])
        if isinstance(t, App):
            head, args = t, []
            while isinstance(head, App):
                args.insert(0, head.arg)
                head = head.fn
            return self._apply(self.term(head), args)
        if isinstance(t, ArrayElem):
            decl = self.env[t.name]
            return self._apply(self.element(t.name, decl.dtype, self._length(decl, t.name)),
                               [t.index])
        if isinstance(t, NewVar):
            saved = self.env.get(t.name)
            self.env[t.name] = FunType((), BaseType("var", t.dtype))
            try:
                body = self.term(t.body)
            finally:
                self._restore(t.name, saved)
            is_x = lambda m: m.tags == (t.name,)
            return determinize(hide(product(body, self.cell(t.name, t.dtype, t.init.value), is_x),
                                    is_x))
        if isinstance(t, NewArray):
            saved = self.env.get(t.name)
            self.env[t.name] = ArrayDecl(t.dtype, t.length)
            try:
                body = self.term(t.body)
            finally:
                self._restore(t.name, saved)
            is_x = lambda m: len(m.tags) == 1 and isinstance(m.tags[0], tuple) \
                and m.tags[0][0] == t.name
            cells = self.array_cells(t.name, t.dtype, t.length, t.init.value)
            return determinize(hide(product(body, cells, is_x), is_x))
        if isinstance(t, Lam):
            raise ValueError("lambda terms are not supported by the concrete semantics")
        raise ValueError(f"cannot translate {t!r}")

    def _restore(self, name: str, saved) -> None:
        if saved is None:
            del self.env[name]
        else:
            self.env[name] = saved


def concrete_language(ctx: Context, t: Term, n: int, max_len: int, *,
                      bounds_check: bool = False) -> set:
    """Concrete plays of ``ctx |- t`` of at most ``max_len`` moves over ``int_n``.

    Symbolic array lengths range over the positive values of ``int_n``.
    """
    keys = []
    for name, ty in ctx:
        if isinstance(ty, ArrayDecl) and not isinstance(ty.length, int):
            keys.append(ty.length if isinstance(ty.length, str) else f"k_{name}")
    out = set()
    for combo in itertools.product(range(1, n), repeat=len(keys)):
        sem = ConcreteSemantics(ctx, n, bounds_check=bounds_check, lengths=dict(zip(keys, combo)))
        out |= words(sem.term(t), max_len)
    return out


# --------------------------------------------------------------------------
# concretisation of symbolic automata


def gamma(a, n: int, max_len: int) -> set:
    """Concrete words of a symbolic automaton under every evaluation into ``int_n``.

    Each binding is an assignment to a fresh instance: its value must lie in
    the domain, as must every move payload.  Names that are never bound
    (array lengths) are chosen once per word.
    """
    from .automata import eliminate_epsilon

    if a.has_epsilon:
        a = eliminate_epsilon(a)
    bound, used = set(), set()
    for t in a.transitions:
        for atom in t.guard:
            d = defined_name(atom)
            if d is not None:
                bound.add(d)
            used |= names_of(atom)
        if t.letter is not None:
            used |= t.letter.names()
            if t.letter.binder is not None:
                bound.add(t.letter.binder)
    free = sorted(used - bound, key=lambda x: (x.index, x.dtype))

    def dom(x: SymName) -> list:
        return [False, True] if x.dtype == BOOL else list(range(n))

    def in_dom(v, dtype) -> bool:
        if dtype == BOOL:
            return isinstance(v, bool)
        return not isinstance(v, bool) and isinstance(v, int) and 0 <= v < n

    out = set()

    def run(state, env, w):
        if state in a.finals:
            out.add(tuple(w))
        if len(w) == max_len:
            return
        for t in a.out.get(state, ()):
            env2 = _apply_guard(t.guard, env, in_dom)
            if env2 is None:
                continue
            letter = t.letter
            m = letter.move
            try:
                tags = tuple((x.name, evaluate(x.index, env2)) if isinstance(x, Cell) else x
                             for x in m.tags)
                if letter.binder is not None:
                    for v in dom(letter.binder):
                        run(t.dst, {**env2, letter.binder: v}, w + [ConcreteMove(m.base, v, tags)])
                    continue
                value = None if m.payload is None else evaluate(m.payload, env2)
            except (EvaluationError, KeyError):
                continue
            if value is not None:
                dtype = BOOL if isinstance(value, bool) else "int"
                if not in_dom(value, dtype):
                    continue
            run(t.dst, env2, w + [ConcreteMove(m.base, value, tags)])

    for combo in itertools.product(*(dom(x) for x in free)):
        run(a.initial, dict(zip(free, combo)), [])
    return out


def _apply_guard(guard, env: dict, in_dom):
    if not guard:
        return env
    env = dict(env)
    for atom in guard:
        try:
            if isinstance(atom, Bind):
                v = evaluate(atom.value, env)
                if not in_dom(v, atom.name.dtype):
                    return None
                env[atom.name] = v
            elif isinstance(atom, ArrInit):
                v = evaluate(atom.value, env)
                if not in_dom(v, atom.array.dtype):
                    return None
                env[atom.array] = ArrayValue(v)
            elif isinstance(atom, ArrStore):
                i, v = evaluate(atom.index, env), evaluate(atom.value, env)
                if not in_dom(v, atom.array.dtype):
                    return None
                env[atom.array] = env[atom.array].store(i, v)
            elif evaluate(atom, env) is not True:
                return None
        except (EvaluationError, KeyError):
            return None
    return env


@dataclass(frozen=True)
class Discrepancy:
    only_symbolic: frozenset
    only_concrete: frozenset

    def __bool__(self) -> bool:
        return bool(self.only_symbolic or self.only_concrete)


def language_equal(a, ctx: Context, t: Term, n: int, max_len: int, *,
                   bounds_check: bool = False) -> Discrepancy:
    """Compare the concretised symbolic automaton with the concrete semantics."""
    sym = gamma(a, n, max_len)
    con = concrete_language(ctx, t, n, max_len, bounds_check=bounds_check)
    return Discrepancy(frozenset(sym - con), frozenset(con - sym))
