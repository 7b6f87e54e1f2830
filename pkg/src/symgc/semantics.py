"""Translation of typed terms into symbolic automata.

Free identifiers become copy-cat automata, language constructs small
hand-built automata, and composite terms the composition of both.  Local
variables and arrays are eliminated by folding their read/write traffic into
a tracking name (or function symbol) held in the guards.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from . import automata as au
from .automata import SymAutomaton, Transition, build
from .symbolic import (
    BOOL,
    INT,
    TT,
    ArrInit,
    ArrStore,
    BinOp,
    Bind,
    Cell,
    Const,
    Expr,
    Move,
    NamePool,
    Not,
    Select,
    SymbolicLetter,
    SymName,
    Var,
    mk,
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
    fun,
    is_beta_normal,
    rename_identifier,
    typecheck,
)


class TranslationError(ValueError):
    pass


@dataclass(frozen=True)
class Strategy:
    """A translated term: its automaton plus what each outer tag stands for."""

    automaton: SymAutomaton
    type: FunType
    tags: dict = field(default_factory=dict)
    lengths: dict = field(default_factory=dict)  # array name -> length expression

    @property
    def states(self) -> int:
        return len(self.automaton.states)


def tidy(a: SymAutomaton) -> SymAutomaton:
    return au.trim(au.eliminate_epsilon(a))


def line(*steps) -> SymAutomaton:
    """Automaton accepting one word; steps are letters or (guard, letter) pairs."""
    steps = [st if isinstance(st, tuple) else (TT, st) for st in steps]
    trans = [Transition(i, g, l, i + 1) for i, (g, l) in enumerate(steps)]
    return build(range(len(steps) + 1), 0, [len(steps)], trans)


def answer(*tags, payload: Expr | None = None, binder: SymName | None = None) -> SymbolicLetter:
    return mk("answer", *tags, payload=payload, binder=binder)


# --------------------------------------------------------------------------
# language constructs


def op_strategy(pool: NamePool, op: str, left: str, right: str, result: str) -> SymAutomaton:
    z1 = pool.fresh(left, hint="Z")
    z2 = pool.fresh(right, hint="Z")
    return line(mk("q"), mk("q", 1), answer(1, binder=z1), mk("q", 2), answer(2, binder=z2),
                answer(payload=BinOp(op, Var(z1), Var(z2))))


def not_strategy(pool: NamePool) -> SymAutomaton:
    z = pool.fresh(BOOL, hint="Z")
    return line(mk("q"), mk("q", 1), answer(1, binder=z), answer(payload=Not(Var(z))))


def seq_strategy() -> SymAutomaton:
    return line(mk("run"), mk("run", 1), mk("done", 1), mk("run", 2), mk("done", 2), mk("done"))


def if_strategy(pool: NamePool) -> SymAutomaton:
    z = pool.fresh(BOOL, hint="Z")
    t = [Transition(0, TT, mk("run"), 1), Transition(1, TT, mk("q", 1), 2),
         Transition(2, TT, answer(1, binder=z), 3),
         Transition(3, (Var(z),), mk("run", 2), 4), Transition(4, TT, mk("done", 2), 6),
         Transition(3, (Not(Var(z)),), mk("run", 3), 5), Transition(5, TT, mk("done", 3), 6),
         Transition(6, TT, mk("done"), 7)]
    return build(range(8), 0, [7], t)


def while_strategy(pool: NamePool) -> SymAutomaton:
    z = pool.fresh(BOOL, hint="Z")
    t = [Transition(0, TT, mk("run"), 1), Transition(1, TT, mk("q", 1), 2),
         Transition(2, TT, answer(1, binder=z), 3),
         Transition(3, (Var(z),), mk("run", 2), 4), Transition(4, TT, mk("done", 2), 5),
         Transition(5, TT, mk("q", 1), 2),
         Transition(3, (Not(Var(z)),), mk("done"), 6)]
    return build(range(7), 0, [6], t)


def assign_strategy(pool: NamePool, dtype: str) -> SymAutomaton:
    z = pool.fresh(dtype, hint="Z")
    return line(mk("run"), mk("q", 2), answer(2, binder=z), mk("write", 1, payload=Var(z)),
                mk("ok", 1), mk("done"))


def deref_strategy(pool: NamePool, dtype: str) -> SymAutomaton:
    z = pool.fresh(dtype, hint="Z")
    return line(mk("q"), mk("read", 1), answer(1, binder=z), answer(payload=Var(z)))


# --------------------------------------------------------------------------
# free identifiers


def _arg_play(pool: NamePool, x: str, i: int, b: BaseType) -> SymAutomaton:
    """The copy-cat for one evaluation of argument ``i`` of ``x``."""
    if b.kind == "exp":
        z = pool.fresh(b.dtype, hint="Z")
        return line(mk("q", x, i), mk("q", i), answer(i, binder=z), answer(x, i, payload=Var(z)))
    if b.kind == "com":
        return line(mk("run", x, i), mk("run", i), mk("done", i), mk("done", x, i))
    z = pool.fresh(b.dtype, hint="Z")
    z2 = pool.fresh(b.dtype, hint="Z")
    return au.union(
        line(mk("read", x, i), mk("read", i), answer(i, binder=z), answer(x, i, payload=Var(z))),
        line(mk("write", x, i, binder=z2), mk("write", i, payload=Var(z2)), mk("ok", i),
             mk("ok", x, i)))


def copycat(pool: NamePool, x: str, t: FunType) -> SymAutomaton:
    """Generic strategy of a free identifier ``x : t``; argument moves tagged by position."""
    args = au.star(au.union_all(_arg_play(pool, x, i, b) for i, b in enumerate(t.args, 1)))
    r = t.result
    hint = x.upper()
    if r.kind == "exp":
        v = pool.fresh(r.dtype, hint=hint)
        out = au.concat_all([line(mk("q"), mk("q", x)), args,
                             line(answer(x, binder=v), answer(payload=Var(v)))])
    elif r.kind == "com":
        out = au.concat_all([line(mk("run"), mk("run", x)), args,
                             line(mk("done", x), mk("done"))])
    else:
        v = pool.fresh(r.dtype, hint=hint)
        w = pool.fresh(r.dtype, hint=hint)
        read = au.concat_all([line(mk("read"), mk("read", x)), args,
                              line(answer(x, binder=v), answer(payload=Var(v)))])
        write = au.concat_all([line(mk("write", binder=w), mk("write", x, payload=Var(w))), args,
                               line(mk("ok", x), mk("ok"))])
        out = au.union(read, write)
    return tidy(out)


def array_cell(pool: NamePool, x: str, dtype: str, length: Expr, bounds_check: bool
               ) -> SymAutomaton:
    """Strategy of ``x[-]``: the index arrives as argument 1, the cell is ``x[Z]``."""
    z = pool.fresh(INT, hint="Z")
    v = pool.fresh(dtype, hint="Z")
    w = pool.fresh(dtype, hint="Z")
    cell = Cell(x, Var(z))
    inside = (BinOp("<", Var(z), length),)
    outside = (BinOp(">=", Var(z), length),)
    zero = Const(False) if dtype == BOOL else Const(0)
    t = [Transition("r0", TT, mk("read"), "r1"), Transition("r1", TT, mk("q", 1), "r2"),
         Transition("r2", TT, answer(1, binder=z), "r3"),
         Transition("r3", inside, mk("read", cell), "r4"),
         Transition("r4", TT, answer(cell, binder=v), "r5"),
         Transition("r5", TT, answer(payload=Var(v)), "f"),
         Transition("r0", TT, mk("write", binder=w), "w1"), Transition("w1", TT, mk("q", 1), "w2"),
         Transition("w2", TT, answer(1, binder=z), "w3"),
         Transition("w3", inside, mk("write", cell, payload=Var(w)), "w4"),
         Transition("w4", TT, mk("ok", cell), "w5"),
         Transition("w5", TT, mk("ok"), "f")]
    if bounds_check:
        t += [Transition("r3", outside, mk("run", "abort"), "ra"),
              Transition("ra", TT, mk("done", "abort"), "rb"),
              Transition("rb", TT, answer(payload=zero), "f"),
              Transition("w3", outside, mk("run", "abort"), "wa"),
              Transition("wa", TT, mk("done", "abort"), "wb"),
              Transition("wb", TT, mk("ok"), "f")]
    return build([], "r0", ["f"], t)


def retag(a: SymAutomaton, mapping: dict) -> SymAutomaton:
    """Replace outermost tags according to ``mapping``."""
    def fix(letter):
        if letter is None or not letter.tags or letter.tags[0] not in mapping:
            return letter
        m = letter.move
        return letter.with_move(Move(m.base, (mapping[m.tags[0]],) + m.tags[1:], m.payload))
    trans = [Transition(t.src, t.guard, fix(t.letter), t.dst) for t in a.transitions]
    return build(a.states, a.initial, a.finals, trans)


# --------------------------------------------------------------------------
# local state elimination


def _pairs(a: SymAutomaton, is_local: Callable) -> list:
    """(question, answer) transition pairs on local letters; raises on a dangling question."""
    pairs = []
    for t in a.transitions:
        if not is_local(t.letter) or not t.letter.is_question:
            continue
        nxt = a.out.get(t.dst, [])
        if not nxt or not all(is_local(u.letter) and not u.letter.is_question for u in nxt):
            raise TranslationError(f"unmatched local move {t.letter}")
        pairs += [(t, u) for u in nxt]
    return pairs


def eliminate_variable(a: SymAutomaton, x: str, tracker: SymName, init: Expr) -> SymAutomaton:
    """Fold the moves of local variable ``x`` into guards over ``tracker``.

    A write/ok pair rebinds the tracker, a read/answer pair binds (or equates)
    the answer with it, and the initial value is bound before the first move.
    """
    def is_local(letter):
        return letter is not None and letter.tags == (x,)

    trans = [t for t in a.transitions if not is_local(t.letter)]
    for t, u in _pairs(a, is_local):
        if t.letter.move.base == "write":
            if t.letter.binder is not None:
                raise TranslationError(f"write to {x} with an unbound value")
            atom = Bind(tracker, t.letter.move.payload, keep=True)
        elif u.letter.binder is not None:
            atom = Bind(u.letter.binder, Var(tracker))
        else:
            atom = BinOp("=", u.letter.move.payload, Var(tracker))
        trans.append(Transition(t.src, t.guard + (atom,) + u.guard, None, u.dst))
    trans.append(Transition("init", (Bind(tracker, init, keep=True),), None, a.initial))
    return tidy(build(a.states, "init", a.finals, trans))


def eliminate_array(a: SymAutomaton, x: str, tracker: SymName, init: Expr) -> SymAutomaton:
    """Array version of :func:`eliminate_variable`; ``tracker`` is a function symbol."""
    def is_local(letter):
        return (letter is not None and len(letter.tags) == 1
                and isinstance(letter.tags[0], Cell) and letter.tags[0].name == x)

    trans = [t for t in a.transitions if not is_local(t.letter)]
    for t, u in _pairs(a, is_local):
        index = t.letter.tags[0].index
        if t.letter.move.base == "write":
            atom = ArrStore(tracker, index, t.letter.move.payload)
        elif u.letter.binder is not None:
            atom = Bind(u.letter.binder, Select(tracker, index))
        else:
            atom = BinOp("=", u.letter.move.payload, Select(tracker, index))
        trans.append(Transition(t.src, t.guard + (atom,) + u.guard, None, u.dst))
    trans.append(Transition("init", (ArrInit(tracker, init),), None, a.initial))
    return tidy(build(a.states, "init", a.finals, trans))


def cell_strategy(pool: NamePool, x: str, dtype: str, init: Expr) -> SymAutomaton:
    """The cell (read^x v^x)* (write(?Z)^x ok^x (read^x Z^x)*)* for a local variable."""
    z = pool.fresh(dtype, hint="Z")
    t = [Transition(0, TT, mk("read", x), 1), Transition(1, TT, answer(x, payload=init), 0),
         Transition(0, TT, mk("write", x, binder=z), 2), Transition(2, TT, mk("ok", x), 3),
         Transition(3, TT, mk("read", x), 4), Transition(4, TT, answer(x, payload=Var(z)), 3),
         Transition(3, TT, mk("write", x, binder=z), 2)]
    return build(range(5), 0, [0, 3], t)


def eliminate_variable_by_cell(a: SymAutomaton, x: str, cell: SymAutomaton) -> SymAutomaton:
    """Intersect with the cell interleaved with every other letter, then hide ``x``."""
    others = sorted({t.letter for t in a.transitions
                     if t.letter is not None and t.letter.tags[:1] != (x,)}, key=str)
    universe = build([0], 0, [0], [Transition(0, TT, l, 0) for l in others])
    constrained = au.intersect(a, au.shuffle(cell, universe))
    hidden = au.restrict(constrained, lambda l: l.tags[:1] == (x,))
    return tidy(hidden)


# --------------------------------------------------------------------------
# translation


@dataclass
class _Entry:
    type: object  # FunType | ArrayDecl
    length: Expr | None = None  # arrays
    is_length: bool = False     # identifiers naming a symbolic array length


class Translator:
    """Translate terms under one context; one name pool per instance.

    ``elimination`` picks how local variables are removed: ``"tracker"``
    folds their moves into guards, ``"cell"`` intersects with the cell
    strategy and hides the variable.  ``composition="flat"`` swaps in the
    reference composition on disjoint state sets.
    """

    def __init__(self, ctx: Context, *, bounds_check: bool = False,
                 elimination: str = "tracker", composition: str = "product",
                 pool: NamePool | None = None):
        if elimination not in ("tracker", "cell"):
            raise ValueError(f"unknown elimination {elimination!r}")
        if composition not in ("product", "flat"):
            raise ValueError(f"unknown composition {composition!r}")
        self.compose = au.compose if composition == "product" else au.compose_flat
        self.ctx = ctx
        self.bounds_check = bounds_check
        self.elimination = elimination
        self.pool = pool or NamePool()
        self.env: dict[str, _Entry] = {}
        self.lengths: dict[str, Expr] = {}
        for name, t in ctx:
            if isinstance(t, ArrayDecl):
                length = self._length_of(name, t.length)
                self.env[name] = _Entry(t, length)
                self.lengths[name] = length
                if isinstance(t.length, str):
                    self.env[t.length] = _Entry(fun(BaseType("exp", INT)), length, True)
            else:
                self.env[name] = _Entry(t)

    def _length_of(self, name: str, length) -> Expr:
        if isinstance(length, int):
            return Const(length)
        label = length if isinstance(length, str) else f"k_{name}"
        return Var(self.pool.fresh(INT, hint="k", label=label))

    # -- entry point

    def interpret(self, t: Term) -> Strategy:
        if not is_beta_normal(t):
            raise TranslationError("term is not beta-normal")
        ty = typecheck(self.ctx, t)
        a, tags = self._top(t, [])
        guards = [BinOp(">", e, Const(0)) for e in self.lengths.values() if isinstance(e, Var)]
        if guards:
            a = tidy(build(a.states, "start", a.finals,
                           a.transitions + (Transition("start", tuple(guards), None, a.initial),)))
        tag_map = {n: str(e.type) for n, e in self.env.items() if not e.is_length}
        tag_map.update(tags)
        return Strategy(a, ty, tag_map, dict(self.lengths))

    def _top(self, t: Term, lams: list) -> tuple[SymAutomaton, dict]:
        if isinstance(t, Lam):
            name = t.name
            if name in self.env:
                name = self._fresh_ident(name)
                t = Lam(name, t.type, rename_identifier(t.body, t.name, name))
            self.env[name] = _Entry(fun(t.type))
            try:
                return self._top(t.body, lams + [name])
            finally:
                del self.env[name]
        a = self.term(t)
        if not lams:
            return a, {}
        # lambda-bound identifiers become argument positions, remaining ones shift
        shift = len(lams)
        moves = {n: i for i, n in enumerate(lams, 1)}
        ty = self._type_of(t)
        moves.update({i: i + shift for i in range(1, len(ty.args) + 1)})
        return retag(a, moves), {i: n for n, i in zip(lams, range(1, shift + 1))}

    def _fresh_ident(self, base: str) -> str:
        for i in itertools.count(1):
            cand = f"{base}_{i}"
            if cand not in self.env:
                return cand

    def _type_of(self, t: Term) -> FunType:
        env = Context(tuple((n, e.type) for n, e in self.env.items() if not e.is_length))
        return typecheck(env, t)

    def _base_of(self, t: Term) -> BaseType:
        ty = self._type_of(t)
        if not ty.is_base:
            raise TranslationError("function-typed subterm outside an application")
        return ty.result

    # -- terms

    def _compose_args(self, head: SymAutomaton, args: list) -> SymAutomaton:
        for i, arg in enumerate(args, 1):
            head = tidy(self.compose(head, au.rename(self.term(arg), i), i))
        return head

    def term(self, t: Term) -> SymAutomaton:
        pool = self.pool
        if isinstance(t, Lit):
            return line(mk("q"), answer(payload=Const(t.value)))
        if isinstance(t, Skip):
            return line(mk("run"), mk("done"))
        if isinstance(t, Ident):
            entry = self.env.get(t.name)
            if entry is None:
                raise TranslationError(f"unbound identifier {t.name!r}")
            if entry.is_length:
                return line(mk("q"), answer(payload=entry.length))
            return copycat(pool, t.name, entry.type)
        if isinstance(t, BinTerm):
            left = self._base_of(t.left).dtype
            right = self._base_of(t.right).dtype
            result = INT if t.op in ("+", "-", "*", "/", "%") else BOOL
            return self._compose_args(op_strategy(pool, t.op, left, right, result),
                                      [t.left, t.right])
        if isinstance(t, NotTerm):
            return self._compose_args(not_strategy(pool), [t.arg])
        if isinstance(t, Seq):
            return self._compose_args(seq_strategy(), [t.first, t.second])
        if isinstance(t, If):
            return self._compose_args(if_strategy(pool), [t.cond, t.then, t.orelse])
        if isinstance(t, While):
            return self._compose_args(while_strategy(pool), [t.cond, t.body])
        if isinstance(t, Assign):
            dtype = self._base_of(t.target).dtype
            return self._compose_args(assign_strategy(pool, dtype), [t.target, t.value])
        if isinstance(t, Deref):
            dtype = self._base_of(t.var).dtype
            return self._compose_args(deref_strategy(pool, dtype), [t.var])
        if isinstance(t, App):
            head, args = t, []
            while isinstance(head, App):
                args.insert(0, head.arg)
                head = head.fn
            if not isinstance(head, Ident):
                raise TranslationError("application head must be a free identifier")
            return self._compose_args(self.term(head), args)
        if isinstance(t, ArrayElem):
            entry = self.env.get(t.name)
            if entry is None or not isinstance(entry.type, ArrayDecl):
                raise TranslationError(f"{t.name!r} is not an array")
            if self.bounds_check and "abort" not in self.env:
                raise TranslationError("bounds checking needs 'abort : com' in the context")
            cell = array_cell(pool, t.name, entry.type.dtype, entry.length, self.bounds_check)
            return self._compose_args(cell, [t.index])
        if isinstance(t, NewVar):
            return self._new_var(t)
        if isinstance(t, NewArray):
            return self._new_array(t)
        if isinstance(t, Lam):
            raise TranslationError("lambda below the top level is not beta-normal")
        raise TranslationError(f"cannot translate {t!r}")

    def _bind_local(self, t, entry: _Entry):
        name, body = t.name, t.body
        if name in self.env:
            name = self._fresh_ident(name)
            body = rename_identifier(body, t.name, name)
        self.env[name] = entry
        return name, body

    def _new_var(self, t: NewVar) -> SymAutomaton:
        name, body = self._bind_local(t, _Entry(fun(BaseType("var", t.dtype))))
        try:
            inner = self.term(body)
        finally:
            del self.env[name]
        init = Const(t.init.value)
        if self.elimination == "cell":
            return eliminate_variable_by_cell(inner, name,
                                              cell_strategy(self.pool, name, t.dtype, init))
        tracker = self.pool.fresh(t.dtype, hint=name.upper())
        return eliminate_variable(inner, name, tracker, init)

    def _new_array(self, t: NewArray) -> SymAutomaton:
        if t.length <= 0:
            raise TranslationError("array length must be positive")
        decl = ArrayDecl(t.dtype, t.length)
        name, body = self._bind_local(t, _Entry(decl, Const(t.length)))
        try:
            inner = self.term(body)
        finally:
            del self.env[name]
        tracker = self.pool.fresh(t.dtype, array=True, hint=name.upper())
        return eliminate_array(inner, name, tracker, Const(t.init.value))


def interpret(ctx: Context, t: Term, *, bounds_check: bool = False,
              elimination: str = "tracker", composition: str = "product",
              simplify: bool = False) -> Strategy:
    """Symbolic automaton of ``ctx |- t``; ``simplify`` inlines local bindings."""
    s = Translator(ctx, bounds_check=bounds_check, elimination=elimination,
                   composition=composition).interpret(t)
    if simplify:
        s = Strategy(au.simplify_guards(s.automaton), s.type, s.tags, s.lengths)
    return s


def free_identifier(name: str, t: FunType) -> SymAutomaton:
    """Copy-cat automaton of a free identifier, on its own name pool."""
    return copycat(NamePool(), name, t)


def construct_strategy(c: str, dtype: str = INT) -> SymAutomaton:
    """Automaton of a language construct: an operator symbol, ``;``, if, while, := or !."""
    pool = NamePool()
    if c == ";":
        return seq_strategy()
    if c == "if":
        return if_strategy(pool)
    if c == "while":
        return while_strategy(pool)
    if c == ":=":
        return assign_strategy(pool, dtype)
    if c == "!":
        return deref_strategy(pool, dtype)
    if c == "not":
        return not_strategy(pool)
    left = BOOL if c in ("and", "or") else dtype
    result = INT if c in ("+", "-", "*", "/", "%") else BOOL
    return op_strategy(pool, c, left, left, result)
