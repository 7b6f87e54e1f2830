"""Search for feasible plays that run ``abort``.

Complete plays containing an abort-tagged move are enumerated shortest
first.  Each one is instantiated (every binding gets a fresh name), its
condition handed to a solver, and the first satisfiable play is concretised
into a counterexample.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Union

from .automata import SymAutomaton, Transition, eliminate_epsilon
from .solver import ArrayDef, Backend, BuiltinSolver, Constraint, Read, Sat, SatResult, Unknown
from .symbolic import (
    BOOL,
    ArrInit,
    ArrStore,
    BinOp,
    Bind,
    Cell,
    ConcreteMove,
    Const,
    Expr,
    GuardedLetter,
    Move,
    Not,
    Select,
    SymbolicLetter,
    SymName,
    Var,
    evaluate,
    render_guard,
    render_word,
)

ABORT = "abort"
PLUMBING = "Z"  # hint of names introduced by constructs and copy-cats


def is_abort(letter: SymbolicLetter | None) -> bool:
    return letter is not None and letter.tags[:1] == (ABORT,)


# --------------------------------------------------------------------------
# enumeration


def _distances(a: SymAutomaton) -> dict:
    """Fewest letters from (state, aborted?) to a final state with aborted = True."""
    back = defaultdict(list)
    for t in a.transitions:
        for flag in (False, True):
            nflag = flag or is_abort(t.letter)
            back[(t.dst, nflag)].append(((t.src, flag), 0 if t.letter is None else 1))
    dist = {(f, True): 0 for f in a.finals}
    heap = [(0, repr(k), k) for k in dist]
    heapq.heapify(heap)
    while heap:
        d, _, k = heapq.heappop(heap)
        if d > dist.get(k, d):
            continue
        for p, w in back[k]:
            nd = d + w
            if nd < dist.get(p, nd + 1):
                dist[p] = nd
                heapq.heappush(heap, (nd, repr(p), p))
    return dist


def unsafe_plays(a: SymAutomaton, max_len: int = 64) -> Iterator[tuple[Transition, ...]]:
    """Complete plays with an abort move, by length then rendering, without repeats."""
    if a.has_epsilon:
        a = eliminate_epsilon(a)
    dist = _distances(a)
    if (a.initial, False) not in dist:
        return
    level = [(a.initial, False, ())]
    seen = set()
    for length in range(0, max_len + 1):
        done = []
        for s, flag, path in level:
            if flag and s in a.finals:
                key = tuple((t.guard, t.letter) for t in path)
                if key not in seen:
                    seen.add(key)
                    done.append(path)
        done.sort(key=lambda p: [(str(t.letter), render_guard(t.guard)) for t in p])
        yield from done
        if length == max_len:
            return
        nxt = []
        for s, flag, path in level:
            for t in a.out.get(s, ()):
                nflag = flag or is_abort(t.letter)
                d = dist.get((t.dst, nflag))
                if d is not None and length + 1 + d <= max_len:
                    nxt.append((t.dst, nflag, path + (t,)))
        level = nxt
        if not level:
            return


def has_unsafe_play(a: SymAutomaton) -> bool:
    """Whether some complete play (of any length) contains an abort move."""
    if a.has_epsilon:
        a = eliminate_epsilon(a)
    return (a.initial, False) in _distances(a)


# --------------------------------------------------------------------------
# instantiation


@dataclass(frozen=True)
class Play:
    """An instantiated play: guarded letters over fresh names plus its condition."""

    letters: tuple  # GuardedLetter over instance names (display form)
    constraint: Constraint

    @property
    def condition(self) -> tuple:
        out = []
        for gl in self.letters:
            out += list(gl.guard)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return " · ".join(str(gl) for gl in self.letters)

    def render_condition(self) -> str:
        return render_guard(self.condition)


class _Instantiator:
    def __init__(self):
        self.cur: dict[SymName, SymName] = {}
        self.counts: dict[str, int] = defaultdict(int)
        self.next_index = 1_000_000  # clear of translation-time indices
        self.conjuncts: list[Expr] = []
        self.defs: dict[SymName, ArrayDef] = {}
        self.reads: list[Read] = []
        self.read_cache: dict = {}
        self.alias: dict[SymName, Expr] = {}

    def fresh(self, n: SymName) -> SymName:
        if n.array:
            base = n.hint or "F"
        elif n.dtype == BOOL:
            base = "B"
        else:
            base = n.hint or "X"
        self.alias.pop(n, None)
        self.counts[base] += 1
        self.next_index += 1
        inst = SymName(self.next_index, n.dtype, n.array, n.hint, f"{base}{self.counts[base]}")
        self.cur[n] = inst
        return inst

    def name(self, n: SymName) -> SymName:
        return self.cur.get(n, n)

    def display(self, e: Expr) -> Expr:
        """Expression over instance names; array reads stay as selects."""
        if isinstance(e, Var):
            if e.name in self.alias:
                return self.alias[e.name]
            return Var(self.name(e.name))
        if isinstance(e, Const):
            return e
        if isinstance(e, BinOp):
            return BinOp(e.op, self.display(e.left), self.display(e.right))
        if isinstance(e, Not):
            return Not(self.display(e.arg))
        if isinstance(e, Select):
            return Select(self.name(e.array), self.display(e.index))
        raise TypeError(f"unexpected {e!r}")

    def flat(self, e: Expr) -> Expr:
        """Display form with each select replaced by a read name for the solver."""
        if isinstance(e, Select):
            key = (e.array, e.index)
            if key not in self.read_cache:
                arr = e.array
                r = SymName(self._bump(), arr.dtype, False, "R", f"{arr}({e.index})")
                self.reads.append(Read(arr, self.flat(e.index), r))
                self.read_cache[key] = r
            return Var(self.read_cache[key])
        if isinstance(e, BinOp):
            return BinOp(e.op, self.flat(e.left), self.flat(e.right))
        if isinstance(e, Not):
            return Not(self.flat(e.arg))
        return e

    def _bump(self) -> int:
        self.next_index += 1
        return self.next_index

    def atom(self, a: Expr) -> Expr | None:
        if isinstance(a, Bind):
            value = self.display(a.value)
            if a.name.hint == PLUMBING and isinstance(value, (Var, Const)):
                # construct binders that merely copy a value are inlined
                self.fresh(a.name)
                self.alias[a.name] = value
                return None
            inst = self.fresh(a.name)
            shown = BinOp("=", Var(inst), value)
            self.conjuncts.append(BinOp("=", Var(inst), self.flat(value)))
            return shown
        if isinstance(a, ArrInit):
            value = self.display(a.value)
            inst = self.fresh(a.array)
            self.defs[inst] = ArrayDef(inst, value)
            return ArrInit(inst, value)
        if isinstance(a, ArrStore):
            index, value = self.display(a.index), self.display(a.value)
            old = self.defs.get(self.name(a.array))
            if old is None:
                raise ValueError(f"store into uninitialised array {a.array}")
            inst = self.fresh(a.array)
            self.defs[inst] = ArrayDef(inst, old.init,
                                       old.updates + ((self.flat(index), self.flat(value)),))
            return ArrStore(inst, index, value)
        shown = self.display(a)
        self.conjuncts.append(self.flat(shown))
        return shown

    def letter(self, l: SymbolicLetter) -> SymbolicLetter:
        m = l.move
        tags = tuple(Cell(t.name, self.display(t.index)) if isinstance(t, Cell) else t
                     for t in m.tags)
        payload = None if m.payload is None else self.display(m.payload)
        binder = None if l.binder is None else self.fresh(l.binder)
        return SymbolicLetter(Move(m.base, tags, payload), binder)


def instantiate(path) -> Play:
    """Give every binding occurrence along ``path`` its own name."""
    inst = _Instantiator()
    letters = []
    pending: list = []
    for t in path:
        for atom in map(inst.atom, t.guard):
            if atom is not None and atom not in pending:
                pending.append(atom)
        if t.letter is not None:
            letters.append(GuardedLetter(tuple(pending), inst.letter(t.letter)))
            pending = []
    if pending and letters:
        last = letters[-1]
        letters[-1] = GuardedLetter(last.guard + tuple(pending), last.letter)
    c = Constraint(tuple(inst.conjuncts), tuple(inst.defs.values()), tuple(inst.reads))
    return Play(tuple(letters), c)


def concretize(play: Play, model: dict) -> tuple[ConcreteMove, ...]:
    """Concrete play for a model of the play's condition."""
    from .solver import array_values

    env = dict(model)
    env.update(array_values(play.constraint, model))
    out = []
    for gl in play.letters:
        m = gl.letter.move
        if gl.letter.binder is not None:
            value = model.get(gl.letter.binder, False if gl.letter.binder.dtype == BOOL else 0)
        elif m.payload is not None:
            value = evaluate(m.payload, env)
        else:
            value = None
        tags = tuple((t.name, evaluate(t.index, env)) if isinstance(t, Cell) else t
                     for t in m.tags)
        out.append(ConcreteMove(m.base, value, tags))
    return tuple(out)


# --------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Attempt:
    play: Play
    result: SatResult


@dataclass(frozen=True)
class Safe:
    max_len: int
    complete: bool  # no abort move is reachable at any length
    attempts: tuple = ()

    def __str__(self) -> str:
        if self.complete:
            return "SAFE (no play reaches abort)"
        return f"SAFE up to play length {self.max_len} ({len(self.attempts)} unsafe plays refuted)"


@dataclass(frozen=True)
class Unsafe:
    play: Play
    model: dict
    concrete: tuple
    attempts: tuple = ()

    def __str__(self) -> str:
        return "UNSAFE\n  play: {}\n  condition: {}\n  model: {}\n  concrete: {}".format(
            self.play, self.play.render_condition(),
            ", ".join(f"{k}={'tt' if v is True else 'ff' if v is False else v}"
                      for k, v in sorted(self.model.items(), key=lambda kv: str(kv[0]))),
            render_word(self.concrete))


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    attempts: tuple = ()

    def __str__(self) -> str:
        return f"INCONCLUSIVE: {self.reason}"


Verdict = Union[Safe, Unsafe, Inconclusive]


def check(a: SymAutomaton, backend: Backend | None = None, *, max_len: int = 64,
          max_plays: int = 10_000) -> Verdict:
    """Shortest-first search for a feasible unsafe play."""
    backend = backend or BuiltinSolver()
    if not has_unsafe_play(a):
        return Safe(max_len, True)
    attempts = []
    unknown = 0
    for path in unsafe_plays(a, max_len):
        if len(attempts) >= max_plays:
            return Inconclusive(f"gave up after {max_plays} unsafe plays", tuple(attempts))
        play = instantiate(path)
        result = backend.check(play.constraint)
        attempts.append(Attempt(play, result))
        if isinstance(result, Sat):
            return Unsafe(play, result.model, concretize(play, result.model), tuple(attempts))
        if isinstance(result, Unknown):
            unknown += 1
    if unknown:
        return Inconclusive(f"{unknown} unsafe plays undecided", tuple(attempts))
    return Safe(max_len, False, tuple(attempts))
