"""Finite automata over guarded alphabets and their regular operations.

An ε-transition carries a guard too: hiding a letter never drops the
condition under which it was enabled.  All operations return new, normalised
automata (states renumbered breadth-first from the initial state, transitions
sorted and de-duplicated) so output is reproducible run to run.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Collection, Iterable, Union

from .symbolic import (
    BINDING_ATOMS,
    TT,
    BinOp,
    Bind,
    Const,
    Guard,
    GuardedLetter,
    SymbolicLetter,
    Move,
    Var,
    conj,
    defined_name,
    render_guard,
    simplify,
    substitute,
    used_names,
)


class EpsilonCycleError(ValueError):
    """An ε-cycle rebinds names; collapsing it would change the semantics."""


@dataclass(frozen=True)
class Transition:
    src: int
    guard: Guard
    letter: SymbolicLetter | None  # None is ε
    dst: int

    @property
    def is_epsilon(self) -> bool:
        return self.letter is None

    def sort_key(self):
        return (self.src, "" if self.letter is None else str(self.letter),
                render_guard(self.guard), self.dst)

    def __str__(self) -> str:
        lab = "ε" if self.letter is None else str(self.letter)
        g = f"[{render_guard(self.guard)}] " if self.guard else ""
        return f"{self.src} --{g}{lab}--> {self.dst}"


@dataclass(frozen=True)
class SymAutomaton:
    states: frozenset
    initial: int
    finals: frozenset
    transitions: tuple

    @cached_property
    def out(self) -> dict:
        table = defaultdict(list)
        for t in self.transitions:
            table[t.src].append(t)
        return table

    @property
    def has_epsilon(self) -> bool:
        return any(t.is_epsilon for t in self.transitions)

    def letters(self) -> set:
        return {t.letter for t in self.transitions if t.letter is not None}

    def __str__(self) -> str:
        lines = [f"states={len(self.states)} initial={self.initial} "
                 f"finals={sorted(self.finals)}"]
        lines += [f"  {t}" for t in self.transitions]
        return "\n".join(lines)


def build(states: Iterable, initial, finals: Iterable, transitions: Iterable) -> SymAutomaton:
    """Create a normalised automaton from arbitrary hashable state ids."""
    states = set(states) | {initial}
    transitions = set(transitions)
    for t in transitions:
        states.add(t.src)
        states.add(t.dst)
    out = defaultdict(list)
    for t in transitions:
        out[t.src].append(t)
    for src in out:
        out[src].sort(key=lambda t: t.sort_key()[1:3])
    order, ids = [], {}
    queue = deque([initial])
    ids[initial] = 0
    while queue:
        s = queue.popleft()
        order.append(s)
        for t in out.get(s, ()):
            if t.dst not in ids:
                ids[t.dst] = len(ids)
                queue.append(t.dst)
    for s in sorted(states - set(ids), key=repr):
        ids[s] = len(ids)
    trans = sorted({Transition(ids[t.src], t.guard, t.letter, ids[t.dst]) for t in transitions},
                   key=Transition.sort_key)
    return SymAutomaton(frozenset(ids.values()), 0,
                        frozenset(ids[f] for f in finals if f in ids), tuple(trans))


# --------------------------------------------------------------------------
# constants


def empty() -> SymAutomaton:
    return build([0], 0, [], [])


def epsilon() -> SymAutomaton:
    return build([0], 0, [0], [])


def letter(beta: Union[GuardedLetter, SymbolicLetter]) -> SymAutomaton:
    if isinstance(beta, SymbolicLetter):
        beta = GuardedLetter(TT, beta)
    return build([0, 1], 0, [1], [Transition(0, beta.guard, beta.letter, 1)])


def word(*items: Union[GuardedLetter, SymbolicLetter]) -> SymAutomaton:
    """Automaton accepting exactly one guarded word."""
    out = epsilon()
    for it in items:
        out = concat(out, letter(it))
    return eliminate_epsilon(out)


# --------------------------------------------------------------------------
# regular operations


def _tagged(a: SymAutomaton, tag) -> list[Transition]:
    return [Transition((tag, t.src), t.guard, t.letter, (tag, t.dst)) for t in a.transitions]


def concat(a: SymAutomaton, b: SymAutomaton) -> SymAutomaton:
    trans = _tagged(a, "a") + _tagged(b, "b")
    trans += [Transition(("a", f), TT, None, ("b", b.initial)) for f in a.finals]
    states = [("a", s) for s in a.states] + [("b", s) for s in b.states]
    return build(states, ("a", a.initial), [("b", f) for f in b.finals], trans)


def union(a: SymAutomaton, b: SymAutomaton) -> SymAutomaton:
    trans = _tagged(a, "a") + _tagged(b, "b")
    trans += [Transition("i", TT, None, ("a", a.initial)),
              Transition("i", TT, None, ("b", b.initial))]
    states = [("a", s) for s in a.states] + [("b", s) for s in b.states]
    finals = [("a", f) for f in a.finals] + [("b", f) for f in b.finals]
    return build(states, "i", finals, trans)


def union_all(automata: Iterable[SymAutomaton]) -> SymAutomaton:
    out = None
    for a in automata:
        out = a if out is None else union(out, a)
    return empty() if out is None else out


def concat_all(automata: Iterable[SymAutomaton]) -> SymAutomaton:
    out = epsilon()
    for a in automata:
        out = concat(out, a)
    return out


def star(a: SymAutomaton) -> SymAutomaton:
    trans = _tagged(a, "a")
    trans.append(Transition("i", TT, None, ("a", a.initial)))
    trans += [Transition(("a", f), TT, None, "i") for f in a.finals]
    return build([("a", s) for s in a.states], "i", ["i"], trans)


def _unify(a: SymbolicLetter, b: SymbolicLetter):
    """Match two letters of the same constructor; returns (extra guard, letter)."""
    if a == b:
        return TT, a
    if a.move.base != b.move.base or a.move.tags != b.move.tags:
        return None
    if a.binder is not None and b.binder is not None:
        raise ValueError(f"cannot synchronise two input symbols {a} and {b}")
    if a.binder is not None:
        return ((Bind(a.binder, b.move.payload),),
                SymbolicLetter(Move(a.move.base, a.move.tags, Var(a.binder))))
    if b.binder is not None:
        return (Bind(b.binder, a.move.payload),), a
    if a.move.payload is None or b.move.payload is None:
        return None
    return (BinOp("=", a.move.payload, b.move.payload),), a


def _product(a: SymAutomaton, b: SymAutomaton, step) -> SymAutomaton:
    start = (a.initial, b.initial)
    seen, queue, trans = {start}, deque([start]), []
    while queue:
        s = queue.popleft()
        for t in step(s):
            trans.append(t)
            if t.dst not in seen:
                seen.add(t.dst)
                queue.append(t.dst)
    finals = [s for s in seen if s[0] in a.finals and s[1] in b.finals]
    return build(seen, start, finals, trans)


def intersect(a: SymAutomaton, b: SymAutomaton) -> SymAutomaton:
    """Product synchronising on matching letters; guards are conjoined.

    Letters equal up to payload unify: an input symbol against an expression
    becomes a binding conjunct, two expressions an equality conjunct.
    """
    def step(s):
        p, q = s
        for t in a.out.get(p, ()):
            if t.is_epsilon:
                yield Transition(s, t.guard, None, (t.dst, q))
        for u in b.out.get(q, ()):
            if u.is_epsilon:
                yield Transition(s, u.guard, None, (p, u.dst))
        for t in a.out.get(p, ()):
            if t.is_epsilon:
                continue
            for u in b.out.get(q, ()):
                if u.is_epsilon:
                    continue
                m = _unify(t.letter, u.letter)
                if m is not None:
                    yield Transition(s, conj(t.guard, u.guard, m[0]), m[1], (t.dst, u.dst))
    return _product(a, b, step)


def shuffle(a: SymAutomaton, b: SymAutomaton) -> SymAutomaton:
    """All interleavings of a word of ``a`` with a word of ``b``."""
    def step(s):
        p, q = s
        for t in a.out.get(p, ()):
            yield Transition(s, t.guard, t.letter, (t.dst, q))
        for u in b.out.get(q, ()):
            yield Transition(s, u.guard, u.letter, (p, u.dst))
    return _product(a, b, step)


def rename(a: SymAutomaton, tag) -> SymAutomaton:
    """Tag the letters leaving the initial state and those entering a final state."""
    trans = []
    for t in a.transitions:
        if t.letter is not None and (t.src == a.initial or t.dst in a.finals):
            t = Transition(t.src, t.guard, t.letter.with_move(t.letter.move.tagged(tag)), t.dst)
        trans.append(t)
    return build(a.states, a.initial, a.finals, trans)


def _is_t(letter: SymbolicLetter | None, tag) -> bool:
    return letter is not None and letter.move.tags == (tag,)


def sync_guard(l1: SymbolicLetter, l2: SymbolicLetter):
    """Payload-equality conjuncts for two matching ``t``-tagged moves, or None."""
    if l1.move.base != l2.move.base or l1.move.tags != l2.move.tags:
        return None
    if l1.binder is not None and l2.binder is not None:
        raise ValueError(f"both sides bind an input symbol: {l1}, {l2}")
    if l1.binder is not None:
        return (Bind(l1.binder, l2.move.payload),)
    if l2.binder is not None:
        return (Bind(l2.binder, l1.move.payload),)
    p1, p2 = l1.move.payload, l2.move.payload
    if p1 == p2:
        return TT
    if p1 is None or p2 is None:
        return None
    return (BinOp("=", p1, p2),)


def compose(a1: SymAutomaton, a2: SymAutomaton, tag) -> SymAutomaton:
    """Synchronised product of a caller ``a1`` with a ``tag``-renamed callee ``a2``.

    Product states are ``(s1, None)`` while the callee rests and ``(s1, s2)``
    during a call, so each call returns to the state it was issued from.
    Synchronisations become guarded ε-transitions and every ``tag`` letter
    disappears.
    """
    init2 = [t for t in a2.out.get(a2.initial, ()) if _is_t(t.letter, tag)
             and t.letter.is_question]

    def step(s):
        s1, s2 = s
        if s2 is None:
            for t in a1.out.get(s1, ()):
                if not _is_t(t.letter, tag):
                    yield Transition(s, t.guard, t.letter, (t.dst, None))
                elif t.letter.is_question:
                    for u in init2:
                        extra = sync_guard(t.letter, u.letter)
                        if extra is not None:
                            yield Transition(s, conj(t.guard, u.guard, extra), None,
                                             (t.dst, u.dst))
            return
        for u in a2.out.get(s2, ()):
            if not _is_t(u.letter, tag):
                yield Transition(s, u.guard, u.letter, (s1, u.dst))
            elif not u.letter.is_question and u.dst in a2.finals:
                for t in a1.out.get(s1, ()):
                    if _is_t(t.letter, tag) and not t.letter.is_question:
                        extra = sync_guard(t.letter, u.letter)
                        if extra is not None:
                            yield Transition(s, conj(t.guard, u.guard, extra), None,
                                             (t.dst, None))

    start = (a1.initial, None)
    seen, queue, trans = {start}, deque([start]), []
    while queue:
        s = queue.popleft()
        for t in step(s):
            trans.append(t)
            if t.dst not in seen:
                seen.add(t.dst)
                queue.append(t.dst)
    finals = [s for s in seen if s[1] is None and s[0] in a1.finals]
    return build(seen, start, finals, trans)


def compose_flat(a1: SymAutomaton, a2: SymAutomaton, tag) -> SymAutomaton:
    """Reference composition on the disjoint union of state sets.

    Any callee answer may return to any pending caller answer, so callers that
    issue the same call from several states can be conflated; kept for
    differential testing against :func:`compose`.
    """
    trans = []
    for t in a1.transitions:
        if not _is_t(t.letter, tag):
            trans.append(Transition((1, t.src), t.guard, t.letter, (1, t.dst)))
    for u in a2.transitions:
        if not _is_t(u.letter, tag):
            trans.append(Transition((2, u.src), u.guard, u.letter, (2, u.dst)))
    q1s = [t for t in a1.transitions if _is_t(t.letter, tag) and t.letter.is_question]
    a1s = [t for t in a1.transitions if _is_t(t.letter, tag) and not t.letter.is_question]
    for t in q1s:
        for u in a2.out.get(a2.initial, ()):
            if _is_t(u.letter, tag) and u.letter.is_question:
                extra = sync_guard(t.letter, u.letter)
                if extra is not None:
                    trans.append(Transition((1, t.src), conj(t.guard, u.guard, extra), None,
                                            (2, u.dst)))
    for u in a2.transitions:
        if _is_t(u.letter, tag) and not u.letter.is_question and u.dst in a2.finals:
            for t in a1s:
                extra = sync_guard(t.letter, u.letter)
                if extra is not None:
                    trans.append(Transition((2, u.src), conj(t.guard, u.guard, extra), None,
                                            (1, t.dst)))
    dropped = {a2.initial} | set(a2.finals)
    trans = [t for t in trans if t.src not in {(2, s) for s in dropped}
             and t.dst not in {(2, s) for s in dropped}]
    states = [(1, s) for s in a1.states] + [(2, s) for s in a2.states if s not in dropped]
    return build(states, (1, a1.initial), [(1, f) for f in a1.finals], trans)


Selector = Union[Callable[[SymbolicLetter], bool], Collection]


def by_tag(*names) -> Callable[[SymbolicLetter], bool]:
    """Selector for letters whose outermost tag (or cell array name) is in ``names``."""
    def pick(letter: SymbolicLetter) -> bool:
        if not letter.tags:
            return False
        head = letter.tags[0]
        return head in names or getattr(head, "name", None) in names
    return pick


def restrict(a: SymAutomaton, select: Selector) -> SymAutomaton:
    """Replace the selected letters by ε, keeping their guards."""
    pick = select if callable(select) else (lambda l, s=frozenset(select): l in s)
    trans = []
    for t in a.transitions:
        if t.letter is not None and pick(t.letter):
            if t.letter.binder is not None:
                raise ValueError(f"cannot hide input symbol letter {t.letter}")
            t = Transition(t.src, t.guard, None, t.dst)
        trans.append(t)
    return build(a.states, a.initial, a.finals, trans)


# --------------------------------------------------------------------------
# ε-elimination and pruning


def _eps_closure_paths(a: SymAutomaton, q) -> list[tuple[Guard, int]]:
    """All simple ε-paths from q as (conjoined guard, endpoint)."""
    out = []

    def walk(s, guard, path):
        out.append((guard, s))
        for t in a.out.get(s, ()):
            if not t.is_epsilon:
                continue
            if t.dst in path:
                i = path.index(t.dst)
                cycle = [u for u in _path_edges(a, path[i:] + [t.dst])] + [t]
                if any(isinstance(atom, BINDING_ATOMS) for e in cycle for atom in e.guard):
                    raise EpsilonCycleError(f"ε-cycle through state {t.dst} rebinds names")
                continue
            walk(t.dst, guard + t.guard, path + [t.dst])

    walk(q, TT, [q])
    return out


def _path_edges(a: SymAutomaton, path: list) -> list[Transition]:
    edges = []
    for s, d in zip(path, path[1:]):
        edges += [t for t in a.out.get(s, ()) if t.is_epsilon and t.dst == d]
    return edges


def _merge_safe(letter: SymbolicLetter, tail: Guard) -> bool:
    if letter.binder is None:
        return True
    return not any(letter.binder in used_names(atom) or defined_name(atom) == letter.binder
                   for atom in tail)


def eliminate_epsilon(a: SymAutomaton) -> SymAutomaton:
    """Remove ε-transitions, moving their guards onto the next real letter.

    A state that reaches a final state only through a guarded ε-path gets
    guarded acceptance: its incoming letters are redirected, guard extended,
    to a fresh final sink.  Where that would put a condition on an input symbol
    before its binding, a single guarded ε into the sink is kept instead.
    """
    if not a.has_epsilon:
        return a
    closure = {q: _eps_closure_paths(a, q) for q in a.states}
    trans, finals = set(), set()
    guarded_accept = []
    for q in a.states:
        for g, p in closure[q]:
            for t in a.out.get(p, ()):
                if not t.is_epsilon:
                    trans.add(Transition(q, g + t.guard, t.letter, t.dst))
            if p in a.finals:
                if g:
                    guarded_accept.append((q, g))
                else:
                    finals.add(q)
    sink = "sink"
    for q, g in guarded_accept:
        if q in finals:
            continue  # unconditional acceptance subsumes the guarded one
        incoming = [t for t in trans if t.dst == q]
        if q != a.initial and incoming and all(_merge_safe(t.letter, g) for t in incoming):
            for t in incoming:
                trans.add(Transition(t.src, t.guard + g, t.letter, sink))
        else:
            trans.add(Transition(q, g, None, sink))
        finals.add(sink)
    states = set(a.states) | ({sink} if sink in finals else set())
    return build(states, a.initial, finals, trans)


def prune_unreachable(a: SymAutomaton) -> SymAutomaton:
    seen, queue = {a.initial}, deque([a.initial])
    while queue:
        s = queue.popleft()
        for t in a.out.get(s, ()):
            if t.dst not in seen:
                seen.add(t.dst)
                queue.append(t.dst)
    trans = [t for t in a.transitions if t.src in seen]
    return build(seen, a.initial, a.finals & seen, trans)


def remove_dead(a: SymAutomaton) -> SymAutomaton:
    """Drop states from which no final state is reachable (initial kept)."""
    back = defaultdict(list)
    for t in a.transitions:
        back[t.dst].append(t.src)
    live, queue = set(a.finals), deque(a.finals)
    while queue:
        s = queue.popleft()
        for p in back[s]:
            if p not in live:
                live.add(p)
                queue.append(p)
    keep = live | {a.initial}
    trans = [t for t in a.transitions if t.src in live and t.dst in live]
    return build(keep, a.initial, a.finals, trans)


def trim(a: SymAutomaton) -> SymAutomaton:
    return remove_dead(prune_unreachable(a))


# --------------------------------------------------------------------------
# guard simplification


def _local_names(a: SymAutomaton) -> set:
    """Names bound by a non-keep ``Bind`` and used only after it, within one transition."""
    candidates, nonlocal_ = set(), set()
    for t in a.transitions:
        defined = set()
        for atom in t.guard:
            for n in used_names(atom):
                if n not in defined:
                    nonlocal_.add(n)
            d = defined_name(atom)
            if d is not None:
                defined.add(d)
                if isinstance(atom, Bind) and not atom.keep:
                    candidates.add(d)
                else:
                    nonlocal_.add(d)
        if t.letter is not None:
            for n in t.letter.names():
                if n not in defined:
                    nonlocal_.add(n)
            if t.letter.binder is not None:
                nonlocal_.add(t.letter.binder)
    return candidates - nonlocal_


def _simplify_transition(t: Transition, local: set) -> Transition | None:
    guard = t.guard
    mapping: dict = {}
    out = []
    for i, atom in enumerate(guard):
        atom = simplify(substitute(atom, mapping))
        if isinstance(atom, Bind) and atom.name in local:
            # safe when nothing the value reads is rebound before the last use
            uses = [j for j in range(i + 1, len(guard)) if atom.name in used_names(guard[j])]
            if t.letter is not None and atom.name in t.letter.names():
                uses.append(len(guard))
            last = max(uses, default=i)
            redefined = {defined_name(x) for x in guard[i + 1:last]}
            if last == len(guard) and t.letter is not None:
                redefined.add(t.letter.binder)
            if not (used_names(atom) & redefined):
                mapping[atom.name] = atom.value
                continue
        if atom == Const(True):
            continue
        if atom == Const(False):
            return None
        out.append(atom)
    letter = t.letter.substitute(mapping) if t.letter is not None else None
    if letter is not None and letter.move.payload is not None:
        letter = letter.with_move(Move(letter.move.base, letter.move.tags,
                                       simplify(letter.move.payload)))
    return Transition(t.src, tuple(out), letter, t.dst)


def _constant_names(a: SymAutomaton) -> dict:
    """Names with a single defining site anywhere, a non-keep ``Bind`` to a constant."""
    sites: dict = defaultdict(list)
    for t in a.transitions:
        for atom in t.guard:
            d = defined_name(atom)
            if d is not None:
                sites[d].append(atom)
        if t.letter is not None and t.letter.binder is not None:
            sites[t.letter.binder].append(None)
    return {n: atoms[0].value for n, atoms in sites.items()
            if len(atoms) == 1 and isinstance(atoms[0], Bind) and not atoms[0].keep
            and isinstance(atoms[0].value, Const)}


def _propagate_constants(a: SymAutomaton) -> SymAutomaton:
    consts = _constant_names(a)
    if not consts:
        return a
    trans = []
    for t in a.transitions:
        guard = tuple(substitute(atom, consts) for atom in t.guard
                      if not (isinstance(atom, Bind) and atom.name in consts))
        letter = t.letter.substitute(consts) if t.letter is not None else None
        trans.append(Transition(t.src, guard, letter, t.dst))
    return build(a.states, a.initial, a.finals, trans)


def simplify_guards(a: SymAutomaton) -> SymAutomaton:
    """Constant folding plus inlining of transition-local and constant bindings."""
    a = _propagate_constants(a)
    local = _local_names(a)
    trans = [s for s in (_simplify_transition(t, local) for t in a.transitions) if s is not None]
    return trim(build(a.states, a.initial, a.finals, trans))


# --------------------------------------------------------------------------
# enumeration


def _canonical(letters: list, tail: Guard):
    if letters and tail and _merge_safe(letters[-1].letter, tail):
        last = letters[-1]
        letters = letters[:-1] + [GuardedLetter(last.guard + tail, last.letter)]
        tail = TT
    return tuple(letters), tail


def language(a: SymAutomaton, max_len: int) -> set:
    """Guarded words of at most ``max_len`` letters, in canonical form.

    Each word is ``(letters, tail)`` where every letter carries the guards met
    since the previous letter and ``tail`` holds trailing ε-guards that could
    not be moved onto the last letter.
    """
    out = set()

    def run(s, letters, pending, eps_seen):
        if s in a.finals:
            out.add(_canonical(letters, pending))
        for t in a.out.get(s, ()):
            if t.is_epsilon:
                if t.dst not in eps_seen:
                    run(t.dst, letters, pending + t.guard, eps_seen | {t.dst})
            elif len(letters) < max_len:
                run(t.dst, letters + [GuardedLetter(pending + t.guard, t.letter)], TT,
                    frozenset({t.dst}))

    run(a.initial, [], TT, frozenset({a.initial}))
    return out


def plain_words(a: SymAutomaton, max_len: int) -> set:
    """Letter sequences (guards ignored) of at most ``max_len`` letters."""
    return {tuple(gl.letter for gl in w) for w, _ in language(a, max_len)}


# --------------------------------------------------------------------------
# DOT export


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def edge_label(t: Transition) -> str:
    lab = "ε" if t.letter is None else str(t.letter)
    return f"[{render_guard(t.guard)}] {lab}" if t.guard else lab


def to_dot(a: SymAutomaton, name: str = "strategy") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  __start [shape=point];"]
    for s in sorted(a.states):
        shape = "doublecircle" if s in a.finals else "circle"
        lines.append(f"  {s} [shape={shape}];")
    lines.append(f"  __start -> {a.initial};")
    for t in a.transitions:
        lines.append(f'  {t.src} -> {t.dst} [label="{_dot_escape(edge_label(t))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
