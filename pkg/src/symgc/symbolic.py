"""Symbolic names, the guard/payload expression language and guarded letters.

Expressions are immutable trees.  A guard is an ordered tuple of boolean
conjuncts; the empty tuple stands for ``tt``.  Besides ordinary boolean
expressions a guard may hold three binding atoms produced by composition and
local-variable elimination:

* ``Bind(X, e)``      -- ``?X = e``: X is rebound to the value of e
* ``ArrInit(A, v)``   -- ``A(j) := v`` for every index j
* ``ArrStore(A, i, v)`` -- ``A(i) := v``, a point update of the array tracker

Conjuncts are evaluated left to right, so order matters once binders occur.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

INT = "int"
BOOL = "bool"

ARITH_OPS = ("+", "-", "*", "/", "%")
REL_OPS = ("=", "!=", "<", "<=", ">", ">=")
LOGIC_OPS = ("and", "or")

_OP_TEXT = {
    "!=": "≠",
    "<=": "≤",
    ">=": "≥",
    "and": " ∧ ",
    "or": " ∨ ",
}

_FLIP = {"<": ">=", ">=": "<", ">": "<=", "<=": ">", "=": "!=", "!=": "="}


class EvaluationError(ArithmeticError):
    """Raised for division by zero or unbound names during evaluation."""


# --------------------------------------------------------------------------
# names


@dataclass(frozen=True, order=True)
class SymName:
    """A symbolic name ``X_index`` of a given data type.

    ``hint`` and ``label`` only affect rendering.  Array trackers (function
    symbols ``int -> D``) set ``array``; ``dtype`` is then the element type.
    """

    index: int
    dtype: str = INT
    array: bool = False
    hint: str = field(default="", compare=False)
    label: str = field(default="", compare=False)

    def __str__(self) -> str:
        if self.label:
            return self.label
        if self.array:
            return f"{self.hint or 'F'}{self.index}"
        if self.dtype == BOOL:
            return f"B{self.index}"
        return f"{self.hint or 'X'}{self.index}"


class NamePool:
    """The set W of used names; ``fresh`` returns the minimal unused one."""

    def __init__(self, used: Iterable[SymName] = ()):
        self.used: set[SymName] = set(used)

    def fresh(self, dtype: str = INT, *, array: bool = False, hint: str = "",
              label: str = "") -> SymName:
        taken = {n.index for n in self.used if n.dtype == dtype and n.array == array}
        i = 1
        while i in taken:
            i += 1
        name = SymName(i, dtype, array, hint, label)
        self.used.add(name)
        return name


# --------------------------------------------------------------------------
# expressions


class Expr:
    """Base class of expression and guard-atom nodes."""

    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: Union[int, bool]

    # bool is a subclass of int; keep tt and 1 apart
    def __eq__(self, other):
        return (isinstance(other, Const) and type(self.value) is type(other.value)
                and self.value == other.value)

    def __hash__(self):
        return hash((type(self.value), self.value))

    def __str__(self) -> str:
        if isinstance(self.value, bool):
            return "tt" if self.value else "ff"
        return str(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: SymName

    def __str__(self) -> str:
        return str(self.name)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __str__(self) -> str:
        text = _OP_TEXT.get(self.op, self.op)
        return f"{_wrap(self.left, self.op)}{text}{_wrap(self.right, self.op)}"


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr

    def __str__(self) -> str:
        if isinstance(self.arg, (Const, Var, Select)):
            return f"¬{self.arg}"
        return f"¬({self.arg})"


@dataclass(frozen=True)
class Select(Expr):
    """Application ``A(index)`` of an array tracker."""

    array: SymName
    index: Expr

    def __str__(self) -> str:
        return f"{self.array}({self.index})"


@dataclass(frozen=True)
class Bind(Expr):
    name: SymName
    value: Expr
    keep: bool = False  # trackers of local variables keep their own instances

    def __str__(self) -> str:
        return f"?{self.name}={self.value}"


@dataclass(frozen=True)
class ArrInit(Expr):
    array: SymName
    value: Expr

    def __str__(self) -> str:
        return f"?{self.array}(j):={self.value}"


@dataclass(frozen=True)
class ArrStore(Expr):
    array: SymName
    index: Expr
    value: Expr

    def __str__(self) -> str:
        return f"{self.array}({self.index}):={self.value}"


BINDING_ATOMS = (Bind, ArrInit, ArrStore)

Guard = tuple  # tuple[Expr, ...], conjunction in order
TT: Guard = ()


def _wrap(e: Expr, parent: str) -> str:
    if isinstance(e, BinOp):
        if parent in LOGIC_OPS and e.op in LOGIC_OPS and e.op == parent:
            return str(e)
        if parent in LOGIC_OPS and e.op in REL_OPS:
            return str(e)
        if parent in REL_OPS and e.op in ARITH_OPS:
            return str(e)
        return f"({e})"
    return str(e)


def conj(*guards: Iterable[Expr]) -> Guard:
    """Concatenate guards, flattening ``and`` nodes and dropping ``tt``."""
    out: list[Expr] = []
    for g in guards:
        for atom in g:
            out.extend(_flatten_and(atom))
    return tuple(out)


def _flatten_and(e: Expr) -> Iterator[Expr]:
    if isinstance(e, BinOp) and e.op == "and":
        yield from _flatten_and(e.left)
        yield from _flatten_and(e.right)
    elif e == Const(True):
        return
    else:
        yield e


def render_guard(g: Guard) -> str:
    return " ∧ ".join(str(a) for a in g) if g else "tt"


def and_all(atoms: Iterable[Expr]) -> Expr:
    result: Expr | None = None
    for a in atoms:
        result = a if result is None else BinOp("and", result, a)
    return Const(True) if result is None else result


# --------------------------------------------------------------------------
# traversal


def names_of(e: Expr) -> set[SymName]:
    """All names occurring in ``e`` (binding sites included)."""
    out: set[SymName] = set()
    _collect(e, out)
    return out


def _collect(e: Expr, out: set) -> None:
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, BinOp):
        _collect(e.left, out)
        _collect(e.right, out)
    elif isinstance(e, Not):
        _collect(e.arg, out)
    elif isinstance(e, Select):
        out.add(e.array)
        _collect(e.index, out)
    elif isinstance(e, Bind):
        out.add(e.name)
        _collect(e.value, out)
    elif isinstance(e, ArrInit):
        out.add(e.array)
        _collect(e.value, out)
    elif isinstance(e, ArrStore):
        out.add(e.array)
        _collect(e.index, out)
        _collect(e.value, out)


def used_names(e: Expr) -> set[SymName]:
    """Names read by ``e``; the defined name of a binding atom is excluded."""
    if isinstance(e, Bind):
        return names_of(e.value)
    if isinstance(e, ArrInit):
        return names_of(e.value)
    if isinstance(e, ArrStore):
        return {e.array} | names_of(e.index) | names_of(e.value)
    return names_of(e)


def defined_name(e: Expr) -> SymName | None:
    if isinstance(e, Bind):
        return e.name
    if isinstance(e, (ArrInit, ArrStore)):
        return e.array
    return None


def substitute(e: Expr, m: Mapping[SymName, Expr]) -> Expr:
    """Replace free occurrences of names; array positions need a ``Var`` image."""
    if not m:
        return e
    if isinstance(e, Var):
        return m.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, m), substitute(e.right, m))
    if isinstance(e, Not):
        return Not(substitute(e.arg, m))
    if isinstance(e, Select):
        return Select(_array_image(e.array, m), substitute(e.index, m))
    if isinstance(e, Bind):
        return Bind(e.name, substitute(e.value, m), e.keep)
    if isinstance(e, ArrInit):
        return ArrInit(e.array, substitute(e.value, m))
    if isinstance(e, ArrStore):
        return ArrStore(e.array, substitute(e.index, m), substitute(e.value, m))
    raise TypeError(f"not an expression: {e!r}")


def _array_image(a: SymName, m: Mapping[SymName, Expr]) -> SymName:
    img = m.get(a)
    if img is None:
        return a
    if not isinstance(img, Var):
        raise TypeError(f"array {a} mapped to non-name {img}")
    return img.name


# --------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class ArrayValue:
    """A total function int -> D given by a default and point updates."""

    default: Union[int, bool]
    updates: tuple = ()  # ((index, value), ...), last update wins

    def __call__(self, index: int):
        for i, v in reversed(self.updates):
            if i == index:
                return v
        return self.default

    def store(self, index: int, value) -> "ArrayValue":
        return ArrayValue(self.default, self.updates + ((index, value),))


def ediv(a: int, b: int) -> int:
    """Euclidean division (remainder always non-negative), as in SMT-LIB."""
    if b == 0:
        raise EvaluationError("division by zero")
    r = a % abs(b)
    return (a - r) // b


def emod(a: int, b: int) -> int:
    if b == 0:
        raise EvaluationError("modulo by zero")
    return a % abs(b)


def apply_op(op: str, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return ediv(a, b)
    if op == "%":
        return emod(a, b)
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
    raise ValueError(f"unknown operator {op!r}")


def evaluate(e: Expr, env: Mapping[SymName, object]):
    """Evaluate a (non-binding) expression under a total evaluation ``env``."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvaluationError(f"unbound name {e.name}") from None
    if isinstance(e, BinOp):
        if e.op == "and":
            return bool(evaluate(e.left, env)) and bool(evaluate(e.right, env))
        if e.op == "or":
            return bool(evaluate(e.left, env)) or bool(evaluate(e.right, env))
        return apply_op(e.op, evaluate(e.left, env), evaluate(e.right, env))
    if isinstance(e, Not):
        return not evaluate(e.arg, env)
    if isinstance(e, Select):
        try:
            arr = env[e.array]
        except KeyError:
            raise EvaluationError(f"unbound array {e.array}") from None
        return arr(evaluate(e.index, env))
    raise EvaluationError(f"cannot evaluate binding atom {e}")


# --------------------------------------------------------------------------
# simplification


def simplify(e: Expr) -> Expr:
    """Constant folding and negation pushing; semantics preserving."""
    if isinstance(e, BinOp):
        left, right = simplify(e.left), simplify(e.right)
        if isinstance(left, Const) and isinstance(right, Const):
            try:
                return Const(apply_op(e.op, left.value, right.value))
            except EvaluationError:
                return BinOp(e.op, left, right)
        if e.op == "and":
            if left == Const(True):
                return right
            if right == Const(True):
                return left
            if Const(False) in (left, right):
                return Const(False)
        if e.op == "or":
            if left == Const(False):
                return right
            if right == Const(False):
                return left
            if Const(True) in (left, right):
                return Const(True)
        if e.op == "+" and right == Const(0):
            return left
        return BinOp(e.op, left, right)
    if isinstance(e, Not):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            return Const(not arg.value)
        if isinstance(arg, Not):
            return arg.arg
        if isinstance(arg, BinOp) and arg.op in _FLIP:
            return BinOp(_FLIP[arg.op], arg.left, arg.right)
        return Not(arg)
    if isinstance(e, Select):
        return Select(e.array, simplify(e.index))
    if isinstance(e, Bind):
        return Bind(e.name, simplify(e.value), e.keep)
    if isinstance(e, ArrInit):
        return ArrInit(e.array, simplify(e.value))
    if isinstance(e, ArrStore):
        return ArrStore(e.array, simplify(e.index), simplify(e.value))
    return e


def simplify_guard(g: Guard) -> Guard:
    return conj(tuple(simplify(a) for a in g))


# --------------------------------------------------------------------------
# moves and letters

QUESTIONS = frozenset({"q", "run", "read", "write"})
ANSWERS = frozenset({"done", "ok", "answer"})
PAYLOAD_BASES = frozenset({"write", "answer"})


@dataclass(frozen=True)
class Cell:
    """Tag atom ``x[a]`` naming one cell of array ``x``."""

    name: str
    index: Expr

    def __str__(self) -> str:
        return f"{self.name}[{self.index}]"


def render_tags(tags: tuple) -> str:
    return "^{" + ",".join(str(t) for t in tags) + "}" if tags else ""


@dataclass(frozen=True)
class Move:
    base: str
    tags: tuple = ()
    payload: Expr | None = None

    @property
    def is_question(self) -> bool:
        return self.base in QUESTIONS

    def tagged(self, tag) -> "Move":
        return Move(self.base, (tag,) + self.tags, self.payload)

    def untagged(self) -> "Move":
        return Move(self.base, self.tags[1:], self.payload)


@dataclass(frozen=True)
class SymbolicLetter:
    """A move, possibly with an input symbol ``?X`` in its payload position."""

    move: Move
    binder: SymName | None = None

    def __post_init__(self):
        if self.binder is not None and self.move.payload is not None:
            raise ValueError("a letter has either a payload or a binder")

    @property
    def tags(self) -> tuple:
        return self.move.tags

    @property
    def is_question(self) -> bool:
        return self.move.is_question

    def with_move(self, move: Move) -> "SymbolicLetter":
        return SymbolicLetter(move, self.binder)

    def names(self) -> set[SymName]:
        """Names read by the letter (payload and cell indices)."""
        out: set[SymName] = set()
        if self.move.payload is not None:
            out |= names_of(self.move.payload)
        for t in self.move.tags:
            if isinstance(t, Cell):
                out |= names_of(t.index)
        return out

    def substitute(self, m: Mapping[SymName, Expr]) -> "SymbolicLetter":
        if not m:
            return self
        tags = tuple(Cell(t.name, substitute(t.index, m)) if isinstance(t, Cell) else t
                     for t in self.move.tags)
        payload = None if self.move.payload is None else substitute(self.move.payload, m)
        return SymbolicLetter(Move(self.move.base, tags, payload), self.binder)

    def __str__(self) -> str:
        m = self.move
        if self.binder is not None:
            arg = f"?{self.binder}"
        elif m.payload is not None:
            arg = str(m.payload)
        else:
            arg = None
        if m.base == "answer":
            core = arg if arg is not None else "?"
        elif m.base == "write":
            core = f"write({arg})"
        else:
            core = m.base
        return core + render_tags(m.tags)


def mk(base: str, *tags, payload: Expr | None = None, binder: SymName | None = None
       ) -> SymbolicLetter:
    """Shorthand letter constructor: ``mk('q', 'x')`` is ``q^{x}``."""
    return SymbolicLetter(Move(base, tuple(tags), payload), binder)


@dataclass(frozen=True)
class GuardedLetter:
    guard: Guard
    letter: SymbolicLetter

    def __str__(self) -> str:
        if not self.guard:
            return str(self.letter)
        return f"[{render_guard(self.guard)}] {self.letter}"


@dataclass(frozen=True)
class GuardedWord:
    """Pair of the play condition and the symbolic letters."""

    condition: Guard
    letters: tuple

    @classmethod
    def of(cls, guarded: Iterable[GuardedLetter]) -> "GuardedWord":
        guarded = tuple(guarded)
        return cls(conj(*(gl.guard for gl in guarded)), tuple(gl.letter for gl in guarded))


@dataclass(frozen=True)
class ConcreteMove:
    """A move with literal payload; array cell tags are ``(name, index)`` pairs."""

    base: str
    value: Union[int, bool, None] = None
    tags: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(self._key()))

    def _key(self):
        return (self.base, type(self.value), self.value, self.tags)

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, ConcreteMove) and self._hash == other._hash \
            and self._key() == other._key()

    def __hash__(self):
        return self._hash

    def __str__(self) -> str:
        if self.base == "answer":
            core = "tt" if self.value is True else "ff" if self.value is False else str(self.value)
        elif self.base == "write":
            v = "tt" if self.value is True else "ff" if self.value is False else self.value
            core = f"write({v})"
        else:
            core = self.base
        tags = ",".join(f"{t[0]}[{t[1]}]" if isinstance(t, tuple) else str(t) for t in self.tags)
        return core + ("^{" + tags + "}" if tags else "")


def render_word(word: Iterable) -> str:
    return " · ".join(str(m) for m in word)


# --------------------------------------------------------------------------
# alphabets


@dataclass(frozen=True)
class MoveKind:
    """One move constructor of a type's alphabet; payload positions symbolic."""

    base: str
    tags: tuple
    question: bool
    payload: str | None = None  # data type of the payload position

    def __str__(self) -> str:
        core = self.base if self.payload is None else f"{self.base}({self.payload})"
        return core + render_tags(self.tags) + (" (Q)" if self.question else " (A)")


def base_alphabet(kind: str, dtype: str | None) -> list[MoveKind]:
    if kind == "com":
        return [MoveKind("run", (), True), MoveKind("done", (), False)]
    if kind == "exp":
        return [MoveKind("q", (), True), MoveKind("answer", (), False, dtype)]
    if kind == "var":
        return [MoveKind("read", (), True), MoveKind("answer", (), False, dtype),
                MoveKind("write", (), True, dtype), MoveKind("ok", (), False)]
    raise ValueError(f"unknown base type {kind!r}")


def alphabet_of(t) -> list[MoveKind]:
    """Finite list of move constructors of a base or first-order function type.

    ``t`` is any object with ``args`` (base types) and ``result``, or a base type
    with ``kind``/``dtype``; argument moves are tagged with their position.
    """
    args = getattr(t, "args", ())
    result = getattr(t, "result", t)
    out = []
    for i, a in enumerate(args, start=1):
        out += [MoveKind(k.base, (i,), k.question, k.payload)
                for k in base_alphabet(a.kind, a.dtype)]
    out += base_alphabet(result.kind, result.dtype)
    return out
