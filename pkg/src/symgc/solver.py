"""Satisfiability of play conditions.

Two backends share one constraint format: a bounded search that needs no
external tools, and a bridge that writes SMT-LIB2 to a solver process (z3 by
default) and reads the model back.
"""

from __future__ import annotations

import re
import shlex
import subprocess
from dataclasses import dataclass
from typing import Iterator, Union

from .symbolic import (
    BOOL,
    ArrayValue,
    BinOp,
    Const,
    EvaluationError,
    Expr,
    Not,
    Select,
    SymName,
    Var,
    evaluate,
    names_of,
)


@dataclass(frozen=True)
class ArrayDef:
    """One version of an array: a constant initial value and ordered updates."""

    symbol: SymName
    init: Expr
    updates: tuple = ()  # (index, value) pairs, applied left to right

    @property
    def dtype(self) -> str:
        return self.symbol.dtype


@dataclass(frozen=True)
class Read:
    array: SymName
    index: Expr
    result: SymName


@dataclass(frozen=True)
class Constraint:
    conjuncts: tuple = ()
    array_defs: tuple = ()
    reads: tuple = ()

    def names(self) -> set[SymName]:
        out: set[SymName] = set()
        for c in self.conjuncts:
            out |= names_of(c)
        for d in self.array_defs:
            for i, v in d.updates:
                out |= names_of(i) | names_of(v)
        for r in self.reads:
            out |= names_of(r.index) | {r.result}
        return {n for n in out if not n.array}

    def __str__(self) -> str:
        parts = [str(c) for c in self.conjuncts]
        for d in self.array_defs:
            ups = "".join(f"[{i}↦{v}]" for i, v in d.updates)
            parts.append(f"{d.symbol} = const({d.init}){ups}")
        parts += [f"{r.result} = {r.array}({r.index})" for r in self.reads]
        return " ∧ ".join(parts) if parts else "tt"


@dataclass(frozen=True)
class Sat:
    model: dict  # SymName -> int | bool

    def __str__(self) -> str:
        return "sat " + ", ".join(f"{k}={_show(v)}" for k, v in sorted(self.model.items()))


@dataclass(frozen=True)
class Unsat:
    def __str__(self) -> str:
        return "unsat"


@dataclass(frozen=True)
class Unknown:
    reason: str = ""

    def __str__(self) -> str:
        return f"unknown ({self.reason})" if self.reason else "unknown"


SatResult = Union[Sat, Unsat, Unknown]


def _show(v) -> str:
    return "tt" if v is True else "ff" if v is False else str(v)


def array_values(c: Constraint, model: dict) -> dict:
    """Concrete function for every array version under ``model``."""
    out = {}
    for d in c.array_defs:
        arr = ArrayValue(evaluate(d.init, model))
        for i, v in d.updates:
            arr = arr.store(evaluate(i, model), evaluate(v, model))
        out[d.symbol] = arr
    return out


def validate_model(c: Constraint, model: dict) -> bool:
    """True when ``model`` gives every name a value of its type and satisfies ``c``."""
    for n in c.names():
        if n not in model:
            return False
        v = model[n]
        if (n.dtype == BOOL) != isinstance(v, bool):
            return False
    try:
        env = dict(model)
        env.update(array_values(c, model))
        for r in c.reads:
            if env[r.array](evaluate(r.index, env)) != model[r.result]:
                return False
        return all(evaluate(x, env) is True for x in c.conjuncts)
    except (EvaluationError, KeyError):
        return False


class Backend:
    name = "backend"

    def check(self, c: Constraint) -> SatResult:
        raise NotImplementedError


# --------------------------------------------------------------------------
# builtin bounded search


def _definition(atom: Expr):
    """``X = e`` (either side) with X not occurring in e, as (X, e)."""
    if isinstance(atom, BinOp) and atom.op == "=":
        for lhs, rhs in ((atom.left, atom.right), (atom.right, atom.left)):
            if isinstance(lhs, Var) and lhs.name not in names_of(rhs):
                return lhs.name, rhs
    return None


def _int_order(bound: int) -> Iterator[int]:
    yield 0
    for k in range(1, bound + 1):
        yield k
        yield -k


@dataclass
class BuiltinSolver(Backend):
    """Propagation of equalities and bounds, then enumeration inside ``[-bound, bound]``.

    Unsat is reported only when no variable's search was cut off by the box;
    otherwise the answer is Unknown.
    """

    bound: int = 64
    max_nodes: int = 200_000
    name: str = "builtin"

    def check(self, c: Constraint) -> SatResult:
        env_arrays = {d.symbol: d for d in c.array_defs}
        defs, checks = {}, []
        for atom in c.conjuncts:
            d = _definition(atom)
            if d is not None and d[0] not in defs:
                defs[d[0]] = d[1]
            else:
                checks.append(atom)
        names = sorted(c.names(), key=lambda n: (n.index, n.dtype))
        order = self._order(c, defs)
        self._nodes = 0
        self._cut = False
        try:
            model = self._search({}, order, defs, checks, c, env_arrays)
        except _Budget:
            return Unknown("search budget exhausted")
        if model is not None:
            for n in names:
                model.setdefault(n, False if n.dtype == BOOL else 0)
            return Sat(model) if validate_model(c, model) else Unknown("model failed validation")
        return Unknown(f"search box [-{self.bound}, {self.bound}] cut off") if self._cut else Unsat()

    def _order(self, c: Constraint, defs: dict) -> list[SymName]:
        seen, order = set(), []
        exprs = list(c.conjuncts) + [e for d in c.array_defs for u in d.updates for e in u]
        exprs += [r.index for r in c.reads]
        for e in exprs:
            for n in sorted(names_of(e), key=lambda n: (n.index, n.dtype)):
                if n.array or n in seen:
                    continue
                seen.add(n)
                order.append(n)
        for r in c.reads:
            if r.result not in seen:
                seen.add(r.result)
                order.append(r.result)
        return order

    def _propagate(self, env: dict, defs: dict, checks: list, c: Constraint, arrays: dict):
        """Fill in determined names; None on conflict."""
        env = dict(env)
        changed = True
        while changed:
            changed = False
            for x, e in defs.items():
                if x in env or not names_of(e) <= _known(env):
                    continue
                try:
                    v = evaluate(e, _with_arrays(env, c))
                except EvaluationError:
                    return None
                if (x.dtype == BOOL) != isinstance(v, bool):
                    return None
                env[x] = v
                changed = True
            for r in c.reads:
                if r.result in env:
                    continue
                d = arrays.get(r.array)
                if d is None:
                    continue
                need = names_of(r.index) | {n for i, v in d.updates for n in names_of(i) | names_of(v)}
                if need <= _known(env):
                    try:
                        env[r.result] = _with_arrays(env, c)[r.array](evaluate(r.index, env))
                    except EvaluationError:
                        return None
                    changed = True
        full = _with_arrays(env, c)
        for atom in checks + [BinOp("=", Var(x), e) for x, e in defs.items()]:
            if names_of(atom) <= _known(env):
                try:
                    if evaluate(atom, full) is not True:
                        return None
                except EvaluationError:
                    return None
        for r in c.reads:
            d = arrays.get(r.array)
            if d is None:
                continue
            need = names_of(r.index) | {r.result}
            need |= {n for i, v in d.updates for n in names_of(i) | names_of(v)}
            if need <= _known(env):
                try:
                    if full[r.array](evaluate(r.index, full)) != env[r.result]:
                        return None
                except EvaluationError:
                    return None
        return env

    def _candidates(self, x: SymName, env: dict, atoms: list):
        """Values for ``x`` in search order, and whether the box cut the domain."""
        if x.dtype == BOOL:
            return [False, True], False
        lo, hi = None, None
        for atom in atoms:
            b = _bound_on(x, atom, env)
            if b is None:
                continue
            blo, bhi = b
            if blo is not None:
                lo = blo if lo is None else max(lo, blo)
            if bhi is not None:
                hi = bhi if hi is None else min(hi, bhi)
        cut = lo is None or hi is None or lo < -self.bound or hi > self.bound
        lo = -self.bound if lo is None else max(lo, -self.bound)
        hi = self.bound if hi is None else min(hi, self.bound)
        return [v for v in _int_order(self.bound) if lo <= v <= hi], cut

    def _search(self, env, order, defs, checks, c, arrays):
        env = self._propagate(env, defs, checks, c, arrays)
        if env is None:
            return None
        free = [x for x in order if x not in env]
        if not free:
            return env
        self._nodes += 1
        if self._nodes > self.max_nodes:
            raise _Budget()
        x = free[0]
        atoms = [a for a in checks + [BinOp("=", Var(y), e) for y, e in defs.items()]
                 if x in names_of(a) and names_of(a) - {x} <= _known(env)]
        values, cut = self._candidates(x, env, atoms)
        for v in values:
            found = self._search({**env, x: v}, order, defs, checks, c, arrays)
            if found is not None:
                return found
        if cut:
            self._cut = True
        return None


class _Budget(Exception):
    pass


def _known(env: dict) -> set:
    return set(env)


def _with_arrays(env: dict, c: Constraint) -> dict:
    full = dict(env)
    for d in c.array_defs:
        needed = names_of(d.init).union(*(names_of(i) | names_of(v) for i, v in d.updates))
        if needed <= set(env):
            try:
                full[d.symbol] = array_values(Constraint(array_defs=(d,)), env)[d.symbol]
            except EvaluationError:
                pass
    return full


_MIRROR = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "=": "=", "!=": "!="}


def _bound_on(x: SymName, atom: Expr, env: dict):
    """Interval (lo, hi) implied on ``x`` by a comparison ``x op e`` with e known."""
    if not isinstance(atom, BinOp) or atom.op not in _MIRROR:
        return None
    if atom.left == Var(x) and x not in names_of(atom.right):
        op, other = atom.op, atom.right
    elif atom.right == Var(x) and x not in names_of(atom.left):
        op, other = _MIRROR[atom.op], atom.left
    else:
        return None
    try:
        v = evaluate(other, env)
    except (EvaluationError, KeyError):
        return None
    if isinstance(v, bool):
        return None
    return {"<": (None, v - 1), "<=": (None, v), ">": (v + 1, None), ">=": (v, None),
            "=": (v, v), "!=": None}[op]


# --------------------------------------------------------------------------
# SMT-LIB2 bridge


def _sym(n: SymName) -> str:
    kind = "a" if n.array else ("b" if n.dtype == BOOL else "i")
    return f"{kind}{n.index}"


_SMT_OPS = {"+": "+", "-": "-", "*": "*", "/": "div", "%": "mod", "=": "=", "!=": "distinct",
            "<": "<", "<=": "<=", ">": ">", ">=": ">=", "and": "and", "or": "or"}


def to_smt(e: Expr) -> str:
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value) if e.value >= 0 else f"(- {-e.value})"
    if isinstance(e, Var):
        return _sym(e.name)
    if isinstance(e, Not):
        return f"(not {to_smt(e.arg)})"
    if isinstance(e, BinOp):
        return f"({_SMT_OPS[e.op]} {to_smt(e.left)} {to_smt(e.right)})"
    if isinstance(e, Select):
        return f"(select {_sym(e.array)} {to_smt(e.index)})"
    raise TypeError(f"no SMT-LIB form for {e!r}")


def _divisors(e: Expr) -> Iterator[Expr]:
    if isinstance(e, BinOp):
        if e.op in ("/", "%"):
            yield e.right
        yield from _divisors(e.left)
        yield from _divisors(e.right)
    elif isinstance(e, Not):
        yield from _divisors(e.arg)
    elif isinstance(e, Select):
        yield from _divisors(e.index)


def to_smtlib(c: Constraint) -> str:
    """SMT-LIB2 script asserting ``c``; ends with check-sat and get-value."""
    names = sorted(c.names(), key=lambda n: (n.dtype, n.index))
    lines = ["(set-option :produce-models true)", "(set-logic ALL)"]
    for n in names:
        lines.append(f"(declare-const {_sym(n)} {'Bool' if n.dtype == BOOL else 'Int'})")
    for d in c.array_defs:
        elem = "Bool" if d.dtype == BOOL else "Int"
        body = f"((as const (Array Int {elem})) {to_smt(d.init)})"
        for i, v in d.updates:
            body = f"(store {body} {to_smt(i)} {to_smt(v)})"
        lines.append(f"(define-fun {_sym(d.symbol)} () (Array Int {elem}) {body})")
    exprs = list(c.conjuncts) + [e for d in c.array_defs for u in d.updates for e in u]
    exprs += [r.index for r in c.reads]
    for d in sorted({str(x): x for e in exprs for x in _divisors(e)}.values(), key=str):
        lines.append(f"(assert (distinct {to_smt(d)} 0))")
    for r in c.reads:
        lines.append(f"(assert (= {_sym(r.result)} (select {_sym(r.array)} {to_smt(r.index)})))")
    for atom in c.conjuncts:
        lines.append(f"(assert {to_smt(atom)})")
    lines.append("(check-sat)")
    if names:
        lines.append(f"(get-value ({' '.join(_sym(n) for n in names)}))")
    return "\n".join(lines) + "\n"


_TOKEN = re.compile(r"\s*(\(|\)|\"[^\"]*\"|[^\s()]+)")


def parse_sexprs(text: str) -> list:
    """Parse a sequence of s-expressions into nested lists of atoms (strings)."""
    stack, out = [[]], None
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        pos = m.end()
        tok = m.group(1)
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    out = stack[0]
    return out


def _value(v):
    if v == "true":
        return True
    if v == "false":
        return False
    if isinstance(v, list) and len(v) == 2 and v[0] == "-":
        return -_value(v[1])
    return int(v)


@dataclass
class ExternalSolver(Backend):
    """Runs an SMT-LIB2 solver reading a script on stdin."""

    command: str = "z3 -in"
    timeout: float = 10.0
    name: str = "external"

    def check(self, c: Constraint) -> SatResult:
        script = to_smtlib(c)
        try:
            proc = subprocess.run(shlex.split(self.command), input=script, capture_output=True,
                                  text=True, timeout=self.timeout)
        except FileNotFoundError:
            return Unknown(f"solver not found: {self.command}")
        except subprocess.TimeoutExpired:
            return Unknown("solver timed out")
        return self.read_answer(c, proc.stdout)

    @staticmethod
    def read_answer(c: Constraint, output: str) -> SatResult:
        try:
            items = parse_sexprs(output)
        except ValueError as exc:
            return Unknown(f"unparsable solver output: {exc}")
        if not items:
            return Unknown("empty solver output")
        head = items[0]
        if head == "unsat":
            return Unsat()
        if head != "sat":
            return Unknown(f"solver said {head}")
        by_sym = {_sym(n): n for n in c.names()}
        model = {}
        for item in items[1:]:
            if not isinstance(item, list):
                continue
            for pair in item:
                if isinstance(pair, list) and len(pair) == 2 and pair[0] in by_sym:
                    try:
                        model[by_sym[pair[0]]] = _value(pair[1])
                    except (TypeError, ValueError):
                        return Unknown(f"cannot read value of {pair[0]}")
        for n in c.names():
            model.setdefault(n, False if n.dtype == BOOL else 0)
        if not validate_model(c, model):
            return Unknown("solver model failed validation")
        return Sat(model)


def make_backend(name: str = "builtin", bound: int = 64) -> Backend:
    """``builtin`` or ``exec:<command line>``; ``z3`` is short for ``exec:z3 -in``."""
    if name == "builtin":
        return BuiltinSolver(bound=bound)
    if name == "z3":
        return ExternalSolver("z3 -in")
    if name.startswith("exec:"):
        return ExternalSolver(name[len("exec:"):])
    raise ValueError(f"unknown solver {name!r}")
