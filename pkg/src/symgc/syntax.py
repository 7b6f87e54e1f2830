"""Abstract syntax, parser, type checker and beta-normalizer for IA2 terms.

Concrete syntax of an input file is a typing judgement::

    f : com -> com, abort : com, x : expint, y : expint
      |- f (if x != y then abort) : com

Arrays are declared in the context as ``name[len] : varint`` where ``len`` is
a positive literal, ``?`` (unconstrained) or an identifier naming the
unconstrained length so that the term may mention it.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Union

INT = "int"
BOOL = "bool"


class ParseError(Exception):
    """Parse failure with 1-based line/column."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg, self.line, self.col = msg, line, col


class TypeCheckError(Exception):
    def __init__(self, msg: str, pos=None):
        where = f"{pos[0]}:{pos[1]}: " if pos else ""
        super().__init__(where + msg)
        self.pos = pos


class UnsupportedConstruct(ParseError):
    pass


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class BaseType:
    kind: str  # exp | com | var
    dtype: str | None = None

    def __post_init__(self):
        if (self.kind == "com") != (self.dtype is None):
            raise ValueError(f"bad base type {self.kind}/{self.dtype}")

    def __str__(self) -> str:
        return "com" if self.kind == "com" else f"{self.kind}{self.dtype}"


@dataclass(frozen=True)
class FunType:
    """``B1 -> ... -> Bk -> B``; a base type is the case k = 0."""

    args: tuple = ()
    result: BaseType = None

    @property
    def is_base(self) -> bool:
        return not self.args

    def __str__(self) -> str:
        return " -> ".join(str(t) for t in self.args + (self.result,))


@dataclass(frozen=True)
class ArrayDecl:
    """An array identifier: element type and length (int, name or None)."""

    dtype: str
    length: Union[int, str, None]

    def __str__(self) -> str:
        return f"var{self.dtype}"


COM = BaseType("com")
EXPINT = BaseType("exp", INT)
EXPBOOL = BaseType("exp", BOOL)
VARINT = BaseType("var", INT)
VARBOOL = BaseType("var", BOOL)


def fun(*types: BaseType) -> FunType:
    return FunType(tuple(types[:-1]), types[-1])


_BASE_NAMES = {"com": COM, "expint": EXPINT, "expbool": EXPBOOL,
               "varint": VARINT, "varbool": VARBOOL}


# --------------------------------------------------------------------------
# terms

_POS = dict(default=None, compare=False, repr=False)


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Ident(Term):
    name: str
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Lit(Term):
    value: Union[int, bool]
    pos: tuple = field(**_POS)

    def __eq__(self, other):
        return (isinstance(other, Lit) and type(self.value) is type(other.value)
                and self.value == other.value)

    def __hash__(self):
        return hash((type(self.value), self.value))


@dataclass(frozen=True)
class Skip(Term):
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class BinTerm(Term):
    op: str
    left: Term
    right: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class NotTerm(Term):
    arg: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Seq(Term):
    first: Term
    second: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    orelse: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class While(Term):
    cond: Term
    body: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Assign(Term):
    target: Term
    value: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Deref(Term):
    var: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class NewVar(Term):
    dtype: str
    name: str
    init: Lit
    body: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Lam(Term):
    name: str
    type: BaseType
    body: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class ArrayElem(Term):
    name: str
    index: Term
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class NewArray(Term):
    dtype: str
    name: str
    length: int
    init: Lit
    body: Term
    pos: tuple = field(**_POS)


ARITH = ("+", "-", "*", "/", "%")
ORDER = ("<", "<=", ">", ">=")
EQUALITY = ("=", "!=")
LOGIC = ("and", "or")


@dataclass(frozen=True)
class Context:
    """Ordered typed free identifiers; arrays carry an :class:`ArrayDecl`."""

    entries: tuple = ()

    def __post_init__(self):
        seen = set()
        for name, t in self.entries:
            for n in (name, _length_name(t)):
                if n is None:
                    continue
                if n in seen:
                    raise TypeCheckError(f"duplicate identifier {n!r} in context")
                seen.add(n)
            if name == "abort" and t != fun(COM):
                raise TypeCheckError("'abort' must have type com")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def lookup(self, name: str):
        for n, t in self.entries:
            if n == name:
                return t
        return None

    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def length_names(self) -> dict[str, str]:
        """Map from length identifier to its array."""
        return {_length_name(t): n for n, t in self.entries if _length_name(t)}

    def __str__(self) -> str:
        parts = []
        for n, t in self.entries:
            if isinstance(t, ArrayDecl):
                ln = "?" if t.length is None else t.length
                parts.append(f"{n}[{ln}] : {t}")
            else:
                parts.append(f"{n} : {t}")
        return ", ".join(parts)


def _length_name(t) -> str | None:
    if isinstance(t, ArrayDecl) and isinstance(t.length, str):
        return t.length
    return None


# --------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>(\#|//)[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>\|-|⊢|:=|->|→|!=|≠|<>|<=|≤|>=|≥|&&|∧|\|\||∨|¬|λ|[\\(){}\[\];:,.+\-*/%=<>!~?])
""", re.VERBOSE)

_SYM_ALIASES = {"⊢": "|-", "→": "->", "≠": "!=", "<>": "!=", "≤": "<=", "≥": ">=",
                "∧": "&&", "∨": "||", "¬": "not", "~": "not", "λ": "\\"}

KEYWORDS = {"skip", "if", "then", "else", "while", "do", "new_int", "new_bool", "in",
            "true", "false", "tt", "ff", "and", "or", "not", "mkvar"}


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | kw | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks, line, start, i = [], 1, 0, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line, i - start + 1)
        kind, s = m.lastgroup, m.group()
        col = i - start + 1
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "num":
            toks.append(Token("num", s, line, col))
        elif kind == "ident":
            toks.append(Token("kw" if s in KEYWORDS else "ident", s, line, col))
        elif kind == "sym":
            s = _SYM_ALIASES.get(s, s)
            toks.append(Token("kw" if s == "not" else "sym", s, line, col))
        i = m.end()
    toks.append(Token("eof", "", line, i - start + 1))
    return toks


# --------------------------------------------------------------------------
# parser

_REL = {"=": "=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts) -> bool:
        return self.tok.kind in ("sym", "kw") and self.tok.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail("expected identifier")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        found = t.text or "end of input"
        raise ParseError(f"{msg}, found {found!r}", t.line, t.col)

    def pos(self) -> tuple:
        return (self.tok.line, self.tok.col)

    # judgement
    def judgement(self):
        entries = []
        if not self.at("|-"):
            entries.append(self.ctx_entry())
            while self.at(","):
                self.advance()
                entries.append(self.ctx_entry())
        self.expect("|-")
        term = self.term()
        declared = None
        if self.at(":"):
            self.advance()
            declared = self.type_()
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")
        try:
            ctx = Context(tuple(entries))
        except TypeCheckError as e:
            raise ParseError(str(e)) from None
        return ctx, term, declared

    def ctx_entry(self):
        tok = self.ident()
        length: Union[int, str, None] = 0
        is_array = False
        if self.at("["):
            is_array = True
            self.advance()
            if self.tok.kind == "num":
                length = int(self.advance().text)
                if length <= 0:
                    raise ParseError("array length must be positive", tok.line, tok.col)
            elif self.at("?"):
                self.advance()
                length = None
            else:
                length = self.ident().text
            self.expect("]")
        self.expect(":")
        t = self.type_()
        if is_array:
            if not (t.is_base and t.result.kind == "var"):
                raise ParseError("arrays must have a var type", tok.line, tok.col)
            return tok.text, ArrayDecl(t.result.dtype, length)
        return tok.text, t

    def type_(self) -> FunType:
        parts = [self.base_type()]
        while self.at("->"):
            self.advance()
            parts.append(self.base_type())
        return fun(*parts)

    def base_type(self) -> BaseType:
        t = self.tok
        if t.kind == "ident" and t.text in _BASE_NAMES:
            self.advance()
            return _BASE_NAMES[t.text]
        self.fail("expected a type")

    # terms
    def term(self) -> Term:
        pos = self.pos()
        t = self.stmt()
        while self.at(";"):
            self.advance()
            if self.at("}", ")") or self.tok.kind == "eof" or self.at(":"):
                break  # trailing separator
            t = Seq(t, self.stmt(), pos=pos)
        return t

    def stmt(self) -> Term:
        pos = self.pos()
        if self.at("if"):
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.stmt()
            orelse: Term = Skip(pos=pos)
            if self.at("else"):
                self.advance()
                orelse = self.stmt()
            return If(cond, then, orelse, pos=pos)
        if self.at("while"):
            self.advance()
            cond = self.expr()
            self.expect("do")
            return While(cond, self.stmt(), pos=pos)
        if self.at("new_int", "new_bool"):
            dtype = INT if self.advance().text == "new_int" else BOOL
            name = self.ident().text
            length = None
            if self.at("["):
                self.advance()
                if self.tok.kind != "num":
                    self.fail("local arrays need a literal length")
                length = int(self.advance().text)
                if length <= 0:
                    self.fail("array length must be positive")
                self.expect("]")
            self.expect(":=")
            init = self.expr()
            self.expect("in")
            body = self.term()
            default = Lit(0 if dtype == INT else False)
            if length is not None:
                if not isinstance(init, Lit):
                    self.fail("array initialiser must be a literal")
                return NewArray(dtype, name, length, init, body, pos=pos)
            if isinstance(init, Lit):
                return NewVar(dtype, name, init, body, pos=pos)
            # non-literal initialiser: allocate with the default, then assign
            return NewVar(dtype, name, default,
                          Seq(Assign(Ident(name, pos=pos), init, pos=pos), body, pos=pos),
                          pos=pos)
        if self.at("\\"):
            self.advance()
            name = self.ident().text
            self.expect(":")
            btype = self.type_()
            if not btype.is_base:
                self.fail("lambda-bound identifiers must have base type")
            self.expect(".")
            return Lam(name, btype.result, self.term(), pos=pos)
        if self.at("mkvar"):
            t = self.tok
            raise UnsupportedConstruct("mkvar is not supported", t.line, t.col)
        e = self.expr()
        if self.at(":="):
            self.advance()
            return Assign(e, self.expr(), pos=pos)
        return e

    def expr(self) -> Term:
        return self.or_()

    def or_(self) -> Term:
        pos = self.pos()
        t = self.and_()
        while self.at("||", "or"):
            self.advance()
            t = BinTerm("or", t, self.and_(), pos=pos)
        return t

    def and_(self) -> Term:
        pos = self.pos()
        t = self.cmp()
        while self.at("&&", "and"):
            self.advance()
            t = BinTerm("and", t, self.cmp(), pos=pos)
        return t

    def cmp(self) -> Term:
        pos = self.pos()
        t = self.add()
        if self.tok.kind == "sym" and self.tok.text in _REL:
            op = _REL[self.advance().text]
            t = BinTerm(op, t, self.add(), pos=pos)
        return t

    def add(self) -> Term:
        pos = self.pos()
        t = self.mul()
        while self.at("+", "-"):
            op = self.advance().text
            t = BinTerm(op, t, self.mul(), pos=pos)
        return t

    def mul(self) -> Term:
        pos = self.pos()
        t = self.unary()
        while self.at("*", "/", "%"):
            op = self.advance().text
            t = BinTerm(op, t, self.unary(), pos=pos)
        return t

    def unary(self) -> Term:
        pos = self.pos()
        if self.at("!"):
            self.advance()
            return Deref(self.unary(), pos=pos)
        if self.at("not"):
            self.advance()
            return NotTerm(self.unary(), pos=pos)
        if self.at("-"):
            self.advance()
            arg = self.unary()
            if isinstance(arg, Lit) and type(arg.value) is int:
                return Lit(-arg.value, pos=pos)
            return BinTerm("-", Lit(0, pos=pos), arg, pos=pos)
        return self.app()

    def _starts_arg(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "num"):
            return True
        return self.at("(", "{", "!", "skip", "true", "false", "tt", "ff")

    def app(self) -> Term:
        pos = self.pos()
        t = self.primary()
        while self._starts_arg():
            arg = self.arg()
            t = App(t, arg, pos=pos)
        return t

    def arg(self) -> Term:
        pos = self.pos()
        if self.at("!"):
            self.advance()
            return Deref(self.arg(), pos=pos)
        return self.primary()

    def primary(self) -> Term:
        pos = self.pos()
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Lit(int(t.text), pos=pos)
        if self.at("true", "tt"):
            self.advance()
            return Lit(True, pos=pos)
        if self.at("false", "ff"):
            self.advance()
            return Lit(False, pos=pos)
        if self.at("skip"):
            self.advance()
            return Skip(pos=pos)
        if self.at("mkvar"):
            raise UnsupportedConstruct("mkvar is not supported", t.line, t.col)
        if t.kind == "ident":
            self.advance()
            if self.at("["):
                self.advance()
                index = self.expr()
                self.expect("]")
                return ArrayElem(t.text, index, pos=pos)
            return Ident(t.text, pos=pos)
        if self.at("(", "{"):
            close = ")" if self.advance().text == "(" else "}"
            inner = self.term()
            self.expect(close)
            return inner
        self.fail("expected a term")


def parse_judgement(text: str):
    """Parse ``ctx |- term [: type]``; returns (Context, Term, declared type or None)."""
    return _Parser(text).judgement()


def parse(text: str) -> tuple[Context, Term]:
    ctx, term, _ = parse_judgement(text)
    return ctx, term


def parse_term(text: str) -> Term:
    """Parse a bare term (no context)."""
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    return t


# --------------------------------------------------------------------------
# type checking


def _env_of(ctx: Context) -> dict:
    env = {}
    for name, t in ctx:
        env[name] = t
        if isinstance(t, ArrayDecl) and isinstance(t.length, str):
            env[t.length] = fun(EXPINT)
    return env


def typecheck(ctx: Context, t: Term) -> FunType:
    """Return the type of ``t`` under ``ctx`` or raise :class:`TypeCheckError`."""
    return _tc(_env_of(ctx), t)


def _base(ft: FunType, what: str, pos) -> BaseType:
    if not ft.is_base:
        raise TypeCheckError(f"{what} has function type {ft}", pos)
    return ft.result


def _expect(env, t: Term, want: BaseType, what: str) -> None:
    got = _base(_tc(env, t), what, t.pos)
    if got != want:
        raise TypeCheckError(f"{what} must have type {want}, found {got}", t.pos)


def _tc(env: dict, t: Term) -> FunType:
    if isinstance(t, Ident):
        ty = env.get(t.name)
        if ty is None:
            raise TypeCheckError(f"unbound identifier {t.name!r}", t.pos)
        if isinstance(ty, ArrayDecl):
            raise TypeCheckError(f"array {t.name!r} used without an index", t.pos)
        return ty
    if isinstance(t, Lit):
        return fun(EXPBOOL if isinstance(t.value, bool) else EXPINT)
    if isinstance(t, Skip):
        return fun(COM)
    if isinstance(t, BinTerm):
        if t.op in ARITH:
            _expect(env, t.left, EXPINT, f"left operand of {t.op}")
            _expect(env, t.right, EXPINT, f"right operand of {t.op}")
            return fun(EXPINT)
        if t.op in ORDER:
            _expect(env, t.left, EXPINT, f"left operand of {t.op}")
            _expect(env, t.right, EXPINT, f"right operand of {t.op}")
            return fun(EXPBOOL)
        if t.op in EQUALITY:
            left = _base(_tc(env, t.left), "operand", t.pos)
            if left.kind != "exp":
                raise TypeCheckError(f"operand of {t.op} must be an expression", t.pos)
            _expect(env, t.right, left, f"right operand of {t.op}")
            return fun(EXPBOOL)
        if t.op in LOGIC:
            _expect(env, t.left, EXPBOOL, f"left operand of {t.op}")
            _expect(env, t.right, EXPBOOL, f"right operand of {t.op}")
            return fun(EXPBOOL)
        raise TypeCheckError(f"unknown operator {t.op!r}", t.pos)
    if isinstance(t, NotTerm):
        _expect(env, t.arg, EXPBOOL, "operand of not")
        return fun(EXPBOOL)
    if isinstance(t, Seq):
        _expect(env, t.first, COM, "left of ;")
        _expect(env, t.second, COM, "right of ;")
        return fun(COM)
    if isinstance(t, If):
        _expect(env, t.cond, EXPBOOL, "condition")
        _expect(env, t.then, COM, "then branch")
        _expect(env, t.orelse, COM, "else branch")
        return fun(COM)
    if isinstance(t, While):
        _expect(env, t.cond, EXPBOOL, "loop condition")
        _expect(env, t.body, COM, "loop body")
        return fun(COM)
    if isinstance(t, Assign):
        target = _base(_tc(env, t.target), "assignment target", t.pos)
        if target.kind != "var":
            raise TypeCheckError(f"cannot assign to {target}", t.pos)
        _expect(env, t.value, BaseType("exp", target.dtype), "assigned value")
        return fun(COM)
    if isinstance(t, Deref):
        v = _base(_tc(env, t.var), "dereferenced term", t.pos)
        if v.kind != "var":
            raise TypeCheckError(f"cannot dereference {v}", t.pos)
        return fun(BaseType("exp", v.dtype))
    if isinstance(t, NewVar):
        if _lit_dtype(t.init) != t.dtype:
            raise TypeCheckError(f"initialiser {t.init.value!r} is not {t.dtype}", t.pos)
        body = _tc({**env, t.name: fun(BaseType("var", t.dtype))}, t.body)
        return fun(_base(body, "block body", t.pos))
    if isinstance(t, NewArray):
        if _lit_dtype(t.init) != t.dtype:
            raise TypeCheckError(f"initialiser {t.init.value!r} is not {t.dtype}", t.pos)
        body = _tc({**env, t.name: ArrayDecl(t.dtype, t.length)}, t.body)
        return fun(_base(body, "block body", t.pos))
    if isinstance(t, Lam):
        body = _tc({**env, t.name: fun(t.type)}, t.body)
        return FunType((t.type,) + body.args, body.result)
    if isinstance(t, App):
        fn = _tc(env, t.fn)
        if fn.is_base:
            raise TypeCheckError(f"applying a term of base type {fn}", t.pos)
        _expect(env, t.arg, fn.args[0], "argument")
        return FunType(fn.args[1:], fn.result)
    if isinstance(t, ArrayElem):
        decl = env.get(t.name)
        if not isinstance(decl, ArrayDecl):
            raise TypeCheckError(f"{t.name!r} is not an array", t.pos)
        _expect(env, t.index, EXPINT, "array index")
        return fun(BaseType("var", decl.dtype))
    raise TypeCheckError(f"unknown term {t!r}")


def _lit_dtype(lit: Lit) -> str:
    return BOOL if isinstance(lit.value, bool) else INT


# --------------------------------------------------------------------------
# beta normalisation


def free_identifiers(t: Term) -> set[str]:
    if isinstance(t, Ident):
        return {t.name}
    if isinstance(t, ArrayElem):
        return {t.name} | free_identifiers(t.index)
    if isinstance(t, (NewVar, NewArray, Lam)):
        extra = set()
        if isinstance(t, (NewVar, NewArray)):
            extra = free_identifiers(t.init)
        return (free_identifiers(t.body) - {t.name}) | extra
    return set().union(*(free_identifiers(c) for c in _children(t)))


def _children(t: Term) -> tuple:
    if isinstance(t, (BinTerm,)):
        return (t.left, t.right)
    if isinstance(t, NotTerm):
        return (t.arg,)
    if isinstance(t, Seq):
        return (t.first, t.second)
    if isinstance(t, If):
        return (t.cond, t.then, t.orelse)
    if isinstance(t, While):
        return (t.cond, t.body)
    if isinstance(t, Assign):
        return (t.target, t.value)
    if isinstance(t, Deref):
        return (t.var,)
    if isinstance(t, App):
        return (t.fn, t.arg)
    return ()


def _fresh_name(base: str, avoid: set[str]) -> str:
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in avoid:
            return cand


def substitute(t: Term, name: str, s: Term) -> Term:
    """Capture-avoiding substitution ``t[s/name]``."""
    if isinstance(t, Ident):
        return s if t.name == name else t
    if isinstance(t, (Lit, Skip)):
        return t
    if isinstance(t, ArrayElem):
        return ArrayElem(t.name, substitute(t.index, name, s), pos=t.pos)
    if isinstance(t, (Lam, NewVar, NewArray)):
        if t.name == name:
            return t
        body, bound = t.body, t.name
        fv = free_identifiers(s)
        if bound in fv:
            new = _fresh_name(bound, fv | free_identifiers(body) | {name})
            body = _rename(body, bound, new)
            bound = new
        body = substitute(body, name, s)
        if isinstance(t, Lam):
            return Lam(bound, t.type, body, pos=t.pos)
        if isinstance(t, NewVar):
            return NewVar(t.dtype, bound, t.init, body, pos=t.pos)
        return NewArray(t.dtype, bound, t.length, t.init, body, pos=t.pos)
    return _rebuild(t, [substitute(c, name, s) for c in _children(t)])


def _rename(t: Term, old: str, new: str) -> Term:
    """Rename free occurrences of identifier (or array) ``old``."""
    if isinstance(t, Ident):
        return Ident(new, pos=t.pos) if t.name == old else t
    if isinstance(t, ArrayElem):
        return ArrayElem(new if t.name == old else t.name, _rename(t.index, old, new), pos=t.pos)
    if isinstance(t, (Lam, NewVar, NewArray)):
        if t.name == old:
            return t
        body = _rename(t.body, old, new)
        if isinstance(t, Lam):
            return Lam(t.name, t.type, body, pos=t.pos)
        if isinstance(t, NewVar):
            return NewVar(t.dtype, t.name, t.init, body, pos=t.pos)
        return NewArray(t.dtype, t.name, t.length, t.init, body, pos=t.pos)
    if isinstance(t, (Lit, Skip)):
        return t
    return _rebuild(t, [_rename(c, old, new) for c in _children(t)])


def _rebuild(t: Term, kids: list) -> Term:
    if isinstance(t, BinTerm):
        return BinTerm(t.op, *kids, pos=t.pos)
    if isinstance(t, NotTerm):
        return NotTerm(*kids, pos=t.pos)
    if isinstance(t, Seq):
        return Seq(*kids, pos=t.pos)
    if isinstance(t, If):
        return If(*kids, pos=t.pos)
    if isinstance(t, While):
        return While(*kids, pos=t.pos)
    if isinstance(t, Assign):
        return Assign(*kids, pos=t.pos)
    if isinstance(t, Deref):
        return Deref(*kids, pos=t.pos)
    if isinstance(t, App):
        return App(*kids, pos=t.pos)
    raise TypeError(t)


def beta_normalize(t: Term) -> Term:
    """Contract every ``(\\x.M) N`` redex; applications of free names stay."""
    if isinstance(t, App):
        fn = beta_normalize(t.fn)
        arg = beta_normalize(t.arg)
        if isinstance(fn, Lam):
            return beta_normalize(substitute(fn.body, fn.name, arg))
        return App(fn, arg, pos=t.pos)
    if isinstance(t, Lam):
        return Lam(t.name, t.type, beta_normalize(t.body), pos=t.pos)
    if isinstance(t, NewVar):
        return NewVar(t.dtype, t.name, t.init, beta_normalize(t.body), pos=t.pos)
    if isinstance(t, NewArray):
        return NewArray(t.dtype, t.name, t.length, t.init, beta_normalize(t.body), pos=t.pos)
    if isinstance(t, ArrayElem):
        return ArrayElem(t.name, beta_normalize(t.index), pos=t.pos)
    if isinstance(t, (Ident, Lit, Skip)):
        return t
    return _rebuild(t, [beta_normalize(c) for c in _children(t)])


def is_beta_normal(t: Term) -> bool:
    if isinstance(t, App) and isinstance(t.fn, Lam):
        return False
    kids = _children(t)
    if isinstance(t, (Lam, NewVar, NewArray)):
        kids = (t.body,)
    if isinstance(t, ArrayElem):
        kids = (t.index,)
    return all(is_beta_normal(c) for c in kids)


# --------------------------------------------------------------------------
# pretty printing (fully bracketed; parse(pretty(t)) == t)

_OP_SRC = {"and": "&&", "or": "||"}


def pretty(t: Term) -> str:
    if isinstance(t, Ident):
        return t.name
    if isinstance(t, Lit):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        return f"({t.value})" if t.value < 0 else str(t.value)
    if isinstance(t, Skip):
        return "skip"
    if isinstance(t, BinTerm):
        return f"({pretty(t.left)} {_OP_SRC.get(t.op, t.op)} {pretty(t.right)})"
    if isinstance(t, NotTerm):
        return f"(not {pretty(t.arg)})"
    if isinstance(t, Seq):
        return f"{{{pretty(t.first)}; {pretty(t.second)}}}"
    if isinstance(t, If):
        return f"(if {pretty(t.cond)} then {pretty(t.then)} else {pretty(t.orelse)})"
    if isinstance(t, While):
        return f"(while {pretty(t.cond)} do {pretty(t.body)})"
    if isinstance(t, Assign):
        return f"({pretty(t.target)} := {pretty(t.value)})"
    if isinstance(t, Deref):
        return f"(!{pretty(t.var)})"
    if isinstance(t, NewVar):
        kw = "new_int" if t.dtype == INT else "new_bool"
        return f"({kw} {t.name} := {pretty(t.init)} in {pretty(t.body)})"
    if isinstance(t, NewArray):
        kw = "new_int" if t.dtype == INT else "new_bool"
        return f"({kw} {t.name}[{t.length}] := {pretty(t.init)} in {pretty(t.body)})"
    if isinstance(t, Lam):
        return f"(\\{t.name} : {t.type} . {pretty(t.body)})"
    if isinstance(t, App):
        return f"({pretty(t.fn)} {pretty(t.arg)})"
    if isinstance(t, ArrayElem):
        return f"{t.name}[{pretty(t.index)}]"
    raise TypeError(t)


def pretty_judgement(ctx: Context, t: Term, ty: FunType | None = None) -> str:
    out = f"{ctx} |- {pretty(t)}"
    return out + (f" : {ty}" if ty is not None else "")


def rename_identifier(t: Term, old: str, new: str) -> Term:
    """Rename free occurrences of ``old`` in ``t`` (``new`` must be fresh)."""
    return _rename(t, old, new)
