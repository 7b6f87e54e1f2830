"""Safety checking of second-order imperative terms via symbolic automata.

Typical use::

    from symgc import parse_judgement, interpret, check
    ctx, term, _ = parse_judgement(text)
    verdict = check(interpret(ctx, term).automaton)
"""

from .safety import Inconclusive, Safe, Unsafe, check
from .semantics import Strategy, interpret
from .solver import BuiltinSolver, ExternalSolver, make_backend
from .syntax import parse_judgement, typecheck

__all__ = [
    "BuiltinSolver",
    "ExternalSolver",
    "Inconclusive",
    "Safe",
    "Strategy",
    "Unsafe",
    "check",
    "interpret",
    "make_backend",
    "parse_judgement",
    "typecheck",
]
__version__ = "0.1.0"
