"""Command-line driver: term file in, verdict, DOT or concrete words out."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .automata import EpsilonCycleError, to_dot
from .oracle import gamma
from .safety import Inconclusive, Safe, Unsafe, Verdict, check
from .semantics import TranslationError, interpret
from .solver import make_backend
from .symbolic import render_guard, render_word
from .syntax import ParseError, TypeCheckError, parse_judgement, typecheck

EXIT_SAFE, EXIT_UNSAFE, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


@dataclass
class RunConfig:
    input: str
    mode: str = "check"
    solver: str = "builtin"
    bound: int = 64
    max_len: int = 64
    finite: int | None = None
    bounds_check: bool = False
    simplify: bool = True
    format: str = "text"
    dot: str | None = None
    elimination: str = "tracker"


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Report:
    """Plain-data view of a verdict; what the structured format carries."""

    verdict: str
    detail: str = ""
    play: tuple = ()  # (guard, letter) text pairs
    condition: str = ""
    model: tuple = ()  # sorted (name, value) pairs
    concrete: tuple = ()
    attempts: tuple = ()  # (play length, result) pairs


def _result_name(r) -> str:
    return type(r).__name__.lower()


def report_of(v: Verdict) -> Report:
    attempts = tuple((len(a.play), _result_name(a.result)) for a in v.attempts)
    if isinstance(v, Unsafe):
        model = tuple(sorted(((str(k), val) for k, val in v.model.items()), key=lambda kv: kv[0]))
        return Report("unsafe", "", tuple((render_guard(gl.guard) if gl.guard else "", str(gl.letter))
                                          for gl in v.play.letters),
                      v.play.render_condition(), model, tuple(str(m) for m in v.concrete), attempts)
    if isinstance(v, Safe):
        return Report("safe", "complete" if v.complete else f"max_len={v.max_len}",
                      attempts=attempts)
    return Report("inconclusive", v.reason, attempts=attempts)


def to_structured(r: Report) -> str:
    """One JSON object per line: header, then letters, model, concrete moves, attempts."""
    lines = [{"record": "verdict", "verdict": r.verdict, "detail": r.detail,
              "condition": r.condition}]
    lines += [{"record": "letter", "guard": g, "letter": l} for g, l in r.play]
    lines += [{"record": "model", "name": k, "value": v} for k, v in r.model]
    lines += [{"record": "move", "move": m} for m in r.concrete]
    lines += [{"record": "attempt", "length": n, "result": res} for n, res in r.attempts]
    return "\n".join(json.dumps(x, ensure_ascii=False, sort_keys=True) for x in lines) + "\n"


def from_structured(text: str) -> Report:
    head, play, model, concrete, attempts = None, [], [], [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = rec["record"]
        if kind == "verdict":
            head = rec
        elif kind == "letter":
            play.append((rec["guard"], rec["letter"]))
        elif kind == "model":
            model.append((rec["name"], rec["value"]))
        elif kind == "move":
            concrete.append(rec["move"])
        elif kind == "attempt":
            attempts.append((rec["length"], rec["result"]))
    if head is None:
        raise ValueError("no verdict record")
    return Report(head["verdict"], head["detail"], tuple(play), head["condition"], tuple(model),
                  tuple(concrete), tuple(attempts))


# --------------------------------------------------------------------------
# running


def _load(cfg: RunConfig):
    ctx, term, declared = parse_judgement(Path(cfg.input).read_text())
    ty = typecheck(ctx, term)
    if declared is not None and declared != ty:
        raise TypeCheckError(f"term has type {ty}, declared {declared}")
    strategy = interpret(ctx, term, bounds_check=cfg.bounds_check, elimination=cfg.elimination,
                         simplify=cfg.simplify)
    return strategy.automaton


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        a = _load(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except ParseError as exc:
        print(f"{cfg.input}: parse error: {exc}", file=err)
        return EXIT_INPUT
    except TypeCheckError as exc:
        print(f"{cfg.input}: type error: {exc}", file=err)
        return EXIT_INPUT
    except (TranslationError, EpsilonCycleError) as exc:
        print(f"{cfg.input}: cannot translate: {exc}", file=err)
        return EXIT_INPUT

    if cfg.dot:
        Path(cfg.dot).write_text(to_dot(a))

    if cfg.mode == "model":
        if cfg.format == "structured":
            out.write(json.dumps({"record": "model", "states": len(a.states),
                                  "transitions": len(a.transitions)}) + "\n")
        else:
            if cfg.format == "dot" or not cfg.dot:
                out.write(to_dot(a))
            out.write(f"states: {len(a.states)}, transitions: {len(a.transitions)}\n")
        return EXIT_SAFE

    if cfg.mode == "gamma":
        if cfg.finite is None:
            print("error: gamma mode needs --finite N", file=err)
            return EXIT_INPUT
        for w in sorted(render_word(w) for w in gamma(a, cfg.finite, cfg.max_len)):
            out.write((w or "ε") + "\n")
        return EXIT_SAFE

    try:
        backend = make_backend(cfg.solver, cfg.bound)
    except ValueError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    verdict = check(a, backend, max_len=cfg.max_len)
    if cfg.format == "structured":
        out.write(to_structured(report_of(verdict)))
    elif cfg.format == "dot":
        out.write(to_dot(a))
    else:
        out.write(str(verdict) + "\n")
    if isinstance(verdict, Unsafe):
        return EXIT_UNSAFE
    if isinstance(verdict, Inconclusive):
        return EXIT_INCONCLUSIVE
    return EXIT_SAFE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symgc",
                                description="Safety checking of imperative terms with symbolic automata.")
    p.add_argument("input", help="file holding a judgement 'ctx |- term : type'")
    p.add_argument("--mode", choices=["check", "model", "gamma"], default="check")
    p.add_argument("--solver", default="builtin",
                   help="builtin, z3, or exec:<command> for any SMT-LIB2 solver reading stdin")
    p.add_argument("--bound", type=int, default=64, help="value box of the builtin solver")
    p.add_argument("--max-len", type=int, default=None,
                   help="longest play considered (default 64; 12 in gamma mode)")
    p.add_argument("--finite", type=int, metavar="N", help="data domain {0..N-1} for gamma mode")
    p.add_argument("--bounds-check", action="store_true",
                   help="out-of-bounds array accesses run abort")
    p.add_argument("--no-simplify", dest="simplify", action="store_false",
                   help="keep intermediate bindings in guards")
    p.add_argument("--elimination", choices=["tracker", "cell"], default="tracker",
                   help="how local variables are removed")
    p.add_argument("--format", choices=["text", "structured", "dot"], default="text")
    p.add_argument("--dot", metavar="PATH", help="also write the automaton as DOT")
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    max_len = ns.max_len if ns.max_len is not None else (12 if ns.mode == "gamma" else 64)
    cfg = RunConfig(ns.input, ns.mode, ns.solver, ns.bound, max_len, ns.finite, ns.bounds_check,
                    ns.simplify, ns.format, ns.dot, ns.elimination)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
