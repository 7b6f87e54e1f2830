import subprocess
import sys

import pytest

from corpus import TERMS_DIR
from symgc.cli import from_structured, main, report_of, to_structured
from symgc.safety import check
from symgc.semantics import interpret
from symgc.syntax import parse_judgement


def term(name):
    return str(TERMS_DIR / f"{name}.ia")


@pytest.mark.parametrize("name, code", [
    ("skip", 0), ("m1", 1), ("m2", 1), ("linear_search", 1), ("bad_type", 3),
])
def test_exit_codes(name, code, capsys):
    assert main([term(name)]) == code


def test_missing_file_and_unknown_solver(tmp_path, capsys):
    assert main([str(tmp_path / "nope.ia")]) == 3
    assert main([term("m1"), "--solver", "nonsense"]) == 3
    assert "error" in capsys.readouterr().err


def test_declared_type_must_match(tmp_path, capsys):
    f = tmp_path / "t.ia"
    f.write_text("|- skip : expint")
    assert main([str(f)]) == 3


def test_inconclusive_exit_code(tmp_path, capsys):
    f = tmp_path / "t.ia"
    f.write_text("x : expint, abort : com |- if x * x = 10000 then abort : com")
    assert main([str(f), "--bound", "8"]) == 2
    assert main([str(f), "--bound", "120"]) == 1


def test_text_report(capsys):
    main([term("m1")])
    out = capsys.readouterr().out
    assert out.startswith("UNSAFE") and "condition: X1≠Y1" in out


def test_model_mode_counts(capsys):
    assert main([term("linear_search"), "--mode", "model"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("digraph") and out.endswith("states: 9, transitions: 12\n")


def test_dot_file(tmp_path, capsys):
    path = tmp_path / "m.dot"
    main([term("m2"), "--dot", str(path)])
    assert path.read_text().startswith("digraph")


def test_gamma_mode(capsys):
    assert main([term("skip"), "--mode", "gamma", "--finite", "2"]) == 0
    assert capsys.readouterr().out == "run · done\n"
    assert main([term("skip"), "--mode", "gamma"]) == 3


@pytest.mark.parametrize("name", ["m1", "m2", "skip"])
def test_structured_round_trip(name):
    ctx, t, _ = parse_judgement((TERMS_DIR / f"{name}.ia").read_text())
    r = report_of(check(interpret(ctx, t, simplify=True).automaton))
    assert from_structured(to_structured(r)) == r


def test_output_is_deterministic():
    cmd = [sys.executable, "-m", "symgc", term("m2"), "--format", "structured"]
    runs = [subprocess.run(cmd, capture_output=True) for _ in range(2)]
    assert runs[0].returncode == 1
    assert runs[0].stdout == runs[1].stdout and runs[0].stdout
