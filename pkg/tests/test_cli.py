import subprocess
import sys
from pathlib import Path

import pytest

from dlkv import parse_formula
from dlkv.cli import main
from dlkv.decide import decide_valid
from dlkv.reducer import parse_step

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "examples" / "scenarios"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_valid_verb(capsys):
    code, out = run(capsys, "valid", "(x@a = x@a)")
    assert code == 0 and out.split()[0] == "valid"


def test_sat_verb_unsat(capsys):
    code, out = run(capsys, "sat", "p & ~p")
    assert code == 0 and out.startswith("unsat")


def test_reduce_then_valid(capsys):
    code, out = run(capsys, "reduce", "[!(a:d)] K{a} (nd@d = nd@d)")
    assert code == 0
    static = parse_formula(out.strip().splitlines()[-1])
    assert decide_valid(static).valid


def test_trace_lines_parse(capsys):
    code, out = run(capsys, "reduce", "--trace", "[!(q)] K{a} (x@a = after(!(a:b), y@b))")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) > 2
    for line in lines[:-1]:
        parse_step(line)


def test_gen_numbers_game(capsys, tmp_path):
    code, out = run(capsys, "gen", "numbers-game", "3")
    assert code == 0 and sum(line.startswith("state ") for line in out.splitlines()) == 16
    path = tmp_path / "ng3.dlkv"
    path.write_text(out)
    code, out = run(capsys, "check", str(path), "top")
    assert code == 0 and "16/16" in out


def test_eval_two_candidates(capsys, tmp_path):
    s1 = tmp_path / "s1.dlkv"
    code, _ = run(capsys, "update", "numbers_game(4)", "!(a:d)", "-o", str(s1))
    assert code == 0
    # at (2,3,1) Alex and Daniela still allow nb = 1 or nb = 3
    code, out = run(capsys, "eval", str(s1), "desc(nb@b, {a}, top)", "--state", "s2_3_1")
    assert code == 0 and out.strip() == "s2_3_1: undef"


def test_check_expect_true(capsys):
    code, _ = run(capsys, "check", "numbers_game(3)", "top", "--expect-true")
    assert code == 0
    code, _ = run(capsys, "check", "numbers_game(3)", "nd@d = 0", "--expect-true")
    assert code == 3


@pytest.mark.parametrize("argv", [
    ["valid", "K{a} (x@a = "],
    ["check", "no_such_file.dlkv", "top"],
    ["parse", "--kind", "event", "!(a:"],
    ["eval", "numbers_game(3)", "zz@q", "--state", "nope"],
])
def test_input_errors_exit_1(capsys, argv):
    code, _ = run(capsys, *argv)
    assert code == 1


def test_resource_limit_exit_2(capsys):
    code, _ = run(capsys, "valid", "--closure-cap", "10", "K{a,b} desc(x@a, {b}, p) = y@b")
    assert code == 2


def test_closure_cap_env(capsys, monkeypatch):
    monkeypatch.setenv("DLKV_CLOSURE_CAP", "10")
    code, _ = run(capsys, "sat", "K{a,b} desc(x@a, {b}, p) = y@b")
    assert code == 2


def test_empty_scenario(capsys, tmp_path):
    script = tmp_path / "empty.scn"
    script.write_text("model: numbers_game(3)\n")
    code, out = run(capsys, "scenario", str(script))
    assert code == 0
    assert "step" not in out and "16 state(s)" in out


def test_scenario_top(capsys, tmp_path):
    script = tmp_path / "top.scn"
    script.write_text("model: numbers_game(4)\napply !(a:d)\nassert top at all\n")
    code, out = run(capsys, "--format", "kv", "scenario", str(script))
    assert code == 0 and "ok=true" in out


def test_scenario_counts_never_grow(capsys):
    code, out = run(capsys, "--format", "kv", "scenario", str(SCENARIOS / "numbers_game.scn"))
    counts = [int(part.split("=")[1]) for line in out.splitlines() if "kind=apply" in line
              for part in line.split() if part.startswith("states=")]
    assert counts == [169, 72, 72, 30, 14]
    assert counts == sorted(counts, reverse=True)


def test_scenario_replay_is_deterministic():
    cmd = [sys.executable, "-m", "dlkv.cli", "--format", "kv", "scenario",
           str(SCENARIOS / "numbers_game_item3.scn")]
    runs = [subprocess.run(cmd, capture_output=True) for _ in range(2)]
    assert runs[0].stdout == runs[1].stdout
    assert runs[0].returncode == runs[1].returncode


def test_gen_seed_echo(capsys, monkeypatch):
    monkeypatch.setenv("DLKV_SEED", "7")
    code, a = run(capsys, "gen", "formula")
    code2, b = run(capsys, "gen", "formula", "--seed", "7")
    assert code == code2 == 0
    assert a == b and "seed" in a


def test_console_script():
    out = subprocess.run(["dlkv", "valid", "top"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("valid")
