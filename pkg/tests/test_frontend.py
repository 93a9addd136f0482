import glob
import os

import pytest

from lmrl import roles as rl
from lmrl.cli import main
from lmrl.parser import (
    Cursor,
    ParseError,
    parse_formula_text,
    parse_problem,
    parse_process,
    parse_derivation,
    tokenize,
)
from lmrl.printer import (
    format_derivation,
    format_formula,
    format_process,
    format_sequent,
)
from lmrl.processes import alpha_equiv

ROOT = os.path.join(os.path.dirname(__file__), "..")
LOGIC = os.path.join(ROOT, "corpus", "logic")
PROC = os.path.join(ROOT, "corpus", "proc")

B2 = rl.finite_base(2)


# ---------------------------------------------------------------------------
# grammar round trips


@pytest.mark.parametrize(
    "text",
    [
        "a",
        "p(x, f(y, z))",
        "one[1]",
        "a *[0] b",
        "(a *[0] b) &[1] one[0]",
        "![1] (a &[0] b)",
        "all[0] x. p(x) *[1] a",
        "msg[0,1] one[0]",
    ],
)
def test_formula_round_trip(text):
    f = parse_formula_text(text, B2)
    again = parse_formula_text(format_formula(f), B2)
    assert f == again


def test_formula_precedence():
    f = parse_formula_text("![0] a *[1] b", B2)
    # prefix binds tighter than the infix connectives
    assert format_formula(f) == "![0] a *[1] b"
    assert f == parse_formula_text("(![0] a) *[1] b", B2)


def test_sequent_round_trip_corpus():
    for path in glob.glob(os.path.join(LOGIC, "*.seq")):
        pf = parse_problem(open(path).read())
        again = parse_problem(f"base {pf.base.size}\n{format_sequent(pf.sequent)}")
        assert again.sequent == pf.sequent


@pytest.mark.parametrize(
    "path", sorted(glob.glob(os.path.join(LOGIC, "*.drv")))
)
def test_derivation_round_trip(path):
    pf = parse_problem(open(path).read())
    text = f"base {pf.base.size}\n{format_derivation(pf.derivation)}"
    again = parse_problem(text)
    assert again.derivation.concl == pf.derivation.concl
    assert format_derivation(again.derivation) == format_derivation(pf.derivation)


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(PROC, "*.pi"))))
def test_process_round_trip(path):
    pf = parse_problem(open(path).read())
    text = format_process(pf.process)
    c = Cursor(tokenize(text))
    again = parse_process(c, pf.base)
    assert alpha_equiv(again, pf.process)


def test_parse_errors_are_positioned():
    with pytest.raises(ParseError) as err:
        parse_problem("base 2\n|- [{0,1,2}] a")
    assert err.value.line == 2


def test_role_out_of_base_rejected():
    with pytest.raises(ParseError):
        parse_problem("base 2\n|- [{0}] one[5]")


def test_comments_and_whitespace():
    pf = parse_problem("base 2  # two roles\n|- [{0}] a , [{1}] a\n# done\n")
    assert len(pf.sequent) == 2


def test_omega_base():
    pf = parse_problem("base omega\n|- [~{0}] a, [{0}] a")
    assert pf.sequent[0].roles.cofinite


# ---------------------------------------------------------------------------
# the command line


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_cli_check_ok(capsys):
    code, out = run(capsys, "check", os.path.join(LOGIC, "id-pos.drv"))
    assert code == 0 and "status: ok" in out


def test_cli_check_partition_failure(capsys):
    code, out = run(capsys, "check", os.path.join(LOGIC, "id-neg.drv"))
    assert code == 1
    assert "partition" in out


def test_cli_check_disj(capsys):
    code, out = run(capsys, "check", os.path.join(LOGIC, "id-pos.drv"), "--calc", "disj")
    assert code == 1  # a conjunctive identity is not a disjunctive one


def test_cli_prove(capsys, tmp_path):
    code, out = run(capsys, "prove", os.path.join(LOGIC, "id3.seq"), "--depth", "1")
    assert code == 0 and "proved" in out
    code, out = run(capsys, "prove", os.path.join(LOGIC, "underivable.seq"), "--depth", "4")
    assert code == 1 and "unproved" in out


def test_cli_prove_output_reparses(capsys, tmp_path):
    code, out = run(capsys, "prove", os.path.join(LOGIC, "tensor-goal.seq"), "--depth", "3")
    assert code == 0
    body = out.split("\n", 1)[1]
    reparsed = parse_problem("base 2\n" + body)
    assert reparsed.kind == "derivation"


def test_cli_eta_and_cut2(capsys, tmp_path):
    code, out = run(capsys, "eta", "--base", "2", "--formula", "a *[0] a", "--parts", "{0};{1}")
    assert code == 0
    d1 = tmp_path / "d1.drv"
    d1.write_text("base 2\n(rule id :concl |- [{0}] a, [{1}] a)\n")
    d2 = tmp_path / "d2.drv"
    d2.write_text("base 2\n(rule id :concl |- [{1}] a, [{0}] a)\n")
    code, out = run(capsys, "cut2", str(d1), str(d2), "--occ1", "1", "--occ2", "1")
    assert code == 0 and "(rule id" in out


def test_cli_cutn_and_split(capsys, tmp_path):
    f = {}
    for name, sets in {"a": "[{0,1}] a, [{2}] a", "b": "[{0,2}] a, [{1}] a", "c": "[{1,2}] a, [{0}] a"}.items():
        p = tmp_path / f"{name}.drv"
        p.write_text(f"base 3\n(rule id :concl |- {sets})\n")
        f[name] = str(p)
    code, out = run(capsys, "cutn", f["a"], f["b"], f["c"], "--occs", "0:0:0")
    assert code == 0
    code, out = run(capsys, "split", f["a"], "--occ", "0", "--into", "{0};{1}")
    assert code == 0


def test_cli_dualize_and_cll2(capsys):
    code, out = run(capsys, "dualize", os.path.join(LOGIC, "id-pos.drv"))
    assert code == 0 and "[{1,2}]" in out
    code, out = run(capsys, "cll2", os.path.join(LOGIC, "cll-mixed.seq"))
    assert code == 0
    assert "left: b, one[0]" in out
    assert "right: a, one[0]" in out


def test_cli_typecheck_run_sr(capsys):
    unit3 = os.path.join(PROC, "unit3.pi")
    code, out = run(capsys, "typecheck", unit3)
    assert code == 0
    code, out = run(capsys, "run", unit3, "--fuel", "100")
    assert code == 0 and "cut-free: yes" in out
    code, out = run(capsys, "sr-check", unit3, "--fuel", "100")
    assert code == 0 and "status: ok" in out


def test_cli_typecheck_rejects(capsys):
    code, out = run(capsys, "typecheck", os.path.join(PROC, "neg-ncut.pi"))
    assert code == 1 and "ill-typed" in out


def test_cli_step_and_trace(capsys):
    code, out = run(capsys, "step", os.path.join(PROC, "bang-replicate.pi"), "-n", "2")
    assert code == 0 and "step1: bang-replicate" in out and "step2: bang-spawn" in out
    code, out = run(capsys, "run", os.path.join(PROC, "msg-transfer.pi"), "--fuel", "10", "--trace")
    assert code == 0 and "step1: msg-transfer" in out


def test_cli_run_output_reparses(capsys):
    code, out = run(capsys, "run", os.path.join(PROC, "tensor3.pi"), "--fuel", "100")
    assert code == 0
    final = out.strip().split("\n")[-1]
    c = Cursor(tokenize(final))
    parse_process(c, rl.finite_base(3))


def test_cli_parse_error_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.seq"
    p.write_text("base 2\n|- [{5}] a\n")
    code, out = run(capsys, "prove", str(p), "--depth", "1")
    assert code == 2

    q = tmp_path / "junk.seq"
    q.write_text("% nonsense\n")
    code, out = run(capsys, "prove", str(q), "--depth", "1")
    assert code == 2


def test_cli_stdin(capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("base 2\n|- [{0}] a, [{1}] a\n"))
    code, out = run(capsys, "prove", "-", "--depth", "1")
    assert code == 0


def test_cli_matches_library(capsys):
    # the driver is a thin adapter over the kernel calls
    from lmrl.cutelim import prove_bounded
    from lmrl.derivation import Calculus

    pf = parse_problem(open(os.path.join(LOGIC, "tensor-goal.seq")).read())
    direct = prove_bounded(pf.sequent, Calculus.CONJ, 3)
    code, out = run(capsys, "prove", os.path.join(LOGIC, "tensor-goal.seq"), "--depth", "3")
    assert code == 0
    assert format_derivation(direct) in out


def test_cli_malformed_rule_application_exit_1(capsys, tmp_path):
    # readable s-expression, but the stated conclusion is not the rule's
    p = tmp_path / "wrong.drv"
    p.write_text("base 2\n(rule id :concl |- [{0}] a, [{1}] b)\n")
    code, out = run(capsys, "check", str(p))
    assert code == 1 and "status: failed" in out


def test_cli_run_flags_stuck_cut(capsys, tmp_path):
    # ill-typed mixture of headers on the linked name: no rule applies
    p = tmp_path / "stuck.pi"
    p.write_text(
        "base 2\nproc new x: one[0] .( x{0}()@0.end | x{1}(case)@0.( x{1}()@0.end , x{1}()@0.end ) )\n"
    )
    code, out = run(capsys, "run", str(p), "--fuel", "10")
    assert code == 1 and "stuck" in out


def test_cli_prove_with_witness_pool(capsys, tmp_path):
    p = tmp_path / "q.seq"
    p.write_text("base 2\n|- [{0}] all[1] x. one[0], [{1}] all[1] x. one[0]\n")
    code, out = run(capsys, "prove", str(p), "--depth", "4")
    assert code == 1  # no witness available anywhere
    code, out = run(capsys, "prove", str(p), "--depth", "4", "--witnesses", "c")
    assert code == 0 and "proved" in out
