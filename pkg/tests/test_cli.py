import json
import subprocess
import sys

import pytest

from conftest import CORPUS
from relcheck.cli import main

ADD = CORPUS / "add"
STEPS = CORPUS / "steps"
NONDET = CORPUS / "nondet_steps"
BOUNDED = CORPUS / "fermat_bounded"
SMALL = CORPUS / "fermat_small"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out), err


def test_refines_trio(capsys):
    code, out, _ = run(capsys, "refines", "--lhs", ADD / "pprime.prog", "--rhs", ADD / "p.prog",
                       "--space", ADD / "s.space")
    assert code == 0 and out.startswith("refines: true")
    code, rec, _ = run_json(capsys, "refines", "--lhs", ADD / "ppp.prog", "--rhs", ADD / "p.prog")
    assert code == 1
    assert rec["evidence"]["pairs"] == ["(0,1) -> (1,1)"]


def test_more_correct_trio(capsys):
    code, rec, _ = run_json(capsys, "more-correct", "--candidate", ADD / "ppp.prog",
                            "--baseline", ADD / "p.prog", "--spec", ADD / "add.spec")
    assert code == 0 and rec["kind"] == "more-correct-det"


def test_relation_literals(capsys):
    code, rec, _ = run_json(capsys, "more-correct", "--candidate", STEPS / "pprime.rel",
                            "--baseline", STEPS / "p.rel", "--spec", STEPS / "r.rel")
    assert code == 0 and rec["competence"] == {"baseline": 4, "candidate": 5}
    code, _, _ = run(capsys, "more-correct", "--candidate", STEPS / "pprime.rel",
                     "--baseline", STEPS / "p.rel", "--spec", STEPS / "r.rel", "--strict")
    assert code == 0
    code, rec, _ = run_json(capsys, "more-correct", "--candidate", NONDET / "pprime.rel",
                            "--baseline", NONDET / "p.rel", "--spec", NONDET / "r.rel", "--nondet")
    assert code == 0 and rec["clauses"] == {"1": True, "2": True}
    code, _, _ = run(capsys, "more-correct", "--candidate", NONDET / "p.rel",
                     "--baseline", NONDET / "pprime.rel", "--spec", NONDET / "r.rel", "--nondet")
    assert code == 1
    code, _, _ = run(capsys, "refines", "--lhs", CORPUS / "refinement" / "rprime.rel",
                     "--rhs", CORPUS / "refinement" / "r.rel")
    assert code == 0


def test_nondeterministic_inputs_pick_the_general_judgment(capsys):
    code, rec, _ = run_json(capsys, "more-correct", "--candidate", NONDET / "pprime.rel",
                            "--baseline", NONDET / "p.rel", "--spec", NONDET / "r.rel")
    assert code == 0 and rec["kind"] == "more-correct-nondet"
    code, _, err = run(capsys, "more-correct", "--candidate", NONDET / "pprime.rel",
                       "--baseline", NONDET / "p.rel", "--spec", NONDET / "r.rel", "--strict")
    assert code == 2 and "more_correct_nondet" in err


def test_correct_and_partial(capsys):
    code, _, _ = run(capsys, "correct", "--program", SMALL / "p3.prog",
                     "--spec", SMALL / "fermat.spec", "--cap", 1 << 22)
    assert code == 0
    code, rec, _ = run_json(capsys, "correct", "--program", BOUNDED / "p1.prog",
                            "--spec", BOUNDED / "fermat.spec", "--partial", "--cap", 1 << 19)
    assert code == 1 and rec["evidence"]["pairs"] == ["(3,0,0) -> (3,2,0)"]


def test_competence(capsys):
    code, rec, _ = run_json(capsys, "competence", "--program", STEPS / "p.rel",
                            "--spec", STEPS / "r.rel")
    assert code == 0 and rec["states"] == ["(1)", "(2)", "(3)", "(4)"]


def test_reliability_full_scale_p1(capsys):
    code, rec, _ = run_json(capsys, "reliability", "--program", CORPUS / "fermat" / "p1.prog",
                            "--spec", CORPUS / "fermat" / "fermat.spec",
                            "--region", "n=1..10000", "--region", "x=0,y=0", "--fuel", 10 ** 9)
    assert code == 0
    assert (rec["reliability"], rec["competent"], rec["domain"]) == ("0.0133", 100, 7500)


def test_reliability_with_weights(capsys):
    code, rec, _ = run_json(capsys, "reliability", "--program", BOUNDED / "p1.prog",
                            "--spec", BOUNDED / "fermat.spec", "--region", "n=0..24,x=0,y=0",
                            "--fuel", 500, "--distribution", "n + 1")
    assert code == 0 and rec["distribution"] == "expression n + 1"


def test_reliability_low_fuel_is_inconclusive(capsys):
    code, _, err = run(capsys, "reliability", "--program", BOUNDED / "p3.prog",
                       "--spec", BOUNDED / "fermat.spec", "--region", "n=0..24,x=0,y=0",
                       "--fuel", 3)
    assert code == 3 and "inconclusive" in err


def test_verify_chain_full_scale(capsys):
    code, out, _ = run(capsys, "verify-chain", CORPUS / "fermat" / "fermat.chain")
    assert code == 0
    assert out.rstrip().endswith("P3 1.0000")


def test_verify_chain_failure_and_threshold(capsys):
    code, rec, _ = run_json(capsys, "verify-chain", BOUNDED / "fermat.chain")
    assert code == 1 and "(0,0,1)" in rec["failure"]
    code, rec, _ = run_json(capsys, "verify-chain", BOUNDED / "fermat_oracle.chain")
    assert code == 0 and rec["termination"] == "threshold"
    code, rec, _ = run_json(capsys, "verify-chain", BOUNDED / "fermat_oracle.chain",
                            "--threshold", "0.9")
    assert code == 0 and rec["termination"] == "neither"


def test_denote_and_interpret(capsys):
    code, rec, _ = run_json(capsys, "denote", ADD / "pprime.prog")
    assert code == 0 and rec["pairs"] == 28 and rec["deterministic"]
    code, out, _ = run(capsys, "interpret", ADD / "p.prog", "--state", "x=2,y=3")
    assert code == 0 and out.strip() == "final (5,0)"
    code, out, _ = run(capsys, "interpret", ADD / "p.prog", "--state", "x=6,y=1")
    assert code == 1 and out.strip() == "expression-undefined"


def test_interpret_divergence(capsys, tmp_path):
    prog = tmp_path / "loop.prog"
    prog.write_text("program L over S { while (x < 3) {skip} }\n")
    (tmp_path / "s.space").write_text("space S:\n  nat x : 0..3;\n")
    code, out, _ = run(capsys, "interpret", prog, "--state", "x=0", "--fuel", 100)
    assert code == 1 and out.strip() == "diverges"
    code, _, _ = run(capsys, "interpret", prog, "--state", "x=0", "--fuel", 2)
    assert code == 3


def test_agreement(capsys):
    code, rec, _ = run_json(capsys, "agreement", BOUNDED / "p3.prog", "--cap", 1 << 19)
    assert code == 0 and rec["mismatches"] == [] and rec["checked"] == 3025
    code, _, err = run(capsys, "agreement", BOUNDED / "p3.prog")
    assert code == 3 and "oracle mode" in err


def test_validate_domain(capsys):
    code, rec, _ = run_json(capsys, "validate-domain", CORPUS / "fermat" / "fermat.spec",
                            "--region", "n=0..100,x=0,y=0", "--witness", "x=0..100",
                            "--witness", "y=0..100")
    assert code == 0 and rec["checked"] == 101 and rec["violations"] == []


def test_parse_error_names_file_and_line(capsys, tmp_path):
    bad = tmp_path / "bad.prog"
    bad.write_text("program B over S {\n  x = ;\n}\n")
    (tmp_path / "s.space").write_text("space S:\n  nat x : 0..3;\n")
    code, _, err = run(capsys, "denote", bad)
    assert code == 2
    assert err.startswith(f"{bad}:2:")


def test_missing_space_is_a_usage_error(capsys, tmp_path):
    prog = tmp_path / "p.prog"
    prog.write_text("x = 1;\n")
    code, _, err = run(capsys, "denote", prog)
    assert code == 2 and "--space" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "denote", tmp_path / "nope.prog")
    assert code == 2 and "nope.prog" in err


def test_bad_arguments_exit_two():
    with pytest.raises(SystemExit) as e:
        main(["refines", "--lhs", "a.prog"])
    assert e.value.code == 2


def test_json_output_is_byte_identical_across_processes():
    argv = [sys.executable, "-m", "relcheck.cli", "verify-chain",
            str(BOUNDED / "fermat_oracle.chain"), "--format", "json"]
    first = subprocess.run(argv, capture_output=True, check=True)
    second = subprocess.run(argv, capture_output=True, check=True)
    assert first.stdout == second.stdout
    assert json.loads(first.stdout)["kind"] == "verify-chain"
