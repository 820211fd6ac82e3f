from procpolar.cli import main

T1 = "fixtures/t1.instance"
T2 = "fixtures/t2.instance"
M1 = "fixtures/m1.instance"
M2 = "fixtures/m2.instance"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def body(out: str) -> str:
    return "\n".join(l for l in out.splitlines() if not l.startswith("#"))


def test_check_tree_ok(capsys):
    code, out, _ = run(capsys, "check", "tree", T1)
    assert code == 0
    assert "[ok] tree: valid" in out


def test_check_tree_violations(tmp_path, capsys):
    bad = tmp_path / "bad.instance"
    bad.write_text(
        "version 1\n[tree]\nnode root - -\nnode u root 1/4\nnode d root 1/2\n"
    )
    code, out, _ = run(capsys, "check", "tree", str(bad))
    assert code == 1
    assert "sum to 3/4" in out


def test_decimal_rejected_with_code_2(tmp_path, capsys):
    bad = tmp_path / "dec.instance"
    bad.write_text("version 1\n[tree]\nnode root - -\nnode u root 0.5\nnode d root 0.5\n")
    code, _, err = run(capsys, "check", "tree", str(bad))
    assert code == 2
    assert "exact rationals required" in err


def test_missing_file_code_2(capsys):
    code, _, err = run(capsys, "check", "tree", "no/such/file.instance")
    assert code == 2


def test_check_supermartingale(capsys):
    code, out, _ = run(capsys, "check", "supermartingale", T1)
    assert code == 0
    assert "unit-supermartingale" in out


def test_check_polar_and_bipolar(capsys):
    code, out, _ = run(capsys, "check", "polar", T1, "--count", "12")
    assert code == 0
    assert "compositions stayed in" in out
    code, out, _ = run(capsys, "check", "bipolar", T1)
    assert code == 0
    assert "lp=False incremental=False" in out  # the mirrored probe is outside


def test_check_fbt_and_cbt(capsys):
    code, out, _ = run(capsys, "check", "fbt", T1, "--probes", "4", "--seed", "3")
    assert code == 0
    code, out, _ = run(capsys, "check", "cbt", T2, "--probes", "5", "--seed", "3")
    assert code == 0


def test_check_market(capsys):
    code, out, _ = run(capsys, "check", "market", M1)
    assert code == 0
    assert "q=(1/3, 2/3)" in out


def test_budget_exit_codes(capsys):
    code, out, _ = run(capsys, "check", "budget", M2, "--x", "1")
    assert code == 0
    code, out, _ = run(capsys, "check", "budget", M2, "--x", "99/100")
    assert code == 1
    assert "q=(1/3, 0, 2/3)" in out


def test_budget_requires_x(capsys):
    code, _, err = run(capsys, "check", "budget", M2)
    assert code == 2 and "--x" in err


def test_machine_format_lines(capsys):
    code, out, _ = run(capsys, "check", "cbt", T2, "--format", "machine", "--seed", "1")
    assert code == 0
    for line in out.strip().splitlines():
        parts = line.split("\t")
        assert len(parts) == 3 and len(parts[2]) == 16


def test_report_determinism(capsys, tmp_path):
    out1 = tmp_path / "a.report"
    out2 = tmp_path / "b.report"
    code1, stdout1, _ = run(
        capsys, "check", "fbt", T1, "--seed", "9", "--out", str(out1)
    )
    code2, stdout2, _ = run(
        capsys, "check", "fbt", T1, "--seed", "9", "--out", str(out2)
    )
    assert code1 == code2 == 0
    assert out1.read_text() == out2.read_text()
    assert body(stdout1) == body(stdout2)


def test_seed_env_var(capsys, monkeypatch):
    monkeypatch.setenv("PROCPOLAR_SEED", "77")
    _, out_env, _ = run(capsys, "check", "cbt", T2)
    monkeypatch.delenv("PROCPOLAR_SEED")
    _, out_flag, _ = run(capsys, "check", "cbt", T2, "--seed", "77")
    assert body(out_env) == body(out_flag)


def test_fuzz_commands(capsys):
    code, out, _ = run(capsys, "fuzz", "cbt", "--count", "2", "--seed", "5")
    assert code == 0
    assert "2/2 instances ok" in out
    code, out, _ = run(capsys, "fuzz", "fbt", "--count", "2", "--seed", "5")
    assert code == 0
    code, out, _ = run(capsys, "fuzz", "market", "--count", "1", "--seed", "5")
    assert code == 0


def test_fuzz_count_zero_rejected(capsys):
    code, _, err = run(capsys, "fuzz", "cbt", "--count", "0")
    assert code == 2


def test_fuzz_determinism(capsys):
    _, out1, _ = run(capsys, "fuzz", "cbt", "--count", "2", "--seed", "8", "--format", "machine")
    _, out2, _ = run(capsys, "fuzz", "cbt", "--count", "2", "--seed", "8", "--format", "machine")
    assert out1 == out2
