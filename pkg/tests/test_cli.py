import csv
import io
import subprocess
import sys

import pytest

from aggtree.cli import CSV_COLUMNS, main, parse_script, UsageError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_query_examples(capsys, tmp_path):
    script = tmp_path / "ops.txt"
    script.write_text("ins 1\nins 5 x\n# comment\n\nins 9\n")
    assert run(capsys, "query", str(script), "rank", "9")[:2] == (0, "2\n")
    assert run(capsys, "query", str(script), "select", "0")[:2] == (0, "1\n")
    assert run(capsys, "query", "-e", "ins 1 2; ins 5 4", "--agg", "moments", "average_in_range", "0", "9")[1] == "3\n"
    code, out, _ = run(capsys, "query", "-e", "ins 1; get 1; get 2; q rank 5; del 1", "rank", "5")
    assert out.splitlines() == ["None", "NOT_FOUND", "1", "0"]


def test_query_errors(capsys):
    code, _, err = run(capsys, "query", "-e", "ins 1;ins x", "rank", "1")
    assert code == 1 and "line 2" in err
    code, _, err = run(capsys, "query", "-e", "ins 1", "select", "4")
    assert code == 1 and "index" in err
    code, _, err = run(capsys, "query", "-e", "ins 1", "nope")
    assert code == 1
    assert run(capsys, "query", "-e", "ins 1")[0] == 1


def test_parse_script_errors():
    for text, line in (("ins", 1), ("ins 1\ndel", 2), ("ins 1\n\nfoo 3", 3), ("q nope 1", 1), ("q rank x", 1)):
        with pytest.raises(UsageError, match=f"line {line}"):
            parse_script(text)
    assert parse_script("ins 3 1/2")[0][1] == ("insert", 3, __import__("fractions").Fraction(1, 2))


def test_bench_csv_is_deterministic_single_thread(capsys):
    args = ["bench", "--threads", "1", "--ops", "3000", "--seed", "7", "--keys", "300"]
    code, a, err = run(capsys, *args)
    assert code == 0 and "0 violation" in err
    _, b, _ = run(capsys, *args)
    rows_a = list(csv.DictReader(io.StringIO(a)))
    rows_b = list(csv.DictReader(io.StringIO(b)))
    assert a.splitlines()[0] == ",".join(CSV_COLUMNS)
    stable = ["variant", "threads", "opkind", "count", "chain_steps_avg", "registry_scans_avg"]
    assert [[r[c] for c in stable] for r in rows_a] == [[r[c] for c in stable] for r in rows_b]
    assert all(all(r[c] != "" for c in CSV_COLUMNS) for r in rows_a)


def test_bench_both_variants_and_query_only(capsys, tmp_path):
    for v in ("fastupdate", "fastquery"):
        code, _, err = run(capsys, "bench", "--variant", v, "--ops", "2000", "--threads", "4")
        assert code == 0 and "0 violation" in err
    out = tmp_path / "q.csv"
    code, _, _ = run(capsys, "bench", "--mix", "0:0:0:100", "--ops", "500", "--out", str(out))
    rows = list(csv.DictReader(out.open()))
    assert code == 0 and [r["opkind"] for r in rows] == ["query"]


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("AGGTREE_SEED", "3")
    _, a, _ = run(capsys, "bench", "--threads", "1", "--ops", "300", "--no-audit")
    _, b, _ = run(capsys, "bench", "--threads", "1", "--ops", "300", "--seed", "3", "--no-audit")
    assert [l.split(",")[3] for l in a.splitlines()] == [l.split(",")[3] for l in b.splitlines()]
    monkeypatch.setenv("AGGTREE_SEED", "x")
    assert run(capsys, "bench", "--ops", "10")[0] == 1


@pytest.mark.parametrize("argv", [
    ["bench", "--mix", "1:2:3"], ["bench", "--threads", "0"], ["bench", "--agg", "keysum"],
    ["bench", "--bogus"], ["nope"], [],
])
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as e:
        sys.exit(main(argv))
    assert e.value.code == 1


def test_stress_default_passes(capsys):
    code, _, err = run(capsys, "stress", "--histories", "50", "--ops", "2000")
    assert code == 0
    assert "50 histories linearizable" in err and "0 violation" in err


def test_stress_with_injected_bug_fails(capsys, tmp_path):
    out = tmp_path / "fail.jsonl"
    code, stdout, _ = run(capsys, "stress", "--fault", "skip_plugin", "--histories", "5", "--ops", "0",
                          "--out", str(out))
    assert code == 2 and str(out) in stdout and out.exists()
    code, stdout, _ = run(capsys, "check", str(out))
    assert code == 2 and "not_linearizable" in stdout
    code, _, _ = run(capsys, "stress", "--fault", "skip_agg", "--no-corpus", "--histories", "0",
                     "--ops", "1000", "--out", str(tmp_path / "audit.txt"))
    assert code == 2


def test_stress_histories_flag(capsys):
    code, _, err = run(capsys, "stress", "--no-corpus", "--histories", "7", "--ops", "0")
    assert code == 0 and "random: 7 histories" in err


def test_audit_command(capsys):
    code, out, _ = run(capsys, "audit", "--variant", "fastquery", "--ops", "1000")
    assert code == 0 and "0 violation" in out


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "aggtree", "query", "-e", "ins 4", "rank", "5"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "1\n"
