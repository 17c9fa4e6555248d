import csv
import io
import json
import subprocess
import sys

import pytest

from qidlab.cli import CSV_FIELDS, main


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out.read_bytes()


def test_overlap_json(tmp_path):
    code, data = run(tmp_path, "o.json", "overlap", "--n", "6", "--m", "4")
    doc = json.loads(data)
    assert code == 0 and doc["schema"] == 1
    assert all(r["verdict"] == "pass" for r in doc["rows"])
    assert all(r["paper_ref"] for r in doc["rows"])


def test_jprime_mixed(tmp_path):
    code, data = run(tmp_path, "j.json", "jprime", "--n", "6", "--m", "4", "--mixed", "--eps", "0.05")
    doc = json.loads(data)
    assert code == 0
    assert doc["result"]["case_tag"] == "deflate"


def test_jprime_sweep(tmp_path):
    code, data = run(tmp_path, "s.json", "jprime", "--sweep", "20", "--format", "json")
    assert code == 0
    assert json.loads(data)["summary"]["passes"] == 20


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_byte_identical(tmp_path, fmt):
    argv = ["protocol-suite", "--n", "8", "--m", "4", "--ell", "2", "--trials", "200", "--usec-samples", "2",
            "--format", fmt]
    _, a = run(tmp_path, "a", *argv)
    _, b = run(tmp_path, "b", *argv)
    assert a == b
    _, c = run(tmp_path, "c", *argv[:-2], "--seed", "7", "--format", fmt)
    assert c != a


def test_suite_csv_header_and_rows(tmp_path):
    code, data = run(tmp_path, "p.csv", "protocol-suite", "--n", "8", "--m", "4", "--ell", "2", "--trials", "400",
                     "--usec-samples", "2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(data.decode())))
    assert data.decode().splitlines()[0].split(",") == CSV_FIELDS
    names = {r["experiment"] for r in rows}
    assert {"correctness", "server_security", "sqom_delta_bias", "user_security_sd",
            "bell_attack_double_discard", "bqsm_bound"} <= names
    correctness = next(r for r in rows if r["experiment"] == "correctness")
    assert float(correctness["estimate"]) == 1.0
    assert code == (1 if any(r["verdict"] == "fail" for r in rows) else 0)


def test_code_file(tmp_path):
    path = tmp_path / "code.txt"
    path.write_text("n=4 m=2\n++++\nxxxx\n")
    code, data = run(tmp_path, "o.json", "overlap", "--code", str(path))
    assert code == 0
    assert json.loads(data)["params"]["code_words"] == ["0000", "1111"]


def test_bad_code_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0101\n0101\n")
    with pytest.raises(SystemExit):
        main(["overlap", "--code", str(path)])


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qidlab", "overlap", "--n", "4", "--m", "2", "--format", "csv"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.startswith("experiment,")


def test_failing_verdict_sets_exit_code(monkeypatch, capsys):
    from qidlab import cli

    def failing(config, code):
        rep = cli.Report(config.command, config.params)
        rep.rows.append(cli._row("demo", 1.0, cli.FAIL, "demo check", params="p"))
        return rep

    monkeypatch.setitem(cli.COMMANDS, "overlap", failing)
    assert main(["overlap"]) == 1
    assert "FAILED: demo" in capsys.readouterr().err
