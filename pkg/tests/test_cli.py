import json
import subprocess
import sys

import pytest

from gencollatz import cli
from gencollatz.persistence import PaperFixture, load_checkpoint, paper_fixtures


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_traj(capsys):
    code, out, _ = run(["traj", "2", "1", "6", "--limit", "9"], capsys)
    assert code == 0
    assert out.strip() == "6 3 10 5 16 8 4 2 1"


def test_traj_from_one_shows_cycle(capsys):
    assert run(["traj", "2", "1", "1"], capsys)[1].strip() == "1 4 2 1"


def test_traj_limit(capsys):
    assert run(["traj", "3", "1", "5", "--limit", "3"], capsys)[1].strip() == "5 21 7"


def test_cycle(capsys):
    code, out, _ = run(["cycle", "5", "3"], capsys)
    assert code == 0
    assert out.strip() == "1,250,50,10,2,375,75,15,3,500,100,20,4,625,125,25,5"


def test_cycle_from_start(capsys):
    code, out, _ = run(["cycle", "2", "2", "--from", "23"], capsys)
    assert out.strip() == "37,188,94,47,236,118,59,296,148,74"


def test_classify(capsys):
    code, out, _ = run(["classify", "2", "1", "8"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "trivial s=1 N=3"
    code, out, _ = run(["classify", "3", "1", "5"], capsys)
    assert out.splitlines()[0] == "non-trivial"
    assert "cycle_min=7" in out


def test_stopping_time(capsys):
    assert run(["stopping-time", "5", "3", "2"], capsys)[1].strip() == "13"
    code, out, err = run(["stopping-time", "3", "1", "5"], capsys)
    assert code == 2 and "non-convergent" in err
    code, _, err = run(["stopping-time", "2", "1", "27", "--max-steps", "10"], capsys)
    assert code == 1 and "budget" in err


def test_big_decimal_arguments(capsys):
    n = str(3**200)
    code, out, _ = run(["traj", "3", "2", n, "--limit", "2"], capsys)
    assert code == 0
    assert out.split()[1] == str(3**199)


def test_verify_fixtures_skip_long(capsys):
    code, out, _ = run(["verify-paper", "--skip-long"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert sum(line.startswith("PASS") for line in lines) == 7
    assert any(line.startswith("SKIP b10m9") for line in lines)


def test_verify_fixtures_fails_on_mismatch(capsys, monkeypatch):
    bad = paper_fixtures()[:1]
    f = bad[0]
    bad = [PaperFixture(f.id, f.params, f.s0, f.kind, f.expected[1:] + f.expected[:1])]
    monkeypatch.setattr(cli, "paper_fixtures", lambda: bad)
    code, out, _ = run(["verify-paper"], capsys)
    assert code == 1 and out.startswith("FAIL")


def test_scan_fail_on_counterexample(capsys):
    code, out, _ = run(["scan", "3", "1", "--from", "1", "--to", "100",
                        "--fail-on-counterexample", "--jobs", "1"], capsys)
    assert code == 2
    assert "cycle_min=7" in out


def test_scan_without_flag_exits_zero(capsys):
    assert run(["scan", "3", "1", "--to", "100", "--jobs", "1"], capsys)[0] == 0


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 1
    assert run(["bogus"], capsys)[0] == 1
    assert run(["traj", "2", "1", "x"], capsys)[0] == 1
    assert run(["traj", "2", "1", "0"], capsys)[0] == 1
    assert run(["cycle", "1", "1"], capsys)[0] == 1
    assert run(["scan", "3", "1", "--from", "5", "--to", "5"], capsys)[0] == 1


def test_io_failure(capsys, tmp_path):
    code, _, err = run(["scan", "3", "1", "--to", "50", "--jobs", "1",
                        "--out", str(tmp_path / "missing" / "x.jsonl")], capsys)
    assert code == 3 and "I/O" in err


def test_out_files_identical_across_jobs(capsys, tmp_path):
    texts = []
    for jobs in ("1", "2", "8"):
        out = tmp_path / f"r{jobs}.jsonl"
        rep = tmp_path / f"r{jobs}.json"
        run(["scan", "3", "1", "--to", "10000", "--jobs", jobs, "--out", str(out),
             "--report", str(rep)], capsys)
        texts.append((out.read_bytes(), rep.read_bytes()))
    assert texts[0] == texts[1] == texts[2]
    lines = texts[0][0].decode().splitlines()
    assert json.loads(lines[0])["s0"] == "4"


def test_random_scan_out_and_report(capsys, tmp_path):
    outs = []
    for _ in range(2):
        rep = tmp_path / "r.json"
        recs = tmp_path / "r.jsonl"
        code, _, _ = run(["random-scan", "--b-range", "2", "9", "--m-range", "1", "3",
                          "--count", "200", "--seed", "42", "--jobs", "1",
                          "--out", str(recs), "--report", str(rep)], capsys)
        assert code == 0
        outs.append((rep.read_bytes(), recs.read_bytes()))
    assert outs[0] == outs[1]
    assert len(outs[0][1].decode().splitlines()) == 200


def test_conjecture_scan(capsys, tmp_path):
    code, out, _ = run(["conjecture-scan", "--b-max", "3", "--s0-max", "2000", "--jobs", "1",
                        "--out", str(tmp_path / "c.jsonl")], capsys)
    assert code == 0
    assert "no counter-example" in out


def test_checkpoint_and_resume(capsys, tmp_path):
    cp = tmp_path / "cp.json"
    code, out, _ = run(["scan", "4", "1", "--to", "9000", "--jobs", "1",
                        "--checkpoint", str(cp)], capsys)
    assert code == 0
    assert load_checkpoint(cp).next_start == 9000
    code, out2, _ = run(["scan", "4", "1", "--to", "9000", "--jobs", "1",
                         "--checkpoint", str(cp), "--resume"], capsys)
    assert out2 == out


def test_jobs_env(monkeypatch):
    monkeypatch.setenv("GENCOLLATZ_JOBS", "3")
    assert cli.default_jobs() == 3
    monkeypatch.setenv("GENCOLLATZ_JOBS", "junk")
    assert cli.default_jobs() >= 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gencollatz", "cycle", "2", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "1,4,2"


@pytest.mark.parametrize("cmd", ["traj", "cycle", "classify", "stopping-time", "scan",
                                 "random-scan", "conjecture-scan", "verify-paper"])
def test_every_command_has_help(cmd, capsys):
    assert run([cmd, "--help"], capsys)[0] == 0
