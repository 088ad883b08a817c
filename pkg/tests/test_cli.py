import csv
import json
import os
import subprocess
import sys

import pytest

from clique_memory import cli
from clique_memory.model import read_messages


def run_cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "clique_memory.cli", *args],
        capture_output=True, text=True, env=dict(os.environ, **(env or {})),
    )


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_theory_table(tmp_path):
    out = tmp_path / "th.csv"
    assert cli.main(["theory", "--c", "10", "--kappa", "0.9", "--out", str(out)]) == 0
    table = rows(out)
    assert [float(r["alpha"]) for r in table] == pytest.approx([0.1 * k for k in range(1, 11)])
    eta = {round(float(r["alpha"]), 1): float(r["eta"]) for r in table}
    assert eta[0.4] < 1 < eta[0.5]
    summary = json.loads((tmp_path / "th.json").read_text())
    assert summary["results"]["eta_unity_root"] == pytest.approx(0.423, abs=0.01)
    assert summary["config"]["kappa"] == "9/10"


def test_stability_byte_identical(tmp_path):
    args = ["stability", "--l", "32", "--c", "4", "--alpha", "0.1", "--trials", "50", "--workers", "1"]
    for tag in "ab":
        assert cli.main(args + ["--out", str(tmp_path / f"{tag}.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    ja = json.loads((tmp_path / "a.json").read_text())
    jb = json.loads((tmp_path / "b.json").read_text())
    ja["config"].pop("out"), jb["config"].pop("out"), ja["config"].pop("summary"), jb["config"].pop("summary")
    assert ja == jb
    assert "wall_time_s" not in ja
    assert ja["version"] == "v0.1.0" and ja["config"]["M"] == 102


def test_timing_flag(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["stability", "--l", "16", "--c", "3", "--trials", "5", "--timing", "--out", str(out)]) == 0
    assert json.loads((tmp_path / "t.json").read_text())["wall_time_s"] >= 0


def test_retrieval_radius_error():
    res = run_cli("retrieval", "--r", "99", "--c", "6", "--trials", "2")
    assert res.returncode == 2
    assert "r exceeds gamma*c - 1" in res.stderr


def test_retrieval_defaults(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["retrieval", "--l", "32", "--c", "6", "--alpha", "0.01", "--trials", "20",
                     "--workers", "1", "--out", str(out)]) == 0
    cfg = json.loads((tmp_path / "r.json").read_text())["config"]
    assert cfg["r"] == 2 and cfg["kappa"] == "1/2" and cfg["kappa_rule"] == "thm2"


def test_empty_config_gives_defaults(tmp_path):
    conf = tmp_path / "empty.conf"
    conf.write_text("# nothing\n\n")
    assert cli.read_config_file(conf) == {}
    assert cli.load_config(conf) == cli.RunConfig()
    a = cli.resolve("stability", cli.merge_sources(cli.read_config_file(conf)))
    b = cli.resolve("stability", {})
    assert a == b and a["trials"] == 1000 and a["seed"] == 42 and a["c"] == 5


def test_flag_overrides_config(tmp_path):
    conf = tmp_path / "a.conf"
    conf.write_text("alpha = 0.05\ntrials=3\n")
    out = tmp_path / "o.csv"
    assert cli.main(["stability", "--config", str(conf), "--alpha", "0.1", "--l", "16", "--c", "3",
                     "--out", str(out)]) == 0
    cfg = json.loads((tmp_path / "o.json").read_text())["config"]
    assert cfg["alpha"] == pytest.approx(0.1, abs=0.01) and cfg["trials"] == 3


def test_flag_M_drops_config_alpha():
    merged = cli.merge_sources({"alpha": 0.05}, {"M": 10})
    assert merged == {"M": 10}


@pytest.mark.parametrize(
    "text, needle",
    [
        ("alpha=0.05\nM=10\n", "mutually exclusive"),
        ("trials=10\nbogus=1\n", ":2: unknown key 'bogus'"),
        ("trials=ten\n", ":1: bad value for trials"),
        ("l=8\nl=9\n", ":2: duplicate key"),
        ("\n\njust words\n", ":3: expected key=value"),
    ],
)
def test_bad_config(tmp_path, capsys, text, needle):
    conf = tmp_path / "bad.conf"
    conf.write_text(text)
    assert cli.main(["stability", "--config", str(conf), "--trials", "1"]) == 2
    assert needle in capsys.readouterr().err


def test_exclusive_flags(capsys):
    assert cli.main(["stability", "--alpha", "0.1", "--M", "4"]) == 2
    assert "mutually exclusive" in capsys.readouterr().err


def test_env_seed(tmp_path):
    out = tmp_path / "s.csv"
    base = ["stability", "--l", "16", "--c", "3", "--trials", "3", "--workers", "1"]
    assert run_cli(*base, "--out", str(out), env={"CLIQUE_MEMORY_SEED": "9"}).returncode == 0
    assert json.loads((tmp_path / "s.json").read_text())["config"]["seed"] == 9
    run_cli(*base, "--seed", "5", "--out", str(out), env={"CLIQUE_MEMORY_SEED": "9"})
    assert json.loads((tmp_path / "s.json").read_text())["config"]["seed"] == 5
    assert run_cli(*base, env={"CLIQUE_MEMORY_SEED": "x"}).returncode == 2


def test_gen_and_trace(tmp_path):
    msgs = tmp_path / "m.txt"
    assert cli.main(["gen", "--l", "12", "--c", "3", "--M", "9", "--seed", "4", "--out", str(msgs)]) == 0
    l, c, m = read_messages(msgs)
    assert (l, c, m.shape) == (12, 3, (9, 3))
    for mode in ("parallel", "sequential", "gb"):
        out = tmp_path / f"{mode}.csv"
        assert cli.main(["trace", "--messages", str(msgs), "--mode", mode, "--start", "corrupted",
                         "--kappa", "2/3", "--out", str(out)]) == 0
        table = rows(out)
        assert table[0]["step"] == "0"
        if mode != "gb":
            e = [float(r["energy"]) for r in table]
            assert all(b <= a for a, b in zip(e, e[1:]))
        summary = json.loads((tmp_path / f"{mode}.json").read_text())
        assert summary["results"]["outcome"] in ("fixed-point", "two-cycle")
        assert summary["config"]["M"] == 9


def test_other_commands(tmp_path):
    for sub, extra in [
        ("lemma3", ["--l", "20", "--c", "4", "--alpha", "0.5"]),
        ("census", ["--l", "16", "--c", "3", "--start", "uniform-random"]),
        ("sweep", ["--l-list", "16,24", "--alpha-grid", "0.05,0.1"]),
    ]:
        out = tmp_path / f"{sub}.csv"
        assert cli.main([sub, *extra, "--trials", "10", "--workers", "1", "--out", str(out)]) == 0
        assert rows(out)
    assert len(rows(tmp_path / "sweep.csv")) == 4
    assert sum(int(r["count"]) for r in rows(tmp_path / "lemma3.csv")) == 10


def test_csv_to_stdout_summary_to_stderr(capsys):
    assert cli.main(["theory", "--alpha-grid", "0.5"]) == 0
    cap = capsys.readouterr()
    assert cap.out.startswith("alpha,h_bits,eta")
    assert json.loads(cap.err)["subcommand"] == "theory"


def test_unwritable_output(tmp_path, capsys):
    target = tmp_path / "missing" / "x.csv"
    assert cli.main(["theory", "--out", str(target)]) == 2
    assert "cannot write" in capsys.readouterr().err


def test_parse_grid():
    assert cli.parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert cli.parse_grid("1,2.5") == [1.0, 2.5]
    with pytest.raises(ValueError):
        cli.parse_grid("1:0:0.1")


def test_version(capsys):
    assert cli.main(["--version"]) == 0
    assert "v0.1.0" in capsys.readouterr().out
