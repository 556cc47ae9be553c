import json

import pytest

from phonoparse import io
from phonoparse.cli import main


@pytest.fixture
def corpus(tmp_path):
    prefix = tmp_path / "syn"
    assert main(["gen", "--out", str(prefix), "--segments", "150", "--noise", "0.1", "--seed", "3"]) == 0
    return tmp_path / "syn.post"


def _eval(post, report, *extra):
    return main(["eval", str(post), "--folds", "2", "--fold-length", "100", "--seed", "7",
                 "--report", str(report), *extra])


def test_gen_writes_files(corpus):
    seq = io.read_posteriors(corpus)
    anns = io.read_labels(corpus.with_suffix(".segs"), seq.n)
    assert seq.k == 15 and len(anns) == 150


def test_eval_report_is_deterministic(corpus, tmp_path, capsys):
    assert _eval(corpus, tmp_path / "a.json", "--context", "2") == 0
    out = capsys.readouterr().out
    assert "Segment accuracy (%)" in out and "Frame accuracy (%)" in out
    assert _eval(corpus, tmp_path / "b.json", "--context", "2") == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    (rep,) = json.loads((tmp_path / "a.json").read_text())["reports"]
    assert 0.0 <= rep["segment_accuracy_mean"] <= 1.0
    assert 0.0 <= rep["frame_accuracy_mean"] <= 1.0
    assert rep["config"]["context"] == 2 and rep["config"]["seed"] == 7


def test_eval_default_context_sweep(corpus, tmp_path, capsys):
    assert _eval(corpus, tmp_path / "s.json") == 0
    reps = json.loads((tmp_path / "s.json").read_text())["reports"]
    assert [r["context"] for r in reps] == [0, 1, 2, 4, 6]
    header = capsys.readouterr().out.splitlines()[1].split()
    assert header[-5:] == ["0", "1", "2", "4", "6"]


def test_hamming_min_matches_innerproduct(corpus, tmp_path):
    assert _eval(corpus, tmp_path / "h.json", "--metric", "hamming:min") == 0
    assert _eval(corpus, tmp_path / "i.json", "--metric", "innerproduct") == 0
    h = json.loads((tmp_path / "h.json").read_text())["reports"]
    i = json.loads((tmp_path / "i.json").read_text())["reports"]
    for a, b in zip(h, i):
        assert a["per_fold"] == b["per_fold"]


def test_all_metrics(corpus, tmp_path):
    assert _eval(corpus, tmp_path / "m.json", "--metric", "all", "--context", "1") == 0
    reps = json.loads((tmp_path / "m.json").read_text())["reports"]
    assert len(reps) == 6


def test_cross_eval(tmp_path, capsys):
    prefix = tmp_path / "x"
    main(["gen", "--out", str(prefix), "--segments", "120", "--accent-mode", "copy-stress"])
    post = tmp_path / "x.post"
    args = ["--folds", "1", "--fold-length", "100", "--context", "1"]
    assert main(["cross-eval", str(post), "--task", "accent", *args, "--report", str(tmp_path / "c.json")]) == 0
    assert "accent via stress books" in capsys.readouterr().out
    assert main(["cross-eval", str(post), "--task", "cv", *args]) == 2


def test_build_parse_round(corpus, tmp_path, capsys):
    assert main(["build", str(corpus), "--task", "stress", "--context", "1", "--out", str(tmp_path / "bk")]) == 0
    books = [tmp_path / "bk.stress.stressed.cbk", tmp_path / "bk.stress.unstressed.cbk"]
    assert all(b.exists() for b in books)
    out = tmp_path / "dec.txt"
    assert main(["parse", str(corpus), "--books", *map(str, books[::-1]), "--context", "1",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 151
    # context must match the books
    assert main(["parse", str(corpus), "--books", *map(str, books), "--context", "2"]) == 1


def test_stats(tmp_path, capsys):
    prefix = tmp_path / "t"
    main(["gen", "--out", str(prefix), "--emit", "cv", "--templates", "5", "--segments", "180",
          "--frames-min", "5", "--frames-max", "6"])
    capsys.readouterr()
    post = tmp_path / "t.post"
    assert main(["stats", str(post), "--labels", str(tmp_path / "t.segs"),
                 "--report", str(tmp_path / "st.json")]) == 0
    out = capsys.readouterr().out
    rep = json.loads((tmp_path / "st.json").read_text())
    unique = rep["sparsity"]["unique_count"]
    assert unique <= 10 and f"unique patterns:   {unique}" in out
    assert rep["sparsity"]["ratio_of_total"] == unique / rep["sparsity"]["total_count"]
    assert sum(rep["codebooks"].values()) == unique


@pytest.mark.parametrize("argv", [
    ["eval", "x.post", "--metric", "bogus"],
    ["eval", "x.post", "--context", "-1"],
    ["stats", "x.post", "--context", "1,2"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "x.post").write_text("PHONOPOST 1\nK=1 N=1\n0.5\n")
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_data_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.post"
    bad.write_text("PHONOPOST 1\nK=2 N=1\n0.5 1.5\n")
    assert main(["stats", str(bad)]) == 1
    assert f"{bad}:3:" in capsys.readouterr().err
    assert main(["stats", str(tmp_path / "missing.post")]) == 1
