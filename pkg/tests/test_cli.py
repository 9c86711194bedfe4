import csv
import json

import pytest

from pachner import seed_triangulation
from pachner.census import read_census
from pachner.cli import load_spec, main, parse_k, UsageError
from pachner.isosig import random_relabel

SAMPLE = ["sample", "--gammas", "0.2,0.3", "--runs", "2", "--steps", "3000", "--interval", "10",
          "--burn-in", "500"]


def _run(args, capsys):
    try:
        code = main([str(a) for a in args])
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_k():
    assert parse_k("1-3,10") == [1, 2, 3, 10]
    assert load_spec(None, {"k": "5-7"}).grid() == pytest.approx([1 / 5, 1 / 6, 1 / 7])


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dim": 2, "colour": "red"}))
    with pytest.raises(UsageError):
        load_spec(str(cfg), {})


def test_sample_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(SAMPLE + ["--out", a, "--seed", 3], capsys)[0] == 0
    assert _run(SAMPLE + ["--out", b, "--seed", 3], capsys)[0] == 0
    names = sorted(p.name for p in (a / "chains").glob("*.ndjson"))
    assert names == ["run00_g00.ndjson", "run00_g01.ndjson", "run01_g00.ndjson", "run01_g01.ndjson"]
    for name in names:
        assert (a / "chains" / name).read_bytes() == (b / "chains" / name).read_bytes()
    exp = json.loads((a / "experiment.json").read_text())
    assert exp["gammas"] == [0.2, 0.3] and exp["runs"] == 2
    rows = list(csv.DictReader(open(a / "summary.csv")))
    assert len(rows) == 4 and {r["chain"] for r in rows} == {n[:-7] for n in names}
    first = json.loads((a / "chains" / names[0]).read_text().splitlines()[0])
    assert {"t", "n", "isosig", "chain_id", "gamma", "run"} <= set(first)


def test_estimate_and_census_overlay(tmp_path, capsys):
    runs = tmp_path / "runs"
    assert _run(["sample", "--gammas", "0.3,0.4", "--runs", "2", "--steps", "40000", "--interval", "5",
                 "--burn-in", "1000", "--no-isosig", "--out", runs], capsys)[0] == 0
    cen = []
    for n in (2, 4, 6):
        path = tmp_path / f"c{n}.txt"
        assert _run(["enumerate", "--n", n, "--out", path], capsys)[0] == 0
        cen.append(path)
    assert len(read_census(cen[1])) == 6
    out = tmp_path / "ratios.csv"
    code, text, _ = _run(["estimate", runs, "--out", out, "--census", *cen, "--constants", tmp_path / "k.json",
                          "--plot", tmp_path / "r.svg"], capsys)
    assert code == 0 and "C =" in text
    rows = {int(r["n"]): r for r in csv.DictReader(open(out))}
    assert set(rows[2]) == {"n", "R_hat", "stderr", "support", "runs", "exact"}
    assert float(rows[2]["exact"]) == pytest.approx(3.0)
    assert abs(float(rows[2]["R_hat"]) - 3.0) < 5 * float(rows[2]["stderr"]) + 0.05
    assert (tmp_path / "r.svg").read_text().lstrip().startswith("<?xml")
    assert "C" in json.loads((tmp_path / "k.json").read_text())


def test_degrees(tmp_path, capsys):
    runs = tmp_path / "runs"
    assert _run(["sample", "--dim", 3, "--manifold", "sphere3_seed", "--one-vertex", "--gammas", "0.1",
                 "--runs", 1, "--steps", 20000, "--interval", 20, "--burn-in", 0, "--out", runs], capsys)[0] == 0
    out, per = tmp_path / "d.csv", tmp_path / "s.csv"
    code, text, _ = _run(["degrees", runs, "--out", out, "--samples-out", per, "--kappa-range", 2, 8,
                          "--plot", tmp_path / "d.svg"], capsys)
    assert code == 0 and "identity violations: 0" in text
    assert (tmp_path / "d.svg").stat().st_size > 0
    header = open(out).readline().strip()
    assert header == "n,kappa,mean,sigma,count"
    for row in csv.DictReader(open(per)):
        assert int(row["sum_kappa_N"]) == 6 * int(row["n"])


def test_degrees_needs_three_dimensional_logs(tmp_path, capsys):
    runs = tmp_path / "runs"
    _run(SAMPLE + ["--out", runs], capsys)
    code, _, err = _run(["degrees", runs, "--out", tmp_path / "d.csv"], capsys)
    assert code == 2 and "WrongDimension" in err


def test_enumerate_methods_agree(tmp_path, capsys):
    counts = [_run(["enumerate", "--n", 4, "--method", m], capsys)[1].strip() for m in ("bfs", "orderly", "exhaustive")]
    assert counts == ["6", "6", "6"]
    assert _run(["enumerate", "--n", 2, "--genus", 1], capsys)[1].strip() == "1"


def test_validate(tmp_path, capsys):
    good = tmp_path / "good.txt"
    good.write_text(seed_triangulation("tetrahedron").to_text())
    code, text, _ = _run(["validate", good], capsys)
    assert code == 0 and text.startswith("valid:") and "f=(4, 6, 4)" in text
    bad = tmp_path / "bad.txt"
    bad.write_text("dim 2\nfacets 2\n0 0 -> 1 : 0 1 2\n0 1 -> 1 : 0 1 2\n")
    code, text, _ = _run(["validate", bad], capsys)
    assert code == 2 and "invalid" in text and "face 2 of facet 0" in text


def test_isosig_of_relabelled_files(tmp_path, capsys):
    T = seed_triangulation("genus(2)")
    files = []
    for k in range(3):
        p = tmp_path / f"t{k}.txt"
        p.write_text(random_relabel(T, k).to_text())
        files.append(p)
    code, text, _ = _run(["isosig", *files], capsys)
    lines = text.split()
    assert code == 0 and len(lines) == 3 and len(set(lines)) == 1 and lines[0] == T.isosig()


def test_exit_codes(tmp_path, capsys):
    assert _run(["sample", "--steps", "many"], capsys)[0] == 1
    assert _run(["frobnicate"], capsys)[0] == 1
    assert _run(["sample", "--dim", 3, "--r", 2, "--gammas", "0.1", "--out", tmp_path / "x"], capsys)[0] == 2
    assert _run(["estimate", tmp_path / "missing"], capsys)[0] == 2
    assert _run(["isosig", tmp_path / "missing.txt"], capsys)[0] == 2
