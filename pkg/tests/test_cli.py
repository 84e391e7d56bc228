import json

import numpy as np
import pytest

from armaml.cli import main
from armaml.core import ArmaOrder, ArmaParams
from armaml.io import read_series, write_series
from armaml.sim import GeneratorSpec, simulate


@pytest.fixture
def series_csv(tmp_path):
    path = tmp_path / "x.csv"
    write_series(str(path), simulate(GeneratorSpec(ArmaOrder(1, 1), ArmaParams([0.6], [0.3], 1.0, 2.0), 120, seed=1)))
    return str(path)


def strip_timing(doc):
    if isinstance(doc, dict):
        return {k: strip_timing(v) for k, v in doc.items() if k != "timing"}
    return doc


def test_fit_json_deterministic_across_threads(series_csv, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["fit", series_csv, "1", "1", "--M", "3", "--json", str(a)]) == 0
    assert main(["fit", series_csv, "1", "1", "--M", "3", "--threads", "3", "--json", str(b)]) == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert strip_timing(da) == strip_timing(db)
    assert da["result"]["order"] == {"p": 1, "q": 1, "include_mean": True}
    assert da["manifest"]["input_sha256"] and da["manifest"]["seed"] == 0
    out = capsys.readouterr().out
    assert "Estimate" in out and "phi1" in out


def test_single_mode(series_csv, capsys):
    assert main(["fit", series_csv, "1", "0", "--single", "--no-mean", "--json", "-"]) == 0
    doc = json.loads(capsys.readouterr().out.split("\n", 4)[-1])
    assert doc["result"]["n_starts_used"] == 1 and doc["result"]["order"]["include_mean"] is False


def test_aic_table_text_matches_json(series_csv, tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["aic-table", series_csv, "--max-p", "1", "--max-q", "1", "--digits", "3", "--M", "2",
                 "--json", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    aic = json.loads(out.read_text())["table"]["aic"]
    for p in range(2):
        cells = [float(c.rstrip("*")) for c in lines[p + 1].split()[1:]]
        assert cells == pytest.approx(aic[p], abs=6e-4)


def test_profile_writes_curve(series_csv, tmp_path, capsys):
    out = tmp_path / "prof.csv"
    assert main(["profile", series_csv, "1", "0", "--param", "phi1", "--M", "2", "--out", str(out)]) == 0
    assert "PLCI" in capsys.readouterr().out
    rows = out.read_text().splitlines()
    assert rows[0] == "parameter,value,profile_loglik,inside" and len(rows) > 20
    assert (tmp_path / "prof.csv.manifest.json").exists()


def test_simulate_roundtrip(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    args = ["simulate", "1", "1", "--phi", "0.5", "--theta", "0.2", "--n", "50", "--seed", "3"]
    assert main(args + ["--out", str(out)]) == 0
    x, _ = read_series(str(out))
    ref = simulate(GeneratorSpec(ArmaOrder(1, 1), ArmaParams([0.5], [0.2]), 50, seed=3))
    np.testing.assert_array_equal(x.values, ref.values)
    assert main(args) == 0
    lines = capsys.readouterr().out.split()
    assert lines[0] == "value" and [float(v) for v in lines[1:]] == ref.values.tolist()


def test_study_writes_outputs(tmp_path):
    assert main(["study", "lr-null", "--grid", "n=60", "--replicates", "3", "--M", "2", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "lr_null_summary.json").read_text())
    assert doc["summary"][0]["replicates"] == 3 and doc["manifest"]["command"] == "study lr-null"


@pytest.mark.parametrize(
    "content,args",
    [
        ("value\n1\nabc\n", ["fit", "{f}", "1", "0"]),
        ("value\n1\n2\n", ["fit", "{f}.missing", "1", "0"]),
        ("value\n1\n2\n3\n", ["fit", "{f}", "1", "0", "--M", "0"]),
        ("value\n1\n2\n3\n", ["profile", "{f}", "1", "0", "--param", "theta1"]),
        ("value\n1\n2\n3\n", ["aic-table", "{f}", "--max-p", "9"]),
        ("", ["simulate", "1", "0", "--phi", "1.5"]),
        ("", ["simulate", "2", "0", "--phi", "0.5"]),
        ("", ["fit"]),
    ],
)
def test_bad_input_exits_2(tmp_path, content, args):
    f = tmp_path / "in.csv"
    f.write_text(content)
    assert main([a.format(f=f) for a in args]) == 2


def test_fit_failure_exits_3(tmp_path):
    f = tmp_path / "const.csv"
    f.write_text("value\n" + "1\n" * 6)
    assert main(["fit", str(f), "1", "1"]) == 3
