import json
import os
from pathlib import Path

import pytest

from screentest.cli import main

GOLDEN = Path(__file__).parent / "golden"

RECIPES = {
    "eval_waterloo": ["eval", "--population", "601220", "--infected", "8", "--test", "hutchison"],
    "eval_clinic": ["eval", "--population", "18", "--infected", "1", "--test", "hutchison"],
    "discharge_hutchison": ["discharge", "--test", "hutchison", "--prevalence", "0.2,0.4,0.5,0.7,0.8",
                            "--tolerance", "0.05"],
    "repeat_biomedomics": ["repeat", "--test", "biomedomics", "--prevalence", "0.5", "--k", "1",
                           "--kind", "first-positive"],
    "repeat_grid": ["repeat", "--test", "hutchison", "--prevalence", "0.2,0.85", "--k", "1,3"],
    "simulate_all_negative": ["simulate", "--test", "hutchison", "--prevalence", "0.2", "--k", "2",
                              "--trials", "20000", "--seed", "42"],
    "simulate_screen": ["simulate", "--kind", "screen", "--prevalence", "0.001", "--population", "20000",
                        "--seed", "42"],
    "cohort_diamond_princess": ["cohort", "--builtin", "diamond-princess", "--start-day", "17"],
    "curves_all_negative": ["curves", "all-negative-vs-prevalence", "--test", "biomedomics",
                            "--steps", "4", "--k", "1,2"],
    "curves_fn": ["curves", "fn-vs-sensitivity", "--steps", "2", "--prevalence", "0.0001,0.5"],
}


def exit_code(argv):
    try:
        return main(argv)
    except SystemExit as exc:  # argparse rejections
        return exc.code


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(RECIPES))
def test_golden_json(capsys, name):
    code, out, err = run(capsys, RECIPES[name] + ["--format", "json"])
    assert code == 0, err
    path = GOLDEN / f"{name}.json"
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(out, encoding="utf-8")
    assert out == path.read_text(encoding="utf-8")


@pytest.mark.parametrize("name", sorted(RECIPES))
def test_table_output_runs(capsys, name):
    code, out, _ = run(capsys, RECIPES[name])
    assert code == 0 and out.strip()


def test_eval_table(capsys):
    _, out, _ = run(capsys, RECIPES["eval_waterloo"])
    assert "fp=60121.2" in out.splitlines()
    assert "fn=3.2" in out.splitlines()


def test_eval_prevalence(capsys):
    _, out, _ = run(capsys, ["eval", "--population", "18", "--prevalence", "0.5", "--format", "json"])
    doc = json.loads(out)
    assert doc["infected"] == 9.0 and doc["expected_false_negatives"] == pytest.approx(3.6)


def test_discharge_column(capsys):
    _, out, _ = run(capsys, RECIPES["discharge_hutchison"] + ["--format", "json"])
    rows = json.loads(out)["rows"]
    assert [r["required_negatives"] for r in rows] == [2, 4, 4, 5, 6]
    assert rows[1]["max_prevalence_at_k_minus_1"] == pytest.approx(0.37480719794344475, rel=1e-12)


def test_discharge_unreachable(capsys):
    code, out, _ = run(capsys, ["discharge", "--sensitivity", "0.3", "--specificity", "0.3",
                                "--prevalence", "0.5"])
    assert code == 0 and "unreachable" in out


def test_repeat_value(capsys):
    _, out, _ = run(capsys, RECIPES["repeat_biomedomics"] + ["--format", "json"])
    assert json.loads(out)["results"][0]["first_positive"] == pytest.approx(0.9044170151994287, rel=1e-12)
    _, out, _ = run(capsys, RECIPES["repeat_biomedomics"])
    assert "0.9044" in out


def test_simulate_echoes_seed(capsys):
    _, out, _ = run(capsys, RECIPES["simulate_all_negative"] + ["--format", "json"])
    doc = json.loads(out)
    assert doc["seed"] == 42 and "Philox" in doc["rng"]
    assert abs(doc["z_score"]) < 3


def test_cohort_writes_files(capsys, tmp_path):
    code, out, _ = run(capsys, RECIPES["cohort_diamond_princess"] + ["--out", str(tmp_path)])
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["diamond-princess.fn.csv", "diamond-princess.fp_pop.csv",
                     "diamond-princess.prevalence.csv", "diamond-princess.report.json"]
    assert "not reproduced" in out


def test_cohort_input_and_export(capsys, tmp_path):
    exported = tmp_path / "dp.csv"
    run(capsys, ["cohort", "--builtin", "diamond-princess", "--export-series", str(exported)])
    code, out, _ = run(capsys, ["cohort", "--input", str(exported), "--mode", "cumulative",
                                "--start-day", "44", "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["rows"][0]["expected_false_negatives"] == pytest.approx(282.0)


def test_curves_to_file(capsys, tmp_path):
    target = tmp_path / "surface.csv"
    code, out, _ = run(capsys, ["curves", "first-positive-surface", "--steps", "4", "--out", str(target)])
    assert code == 0
    lines = target.read_text().splitlines()
    assert lines[0] == "k,prevalence,sensitivity,specificity,probability"
    assert len(lines) == 1 + 2 * 3 * 3 * 3


@pytest.mark.parametrize(
    "argv,code,needle",
    [
        (["eval", "--population", "10", "--infected", "1", "--test", "nope"], 1, "unknown test preset"),
        (["eval", "--population", "10", "--infected", "1", "--sensitivity", "1.5", "--specificity", "0.5"],
         1, "out of range"),
        (["eval", "--population", "ten", "--infected", "1"], 1, "not a number"),
        (["eval", "--population", "10"], 1, "exactly one of"),
        (["eval", "--population", "10", "--infected", "1", "--sensitivity", "0.5"], 1, "together"),
        (["eval", "--population", "0", "--infected", "0"], 1, "empty"),
        (["repeat", "--prevalence", "0.5", "--k", "0"], 1, ">= 1"),
        (["cohort", "--input", "/nonexistent/series.csv"], 2, "I/O error"),
        (["cohort", "--builtin", "diamond-princess", "--start-day", "99"], 1, "outside series range"),
        (["cohort", "--builtin", "diamond-princess", "--out", "/proc/forbidden"], 2, "I/O error"),
        (["simulate", "--prevalence", "0.5", "--seed", "-1"], 1, "64-bit"),
    ],
)
def test_errors(capsys, argv, code, needle):
    assert exit_code(argv) == code
    _, err = capsys.readouterr()
    assert needle in err
    assert len([line for line in err.splitlines() if "error" in line]) == 1


def test_parse_errors_exit_one():
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--population", "ten", "--infected", "1"])
    assert exc.value.code == 1


def test_deterministic_output(capsys):
    for name, argv in RECIPES.items():
        _, a, _ = run(capsys, argv + ["--format", "json"])
        _, b, _ = run(capsys, argv + ["--format", "json"])
        assert a == b, name
