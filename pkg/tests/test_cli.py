import csv
import io
import json
import math
import subprocess
import sys

import pytest

from bayestherm import detectable_range, ProbeConfig
from bayestherm.cli import main

FAST = ["--grid-step", "0.01"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_range_rows(capsys):
    code, out, _ = run(capsys, "range", "--n-probes", "200")
    assert code == 0
    rows = rows_of(out)
    assert [r["gamma_tau"] for r in rows] == ["0.01", "0.1", "inf"]
    t0 = [float(r["t0"]) for r in rows]
    ti = [float(r["t_inf"]) for r in rows]
    assert t0[0] > t0[1] > t0[2] and ti[0] > ti[1] > ti[2]
    assert float(rows[2]["peak_fisher_ratio"]) == 1.0


def test_undetectable_row_is_blank(capsys):
    code, out, _ = run(capsys, "range", "--n-probes", "1", "--gamma-tau", "inf")
    assert code == 0
    assert rows_of(out)[0]["t0"] == ""


@pytest.mark.parametrize("argv,field", [
    (["range", "--gamma-tau", ""], "--gamma-tau"),
    (["range", "--gamma-tau", "-1"], "--gamma-tau"),
    (["compare", "--n-probes", "0"], "--n-probes"),
    (["compare", "--prior", "flat", "--grid-max", "inf"], "--grid-max"),
    (["compare", "--estimators", "md,9"], "--estimators"),
    (["compare", "--true-t", "1:0.5:3"], "--true-t"),
    (["scaling", "--n-list", "20,10"], "--n-list"),
    (["single"], "--n"),
    (["compare", "--t-range", "5,1"], "--t-range"),
    (["compare", "--grid-step", "0"], "--grid-step"),
])
def test_config_errors_name_the_field(capsys, argv, field):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert field in capsys.readouterr().err


def test_compare_columns_and_range_columns(capsys):
    code, out, _ = run(capsys, "compare", "--true-t", "1,3", "--estimators", "md,2r", *FAST)
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert header[:4] == ["t", "t0", "t_inf", "eps90_over_t"]
    assert "err_over_rms[2r]" in header and "err_over_rms[md]" not in header
    rows = rows_of(out)
    assert len(rows) == 2
    dr = detectable_range(ProbeConfig(200))
    assert float(rows[0]["t0"]) == pytest.approx(dr.t0, rel=1e-8)
    assert float(rows[0]["t_inf"]) == pytest.approx(dr.t_inf, rel=1e-8)
    assert 0.9 <= float(rows[0]["theta_bar_over_t[2r]"]) <= 1.1


def test_csv_is_byte_identical_on_rerun(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["compare", "--true-t", "0.5,2", "--estimators", "1r", *FAST, "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_csv_nine_significant_digits(capsys):
    _, out, _ = run(capsys, "range", "--gamma-tau", "inf")
    t0 = rows_of(out)[0]["t0"]
    assert len(t0.replace(".", "").lstrip("0")) <= 9


def test_json_carries_config(capsys):
    code, out, _ = run(capsys, "single", "--n", "50", "--format", "json", "--estimators", "2r,md", *FAST)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["subcommand"] == "single"
    assert doc["config"]["n_probes"] == 200 and doc["config"]["n"] == 50
    assert [r["estimator"] for r in doc["rows"]] == ["2r", "md"]
    assert doc["rows"][1]["error"] is None
    assert doc["rows"][0]["estimate"] == pytest.approx(0.891, abs=2e-3)


def test_scaling_rows(capsys):
    code, out, _ = run(capsys, "scaling", "--n-list", "10,100", "--estimators", "2r,2", *FAST)
    assert code == 0
    rows = rows_of(out)
    assert [r["N"] for r in rows] == ["10", "100"]
    assert "C_fin[2][t^2]" in rows[0]
    assert float(rows[1]["C_fin[2r][1]"]) < float(rows[0]["C_fin[2r][1]"])
    for r in rows:
        assert float(r["van_trees_numeric"]) == pytest.approx(float(r["van_trees_closed_form"]), rel=1e-2)


def test_noneq_and_prior_compare(capsys):
    code, out, _ = run(capsys, "noneq", "--true-t", "1", *FAST)
    assert code == 0
    assert [r["gamma_tau"] for r in rows_of(out)] == ["inf", "0.1", "0.01"]
    code, out, _ = run(capsys, "prior-compare", "--true-t", "0.5,3", "--estimators", "2r")
    rows = {(r["prior"], r["t"]): float(r["rms_over_t[2r]"]) for r in rows_of(out)}
    low = [rows[(p, "0.5")] for p in ("jeffreys", "reciprocal", "flat")]
    assert max(low) / min(low) < 1.2
    assert rows[("jeffreys", "3")] <= min(rows[("flat", "3")], rows[("reciprocal", "3")])


def test_parallel_matches_serial(capsys):
    argv = ["noneq", "--true-t", "1,2", *FAST]
    _, serial, _ = run(capsys, *argv)
    _, parallel, _ = run(capsys, *argv, "--jobs", "2")
    assert serial == parallel


def test_runtime_error_exit_code(capsys):
    code, _, err = run(capsys, "single", "--n", "2000", "--n-probes", "2000",
                       "--grid-min", "0.01", "--grid-max", "0.05")
    assert code == 1 and "n=2000" in err


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "bayestherm.cli", "range", "--gamma-tau", "inf"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("gamma_tau,")
