import json
import time

import numpy as np
import pytest
from click.testing import CliRunner

from casebound.cli import main
from casebound.fixtures import count_table
from casebound.model import ColumnSchema, Design, export_csv
from casebound.rng import RngSpec
from casebound.synthetic import sample_from_population
from casebound.fixtures import top_income_population


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


def write_university_csv(path):
    data = count_table("university_private_school").to_dataset(Design.CASE_CONTROL)
    export_csv(data, path, ColumnSchema(y="vsu", t="private"))
    return str(path)


def write_case_population_csv(path, n=3000, seed=31):
    from casebound.oracle import random_population
    pop = random_population(RngSpec(seed).derive("cli-pop"), n_cells=2,
                            mtr=True, mts=True)
    data = sample_from_population(pop, Design.CASE_POPULATION, 0.3, n,
                                  RngSpec(seed).derive("cli-sample"))
    export_csv(data, path, ColumnSchema(y="y", t="t", x=("x1",)))
    return str(path)


def test_demo_fast_and_reports_all_tables(runner):
    start = time.perf_counter()
    result = runner.invoke(main, ["demo"])
    elapsed = time.perf_counter() - start
    assert result.exit_code == 0
    assert elapsed < 1.0
    for needle in ("2.1852", "2.1874", "2.0927", "2.0950", "1.3823"):
        assert needle in result.output


def test_demo_json_schema(runner):
    result = runner.invoke(main, ["demo", "--format", "json"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["schema_version"] == 1
    assert len(doc["odds_ratios"]) == 4


def test_rr_university_counts(runner, tmp_path):
    path = write_university_csv(tmp_path / "univ.csv")
    out = tmp_path / "out"
    result = runner.invoke(main, [
        "rr", "--input", path, "--design", "case-control",
        "--y-col", "vsu", "--t-col", "private", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "1.3823" in result.output  # exp-scale estimate
    assert "stratum y=0" in result.output and "stratum y=1" in result.output
    band = (out / "rr_band.csv").read_text().splitlines()
    assert band[0] == "p,point,lower,upper"
    assert len(band) == 102  # header + 101 grid rows


def test_rr_json_output(runner, tmp_path):
    path = write_university_csv(tmp_path / "univ.csv")
    result = runner.invoke(main, [
        "rr", "--input", path, "--design", "case-control",
        "--y-col", "vsu", "--t-col", "private", "--format", "json"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["schema_version"] == 1
    assert doc["estimates"]["beta1"]["exp_value"] == pytest.approx(1.3823, abs=5e-4)


def test_rr_case_population_single_stratum(runner, tmp_path):
    path = write_case_population_csv(tmp_path / "cp.csv")
    result = runner.invoke(main, [
        "rr", "--input", path, "--design", "case-population",
        "--y-col", "y", "--t-col", "t", "--x-cols", "x1", "--h0", "0.3"])
    assert result.exit_code == 0, result.output
    assert "stratum y=0" in result.output
    assert "stratum y=1" not in result.output


def test_rr_alpha_out_of_range_exits_2(runner, tmp_path):
    path = write_university_csv(tmp_path / "univ.csv")
    result = runner.invoke(main, [
        "rr", "--input", path, "--design", "case-control",
        "--y-col", "vsu", "--t-col", "private", "--alpha", "0.7"])
    assert result.exit_code == 2


def test_rr_missing_column_exits_2(runner, tmp_path):
    path = write_university_csv(tmp_path / "univ.csv")
    result = runner.invoke(main, [
        "rr", "--input", path, "--design", "case-control",
        "--y-col", "nope", "--t-col", "private"])
    assert result.exit_code == 2
    assert "error:" in result.output


def test_ar_case_population_grid(runner, tmp_path):
    path = write_case_population_csv(tmp_path / "cp.csv")
    out = tmp_path / "arout"
    result = runner.invoke(main, [
        "ar", "--input", path, "--design", "case-population",
        "--y-col", "y", "--t-col", "t", "--x-cols", "x1",
        "--pbar", "0.15", "--B", "200", "--seed", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    curve = (out / "ar_curve.csv").read_text().splitlines()
    assert curve[0] == "p,point,upper,mu_star,nu_star"
    assert len(curve) == 17  # header + 16 grid rows
    first = curve[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 0.0
    diag = json.loads((out / "ar_diagnostics.json").read_text())
    assert diag["schema_version"] == 1
    assert diag["mode"] == "uniform-bc"


def test_ar_rejects_small_bootstrap(runner, tmp_path):
    path = write_case_population_csv(tmp_path / "cp.csv")
    result = runner.invoke(main, [
        "ar", "--input", path, "--design", "case-population",
        "--y-col", "y", "--t-col", "t", "--x-cols", "x1", "--B", "50"])
    assert result.exit_code == 2


def test_oracle_command(runner, tmp_path):
    result = runner.invoke(main, ["oracle", "--populations", "5", "--seed", "3"])
    assert result.exit_code == 0, result.output
    assert "[PASS]" in result.output
    assert "[FAIL]" not in result.output


def test_oracle_population_file(runner, tmp_path):
    from casebound.oracle import random_population, save_population
    pop = random_population(RngSpec(17).derive("cli-pop"), n_cells=2, mtr=True,
                            mts=True)
    path = tmp_path / "pop.csv"
    save_population(pop, path)
    result = runner.invoke(main, ["oracle", "--population", str(path)])
    assert result.exit_code == 0, result.output
    assert "[PASS]" in result.output


def test_mc_command_deterministic(runner):
    args = ["mc", "--replications", "100", "--seed", "21",
            "--estimators", "parametric"]
    r1 = runner.invoke(main, args)
    r2 = runner.invoke(main, args)
    assert r1.exit_code == 0, r1.output
    assert r1.output == r2.output
    assert "coverage" in r1.output


def test_mc_writes_summary(runner, tmp_path):
    out = tmp_path / "mc"
    result = runner.invoke(main, ["mc", "--replications", "100", "--seed", "22",
                                  "--estimators", "parametric",
                                  "--out", str(out)])
    assert result.exit_code == 0
    doc = json.loads((out / "mc_summary.json").read_text())
    assert doc["schema_version"] == 1
    assert len(doc["cells"]) == 2
