import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from mutcause import cli
from mutcause.diagnostics import DiagnosticWarning
from mutcause.model import make_model
from mutcause.samples import PosteriorSamples
from mutcause.scm import ScmConfig

GRAPHS = Path(__file__).resolve().parent.parent / "graphs"
QUICK = ["--warmup", "150", "--samples", "100", "--chains", "2"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_config(path, n_projects=3, mutants=300, seed=1, **truth):
    truth = {"alpha": 0.4, "beta": 0.8, "gamma": 0.8, "lam": 0.8, "sigma": 0.3, **truth}
    path.write_text(ScmConfig.uniform(n_projects, mutants=mutants, seed=seed, **truth).to_json())
    return path


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    assert run("simulate", write_config(root / "cfg.json"), "--out", root / "sim") == 0
    return root / "sim" / "data.csv"


@pytest.fixture(scope="module")
def fits(sim, tmp_path_factory):
    root = tmp_path_factory.mktemp("fits")
    for model in ("rq1", "rq3"):
        assert run("fit", sim, "--model", model, *QUICK, "--out", root / model) == 0
    return root


def test_describe_toy_file(tmp_path, capsys):
    p = tmp_path / "toy.csv"
    p.write_text("project,mutant_id,exec,cover,killed\na,1,5,2,1\na,2,0,0,0\na,3,9,3,1\n")
    assert run("describe", p, "--out", tmp_path / "d") == 0
    report = json.loads((tmp_path / "d" / "describe.json").read_text())
    assert report["format_version"] == 1
    assert [(r["Subject"], r["Variable"]) for r in report["rows"]] == [("a", "Exec"), ("a", "Cover")]
    assert "Skewness" in capsys.readouterr().out


def test_describe_strict_violation_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("project,mutant_id,exec,cover,killed\na,1,5,2,1\na,2,1,4,0\n")
    assert run("describe", p, "--out", tmp_path / "d") == 2
    assert "row 3" in capsys.readouterr().err
    assert run("describe", p, "--lenient", "--out", tmp_path / "d") == 0


def test_missing_file_is_data_error(tmp_path):
    assert run("describe", tmp_path / "nope.csv", "--out", tmp_path / "d") == 2


def test_describe_raw_synthetic_is_right_skewed(sim, tmp_path):
    assert run("describe", sim, "--out", tmp_path / "d") == 0
    rows = json.loads((tmp_path / "d" / "describe.json").read_text())["rows"]
    assert all(r["Skewness"] > 0 for r in rows if r["Variable"] == "Exec")


def test_out_dir_from_environment(sim, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert run("describe", sim) == 0
    assert (tmp_path / "env" / "describe" / "manifest.json").is_file()


def test_usage_errors_exit_64(sim, tmp_path):
    assert run("fit", sim, "--model", "rq9") == 64
    assert run("fit", sim, "--model", "rq1", "--chains", "0") == 64
    assert run("bogus") == 64
    assert run() == 64
    assert run("--version") == 0


def test_fit_default_draw_count(sim, tmp_path):
    out = tmp_path / "fit"
    assert run("fit", sim, "--model", "rq1", "--out", out) == 0
    draws = (out / "draws.csv").read_text().splitlines()
    assert len(draws) - 1 == 4000
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["format_version"] == 1 and diag["chains"] == 4 and diag["iterations"] == 1000
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["settings"]["model"] == "rq1"
    assert manifest["settings"]["chain_config"]["seed"] == 0
    assert {o["path"] for o in manifest["outputs"]} == {"spec.json", "draws.csv", "diagnostics.json"}
    assert not list(out.glob("*.tmp"))


def test_fit_is_byte_identical(sim, tmp_path):
    for d in ("a", "b"):
        assert run("fit", sim, "--model", "rq2", *QUICK, "--seed", 7, "--out", tmp_path / d) == 0
    for name in ("draws.csv", "diagnostics.json", "spec.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_fit_parallel_matches_serial(sim, tmp_path):
    assert run("fit", sim, "--model", "rq1", *QUICK, "--out", tmp_path / "s") == 0
    assert run("fit", sim, "--model", "rq1", *QUICK, "--jobs", 2, "--out", tmp_path / "p") == 0
    assert (tmp_path / "s" / "draws.csv").read_bytes() == (tmp_path / "p" / "draws.csv").read_bytes()


def test_strict_diagnostics_fails_short_runs(sim, tmp_path):
    args = ("fit", sim, "--model", "rq3", "--warmup", 20, "--samples", 10, "--chains", 2, "--out", tmp_path / "f")
    assert run(*args, "--strict-diagnostics", "--rhat-max", 1.0) == 1
    assert run(*args) == 0


def test_summarize_and_diff(fits, tmp_path, capsys):
    assert run("summarize", fits / "rq3", "--family", "beta", "--out", tmp_path / "s") == 0
    table = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert table["columns"] == ["project", "mean", "se", "q025", "q975"] and len(table["rows"]) == 3
    assert run("diff", fits / "rq1", fits / "rq3", "--out", tmp_path / "d") == 0
    assert (tmp_path / "d" / "diff.csv").read_text().startswith("project,mean,se,q025,q975")
    assert run("summarize", fits / "rq3", "--family", "zeta", "--out", tmp_path / "z") == 64


def test_diff_refuses_fits_of_different_data(fits, tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json", seed=99)
    assert run("simulate", cfg, "--out", tmp_path / "sim") == 0
    assert run("fit", tmp_path / "sim" / "data.csv", "--model", "rq2", *QUICK, "--out", tmp_path / "other") == 0
    assert run("diff", fits / "rq1", tmp_path / "other", "--out", tmp_path / "d") == 2
    assert "different datasets" in capsys.readouterr().err


def test_tampered_draws_are_rejected(fits, tmp_path):
    import shutil

    copy = tmp_path / "fit"
    shutil.copytree(fits / "rq1", copy)
    with open(copy / "draws.csv", "a") as f:
        f.write("\n")
    assert run("summarize", copy, "--out", tmp_path / "s") == 2
    assert run("summarize", tmp_path, "--out", tmp_path / "s") == 2


def test_summarize_constant_draws_has_zero_se(tmp_path, capsys):
    spec = make_model("rq1", ["a", "b"])
    draws = np.tile(np.linspace(0.5, 1.5, spec.n_params), (10, 2, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiagnosticWarning)
        samples = PosteriorSamples(draws, tuple(spec.param_names()), spec)
    fit = cli.Run("fit", tmp_path / "fit", {"model": "rq1"})
    fit.inputs.append({"role": "data", "path": "none", "sha256": "0"})
    fit.write("spec.json", spec.to_json() + "\n")
    fit.write("draws.csv", samples.to_csv())
    fit.finish()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiagnosticWarning)
        assert run("summarize", tmp_path / "fit", "--family", "beta", "--out", tmp_path / "s") == 0
    lines = (tmp_path / "s" / "summary.csv").read_text().splitlines()[1:]
    assert [float(line.split(",")[2]) for line in lines] == [0.0, 0.0]
    printed = capsys.readouterr().out.splitlines()[1:]
    assert [line.split()[2] for line in printed] == ["0.00", "0.00"]


def test_counterfactual_emits_both_curves(fits, tmp_path, capsys):
    out = tmp_path / "cf"
    assert run("counterfactual", fits / "rq3", "--project", "proj0", "--noncausal", fits / "rq1", "--cover-fixed", 0, "--out", out) == 0
    rows = (out / "curve.csv").read_text().splitlines()
    assert len(rows) == 42
    head = rows[0].split(",")
    first = dict(zip(head, rows[1].split(",")))
    assert first["causal_mean"] and first["noncausal_mean"]
    payload = json.loads((out / "curve.json").read_text())
    assert payload["format_version"] == 1 and payload["noncausal"] is not None


def test_counterfactual_grid_and_errors(fits, tmp_path, capsys):
    assert run("counterfactual", fits / "rq3", "--project", "proj1", "--grid=-1:1:5", "--out", tmp_path / "a") == 0
    assert len((tmp_path / "a" / "curve.csv").read_text().splitlines()) == 6
    assert run("counterfactual", fits / "rq3", "--project", "proj1", "--grid", "0,0.5", "--out", tmp_path / "b") == 0
    assert run("counterfactual", fits / "rq3", "--project", "proj1", "--intervene", "cover", "--grid", "0,1", "--out", tmp_path / "c") == 0
    assert run("counterfactual", fits / "rq3", "--project", "nope", "--out", tmp_path / "d") == 64
    assert run("counterfactual", fits / "rq3", "--project", "proj1", "--grid", "x:y", "--out", tmp_path / "e") == 64
    assert run("counterfactual", fits / "rq3", "--project", "proj1", "--level", 1.5) == 64
    assert run("counterfactual", fits / "rq1", "--project", "proj1", "--intervene", "cover", "--out", tmp_path / "f") == 64


def test_ppc_and_r2(fits, sim, tmp_path):
    assert run("ppc", fits / "rq3", sim, "--out", tmp_path / "p") == 0
    rows = json.loads((tmp_path / "p" / "ppc.json").read_text())["rows"]
    assert len(rows) == 3 and all(r["lo"] <= r["observed"] <= r["hi"] for r in rows)
    assert run("r2", fits / "rq3", sim, "--out", tmp_path / "r") == 0
    r2 = json.loads((tmp_path / "r" / "r2.json").read_text())
    assert 0 < r2["lo"] <= r2["mean"] <= r2["hi"] < 1


def test_ppc_refuses_other_dataset(fits, tmp_path):
    other = tmp_path / "other.csv"
    other.write_text("project,mutant_id,exec,cover,killed\na,1,5,2,1\na,2,0,0,0\na,3,9,3,1\n")
    assert run("ppc", fits / "rq3", other, "--out", tmp_path / "p") == 2


def test_prior_check(sim, tmp_path):
    assert run("prior-check", sim, "--model", "rq2", "--sims", 200, "--seed", 3, "--out", tmp_path / "a") == 0
    assert run("prior-check", sim, "--model", "rq2", "--sims", 200, "--seed", 3, "--out", tmp_path / "b") == 0
    a = (tmp_path / "a" / "prior_predictive.csv").read_bytes()
    assert a == (tmp_path / "b" / "prior_predictive.csv").read_bytes()
    assert sum(int(line.split(",")[2]) for line in a.decode().splitlines()[1:]) == 200


def test_dag_mutation_graph(capsys):
    assert run("dag", GRAPHS / "mutation.txt", "--treatment", "Exec", "--outcome", "Mutant", "--json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["minimal_adjustment_sets"] == [["Cover"]]
    assert run("dag", GRAPHS / "mutation.txt", "--treatment", "Cover", "--outcome", "Mutant", "--json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["minimal_adjustment_sets"] == [[]] and report["backdoor_paths"] == []


def test_dag_confounded_graph(capsys, tmp_path):
    assert run("dag", GRAPHS / "confounded.txt", "--treatment", "X", "--outcome", "Y", "--out", tmp_path / "d") == 0
    out = capsys.readouterr().out
    assert "minimal adjustment sets: {T, W}" in out
    report = json.loads((tmp_path / "d" / "dag.json").read_text())
    assert len(report["paths"]) == 4 and len(report["backdoor_paths"]) == 2


def test_dag_errors(tmp_path, capsys):
    assert run("dag", GRAPHS / "mutation.txt", "--treatment", "Exec", "--outcome", "Exec") == 64
    assert run("dag", GRAPHS / "mutation.txt", "--treatment", "Q", "--outcome", "Exec") == 64
    cyclic = tmp_path / "cyc.txt"
    cyclic.write_text("A -> B\nB -> C\nC -> A\n")
    assert run("dag", cyclic, "--treatment", "A", "--outcome", "C") == 2


def test_simulate_row_count_and_determinism(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", n_projects=12, mutants=2000)
    assert run("simulate", cfg, "--out", tmp_path / "a") == 0
    assert run("simulate", cfg, "--out", tmp_path / "b") == 0
    a = (tmp_path / "a" / "data.csv").read_bytes()
    assert len(a.decode().splitlines()) - 1 == 24000
    assert a == (tmp_path / "b" / "data.csv").read_bytes()
    assert (tmp_path / "a" / "truth.json").read_bytes() == (tmp_path / "b" / "truth.json").read_bytes()


def test_simulate_transformed_and_bad_config(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", mutants=50)
    assert run("simulate", cfg, "--transformed", "--out", tmp_path / "t") == 0
    assert (tmp_path / "t" / "data.csv").read_text().startswith("project,mutant_id,exec_z,cover_z,killed")
    bad = tmp_path / "bad.json"
    bad.write_text('{"projects": []}')
    assert run("simulate", bad, "--out", tmp_path / "x") == 2


def test_simulate_base_rate_visible_in_describe(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", n_projects=2, mutants=4000, alpha=0.6, beta=0.0, gamma=0.0)
    assert run("simulate", cfg, "--out", tmp_path / "sim") == 0
    assert run("describe", tmp_path / "sim" / "data.csv", "--out", tmp_path / "d") == 0
    p = 1 / (1 + np.exp(-0.6))
    se = np.sqrt(p * (1 - p) / 4000)
    for r in json.loads((tmp_path / "d" / "describe.json").read_text())["rows"]:
        assert abs(r["MS"] - p) < 3 * se


def test_pipeline_writes_all_tables(sim, tmp_path, capsys):
    out = tmp_path / "pl"
    assert run("pipeline", sim, *QUICK, "--out", out) == 0
    for k in range(1, 7):
        assert (out / f"table{k}.csv").is_file()
    assert json.loads((out / "table4.json").read_text())["title"] == "RQ1 beta - RQ2 beta"
    assert (out / "rq4" / "draws.csv").is_file()
    assert "nothing to compare" in capsys.readouterr().out
