import json

import numpy as np
import pytest

from promsb import fileio, presets
from promsb.cli import run
from promsb.core import validate_generator
from promsb.msbm import StickSample


def read_lines(path):
    return path.read_text().splitlines()


def test_generator_csv_roundtrip(tmp_path):
    G = presets.two_state().G
    path = tmp_path / "g.csv"
    fileio.write_generator_csv(path, G)
    assert read_lines(path)[0] == "# generator n=2"
    assert np.array_equal(fileio.read_generator_csv(path).entries, G.entries)


def test_generator_json_roundtrip(tmp_path):
    G = presets.three_state().G
    path = tmp_path / "g.json"
    fileio.write_generator_json(path, G)
    assert np.array_equal(fileio.read_generator_json(path).entries, G.entries)


def test_read_counts_formats(tmp_path):
    plain = tmp_path / "a.txt"
    plain.write_text("3\n0\n12\n")
    assert fileio.read_counts(plain).tolist() == [3, 0, 12]
    csvish = tmp_path / "b.csv"
    csvish.write_text("m\n3,extra\n0\n12\n")
    assert fileio.read_counts(csvish).tolist() == [3, 0, 12]
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    with pytest.raises(ValueError):
        fileio.read_counts(empty)


def test_sample_mrna_schema_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sample-mrna", "--preset", "two-state", "--n", "200", "--seed", "5"]
    assert run(argv + ["--out", str(out1)]) == 0
    assert run(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = read_lines(out1)
    assert lines[0].startswith("# schema=mrna-draws")
    assert lines[1] == "e,m,lambda"
    assert len(lines) == 202


def test_sample_msbm_json(tmp_path):
    out = tmp_path / "s.json"
    assert run(["sample-msbm", "--preset", "two-state", "--seed", "1",
                "--out", str(out)]) == 0
    s = StickSample.from_json(out.read_text())
    assert abs(s.weights.sum() + s.residual - 1.0) < 1e-12


def test_sample_protein_schema(tmp_path):
    out = tmp_path / "p.csv"
    code = run([
        "sample-protein", "--generator", "-", "--beta", "5,0", "--alpha", "1",
        "--gamma", "1", "--capacity", "12", "--n", "50", "--seed", "2",
        "--out", str(out),
    ])
    # missing generator file is a runtime error
    assert code == 1
    g = out.parent / "g.csv"
    fileio.write_generator_csv(g, validate_generator(
        np.array([[-10.0, 10.0], [0.34, -0.34]])))
    code = run([
        "sample-protein", "--generator", str(g), "--beta", "5,0", "--alpha", "1",
        "--gamma", "1", "--capacity", "12", "--n", "50", "--seed", "2",
        "--out", str(out),
    ])
    assert code == 0
    assert read_lines(out)[1] == "e,m,p"


def test_simulate_trajectory_and_thinned(tmp_path):
    out = tmp_path / "traj.csv"
    assert run(["simulate", "--preset", "two-state", "--t-end", "2",
                "--seed", "0", "--out", str(out)]) == 0
    assert read_lines(out)[1] == "t,e,m"
    thin = tmp_path / "thin.csv"
    assert run(["simulate", "--preset", "two-state", "--samples", "5",
                "--seed", "0", "--out", str(thin)]) == 0
    assert read_lines(thin)[1] == "e,m,lambda"
    assert len(read_lines(thin)) == 7


def test_moments_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert run(["moments", "--preset", "two-state", "--k", "1",
                "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert "33.849" in captured.out
    rows = read_lines(out)
    assert rows[1] == "k,l,value"
    k, l, value = rows[2].split(",")
    assert (k, l) == ("1", "0")
    assert float(value) == pytest.approx(33.8491, abs=1e-3)


def test_fit_trace_and_summary(tmp_path):
    data = tmp_path / "counts.txt"
    rng = np.random.default_rng(0)
    data.write_text("\n".join(str(v) for v in rng.poisson(4.0, size=40)))
    out = tmp_path / "trace.csv"
    code = run(["fit", "--data", str(data), "--mask", "two-state-full",
                "--iters", "12", "--burnin", "6", "--B", "80", "--seed", "1",
                "--out", str(out)])
    assert code == 0
    lines = read_lines(out)
    assert lines[1] == (
        "iter,eta_1,eta_2,eta_3,eta_4,accepted_1,accepted_2,accepted_3,accepted_4"
    )
    assert len(lines) == 14
    summary = json.loads((tmp_path / "trace.csv.summary.json").read_text())
    assert set(summary["estimates"]) == {"beta_1", "beta_2", "G_1,2", "G_2,1"}
    assert len(summary["G"]) == 2


def test_select_table(tmp_path):
    data = tmp_path / "counts.txt"
    rng = np.random.default_rng(0)
    data.write_text("\n".join(str(v) for v in rng.poisson(3.0, size=30)))
    cands = tmp_path / "cands.json"
    cands.write_text(json.dumps([
        {"name": "full2", "n": 2, "beta": ["free", "free"],
         "g": [["", "free"], ["free", ""]]},
        {"name": "tied2", "n": 2, "beta": ["free", "zero"],
         "g": [["", "free"], ["tie:0,1", ""]]},
    ]))
    out = tmp_path / "table.csv"
    code = run(["select", "--data", str(data), "--candidates", str(cands),
                "--iters", "12", "--burnin", "6", "--B", "60",
                "--B-eval", "400", "--seed", "2", "--out", str(out)])
    assert code == 0
    lines = read_lines(out)
    assert lines[1] == "candidate,q,loglik,bic,selected"
    rows = [line.split(",") for line in lines[2:]]
    assert [r[0] for r in rows] == ["full2", "tied2"]
    assert sum(int(r[4]) for r in rows) == 1


def test_experiment_rmse_table(tmp_path):
    out = tmp_path / "rmse.csv"
    code = run(["experiment", "--preset", "two-state", "--mode", "rmse",
                "--L", "30", "--replicates", "2", "--iters", "10",
                "--burnin", "5", "--B", "60", "--seed", "3", "--workers", "1",
                "--out", str(out)])
    assert code == 0
    lines = read_lines(out)
    assert lines[1] == "parameter,truth,rmse"
    assert lines[2].startswith("beta_1,1000.0,")
    assert len(lines) == 6


def test_usage_error_exit_codes(capsys):
    assert run(["sample-mrna", "--n", "5", "--out", "/tmp/x.csv"]) == 2
    err = capsys.readouterr().err
    assert json.loads(err.strip().splitlines()[-1])["error"] == "usage"


def test_runtime_error_emits_json(tmp_path, capsys):
    out = tmp_path / "x.csv"
    code = run(["fit", "--data", str(tmp_path / "missing.txt"),
                "--mask", "two-state-full", "--out", str(out)])
    assert code == 1
    err = capsys.readouterr().err
    payload = json.loads(err.strip().splitlines()[-1])
    assert "message" in payload


def test_config_file_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"preset": "two-state"}))
    out = tmp_path / "d.csv"
    assert run(["sample-mrna", "--n", "10", "--seed", "1", "--config", str(cfg),
                "--out", str(out)]) == 0
    assert len(read_lines(out)) == 12
