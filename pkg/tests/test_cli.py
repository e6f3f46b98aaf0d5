import json

import numpy as np
import pytest

from tvzip.cli import run_cli
from tvzip.io import load_count_csv

SIM = ["simulate", "--order", "1,0", "--alpha0", "1.0", "--alpha", "0.4",
       "--link", "sin:A=0.1,B=0.1,delta=0.0001,s=12", "--n", "360", "--seed", "7"]


def run(capsys, argv):
    code = run_cli(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_writes_360_rows(capsys):
    code, out, err = run(capsys, SIM)
    assert code == 0 and err == ""
    lines = out.splitlines()
    assert lines[0] == "t,count" and len(lines) == 361
    code2, out2, _ = run(capsys, SIM)
    assert out2 == out


def test_simulate_truth_and_logistic(capsys, tmp_path):
    path = tmp_path / "x.csv"
    code, out, _ = run(capsys, ["simulate", "--order", "1,1", "--alpha0", "1", "--alpha", "0.4",
                                "--beta", "0.3", "--link", "logistic:d0=2,d1=1", "--n", "50",
                                "--seed", "3", "--truth", "--out", str(path)])
    assert code == 0 and out == ""
    header = path.read_text().splitlines()[0]
    assert header == "t,count,exog,lambda_true,omega_true"
    s = load_count_csv(path, exog_col="exog")
    assert s.n == 50


def test_simulate_errors(capsys):
    code, _, err = run(capsys, SIM[:-2])
    assert code == 2 and "--seed" in err
    bad = list(SIM)
    bad[bad.index("--alpha") + 1] = "0.4,0.2"
    code, _, err = run(capsys, bad)
    assert code == 1 and "order" in err
    bad = list(SIM)
    bad[bad.index("--link") + 1] = "sin:A=0.5,B=0.3,delta=0.0001"
    code, _, err = run(capsys, bad)
    assert code == 1 and "infeasible" in err


@pytest.fixture
def datafile(tmp_path, capsys):
    path = tmp_path / "x.csv"
    assert run_cli(SIM + ["--out", str(path)]) == 0
    capsys.readouterr()
    return path


def test_fit_record_has_four_estimates(capsys, datafile):
    code, out, _ = run(capsys, ["fit", "--data", str(datafile), "--link", "constant:omega=auto",
                                "--order", "2,0", "--method", "em"])
    assert code == 0
    record = dict(line.split("=", 1) for line in out.splitlines())
    assert record["k"] == "4" and record["method"] == "EM"
    for name in ("omega", "alpha0", "alpha1", "alpha2"):
        float(record[name])


def test_fit_json_fixed_and_fitted_path(capsys, datafile, tmp_path):
    fitted = tmp_path / "f.csv"
    code, out, _ = run(capsys, ["fit", "--data", str(datafile), "--link",
                                "sin:A=0.1,B=auto,delta=0.0001,s=12", "--order", "1,0",
                                "--method", "mle", "--json", "--fitted", str(fitted)])
    assert code == 0
    record = json.loads(out)
    assert record["A"] == 0.1 and record["k"] == 3
    rows = fitted.read_text().splitlines()
    assert rows[0] == "t,count,lambda,omega" and rows[1].startswith("1,") and len(rows) == 361


def test_fit_init_and_errors(capsys, datafile):
    base = ["fit", "--data", str(datafile), "--order", "1,0"]
    code, out, _ = run(capsys, base + ["--link", "sin:delta=0.0001", "--init", "alpha1=0.3"])
    assert code == 0
    code, _, err = run(capsys, base + ["--link", "sin:delta=0.0001", "--init", "gamma=1"])
    assert code == 1 and "init" in err
    code, _, err = run(capsys, base + ["--link", "logistic"])
    assert code == 1 and "exog" in err
    code, _, err = run(capsys, ["fit", "--data", "nope.csv", "--link", "constant",
                                "--order", "1,0"])
    assert code == 1 and "nope.csv" in err
    code, _, err = run(capsys, ["frobnicate"])
    assert code == 2 and err


def test_round_trip_recovers_parameters(capsys, tmp_path):
    path = tmp_path / "long.csv"
    argv = list(SIM)
    argv[argv.index("--n") + 1] = "3000"
    assert run_cli(argv + ["--out", str(path)]) == 0
    capsys.readouterr()
    code, out, _ = run(capsys, ["fit", "--data", str(path), "--link", "sin:delta=0.0001,s=12",
                                "--order", "1,0", "--json"])
    est = json.loads(out)
    assert code == 0
    np.testing.assert_allclose([est["A"], est["B"], est["alpha0"], est["alpha1"]],
                               [0.1, 0.1, 1.0, 0.4], atol=0.1)


CANDIDATES = """\
# label order link
S1M1 1,0 constant:omega=auto
S1M2 2,0 constant:omega=auto
S1M3 1,1 constant:omega=auto
S2M1 1,0 sinmonthly:delta=0.0001,s=12
S2M2 2,0 sinmonthly:delta=0.0001,s=12
S2M3 1,1 sinmonthly:delta=0.0001,s=12
S3M1 1,0 sin:delta=0.0001,s=52
S3M2 2,0 sin:delta=0.0001,s=52
S3M3 1,1 sin:delta=0.0001,s=52
"""


def test_select_nine_row_table(capsys, tmp_path):
    data = tmp_path / "w.csv"
    assert run_cli(["simulate", "--order", "2,0", "--alpha0", "0.7", "--alpha", "0.45,0.35",
                    "--link", "sin:A=-0.3,B=0.25,delta=0.0001,s=52", "--n", "160",
                    "--seed", "11", "--out", str(data)]) == 0
    cands = tmp_path / "c.txt"
    cands.write_text(CANDIDATES)
    capsys.readouterr()
    code, out, _ = run(capsys, ["select", "--data", str(data), "--candidates", str(cands)])
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 10
    header = lines[0].split()
    assert "AIC" in header and "BIC" in header
    assert {line.split()[1] for line in lines[1:]} == {l.split()[0] for l in
                                                       CANDIDATES.splitlines()[1:]}
    aic = [float(line.split()[-2]) for line in lines[1:]]
    assert aic == sorted(aic)

    cfg = tmp_path / "cfg.txt"
    cfg.write_text(f"data={data}\ncandidates={cands}\n")
    code, out2, _ = run(capsys, ["select", "--config", str(cfg)])
    assert code == 0 and out2 == out


def test_config_precedence_and_errors(capsys, tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("order=1,0\nalpha0=1.0\nalpha=0.4\nlink=constant:omega=0.3\nn=20\nseed=5\n"
                   "truth=true\n")
    code, out, _ = run(capsys, ["simulate", "--config", str(cfg), "--n", "10"])
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 11 and lines[0].endswith("omega_true")
    cfg.write_text("bogus=1\n")
    code, _, err = run(capsys, ["simulate", "--config", str(cfg)])
    assert code == 2 and "bogus" in err
    code, _, err = run(capsys, ["simulate", "--config", str(tmp_path / "none.cfg")])
    assert code == 2


def test_replicate_study_outputs(capsys, tmp_path):
    argv = ["replicate-study", "--model", "A1", "--n", "120", "--m", "3", "--seed", "42",
            "--estimator", "mle"]
    csv_path = tmp_path / "s.csv"
    code, out, _ = run(capsys, argv + ["--csv", str(csv_path)])
    assert code == 0
    assert out.splitlines()[0] == "link=sin family=INARCH1 m=3 seed=42"
    assert csv_path.read_text().startswith("model,link,family")
    code, _, err = run(capsys, ["replicate-study", "--model", "A1"])
    assert code == 2 and "--seed" in err
