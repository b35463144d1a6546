import json
import subprocess
import sys

import numpy as np
import pytest

from kaar.cli import DatasetError, emit_report, main, parse_dataset, run_experiment
from kaar.kernel import GaussianKernel, LinearKernel, parse_kernel


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def random_csv(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(40, 3))
    y = np.clip(X @ [0.5, -0.3, 0.2] + rng.normal(0, 0.1, 40), -1, 1)
    return write_csv(tmp_path / "d.csv", ["x1", "x2", "x3", "y"], np.column_stack([X, y]).tolist())


def test_parse_single_row(tmp_path):
    ds = parse_dataset(write_csv(tmp_path / "a.csv", ["x1", "y"], [[1, 1]]))
    assert len(ds) == 1
    assert ds.signals[0].tolist() == [1.0]
    assert ds.outcomes == [1.0]


def test_parse_empty_body(tmp_path):
    ds = parse_dataset(write_csv(tmp_path / "a.csv", ["x1", "x2", "y"], []))
    assert len(ds) == 0


def test_parse_column_order_from_header(tmp_path):
    ds = parse_dataset(write_csv(tmp_path / "a.csv", ["y", "x2", "x1"], [[5, 2, 1]]))
    assert ds.signals[0].tolist() == [1.0, 2.0]
    assert ds.outcomes == [5.0]


@pytest.mark.parametrize(
    "header, rows, match",
    [
        (["x1", "y"], [[1, 1], [2, "NaN"]], "row 2"),
        (["x1", "y"], [[1, 1], [2, "abc"]], "row 2"),
        (["x1", "z"], [[1, 1]], "'y'"),
        (["x1", "y"], [[1, 1], [2]], "row 2"),
        (["x2", "y"], [[1, 1]], "x1..xn"),
    ],
)
def test_parse_errors(tmp_path, header, rows, match):
    path = write_csv(tmp_path / "bad.csv", header, rows)
    with pytest.raises(DatasetError, match=match):
        parse_dataset(path)


def test_one_row_kaar_loss(tmp_path):
    ds = parse_dataset(write_csv(tmp_path / "a.csv", ["x1", "x2", "y"], [[0.3, -2, 0.7]]))
    for kernel in (LinearKernel(), GaussianKernel(1.0)):
        rep = run_experiment(ds, "kaar", kernel, 1.0)
        assert rep.trials[0].prediction == 0.0
        assert rep.total_loss == 0.7**2


def test_one_row_rr_prequential(tmp_path):
    ds = parse_dataset(write_csv(tmp_path / "a.csv", ["x1", "y"], [[2, -0.4]]))
    rep = run_experiment(ds, "rr-prequential", LinearKernel(), 1.0)
    assert rep.trials[0].prediction == 0.0
    assert rep.total_loss == 0.4**2


def test_kaar_linear_and_aar_agree(random_csv):
    ds = parse_dataset(random_csv)
    a = run_experiment(ds, "kaar", LinearKernel(), 0.5)
    b = run_experiment(ds, "aar", LinearKernel(), 0.5)
    for ra, rb in zip(a.trials, b.trials):
        assert abs(ra.prediction - rb.prediction) <= 1e-9 * (1 + abs(rb.prediction))


def test_aar_requires_linear_kernel(random_csv):
    with pytest.raises(ValueError, match="linear"):
        run_experiment(parse_dataset(random_csv), "aar", GaussianKernel(1.0), 1.0)


def test_declared_bound_violation_names_trial(tmp_path):
    ds = parse_dataset(write_csv(tmp_path / "a.csv", ["x1", "y"], [[1, 0.5], [2, 3]]))
    with pytest.raises(ValueError, match="trial 2"):
        run_experiment(ds, "kaar", LinearKernel(), 1.0, y_bound=1.0)


def test_cumulative_loss_nondecreasing(random_csv):
    rep = run_experiment(parse_dataset(random_csv), "kaar", GaussianKernel(0.5), 1.0)
    curve = rep.cumulative_loss
    assert all(b >= a for a, b in zip(curve, curve[1:]))
    assert curve[-1] == rep.total_loss


def test_empty_run_report(tmp_path):
    rep = run_experiment([], "kaar", LinearKernel(), 1.0)
    out = tmp_path / "r.json"
    emit_report(rep.to_dict(), str(out))
    doc = json.loads(out.read_text())
    assert doc["trials"] == []
    assert doc["total_loss"] == 0.0
    assert doc["schema_version"] == 1


def _strip_timing(path):
    doc = json.loads(open(path).read())
    doc.pop("timing")
    return json.dumps(doc)


def test_cli_run_deterministic_and_round_trips(random_csv, tmp_path):
    outs = []
    for i in range(2):
        out = str(tmp_path / f"r{i}.json")
        assert main(["run", "--data", random_csv, "--algo", "kaar", "--kernel", "poly:2", "--ridge", "0.5", "--out", out]) == 0
        outs.append(out)
    assert _strip_timing(outs[0]) == _strip_timing(outs[1])
    doc = json.loads(open(outs[0]).read())
    rep = run_experiment(parse_dataset(random_csv), "kaar", parse_kernel("poly:2"), 0.5)
    assert [t["step_loss"] for t in doc["trials"]] == [r.step_loss for r in rep.trials]
    assert doc["config"] == {"algorithm": "kaar", "kernel": "poly:2", "ridge": 0.5, "y_bound": None}


def test_cli_certify_keys(random_csv, tmp_path):
    out = str(tmp_path / "c.json")
    assert main(["certify", "--data", random_csv, "--kernel", "rbf:0.8", "--ybound", "1", "--out", out]) == 0
    cert = json.loads(open(out).read())["certificate"]
    assert set(cert) == {
        "actual_loss", "comparator_loss", "regularizer_term", "logdet_term",
        "bound_total", "slack", "y_bound", "y_bound_source",
    }
    assert cert["y_bound_source"] == "declared"
    assert cert["slack"] >= 0


def test_cli_certify_inferred_bound(random_csv, tmp_path):
    out = str(tmp_path / "c.json")
    assert main(["certify", "--data", random_csv, "--out", out]) == 0
    assert json.loads(open(out).read())["certificate"]["y_bound_source"] == "inferred"


def test_cli_relations(random_csv, tmp_path):
    out = str(tmp_path / "rel.json")
    assert main(["relations", "--data", random_csv, "--kernel", "linear", "--out", out]) == 0
    steps = json.loads(open(out).read())["steps"]
    assert len(steps) == 40
    assert all(s["within_tolerance"] for s in steps)
    assert steps[0]["gamma"] == 0.0


def test_cli_cap_select(random_csv, tmp_path):
    out = str(tmp_path / "cap.json")
    assert main(["cap-select", "--data", random_csv, "--m-range", "1-4", "--ybound", "1", "--out", out]) == 0
    doc = json.loads(open(out).read())
    assert doc["selected_m"] == doc["scores"][0]["m"]
    assert sorted(s["m"] for s in doc["scores"]) == [1, 2, 3, 4]
    for s in doc["scores"]:
        assert s["total"] == s["rr_loss"] + s["logdet_term"] + s["complexity_penalty"]


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    bad = write_csv(tmp_path / "bad.csv", ["x1", "y"], [[1, "oops"]])
    assert main(["run", "--data", bad]) != 0
    assert "row 1" in capsys.readouterr().err
    assert main(["run", "--data", str(tmp_path / "missing.csv")]) != 0
    good = write_csv(tmp_path / "g.csv", ["x1", "y"], [[1, 1]])
    assert main(["run", "--data", good, "--kernel", "cubic"]) != 0
    assert main(["run", "--data", good, "--ridge", "-1"]) != 0


def test_cli_verify_quick(tmp_path):
    out = str(tmp_path / "v.json")
    assert main(["verify", "--seed", "1", "--out", out]) == 0
    assert all(c["passed"] for c in json.loads(open(out).read())["checks"])


def test_console_entry_point(tmp_path):
    good = write_csv(tmp_path / "g.csv", ["x1", "y"], [[1, 1]])
    proc = subprocess.run(
        [sys.executable, "-m", "kaar.cli", "run", "--data", good], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["total_loss"] == 1.0
