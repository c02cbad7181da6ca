import json

import numpy as np
import pytest

from latentis.cli import DETECT_HEADER, main
from latentis.dataio import load_csv, write_csv


@pytest.fixture(scope="module")
def plant_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("plant")
    assert main(["gen", "--kind", "linear_gaussian", "--n", "3000", "--seed", "1",
                 "--output", str(d / "train.csv")]) == 0
    assert main(["gen", "--kind", "linear_gaussian", "--n", "2000", "--seed", "2",
                 "--output", str(d / "normal.csv")]) == 0
    assert main(["gen", "--kind", "process_with_fault", "--n", "1000", "--onset", "500",
                 "--seed", "3", "--output", str(d / "fault.csv")]) == 0
    assert main(["fit", "--kind", "dpi", "--input", str(d / "train.csv"),
                 "--model", str(d / "dpi.json")]) == 0
    return d


def _json(capsys, argv):
    capsys.readouterr()
    code = main([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out) if code == 0 else None


def test_fit_pca_reports_requested_eigenvalues(plant_files, capsys):
    code, rep = _json(capsys, ["fit", "--kind", "pca", "--k", "2", "--input",
                               str(plant_files / "train.csv"), "--model", str(plant_files / "p.json")])
    assert code == 0 and rep["k"] == 2 and len(rep["eigenvalues"]) == 2


def test_fit_dpi_reports_twelve_limits(plant_files, capsys):
    code, rep = _json(capsys, ["fit", "--kind", "dpi", "--input", str(plant_files / "train.csv"),
                               "--model", str(plant_files / "d2.json")])
    assert code == 0 and rep["depth"] == 3
    assert sum(len(r) for r in rep["control_limits"]) == 12


def test_unknown_flag_is_usage_error(tmp_path, capsys):
    assert main(["fit", "--kind", "pca", "--bogus", "--input", "x", "--model",
                 str(tmp_path / "m.json")]) == 2
    assert list(tmp_path.iterdir()) == []


def test_model_kind_mismatch(plant_files, tmp_path):
    main(["fit", "--kind", "pca", "--k", "2", "--input", str(plant_files / "train.csv"),
          "--model", str(tmp_path / "pca.json")])
    assert main(["detect", "--model", str(tmp_path / "pca.json"), "--input",
                 str(plant_files / "normal.csv"), "--output", str(tmp_path / "x.csv")]) == 1
    assert not (tmp_path / "x.csv").exists()


def test_detect_on_normal_data(plant_files, tmp_path, capsys):
    out = tmp_path / "det.csv"
    code, rep = _json(capsys, ["detect", "--model", str(plant_files / "dpi.json"), "--input",
                               str(plant_files / "normal.csv"), "--output", str(out)])
    assert code == 0
    d = load_csv(out)
    assert list(d.names) == DETECT_HEADER and d.n == 2000
    assert rep["fault_fraction"] <= 1.5 * 0.01


def test_detect_flags_after_onset(plant_files, tmp_path):
    out = tmp_path / "det.csv"
    assert main(["detect", "--model", str(plant_files / "dpi.json"), "--input",
                 str(plant_files / "fault.csv"), "--output", str(out)]) == 0
    flags = load_csv(out).columns(["is_fault"]).values[:, 0]
    assert flags[520:].mean() > 0.9 and flags[:500].mean() < 0.05


def test_eval_detector(plant_files, capsys):
    code, rep = _json(capsys, ["eval", "--model", str(plant_files / "dpi.json"), "--input",
                               str(plant_files / "fault.csv")])
    assert code == 0 and rep["detection_rate"] > 0.9 and rep["false_alarm_rate"] < 0.05
    assert main(["eval", "--model", str(plant_files / "dpi.json"), "--input",
                 str(plant_files / "normal.csv")]) == 1


def test_pipeline_rerun_is_byte_identical(plant_files, tmp_path):
    outs = []
    for run in ("a", "b"):
        m, o = tmp_path / f"{run}.json", tmp_path / f"{run}.csv"
        assert main(["fit", "--kind", "dpi", "--input", str(plant_files / "train.csv"),
                     "--model", str(m)]) == 0
        assert main(["detect", "--model", str(m), "--input", str(plant_files / "fault.csv"),
                     "--output", str(o)]) == 0
        outs.append((m.read_bytes(), o.read_bytes()))
    assert outs[0] == outs[1]


@pytest.fixture(scope="module")
def regression_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("reg")
    rng = np.random.default_rng(5)
    X = rng.standard_normal((150, 5))
    Y = X @ rng.standard_normal((5, 2)) + 1.0
    write_csv(d / "data.csv", ["a", "b", "c", "d", "e", "y1", "y2"], np.hstack([X, Y]).tolist())
    assert main(["fit", "--kind", "dpls", "--depth", "2", "--layer-ks", "5,5", "--y-cols", "y1,y2",
                 "--input", str(d / "data.csv"), "--model", str(d / "dpls.json")]) == 0
    return d


def test_exact_linear_dpls_eval(regression_files, capsys):
    code, rep = _json(capsys, ["eval", "--model", str(regression_files / "dpls.json"),
                               "--input", str(regression_files / "data.csv")])
    assert code == 0 and rep["rmse"] < 1e-6 and min(rep["r2_per_column"]) > 1 - 1e-10


def test_predict_then_eval_and_permutation(regression_files, tmp_path, capsys):
    pred = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(regression_files / "dpls.json"), "--input",
                 str(regression_files / "data.csv"), "--output", str(pred)]) == 0
    p = load_csv(pred)
    assert p.names == ("y1", "y2") and p.n == 150
    _, good = _json(capsys, ["eval", "--model", str(regression_files / "dpls.json"), "--input",
                             str(regression_files / "data.csv"), "--predictions", str(pred)])
    write_csv(tmp_path / "perm.csv", p.names, p.values[::-1].tolist())
    _, bad = _json(capsys, ["eval", "--model", str(regression_files / "dpls.json"), "--input",
                            str(regression_files / "data.csv"), "--predictions",
                            str(tmp_path / "perm.csv")])
    assert good["rmse"] < 1e-6 and bad["rmse"] > 0.5


def test_eval_row_mismatch_and_missing_truth(regression_files, tmp_path):
    write_csv(tmp_path / "short.csv", ["y1", "y2"], [[0.0, 0.0]])
    assert main(["eval", "--model", str(regression_files / "dpls.json"), "--input",
                 str(regression_files / "data.csv"), "--predictions", str(tmp_path / "short.csv")]) == 1
    write_csv(tmp_path / "x.csv", list("abcde"), np.ones((3, 5)).tolist())
    assert main(["eval", "--model", str(regression_files / "dpls.json"),
                 "--input", str(tmp_path / "x.csv")]) == 1


def test_single_class_truth_accuracy(tmp_path, capsys):
    rng = np.random.default_rng(6)
    labels = np.repeat([0.0, 1.0], 40)
    X = rng.standard_normal((80, 2)) + 1.5 * labels[:, None]
    write_csv(tmp_path / "c.csv", ["a", "b", "label"], np.column_stack([X, labels]).tolist())
    assert main(["fit", "--kind", "dpls", "--depth", "1", "--layer-ks", "1", "--y-cols", "label",
                 "--task", "classification", "--input", str(tmp_path / "c.csv"),
                 "--model", str(tmp_path / "m.json")]) == 0
    ones = np.column_stack([X[40:], labels[40:]])
    write_csv(tmp_path / "ones.csv", ["a", "b", "label"], ones.tolist())
    assert main(["predict", "--model", str(tmp_path / "m.json"), "--input",
                 str(tmp_path / "ones.csv"), "--output", str(tmp_path / "p.csv")]) == 0
    expected = np.mean(load_csv(tmp_path / "p.csv").values[:, 0] == 1.0)
    code, rep = _json(capsys, ["eval", "--model", str(tmp_path / "m.json"),
                               "--input", str(tmp_path / "ones.csv")])
    assert code == 0 and rep["accuracy"] == expected and 0.5 < expected < 1.0


def test_config_file_with_flag_override(plant_files, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "pca", "k": 3, "input": str(plant_files / "train.csv"),
                               "model": str(tmp_path / "m.json")}))
    code, rep = _json(capsys, ["--config", str(cfg), "fit", "--kind", "pca", "--k", "2"])
    assert code == 0 and rep["k"] == 2
    code, rep = _json(capsys, ["--config", str(cfg), "fit", "--kind", "pca"])
    assert code == 0 and rep["k"] == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["--config", str(cfg), "fit", "--kind", "pca"]) == 2


def test_gmm_and_hmm_fit(tmp_path, capsys):
    assert main(["gen", "--kind", "gmm", "--n", "300", "--m", "2", "--k", "3",
                 "--output", str(tmp_path / "g.csv")]) == 0
    g = load_csv(tmp_path / "g.csv")
    assert g.names == ("x1", "x2", "component")
    write_csv(tmp_path / "gx.csv", ["x1", "x2"], g.values[:, :2].tolist())
    code, rep = _json(capsys, ["fit", "--kind", "gmm", "--k", "3", "--input",
                               str(tmp_path / "gx.csv"), "--model", str(tmp_path / "gmm.json")])
    assert code == 0 and len(rep["weights"]) == 3
    code, rep = _json(capsys, ["eval", "--model", str(tmp_path / "gmm.json"),
                               "--input", str(tmp_path / "gx.csv")])
    assert code == 0 and np.isfinite(rep["loglik"])

    assert main(["gen", "--kind", "hmm", "--n", "400", "--length", "50",
                 "--output", str(tmp_path / "h.csv")]) == 0
    h = load_csv(tmp_path / "h.csv")
    assert h.names == ("sequence", "symbol") and h.n == 400
    code, rep = _json(capsys, ["fit", "--kind", "hmm", "--k", "2", "--input",
                               str(tmp_path / "h.csv"), "--model", str(tmp_path / "hmm.json")])
    assert code == 0 and rep["symbols"] == 3


def test_missing_required_input_is_usage_error(tmp_path):
    assert main(["fit", "--kind", "pca", "--model", str(tmp_path / "m.json")]) == 2
    (tmp_path / "x.csv").write_text("a,b\n1,2\n3,5\n")
    assert main(["fit", "--kind", "fa", "--input", str(tmp_path / "x.csv"),
                 "--model", str(tmp_path / "m.json")]) == 2


def test_bad_input_file_is_runtime_error(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\n1,x\n")
    assert main(["fit", "--kind", "pca", "--k", "1", "--input", str(tmp_path / "bad.csv"),
                 "--model", str(tmp_path / "m.json")]) == 1
    assert not (tmp_path / "m.json").exists()
