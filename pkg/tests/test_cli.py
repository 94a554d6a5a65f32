import json

import numpy as np
import pytest

from graphts import cli
from graphts import signal_io as sio
from graphts.classify import confusion_matrix, evaluate
from graphts.errors import ConfigError

SMALL = """
[input.synthetic]
series_per_class = 3
duration = 2.0
seed = 5

[window]
max_per_class = 8

[[models]]
profile = "knn"

[[models]]
profile = "logreg"
epochs = 100

[cv]
k = 3
repetitions = 2
seed = 11

[export]
output_dir = "out"
graphml = true
"""


@pytest.fixture
def config_file(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.OUTPUT_DIR_ENV, raising=False)
    path = tmp_path / "run.toml"
    path.write_text(SMALL)
    return path


def test_missing_seed_is_config_error(tmp_path):
    with pytest.raises(ConfigError) as info:
        cli.parse_config({"input": {"synthetic": {}}})
    assert info.value.key == "cv.seed"
    bad = tmp_path / "bad.toml"
    bad.write_text("[input.synthetic]\n[cv]\nk = 5\n")
    assert cli.main(["pipeline", str(bad)]) == 1


@pytest.mark.parametrize("raw, key", [
    ({"cv": {"seed": 0}, "input": {"synthetic": {}}, "window": {"size": 3}}, "window.size"),
    ({"cv": {"seed": 0}, "input": {"synthetic": {}}, "graph": {"kind": "ordinal"}}, "graph.kind"),
    ({"cv": {"seed": "x"}, "input": {"synthetic": {}}}, "cv.seed"),
    ({"cv": {"seed": 0}}, "input"),
    ({"cv": {"seed": 0}, "input": {"manifest": "nope.csv"}}, "input.manifest"),
    ({"cv": {"seed": 0}, "input": {"synthetic": {}}, "models": [{"profile": "svm"}]}, "models[0]"),
])
def test_config_validation(raw, key):
    with pytest.raises(ConfigError) as info:
        cli.parse_config(raw)
    assert info.value.key == key


def test_defaults():
    cfg = cli.parse_config({"cv": {"seed": 3}, "input": {"synthetic": {}}})
    assert (cfg.cv.k, cfg.cv.repetitions) == (5, 20)
    assert [m.name for m in cfg.models] == ["dnn"]
    assert cfg.window.length == 200 and cfg.graph_kind == "nvg"


def test_pipeline_outputs(config_file, tmp_path):
    cfg = cli.load_config(config_file)
    report = cli.run_pipeline(cfg)
    out = tmp_path / "out"
    windows = report.counts["windows"]
    assert windows == 24
    assert len(list((out / "graphs").glob("*.graphml"))) == windows
    assert report.counts["feature_rows"] == windows
    assert sio.read_feature_matrix(out / "features.csv").shape == (windows, 7)
    saved = json.loads((out / "report.json").read_text())
    assert saved["counts"] == report.counts
    assert set(report.model_metrics()) == {"knn", "logreg"}
    assert (out / "boxplots.json").is_file() and (out / "cv_report.json").is_file()


def test_output_dir_env(config_file, tmp_path, monkeypatch):
    target = tmp_path / "elsewhere"
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(target))
    assert cli.main(["pipeline", str(config_file)]) == 0
    assert (target / "report.json").is_file()
    assert not (tmp_path / "out").exists()


def test_report_independent_of_workers(config_file, tmp_path):
    cfg = cli.load_config(config_file)
    a = cli.run_pipeline(cfg).to_dict(with_timing=False)
    cfg.workers = 2
    b = cli.run_pipeline(cfg).to_dict(with_timing=False)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_stage_chain_matches_pipeline(config_file, tmp_path):
    assert cli.main(["pipeline", str(config_file)]) == 0
    run = tmp_path / "out"
    data, wins, stages = tmp_path / "data", tmp_path / "wins", tmp_path / "stages"
    assert cli.main(["synth", "--config", str(config_file), "--out", str(data)]) == 0
    assert cli.main(["preprocess", "--config", str(config_file), str(data / "manifest.csv"), "--out", str(wins)]) == 0
    feats = stages / "features.csv"
    assert cli.main(["features", "--config", str(config_file), str(wins / "windows.csv"), "--out", str(feats)]) == 0
    assert feats.read_bytes() == (run / "features.csv").read_bytes()
    assert cli.main(["train", "--config", str(config_file), str(feats), "--out", str(stages)]) == 0
    assert (stages / "cv_report.json").read_bytes() == (run / "cv_report.json").read_bytes()


def test_graph_command(tmp_path, capsys):
    window = tmp_path / "w.csv"
    window.write_text("time,value\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(np.sin(np.arange(200) / 9.0).tolist())))
    out = tmp_path / "g"
    assert cli.main(["graph", str(window), "--out", str(out)]) == 0
    assert len(list(out.glob("*.graphml"))) == 1
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["node_count"] == 200 and metrics["component_count"] == 1


def test_select_and_eval(tmp_path, capsys, config_file):
    cli.run_pipeline(cli.load_config(config_file))
    assert cli.main(["select", str(tmp_path / "out" / "features.csv"), "--k", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 8 and lines[-1].startswith("selected: ")
    assert len(lines[-1].split()) == 4

    pred = tmp_path / "pred.csv"
    pred.write_text("true,pred\nH,H\nM,M\nN,M\nN,N\nH,M\n")
    assert cli.main(["eval", str(pred)]) == 0
    result = json.loads(capsys.readouterr().out)
    cm = confusion_matrix([0, 1, 2, 2, 0], [0, 1, 1, 2, 1], 3)
    assert result["confusion_matrix"] == cm.tolist()
    assert result["accuracy"] == evaluate(cm).accuracy
    assert result["f_score"] == evaluate(cm).f_score


def test_train_with_test_set(tmp_path, config_file):
    cli.run_pipeline(cli.load_config(config_file))
    feats = tmp_path / "out" / "features.csv"
    out = tmp_path / "train"
    assert cli.main(["train", "--seed", "0", "--model", "knn", "--k", "3", "--repetitions", "1",
                     str(feats), "--test", str(feats), "--out", str(out)]) == 0
    rows = (out / "predictions_knn.csv").read_text().splitlines()
    assert rows[0] == "true,pred" and len(rows) == 25
    assert cli.main(["eval", str(out / "predictions_knn.csv")]) == 0


def test_exit_codes(tmp_path):
    missing = tmp_path / "none.csv"
    assert cli.main(["select", str(missing)]) == 2
    assert cli.main(["pipeline", str(tmp_path / "none.toml")]) == 1
    broken = tmp_path / "pred.csv"
    broken.write_text("a,b\n")
    assert cli.main(["eval", str(broken)]) == 2
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])
