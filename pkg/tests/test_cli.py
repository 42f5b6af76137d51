import json
import subprocess
import sys
import time

import numpy as np
import pytest

from surprisal_lab.classifier import nested_cv, task_data
from surprisal_lab.cli import MODEL_FILES, build_parser, main, resolve_config
from surprisal_lab.config import PipelineConfig, toy_config
from surprisal_lab.stimuli import CLASSES, NOTIONS, SurprisalTable

OUTPUTS = (
    "config.json",
    "stimuli.csv",
    "surprisal_table.csv",
    "surprisal_long.csv",
    "stats.json",
    "classification_results.csv",
    "classification_summary.json",
    "summary.txt",
)


def _snapshot(out):
    files = sorted(p for p in out.rglob("*") if p.is_file())
    return {str(p.relative_to(out)): p.read_bytes() for p in files}


@pytest.fixture(scope="module")
def demo_runs(tmp_path_factory):
    runs = []
    for name in ("a", "b"):
        out = tmp_path_factory.mktemp(name)
        start = time.perf_counter()
        code = main(["demo", "--out-dir", str(out)])
        runs.append((code, time.perf_counter() - start, out))
    return runs


def test_demo_completes(demo_runs, capsys):
    code, seconds, out = demo_runs[0]
    assert code == 0
    assert seconds < 60
    for name in OUTPUTS:
        assert (out / name).exists(), name
    for name in MODEL_FILES.values():
        assert (out / "models" / name).exists()


def test_demo_deterministic(demo_runs):
    a, b = demo_runs[0][2], demo_runs[1][2]
    snap_a, snap_b = _snapshot(a), _snapshot(b)
    # config.json records the output directory, which differs by construction
    snap_a.pop("config.json")
    snap_b.pop("config.json")
    assert snap_a == snap_b


def test_demo_summary_wording(demo_runs):
    text = (demo_runs[0][2] / "summary.txt").read_text()
    first = text.split("first HP word")[1].split("second HP word")[0]
    syn_line = next(l for l in first.splitlines() if "syntactic:" in l)
    assert "separates all three predictability classes" in syn_line
    ngram_block = first.split("word N-gram:")[1].splitlines()[1]
    assert "UNPRED NP vs VP do not differ" in ngram_block and "identical values" in ngram_block


def test_train_outputs(tmp_path, capsys):
    assert main(["train", "--config", str(_toy_config_file(tmp_path))]) == 0
    log = capsys.readouterr().out
    assert log.count("validation: clean") == 2
    models = tmp_path / "out" / "models"
    first = {n: (models / n).read_bytes() for n in MODEL_FILES.values()}
    assert main(["train", "--config", str(tmp_path / "config.json")]) == 0
    assert first == {n: (models / n).read_bytes() for n in MODEL_FILES.values()}


def _toy_config_file(tmp_path):
    config = toy_config(out_dir=str(tmp_path / "out"))
    path = tmp_path / "config.json"
    config.save(path)
    return path


def test_missing_treebank_is_user_error(tmp_path, capsys):
    code = main(["train", "--treebank", str(tmp_path / "nope.txt"), "--out-dir", str(tmp_path)])
    assert code == 1
    err = capsys.readouterr().err
    assert "treebank" in err and "nope.txt" in err


def test_bad_flag_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["train", "--order", "many"])
    assert info.value.code == 1


def test_bad_config_value(tmp_path, capsys):
    assert main(["train", "--order", "9", "--out-dir", str(tmp_path)]) == 1
    assert "orders" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "surprisal_lab", "analyze", "--out-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1
    assert "run 'train' first" in proc.stderr


def test_analyze_stats_shape(demo_runs):
    stats = json.loads((demo_runs[0][2] / "stats.json").read_text())
    for pos in ("w1", "w2"):
        for notion in NOTIONS:
            block = stats["positions"][pos][notion]
            pairs = {(p["a"], p["b"]) for p in block["classes"]["pairwise"]}
            assert len(pairs) == 10
            assert all(p["adjusted_p"] >= p["raw_p"] for p in block["classes"]["pairwise"])
            assert len(block["predictability"]["pairwise"]) == 3


def test_unpred_only_analysis(demo_runs, tmp_path):
    out = demo_runs[0][2]
    lines = (out / "stimuli.csv").read_text().splitlines()
    subset = tmp_path / "unpred.csv"
    subset.write_text("\n".join([lines[0]] + [l for l in lines[1:] if ",UNPRED," in l]) + "\n")
    work = tmp_path / "work"
    (work / "models").mkdir(parents=True)
    for name in MODEL_FILES.values():
        (work / "models" / name).write_bytes((out / "models" / name).read_bytes())
    args = ["analyze", "--config", str(out / "config.json"), "--out-dir", str(work), "--stimuli", str(subset)]
    assert main(args) == 0
    stats = json.loads((work / "stats.json").read_text())
    block = stats["positions"]["w1"]["ngram"]["classes"]
    assert block["groups"] == ["UNPRED-NP", "UNPRED-VP"]
    assert block["pairwise"][0]["raw_p"] == pytest.approx(1.0)
    first = (work / "stats.json").read_bytes()
    assert main(args) == 0
    assert (work / "stats.json").read_bytes() == first


def test_classify_task_patterns(demo_runs):
    summary = json.loads((demo_runs[0][2] / "classification_summary.json").read_text())
    for task in ("i", "ii", "iv"):
        means = summary[task]["means"]
        for name in ("pos", "syn", "tot"):
            assert means[name] >= 0.95, (task, name)


def test_word1_syntactic_features_alone_near_chance(demo_runs):
    table = SurprisalTable.read_csv(demo_runs[0][2] / "surprisal_table.csv")
    X, y = task_data(table, "iii", ["syn_w1"])
    assert np.ptp(X) == 0.0 or len(set(X.ravel())) < len(X)
    report = nested_cv(X, y, seed=0)
    assert report.mean <= 0.65


def test_classify_rerun_identical(demo_runs, tmp_path):
    out = demo_runs[0][2]
    work = tmp_path / "c"
    work.mkdir()
    (work / "surprisal_table.csv").write_bytes((out / "surprisal_table.csv").read_bytes())
    assert main(["classify", "--config", str(out / "config.json"), "--out-dir", str(work)]) == 0
    assert (work / "classification_results.csv").read_bytes() == (out / "classification_results.csv").read_bytes()


def test_config_round_trip(tmp_path):
    config = PipelineConfig(corpus=str(tmp_path / "c.tsv"), order=4, alpha=0.01, c_grid=[1.0, 2.0])
    path = tmp_path / "cfg.json"
    config.save(path)
    assert PipelineConfig.load(path) == config


def test_config_defaults_follow_protocol():
    config = PipelineConfig()
    assert config.folds == 10 and config.alpha == 0.05
    assert config.c_grid == [0.001, 0.01, 0.1, 1.0, 10.0]
    assert config.gamma_grid == [0.001, 0.01, 0.1, 1.0]


def test_config_unknown_key(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"ordre": 3}')
    with pytest.raises(Exception, match="unknown config key"):
        PipelineConfig.load(path)


def test_flags_override_config(tmp_path):
    path = _toy_config_file(tmp_path)
    args = build_parser().parse_args(["analyze", "--config", str(path), "--seed", "7", "--log-base", "10"])
    config = resolve_config(args)
    assert config.seed == 7 and config.log_base == 10.0 and config.pos_order == 4


def test_every_class_reported(demo_runs):
    stats = json.loads((demo_runs[0][2] / "stats.json").read_text())
    assert stats["class_counts"] == {c: 30 for c in CLASSES}
