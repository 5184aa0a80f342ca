import json
import os

import numpy as np
import pytest

from lexent.datasets import write_normalized
from lexent.embeddings import lookup_many, save_glove_text
from lexent.errors import ConfigError, ReportError
from lexent.evaluation import EvalReport, score
from lexent.learners import load_model, predict
from lexent.runner import (
    ExperimentConfig, compare, derive_seed, find_cell, format_gain, load_config, parse_cell,
    record_payload, render_report, run,
)
from lexent.splits import SplitSpec, make_folds
from synth import make_world


def config(tmp_path, **over):
    d = {
        "embedding": {"path": str(tmp_path / "emb.txt"), "oov_seed": 7},
        "dataset": {"path": str(tmp_path / "data.tsv"), "name": "BLESS"},
        "protocol": {"protocol": "RAND", "seed": 1},
        "composers": ["concat", "concat+mult"],
        "families": [{"family": "LR", "grid": {"C": [0.5, 8.0]}}],
        "output_dir": str(tmp_path / "out"),
    }
    d.update(over)
    return ExperimentConfig.from_dict(d)


@pytest.fixture
def world(tmp_path):
    instances, table = make_world(n_domains=4)
    write_normalized(instances, tmp_path / "data.tsv")
    save_glove_text(table, tmp_path / "emb.txt")
    return instances, table


def test_rand_two_cells(tmp_path, world):
    rec = run(config(tmp_path))
    assert [c["key"] for c in rec["cells"]] == ["concat:lr", "concat+mult:lr"]
    assert rec["failures"] == [] and rec["tuning"] == "per_fold"
    assert rec["dataset"]["instance_count"] == 216
    fold = rec["folds"][0]["sizes"]
    assert (fold["test"], fold["validation"], fold["train"]) == (54, 10, 152)
    for cell in rec["cells"]:
        f = cell["folds"][0]
        assert f["hyperparameters"]["C"] in (0.5, 8.0)
        assert len(f["trials"]) == 2 and len(f["predictions"]) == 54
        assert 0.0 <= cell["aggregate"]["weighted_f1"] <= 1.0
    out = tmp_path / "out"
    assert (out / "run.json").exists() and (out / "cells" / "concat__lr.csv").exists()
    # saved model reproduces the recorded predictions
    model = load_model(out / "models" / "concat__lr-fold0.json")
    inst, table = world
    X = np.hstack([lookup_many(table, [i.x for i in inst])[0],
                   lookup_many(table, [i.y for i in inst])[0]])
    test = make_folds(inst, SplitSpec("RAND", 1))[0].test
    cell = rec["cells"][0]
    assert predict(model, X[test]) == cell["folds"][0]["predictions"]
    assert cell["folds"][0]["training_seed"] == derive_seed(0, "concat", "LR", 0)


def test_two_runs_identical(tmp_path, world):
    a = run(config(tmp_path))
    b = run(config(tmp_path))
    assert "timings" in a
    assert json.dumps(record_payload(a), sort_keys=True) == json.dumps(record_payload(b), sort_keys=True)


def test_ood_folds_and_ksim(tmp_path, world):
    cfg = config(tmp_path, protocol={"protocol": "OOD", "seed": 0},
                 families=[{"family": "lin", "grid": {"C": [0.5]}},
                           {"family": "ksim", "grid": {"C": [2.0], "alpha": [0.5]}}])
    rec = run(cfg)
    assert len(rec["folds"]) == 4
    assert [f["held_out_domain"] for f in rec["folds"]] == ["dom0", "dom1", "dom2", "dom3"]
    keys = [c["key"] for c in rec["cells"]]
    assert keys == ["concat:lin_svm", "concat+mult:lin_svm", "raw:ksim_svm"]
    ksim = rec["cells"][2]
    assert ksim["composer_ignored"] and ksim["aggregate"]["folds"] == 4
    assert ksim["folds"][0]["hyperparameters"] == {"C": 2.0, "alpha": 0.5}
    # aggregate is the unweighted mean over folds
    m = np.mean([f["test"]["macro_f1"] for f in ksim["folds"]])
    assert ksim["aggregate"]["macro_f1"] == pytest.approx(m)


def test_resume_from_cache(tmp_path, world, monkeypatch):
    cfg = config(tmp_path, cache_dir=str(tmp_path / "cache"))
    first = run(cfg)
    import lexent.runner as runner

    def boom(*a, **k):
        raise AssertionError("grid search should not run on a warm cache")

    monkeypatch.setattr(runner, "grid_search", boom)
    second = run(cfg)
    assert record_payload(first) == record_payload(second)


def test_failed_cell_recorded(tmp_path, world):
    # C = 0 makes every grid point fail
    cfg = config(tmp_path, families=[{"family": "LR", "grid": {"C": [0.0]}}], composers=["diff"])
    rec = run(cfg)
    assert rec["failures"] == ["diff:lr"]
    assert "SearchError" in rec["cells"][0]["folds"][0]["error"]
    with pytest.raises(ReportError):
        find_cell(rec, "diff", "LR")


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        config(tmp_path, metric="accuracy")
    with pytest.raises(ConfigError):
        config(tmp_path, composers=["cube"])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"dataset": {"path": "x"}})
    with pytest.raises(ConfigError):
        config(tmp_path, bogus=1)


def test_config_file_and_hash(tmp_path):
    cfg = config(tmp_path)
    (tmp_path / "c.json").write_text(json.dumps(cfg.to_dict()))
    back = load_config(tmp_path / "c.json")
    assert back.to_dict() == cfg.to_dict()
    moved = config(tmp_path, output_dir="elsewhere", workers=3)
    assert moved.result_hash() == cfg.result_hash()
    assert config(tmp_path, seed=5).result_hash() != cfg.result_hash()


@pytest.mark.parametrize("a, b, text", [(83.8, 89.5, "+5.7"), (90.0, 89.8, "-0.2"), (50.0, 50.0, "0.0")])
def test_format_gain(a, b, text):
    assert format_gain(a, b) == text


def fake_record(values):
    """A record with one cell per (composer, family) whose weighted F1 is given in points."""
    cells = []
    base = score(["hyper"], ["hyper"])
    for (comp, fam), v in values.items():
        rep = EvalReport(base.classes, base.per_relation, v / 100, v / 100, v / 100, base.confusion)
        cells.append({"key": f"{comp}:{fam.lower()}", "composer": comp, "family": fam,
                      "aggregate": rep.to_dict(), "folds": [], "status": "ok"})
    return {"protocol": "RAND", "dataset": {"name": "BLESS"}, "cells": cells,
            "config": {"metric": "weighted_f1"}}


def test_compare_gain():
    rec = fake_record({("concat", "LR"): 83.8, ("concat+mult", "LR"): 89.5})
    res = compare(rec, parse_cell("concat:lr"), parse_cell("concat+mult:lr"))
    row = next(r for r in res["rows"] if r["metric"] == "weighted_f1")
    assert (row["a"], row["b"], row["formatted"]) == (83.8, 89.5, "+5.7")
    with pytest.raises(ReportError):
        compare(rec, parse_cell("diff:lr"), parse_cell("concat:lr"))


def test_markdown_brackets_gains():
    rec = fake_record({("concat", "LR"): 83.8, ("concat+mult", "LR"): 89.5,
                       ("concat", "RBF_SVM"): 94.0, ("concat+mult", "RBF_SVM"): 93.8})
    md = render_report(rec, "md")
    assert "| LR | 83.8 | 89.5 (+5.7) |" in md
    assert "| RBF_SVM | 94.0 | 93.8 (-0.2) |" in md
    with pytest.raises(ReportError):
        render_report(rec, "html")


def test_parse_cell():
    assert parse_cell("Concat+Mult:lin") == ("concat+mult", "LIN_SVM")
    assert parse_cell("whatever:ksim") == ("raw", "KSIM_SVM")
    with pytest.raises(ReportError):
        parse_cell("concat")


def test_repeats_offset_seeds(tmp_path, world):
    rec = run(config(tmp_path, repeats=2, composers=["diff"]))
    assert [f["repeat"] for f in rec["folds"]] == [0, 1]
    assert rec["folds"][0]["fold_hash"] != rec["folds"][1]["fold_hash"]
    assert os.path.exists(tmp_path / "out" / "models" / "diff__lr-fold1.json")
