import json

import pytest
from click.testing import CliRunner

from lexent.cli import main
from lexent.embeddings import save_glove_text
from synth import make_world, write_bless


@pytest.fixture
def files(tmp_path):
    instances, table = make_world(n_domains=3)
    write_bless(instances, tmp_path / "bless.txt")
    save_glove_text(table, tmp_path / "emb.txt")
    return tmp_path


def invoke(*args):
    res = CliRunner().invoke(main, [str(a) for a in args])
    return res


def test_full_workflow(files, monkeypatch):
    monkeypatch.chdir(files)
    r = invoke("embed", "info", "emb.txt")
    assert r.exit_code == 0 and "dim\t12" in r.output

    r = invoke("data", "ingest", "--dataset", "bless", "--in", "bless.txt", "--out", "data.tsv")
    assert r.exit_code == 0 and json.loads(r.output)["instance_count"] == 162

    r = invoke("data", "stats", "data.tsv")
    assert json.loads(r.output)["relations"]["hyper"] == 27

    r = invoke("split", "--protocol", "rand", "--seed", "3", "--in", "data.tsv", "--out", "f.json")
    assert r.exit_code == 0 and "fold 0: train=114 validation=8 test=40" in r.output

    cfg = {
        "embedding": {"path": "emb.txt"},
        "dataset": {"path": "data.tsv", "name": "BLESS"},
        "protocol": {"protocol": "OOD"},
        "composers": ["concat", "concat+mult"],
        "families": [{"family": "lin", "grid": {"C": [0.5]}}],
        "output_dir": "out",
    }
    (files / "cfg.json").write_text(json.dumps(cfg))
    r = invoke("run", "--config", "cfg.json")
    assert r.exit_code == 0, r.output
    assert "concat:lin_svm\tweighted_f1=" in r.output

    r = invoke("compare", "--record", "out/run.json", "--a", "concat:lin", "--b", "concat+mult:lin")
    assert r.exit_code == 0 and "weighted_f1" in r.output

    r = invoke("report", "--record", "out/run.json", "--format", "md")
    assert r.output.startswith("OOD BLESS") and "| LIN_SVM |" in r.output
    r = invoke("report", "--record", "out/run.json", "--format", "csv")
    assert r.output.splitlines()[0].startswith("composer,family,fold")

    r = invoke("similarity", "--data", "data.tsv", "--embeddings", "emb.txt")
    assert r.exit_code == 0 and r.output.splitlines()[-1].startswith("random")


def test_errors_exit_nonzero(files, monkeypatch):
    monkeypatch.chdir(files)
    (files / "bad.txt").write_text("a 1 2\nb 1\n")
    r = invoke("embed", "info", "bad.txt")
    assert r.exit_code != 0 and "ParseError" in r.output
    r = invoke("data", "ingest", "--dataset", "wordnet", "--in", "bless.txt", "--out", "x.tsv")
    assert r.exit_code != 0
