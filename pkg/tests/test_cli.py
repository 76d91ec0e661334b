import json
import subprocess
import sys

import pytest

from deepmne.cli import main
from deepmne.graph_io import write_edge_list
from deepmne.synthetic import planted_partition


@pytest.fixture
def data(tmp_path):
    graphs, labels = planted_partition(18, 3, 0.6, 0.05, n_networks=2, seed=4)
    paths = []
    for k, g in enumerate(graphs):
        p = tmp_path / f"net{k}.txt"
        write_edge_list(g, p)
        paths.append(str(p))
    lab = tmp_path / "labels.txt"
    lab.write_text("".join(f"{name}\t{labels.labels[row.argmax()]}\n"
                           for name, row in zip(labels.index.names, labels.assign)))
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "layer_dims": [18, 8, 4], "constraint_fraction_P": 0.02, "edges": ["net0.txt", "net1.txt"],
        "train": {"epochs": 10, "batch_size": 6, "seed": 1}}))
    return tmp_path, paths, lab, config


def test_diffuse(data, capsys):
    tmp, paths, _, _ = data
    out = tmp / "rwr"
    assert main(["diffuse", "--edges", *paths, "--alpha", "0.5", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("*.dmne")) == ["net0.dmne", "net1.dmne"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["networks"]) == 2 and manifest["n_nodes"] == 18


def test_diffuse_missing_file(data, capsys):
    tmp, paths, _, _ = data
    missing = str(tmp / "nope.txt")
    assert main(["diffuse", "--edges", paths[0], missing, "--out", str(tmp / "o")]) == 2
    assert missing in capsys.readouterr().err


def test_diffuse_alpha_range(data, capsys):
    tmp, paths, _, _ = data
    assert main(["diffuse", "--edges", *paths, "--alpha", "1.5", "--out", str(tmp / "o")]) == 2
    assert "alpha" in capsys.readouterr().err


def test_embed(data):
    tmp, _, _, config = data
    out = tmp / "emb"
    assert main(["embed", "--config", str(config), "--out", str(out)]) == 0
    assert len((out / "combined.tsv").read_text().splitlines()) == 18
    assert json.loads((out / "config.json").read_text())["train"]["seed"] == 1
    assert {"losses", "constraint_trace", "timings"} <= set(json.loads((out / "manifest.json").read_text()))


def test_embed_non_decreasing(data, capsys):
    tmp, _, _, config = data
    raw = json.loads(config.read_text())
    raw["layer_dims"] = [18, 8, 8]
    config.write_text(json.dumps(raw))
    assert main(["embed", "--config", str(config), "--out", str(tmp / "e")]) == 2
    assert "/layer_dims/2" in capsys.readouterr().err


def test_embed_seed_override(data):
    tmp, _, _, config = data
    assert main(["embed", "--config", str(config), "--seed", "7", "--out", str(tmp / "a")]) == 0
    assert json.loads((tmp / "a" / "config.json").read_text())["train"]["seed"] == 7
    raw = json.loads(config.read_text())
    raw["train"]["seed"] = 7
    config.write_text(json.dumps(raw))
    assert main(["embed", "--config", str(config), "--out", str(tmp / "b")]) == 0
    assert (tmp / "a" / "combined.tsv").read_bytes() == (tmp / "b" / "combined.tsv").read_bytes()


def test_refuses_overwrite(data, capsys):
    tmp, _, _, config = data
    out = tmp / "emb"
    assert main(["embed", "--config", str(config), "--out", str(out)]) == 0
    assert main(["embed", "--config", str(config), "--out", str(out)]) == 2
    assert "--force" in capsys.readouterr().err
    assert main(["embed", "--config", str(config), "--out", str(out), "--force"]) == 0


def test_evaluate(data, capsys):
    tmp, _, lab, config = data
    main(["embed", "--config", str(config), "--out", str(tmp / "emb")])
    capsys.readouterr()
    code = main(["evaluate", "--embeddings", str(tmp / "emb" / "combined.tsv"), "--labels", str(lab),
                 "--folds", "3", "--seed", "2", "--epochs", "50", "--out", str(tmp / "ev")])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert {"accuracy", "micro_f1", "micro_auprc", "micro_auroc"} <= set(report)
    assert json.loads((tmp / "ev" / "metrics.json").read_text()) == report


def test_evaluate_one_fold(data, capsys):
    tmp, _, lab, _ = data
    emb = tmp / "e.tsv"
    emb.write_text("v00\t1\t2\n")
    assert main(["evaluate", "--embeddings", str(emb), "--labels", str(lab), "--folds", "1"]) == 2


def test_evaluate_unknown_ids(data, capsys):
    tmp, _, lab, _ = data
    emb = tmp / "e.tsv"
    emb.write_text("".join(f"x{i}\t{i}\t1\n" for i in range(7)) + "v00\t0\t0\n")
    assert main(["evaluate", "--embeddings", str(emb), "--labels", str(lab)]) == 2
    err = capsys.readouterr().err
    assert "7 embedding node(s)" in err
    assert "['x0', 'x1', 'x2', 'x3', 'x4']" in err


@pytest.mark.parametrize("sub", [[], ["diffuse"], ["embed"], ["evaluate"]])
def test_help(sub):
    with pytest.raises(SystemExit) as info:
        main([*sub, "--help"])
    assert info.value.code == 0


def test_unknown_flag():
    with pytest.raises(SystemExit) as info:
        main(["diffuse", "--bogus"])
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "deepmne", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "diffuse" in proc.stdout


def test_threads_flag(data):
    tmp, paths, _, _ = data
    assert main(["--threads", "1", "diffuse", "--edges", *paths, "--out", str(tmp / "r")]) == 0


def test_evaluate_ignores_extra_label_nodes(data, capsys):
    tmp, _, lab, config = data
    main(["embed", "--config", str(config), "--out", str(tmp / "emb")])
    with open(lab, "a") as fh:
        fh.write("not_embedded\tc0\n")
    assert main(["evaluate", "--embeddings", str(tmp / "emb" / "combined.tsv"), "--labels", str(lab),
                 "--folds", "3", "--epochs", "20"]) == 0
