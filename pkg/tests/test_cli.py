"""
End-to-end tests of the command line through ``main``.
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.cli import EXIT_DEGENERATE, EXIT_INPUT, EXIT_OK, main
from src.clustering import CkaMatrix, load_partition, save_cka_matrix
from src.tensor_io import SampleMatrix, load_sample_matrix, save_sample_matrix


@pytest.fixture
def workspace(tmp_path):
    spec = tmp_path / "blocks.json"
    spec.write_text(json.dumps({
        "height": 2, "width": 3,
        "blocks": [{"size": 2, "coupling": 0.9}, {"size": 2, "coupling": 0.8}, {"size": 2, "coupling": 0.85}],
    }))
    shifted = tmp_path / "shifted.json"
    shifted.write_text(json.dumps({
        "height": 2, "width": 3,
        "blocks": [{"size": 2, "coupling": 0.9}, {"size": 2, "coupling": 0.8, "shift": 0.7},
                   {"size": 2, "coupling": 0.85}],
    }))
    (tmp_path / "snaps").mkdir()
    return tmp_path


def _synth(spec, n, seed, out, *extra):
    return main(["synth", "--spec", str(spec), "--n", str(n), "--seed", str(seed), "--out", str(out), *extra])


def test_full_command_chain(workspace):
    w = workspace
    assert _synth(w / "blocks.json", 600, 1, w / "train.f32", "--partition-out", str(w / "truth.json")) == EXIT_OK
    assert _synth(w / "blocks.json", 300, 2, w / "test.f32") == EXIT_OK
    assert _synth(w / "blocks.json", 300, 3, w / "snaps" / "snap_0.f32") == EXIT_OK
    assert _synth(w / "shifted.json", 300, 4, w / "snaps" / "snap_1.f32") == EXIT_OK
    assert load_sample_matrix(str(w / "train.f32")).meta.shape_key == (600, 2, 3, 1)

    assert main(["cka", "--train", str(w / "train.f32"), "--out", str(w / "m.f32"), "--batch", "100",
                 "--workers", "2", "--csv", str(w / "m.csv")]) == EXIT_OK
    assert main(["cluster", "--matrix", str(w / "m.f32"), "--k", "3", "--out", str(w / "p.json"),
                 "--heights", str(w / "heights.csv")]) == EXIT_OK
    assert load_partition(str(w / "p.json")) == load_partition(str(w / "truth.json"))
    assert len(pd.read_csv(w / "heights.csv")) == 5

    assert main(["monitor", "--test", str(w / "test.f32"), "--snapshots", str(w / "snaps"),
                 "--partition", str(w / "p.json"), "--out", str(w / "report"), "--batch", "100",
                 "--mmd", "--formats", "json,csv"]) == EXIT_OK
    records = [json.loads(l) for l in (w / "report" / "monitor_report.jsonl").read_text().splitlines()]
    assert [r["ordinal"] for r in records] == [0, 1]
    assert records[1]["image_cms"] < records[0]["image_cms"]
    assert records[0]["mmd2"] is not None
    header = json.loads((w / "report" / "monitor_header.json").read_text())
    assert header["gamma_source"] == "test" and header["gamma"] > 0


def test_verify_prints_both_sides(workspace, capsys):
    w = workspace
    _synth(w / "blocks.json", 300, 1, w / "x.f32", "--partition-out", str(w / "truth.json"))
    capsys.readouterr()
    assert main(["verify", "--x", str(w / "x.f32"), "--y", str(w / "x.f32"),
                 "--partition", str(w / "truth.json"), "--gamma", "0.4", "--batch", "100"]) == EXIT_OK
    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert result == {"image_cms": 1.0, "product_cms": 1.0, "gap": 0.0}


def test_malformed_sidecar_exit_code(tmp_path):
    path = tmp_path / "bad.f32"
    np.zeros(8, dtype="<f4").tofile(str(path))
    (tmp_path / "bad.f32.meta.json").write_text("{broken")
    assert main(["cka", "--train", str(path), "--out", str(tmp_path / "m.f32")]) == EXIT_INPUT


def test_missing_partition_exit_code(workspace):
    w = workspace
    _synth(w / "blocks.json", 300, 2, w / "test.f32")
    _synth(w / "blocks.json", 300, 3, w / "snaps" / "snap_0.f32")
    assert main(["monitor", "--test", str(w / "test.f32"), "--snapshots", str(w / "snaps"),
                 "--out", str(w / "report")]) == EXIT_INPUT


def test_constant_data_exit_code(tmp_path):
    path = tmp_path / "flat.f32"
    save_sample_matrix(SampleMatrix.from_array(np.ones((10, 4)), 2, 2), str(path))
    assert main(["cka", "--train", str(path), "--out", str(tmp_path / "m.f32")]) == EXIT_DEGENERATE


def test_invalid_gamma_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["cka", "--train", "x.f32", "--out", "m.f32", "--gamma", "-1"])
    assert info.value.code == 2


def test_merge_command(tmp_path):
    for name, value in (("a", 0.2), ("b", 0.4)):
        (tmp_path / f"{name}.csv").write_text(f"ordinal,image_cms\n0,{value}\n")
    assert main(["merge", "--reports", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"),
                 "--out", str(tmp_path / "merged.csv")]) == EXIT_OK
    merged = pd.read_csv(tmp_path / "merged.csv")
    assert merged["image_cms"].tolist() == pytest.approx([0.3])


def test_config_file_overrides(tmp_path):
    (tmp_path / "cfg.yaml").write_text("estimator:\n  cka_batch: 1\n")
    path = tmp_path / "x.f32"
    save_sample_matrix(SampleMatrix.from_array(np.random.default_rng(0).normal(size=(20, 4)), 2, 2), str(path))
    # a cka_batch of 1 is rejected by EstimatorConfig
    assert main(["--config", str(tmp_path / "cfg.yaml"), "cka", "--train", str(path),
                 "--out", str(tmp_path / "m.f32")]) == EXIT_INPUT
    (tmp_path / "bad.yaml").write_text("nosuchsection:\n  key: 1\n")
    assert main(["--config", str(tmp_path / "bad.yaml"), "cka", "--train", str(path),
                 "--out", str(tmp_path / "m.f32")]) == EXIT_INPUT


def test_config_file_with_wrong_type(tmp_path):
    (tmp_path / "cfg.yaml").write_text('estimator:\n  cms_batch: "abc"\n')
    path = tmp_path / "x.f32"
    save_sample_matrix(SampleMatrix.from_array(np.random.default_rng(0).normal(size=(20, 4)), 2, 2), str(path))
    assert main(["--config", str(tmp_path / "cfg.yaml"), "cka", "--train", str(path),
                 "--out", str(tmp_path / "m.f32")]) == EXIT_INPUT


def test_cluster_writes_matrix_grouped_by_cluster(tmp_path):
    values = np.array([
        [1.0, 0.1, 0.9, 0.1],
        [0.1, 1.0, 0.1, 0.8],
        [0.9, 0.1, 1.0, 0.1],
        [0.1, 0.8, 0.1, 1.0],
    ])
    save_cka_matrix(CkaMatrix(4, values), str(tmp_path / "m.f32"))
    assert main(["cluster", "--matrix", str(tmp_path / "m.f32"), "--k", "2", "--out", str(tmp_path / "p.json"),
                 "--ordered-csv", str(tmp_path / "ordered.csv")]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "ordered.csv", index_col=0)
    assert list(frame.columns) == ["0", "2", "1", "3"]
    assert frame.iloc[0, 1] == pytest.approx(0.9)
    assert frame.iloc[2, 3] == pytest.approx(0.8)


def test_external_metrics_with_repeated_ordinal(workspace):
    w = workspace
    _synth(w / "blocks.json", 300, 1, w / "train.f32", "--partition-out", str(w / "truth.json"))
    _synth(w / "blocks.json", 300, 2, w / "test.f32")
    _synth(w / "blocks.json", 300, 3, w / "snaps" / "snap_0.f32")
    (w / "ext.csv").write_text("ordinal,fid\n0,31.5\n0,30.0\n")
    assert main(["monitor", "--test", str(w / "test.f32"), "--snapshots", str(w / "snaps"),
                 "--partition", str(w / "truth.json"), "--out", str(w / "report"), "--batch", "100",
                 "--external", str(w / "ext.csv")]) == EXIT_INPUT
