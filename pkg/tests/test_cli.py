import json
import os

import numpy as np
import pytest

from bubbleseg.cli import main
from bubbleseg.core import AnnotationSet
from bubbleseg.mtnet import NetConfig, init_params, save_checkpoint

SMALL_SYNTH = {"synth": {"width": 48, "height": 48, "n_bubbles": [3, 5],
                         "touching_pairs": 0}}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL_SYNTH))
    return str(path)


@pytest.fixture
def dataset(tmp_path, small_config):
    root = tmp_path / "data"
    main(["--config", small_config, "--seed", "5", "--out", str(root),
          "synth", "--n-images", "4", "--train-count", "2"])
    return root


def read_error(capsys):
    return json.loads(capsys.readouterr().err.strip())


class TestSynth:
    def test_smoke(self, dataset):
        manifest = json.loads((dataset / "manifest.json").read_text())
        assert len(manifest["train"]) == 2 and len(manifest["test"]) == 2

    def test_seed_flag_changes_data(self, tmp_path, small_config):
        for seed in ("1", "2"):
            main(["--config", small_config, "--seed", seed,
                  "--out", str(tmp_path / seed), "synth", "--n-images", "1",
                  "--train-count", "1"])
        a = (tmp_path / "1" / "images" / "train_000.png").read_bytes()
        b = (tmp_path / "2" / "images" / "train_000.png").read_bytes()
        assert a != b


class TestSegment:
    def test_missing_checkpoint_exits_2(self, dataset, tmp_path, capsys):
        img = str(dataset / "images" / "test_002.png")
        with pytest.raises(SystemExit) as exc:
            main(["--out", str(tmp_path / "o"), "segment", "--image", img,
                  "--checkpoint", str(tmp_path / "nope.mtnp")])
        assert exc.value.code == 2
        assert "checkpoint" in read_error(capsys)["error"]

    def test_no_checkpoint_given_exits_2(self, dataset, tmp_path, capsys):
        img = str(dataset / "images" / "test_002.png")
        with pytest.raises(SystemExit) as exc:
            main(["--out", str(tmp_path / "o"), "segment", "--image", img])
        assert exc.value.code == 2
        read_error(capsys)

    def test_missing_image_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--out", str(tmp_path / "o"), "segment",
                  "--image", str(tmp_path / "nope.png"), "--small-only"])
        assert exc.value.code == 2
        read_error(capsys)

    def test_small_only(self, dataset, tmp_path, capsys):
        img = str(dataset / "images" / "test_002.png")
        out = tmp_path / "seg"
        assert main(["--out", str(out), "segment", "--image", img,
                     "--small-only"]) == 0
        ann = AnnotationSet.load(out / "test_002.json")
        assert all(i.source == "edge_detector" for i in ann.instances)
        assert (out / "test_002_overlay.png").stat().st_size > 0

    def test_with_checkpoint(self, dataset, tmp_path, capsys):
        nc = NetConfig(input_size=32, encoder_levels=2, base_channels=4)
        ckpt = tmp_path / "net.mtnp"
        save_checkpoint(init_params(nc, np.random.default_rng(0)), nc, ckpt)
        img = str(dataset / "images" / "test_002.png")
        out = tmp_path / "seg"
        assert main(["--out", str(out), "segment", "--image", img,
                     "--checkpoint", str(ckpt)]) == 0
        ann = AnnotationSet.load(out / "test_002.json")
        assert ann.width == 48 and ann.height == 48


class TestBaseline:
    def test_smoke(self, dataset, tmp_path, capsys):
        img = str(dataset / "images" / "test_002.png")
        out = tmp_path / "base"
        assert main(["--out", str(out), "baseline", "--image", img]) == 0
        ann = AnnotationSet.load(out / "test_002.json")
        assert len(ann.instances) >= 1
        assert all(i.source == "baseline" for i in ann.instances)


class TestEval:
    def test_counts_replay(self, tmp_path, capsys):
        counts = tmp_path / "counts.json"
        counts.write_text(json.dumps(
            {"matched": [631, 620, 599, 552, 411], "gt": 685}))
        assert main(["--out", str(tmp_path), "eval",
                     "--counts", str(counts)]) == 0
        assert capsys.readouterr().out.strip() == "0.92/0.91/0.87/0.81/0.60"

    def test_dataset_mode_perfect_predictions(self, dataset, tmp_path, capsys):
        pred = tmp_path / "pred"
        pred.mkdir()
        manifest = json.loads((dataset / "manifest.json").read_text())
        for entry in manifest["test"]:
            ann = AnnotationSet.load(dataset / entry["annotation"])
            ann.save(pred / (ann.image_id + ".json"))
        out = tmp_path / "report"
        assert main(["--out", str(out), "eval", "--dataset", str(dataset),
                     "--pred", str(pred)]) == 0
        table = capsys.readouterr().out
        assert "1.00" in table
        for name in ("report.csv", "report.txt", "recall_curve.png"):
            assert (out / name).stat().st_size > 0
        csv = (out / "report.csv").read_text()
        assert csv.splitlines()[-1].startswith("Total,")

    def test_missing_prediction_exits_2(self, dataset, tmp_path, capsys):
        pred = tmp_path / "empty"
        pred.mkdir()
        with pytest.raises(SystemExit) as exc:
            main(["--out", str(tmp_path / "r"), "eval",
                  "--dataset", str(dataset), "--pred", str(pred)])
        assert exc.value.code == 2
        read_error(capsys)

    def test_missing_manifest_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--out", str(tmp_path), "eval",
                  "--dataset", str(tmp_path / "nowhere"), "--pred", str(tmp_path)])
        assert exc.value.code == 2
        read_error(capsys)


class TestTrain:
    def test_short_training_run(self, dataset, tmp_path, capsys):
        cfg = tmp_path / "train_cfg.json"
        cfg.write_text(json.dumps({
            **SMALL_SYNTH,
            "net": {"input_size": 48, "encoder_levels": 2, "base_channels": 4},
            "train": {"epochs": 2, "batch_size": 2},
        }))
        out = tmp_path / "run"
        assert main(["--config", str(cfg), "--out", str(out), "train",
                     "--dataset", str(dataset), "--no-augment"]) == 0
        assert (out / "checkpoint.mtnp").stat().st_size > 0
        log = (out / "training_log.csv").read_text().splitlines()
        assert log[0] == "epoch,lr,dice_loss,wbce_loss,total"
        assert len(log) == 3
        assert (out / "loss_curve.png").stat().st_size > 0
