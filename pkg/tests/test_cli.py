import json

import numpy as np
import pytest

from wxpipe.cli import main
from wxpipe.datasetman import CATEGORIES
from wxpipe.features import read_feature_file
from wxpipe.imgcore import load_image, save_image
from wxpipe.synthdata import generate_dataset, synth_image


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_data")
    manifest, records = generate_dataset(root, images_per_class=6, size=32, seed=21)
    return root, manifest, records


class TestSegment:
    def test_writes_debug_png_and_prints_count(self, tmp_path, capsys):
        img_path = tmp_path / "in.png"
        save_image(synth_image("sunny", 0, size=100, seed=1), img_path)
        out_path = tmp_path / "seg.png"
        code = main(["segment", str(img_path), "-k", "25", "-o", str(out_path)])
        assert code == 0
        out = capsys.readouterr().out
        count = int(out.split("segments:")[1].strip())
        assert 13 <= count <= 50
        assert load_image(out_path).width == 100

    def test_missing_file(self, tmp_path, capsys):
        code = main(["segment", str(tmp_path / "gone.png"), "-k", "25", "-o", str(tmp_path / "o.png")])
        assert code == 1
        assert "file not found" in capsys.readouterr().err

    def test_k_zero_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["segment", "x.png", "-k", "0", "-o", "o.png"])
        assert exc.value.code == 2


class TestAugment:
    def test_k0_copies_bytes(self, dataset, tmp_path, capsys):
        root, manifest, records = dataset
        out_dir = tmp_path / "aug0"
        code = main(["augment", "--manifest", str(manifest), "-k", "0", "--out-dir", str(out_dir)])
        assert code == 0
        outputs = sorted(out_dir.glob("*_sp0.png"))
        assert len(outputs) == len(records)
        for record in records[:5]:
            out = out_dir / f"{record.image_id}_sp0.png"
            assert out.read_bytes() == open(record.path, "rb").read()

    def test_masked_outputs_count(self, dataset, tmp_path):
        root, manifest, records = dataset
        out_dir = tmp_path / "aug25"
        code = main(["augment", "--manifest", str(manifest), "-k", "25", "--out-dir", str(out_dir)])
        assert code == 0
        assert len(list(out_dir.glob("*_sp25.png"))) == len(records)

    def test_unwritable_out_dir(self, dataset, tmp_path, capsys):
        root, manifest, _ = dataset
        blocker = tmp_path / "blocker"
        blocker.write_text("not a dir")
        code = main(["augment", "--manifest", str(manifest), "-k", "0", "--out-dir", str(blocker / "sub")])
        assert code == 1


class TestExtract:
    def test_wxfeat_output_parses(self, dataset, tmp_path):
        root, manifest, records = dataset
        out = tmp_path / "f.wxfeat"
        code = main([
            "extract", "--manifest", str(manifest), "--extractor", "color_histogram",
            "-k", "0", "--out", str(out),
        ])
        assert code == 0
        fs = read_feature_file(out)
        assert fs.extractor_name == "color_histogram"
        assert fs.dimension == 512
        assert len(fs.entries) == len(records)


class TestTrainEvaluate:
    def test_full_flow(self, dataset, tmp_path, capsys):
        root, manifest, _ = dataset
        feat = tmp_path / "f.wxfeat"
        assert main([
            "extract", "--manifest", str(manifest), "--extractor", "color_histogram",
            "-k", "0", "--out", str(feat),
        ]) == 0
        model = tmp_path / "model.json"
        assert main([
            "train", "--features", str(feat), "--manifest", str(manifest),
            "--category", "rainy", "--out", str(model),
        ]) == 0
        assert main([
            "evaluate", "--model", str(model), "--features", str(feat),
            "--manifest", str(manifest),
        ]) == 0
        out = capsys.readouterr().out
        ap_line = [l for l in out.splitlines() if l.startswith("AP rainy")][0]
        ap = float(ap_line.split()[-1])
        assert 0.0 < ap <= 1.0


class TestExperiment:
    def write_config(self, path, manifest, out_dir, settings=(0, 25)):
        config = {
            "manifest_path": str(manifest),
            "output_dir": str(out_dir),
            "settings": list(settings),
            "extractors": ["color_histogram"],
            "train": {"lambda": 0.1, "epochs": 20},
            "seed": 5,
            "mask_color": [255, 255, 0],
            "compactness": 10.0,
        }
        path.write_text(json.dumps(config))

    def test_grid_outputs_and_determinism(self, dataset, tmp_path, capsys):
        root, manifest, _ = dataset
        cfg = tmp_path / "cfg.json"
        out_a = tmp_path / "out_a"
        self.write_config(cfg, manifest, out_a)
        assert main(["experiment", "--config", str(cfg)]) == 0
        csv_lines = (out_a / "results.csv").read_text().splitlines()
        assert csv_lines[0] == "model,setting,map"
        assert len(csv_lines) == 1 + 1 * 2  # extractors x settings
        for name in ("results_table.txt", "partitions.json", "run.log", "results_per_category.csv"):
            assert (out_a / name).exists()
        doc = json.loads((out_a / "partitions.json").read_text())
        assert sorted(doc) == sorted(CATEGORIES)

        out_b = tmp_path / "out_b"
        assert main(["experiment", "--config", str(cfg), "--out-dir", str(out_b)]) == 0
        assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()
        assert (out_a / "partitions.json").read_bytes() == (out_b / "partitions.json").read_bytes()

    def test_jobs_do_not_change_results(self, dataset, tmp_path):
        root, manifest, _ = dataset
        cfg = tmp_path / "cfg.json"
        out_a = tmp_path / "seq"
        out_b = tmp_path / "par"
        self.write_config(cfg, manifest, out_a, settings=(0,))
        assert main(["experiment", "--config", str(cfg)]) == 0
        assert main(["experiment", "--config", str(cfg), "--out-dir", str(out_b), "--jobs", "3"]) == 0
        assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()

    def test_missing_manifest_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"output_dir": str(tmp_path)}))
        assert main(["experiment", "--config", str(cfg)]) == 1
        assert "manifest_path" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        assert main(["experiment", "--config", str(cfg)]) == 1
        assert "invalid JSON" in capsys.readouterr().err

    def test_unknown_key_rejected(self, dataset, tmp_path, capsys):
        root, manifest, _ = dataset
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({
            "manifest_path": str(manifest), "output_dir": str(tmp_path / "o"), "bogus": 1,
        }))
        assert main(["experiment", "--config", str(cfg)]) == 1
        assert "bogus" in capsys.readouterr().err

    def test_inputs_never_mutated(self, dataset, tmp_path):
        root, manifest, records = dataset
        before = {r.image_id: open(r.path, "rb").read() for r in records}
        manifest_before = manifest.read_bytes()
        cfg = tmp_path / "cfg.json"
        self.write_config(cfg, manifest, tmp_path / "out", settings=(0, 25))
        assert main(["experiment", "--config", str(cfg)]) == 0
        assert manifest.read_bytes() == manifest_before
        for r in records:
            assert open(r.path, "rb").read() == before[r.image_id]
