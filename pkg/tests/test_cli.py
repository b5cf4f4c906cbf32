import hashlib
import json

import numpy as np
import pytest

from unmixlab import io
from unmixlab.cli import load_checkpoint, main
from unmixlab.core import HsiCube
from unmixlab.render import load_pgm
from unmixlab.synth import synthetic_spectra


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def small_library(tmp_path_factory):
    path = tmp_path_factory.mktemp("lib") / "lib.csv"
    m, names = synthetic_spectra(10, 12, seed=3)
    io.save_endmember_csv(path, m, names)
    return path


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory, small_library):
    out = tmp_path_factory.mktemp("ds")
    code = main(
        [
            "synth",
            "--rows", "9", "--cols", "9", "--p-initial", "2", "--k", "4",
            "--snr", "30", "--seed", "5",
            "--endmember-csv", str(small_library),
            "--out", str(out),
        ]
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, synth_dir):
    out = tmp_path_factory.mktemp("run")
    code = main(
        [
            "train",
            "--dataset", str(synth_dir),
            "--epochs", "2", "--batch-size", "8", "--s", "3",
            "--heads", "4", "--d-k", "4", "--blocks", "1", "--ffn-hidden", "16",
            "--seed", "3", "--out", str(out),
        ]
    )
    assert code == 0
    return out


class TestSynth:
    def test_outputs_exist_and_parse(self, synth_dir):
        cube = io.load_cube(synth_dir / "cube.hsic")
        truth = io.load_abundance(synth_dir / "abundance_true.hsic")
        m, names = io.load_endmember_csv(synth_dir / "endmembers.csv")
        assert cube.values.shape == (9, 9, 12)
        assert truth.endmembers == 4
        assert m.endmembers == 4
        manifest = json.loads((synth_dir / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert set(manifest["outputs"]) == {"cube.hsic", "abundance_true.hsic", "endmembers.csv"}

    def test_deterministic_rerun(self, tmp_path, small_library):
        args = [
            "synth", "--rows", "7", "--cols", "6", "--p-initial", "2", "--k", "4",
            "--snr", "20", "--seed", "9", "--endmember-csv", str(small_library),
        ]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        for name in ("cube.hsic", "abundance_true.hsic", "endmembers.csv"):
            assert sha(a / name) == sha(b / name), name

    def test_bad_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["synth", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_snr_none_flag(self, tmp_path, small_library):
        out = tmp_path / "clean"
        code = main(
            [
                "synth", "--rows", "6", "--cols", "6", "--p-initial", "2", "--k", "4",
                "--snr", "none", "--seed", "1",
                "--endmember-csv", str(small_library), "--out", str(out),
            ]
        )
        assert code == 0

    def test_default_config_uses_bundled_library(self, tmp_path):
        # tiny grid keeps the bundled 198-band default fast
        out = tmp_path / "bundled"
        code = main(
            ["synth", "--rows", "5", "--cols", "5", "--p-initial", "2", "--k", "4",
             "--seed", "0", "--out", str(out)]
        )
        assert code == 0
        assert io.load_cube(out / "cube.hsic").bands == 198


class TestTrain:
    def test_checkpoint_and_history_written(self, trained_dir):
        generator, discriminator, tcfg = load_checkpoint(trained_dir / "checkpoint.params")
        assert generator.config.p == 4
        assert tcfg.epochs == 2
        history = io.load_loss_history(trained_dir / "loss_history.csv")
        assert len(history) > 0

    def test_zero_epochs_equals_init(self, synth_dir, tmp_path):
        out = tmp_path / "zero"
        code = main(
            [
                "train", "--dataset", str(synth_dir),
                "--epochs", "0", "--s", "3", "--heads", "4", "--d-k", "4",
                "--blocks", "1", "--ffn-hidden", "16", "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        generator, _, _ = load_checkpoint(out / "checkpoint.params")
        root = np.random.SeedSequence(3)
        g_ss, _, _ = root.spawn(3)
        from unmixlab.transformer import PatchTransformer

        fresh = PatchTransformer(generator.config, seed=g_ss)
        for name, t in fresh.params.items():
            assert np.array_equal(generator.params[name].data, t.data)

    def test_missing_dataset_exits_2(self, tmp_path):
        assert main(["train", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 2

    def test_ablate_alias_disables_discriminator(self, synth_dir, tmp_path):
        out = tmp_path / "ab"
        code = main(
            [
                "ablate", "--dataset", str(synth_dir),
                "--epochs", "1", "--batch-size", "8", "--s", "3", "--heads", "4",
                "--d-k", "4", "--blocks", "1", "--ffn-hidden", "16", "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        _, _, tcfg = load_checkpoint(out / "checkpoint.params")
        assert tcfg.use_discriminator is False
        history = io.load_loss_history(out / "loss_history.csv")
        assert all(h[1] == 0.0 for h in history)  # no discriminator loss recorded


class TestUnmix:
    def test_checkpoint_inference(self, synth_dir, trained_dir, tmp_path):
        out = tmp_path / "inf"
        code = main(
            [
                "unmix", "--cube", str(synth_dir / "cube.hsic"),
                "--checkpoint", str(trained_dir / "checkpoint.params"),
                "--out", str(out),
            ]
        )
        assert code == 0
        est = io.load_abundance(out / "abundance_est.hsic")
        assert est.rows == 9 and est.cols == 9
        assert np.abs(est.values.sum(axis=2) - 1.0).max() < 1e-6

    def test_attention_export(self, synth_dir, trained_dir, tmp_path):
        out = tmp_path / "att"
        code = main(
            [
                "unmix", "--cube", str(synth_dir / "cube.hsic"),
                "--checkpoint", str(trained_dir / "checkpoint.params"),
                "--attention", "4,4", "--out", str(out),
            ]
        )
        assert code == 0
        scores = io.load_container(out / "attention_r4_c4.hsic", expect_kind="attention")
        assert scores.shape == (3, 3, 4)  # s x s maps, one per head
        sums = scores.reshape(-1, 4).sum(axis=0)
        assert np.abs(sums - 1.0).max() < 1e-5

    def test_fcls_baseline_on_noise_free_linear(self, tmp_path, small_library):
        # synthesize noise-free linear data, then unmix with FCLS
        ds = tmp_path / "lin"
        assert main(
            ["synth", "--rows", "6", "--cols", "6", "--p-initial", "2", "--k", "4",
             "--gamma", "0", "--snr", "none", "--seed", "2",
             "--endmember-csv", str(small_library), "--out", str(ds)]
        ) == 0
        out = tmp_path / "fcls"
        code = main(
            ["unmix", "--cube", str(ds / "cube.hsic"), "--baseline", "fcls",
             "--endmembers", str(ds / "endmembers.csv"), "--out", str(out)]
        )
        assert code == 0
        est = io.load_abundance(out / "abundance_est.hsic")
        truth = io.load_abundance(ds / "abundance_true.hsic")
        # f32 storage of the cube bounds the achievable recovery accuracy
        assert np.abs(est.values - truth.values).max() < 1e-4

    def test_sunsal_baseline_writes_diagnostics(self, synth_dir, tmp_path):
        out = tmp_path / "sun"
        code = main(
            ["unmix", "--cube", str(synth_dir / "cube.hsic"), "--baseline", "sunsal",
             "--endmembers", str(synth_dir / "endmembers.csv"), "--out", str(out)]
        )
        assert code == 0
        assert (out / "admm_diagnostics.csv").exists()
        lines = (out / "admm_diagnostics.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 81  # header + one row per pixel

    def test_dimension_mismatch_exits_2(self, synth_dir, trained_dir, tmp_path):
        bad_cube = tmp_path / "bad.hsic"
        io.save_cube(bad_cube, HsiCube(np.random.default_rng(0).random((4, 4, 7))))
        code = main(
            ["unmix", "--cube", str(bad_cube),
             "--checkpoint", str(trained_dir / "checkpoint.params"),
             "--out", str(tmp_path / "o")]
        )
        assert code == 2


class TestEval:
    def test_identical_inputs_zero_report(self, synth_dir, tmp_path):
        out = tmp_path / "ev"
        code = main(
            ["eval", "--est", str(synth_dir / "abundance_true.hsic"),
             "--true", str(synth_dir / "abundance_true.hsic"), "--out", str(out)]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["armse"] == pytest.approx(0.0, abs=1e-7)
        assert report["rms_aad"] == pytest.approx(0.0, abs=1e-6)

    def test_sam_only_mode(self, synth_dir, tmp_path):
        out = tmp_path / "sam"
        code = main(
            ["eval", "--est", str(synth_dir / "abundance_true.hsic"),
             "--cube", str(synth_dir / "cube.hsic"),
             "--endmembers", str(synth_dir / "endmembers.csv"),
             "--gamma", "0.2", "--out", str(out)]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["armse"] is None
        assert report["asam"] is not None

    def test_nothing_computable_exits_2(self, synth_dir, tmp_path):
        code = main(
            ["eval", "--est", str(synth_dir / "abundance_true.hsic"),
             "--out", str(tmp_path / "o")]
        )
        assert code == 2

    def test_table_layout(self, synth_dir, tmp_path):
        out = tmp_path / "tbl"
        main(
            ["eval", "--est", str(synth_dir / "abundance_true.hsic"),
             "--true", str(synth_dir / "abundance_true.hsic"), "--out", str(out)]
        )
        table = (out / "report.txt").read_text()
        assert "RMSE[" in table and "aRMSE" in table and "rmsAAD" in table


class TestRender:
    def test_constant_half_renders_128(self, tmp_path):
        values = np.full((4, 5, 2), 0.5)
        container = tmp_path / "maps.hsic"
        io.save_container(container, values, "abundance")
        out = tmp_path / "imgs"
        code = main(["render", "--input", str(container), "--out", str(out)])
        assert code == 0
        img = load_pgm(out / "maps_00.pgm")
        assert (img == 128).all()

    def test_one_image_per_map(self, synth_dir, tmp_path):
        out = tmp_path / "maps"
        code = main(
            ["render", "--input", str(synth_dir / "abundance_true.hsic"),
             "--no-png", "--out", str(out)]
        )
        assert code == 0
        assert len(list(out.glob("*.pgm"))) == 4
        assert len(list(out.glob("*.png"))) == 0

    def test_png_copies_written_by_default(self, synth_dir, tmp_path):
        out = tmp_path / "maps2"
        main(["render", "--input", str(synth_dir / "abundance_true.hsic"), "--out", str(out)])
        assert len(list(out.glob("*.png"))) == 4


class TestSweepWindow:
    def test_csv_shape(self, synth_dir, tmp_path):
        out = tmp_path / "sweep"
        code = main(
            [
                "sweep-window", "--dataset", str(synth_dir),
                "--sizes", "3,5", "--epochs", "1", "--batch-size", "8",
                "--heads", "4", "--d-k", "4", "--blocks", "1", "--ffn-hidden", "16",
                "--seed", "3", "--out", str(out),
            ]
        )
        assert code == 0
        lines = (out / "window_sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "size,armse,rms_aad"
        assert len(lines) == 3
        assert [int(l.split(",")[0]) for l in lines[1:]] == [3, 5]

    def test_even_size_rejected(self, synth_dir, tmp_path):
        code = main(
            ["sweep-window", "--dataset", str(synth_dir), "--sizes", "3,4",
             "--epochs", "1", "--out", str(tmp_path / "o")]
        )
        assert code == 2


class TestConfigAndEnv:
    def test_unmix_reads_config_file(self, synth_dir, trained_dir, tmp_path):
        cfg = tmp_path / "u.json"
        cfg.write_text(
            json.dumps(
                {"cube": str(synth_dir / "cube.hsic"),
                 "checkpoint": str(trained_dir / "checkpoint.params")}
            )
        )
        out = tmp_path / "o"
        assert main(["unmix", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "abundance_est.hsic").exists()

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "u.json"
        cfg.write_text(json.dumps({"cubes": "typo.hsic"}))
        assert main(["unmix", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_unmix_threads_env_is_deterministic(self, synth_dir, trained_dir, tmp_path, monkeypatch):
        out1, out2 = tmp_path / "t1", tmp_path / "t2"
        base = ["unmix", "--cube", str(synth_dir / "cube.hsic"),
                "--checkpoint", str(trained_dir / "checkpoint.params")]
        monkeypatch.setenv("UNMIX_THREADS", "1")
        assert main(base + ["--out", str(out1)]) == 0
        monkeypatch.setenv("UNMIX_THREADS", "3")
        assert main(base + ["--out", str(out2)]) == 0
        assert sha(out1 / "abundance_est.hsic") == sha(out2 / "abundance_est.hsic")

    def test_numerical_failure_exits_3(self, synth_dir, tmp_path, monkeypatch):
        from unmixlab import cli
        from unmixlab.core import NumericsError

        def exploding_train(*args, **kwargs):
            raise NumericsError("non-finite loss at step 0")

        monkeypatch.setattr(cli, "train", exploding_train)
        code = main(
            ["train", "--dataset", str(synth_dir), "--epochs", "1", "--s", "3",
             "--heads", "4", "--d-k", "4", "--blocks", "1", "--ffn-hidden", "16",
             "--out", str(tmp_path / "o")]
        )
        assert code == 3


class TestDeterminismAcrossCommands:
    def test_synth_train_unmix_rerun_bit_identical(self, tmp_path, small_library):
        def pipeline(base):
            ds, run, inf = base / "ds", base / "run", base / "inf"
            assert main(
                ["synth", "--rows", "7", "--cols", "7", "--p-initial", "2", "--k", "4",
                 "--snr", "25", "--seed", "11", "--endmember-csv", str(small_library),
                 "--out", str(ds)]
            ) == 0
            assert main(
                ["train", "--dataset", str(ds), "--epochs", "1", "--batch-size", "8",
                 "--s", "3", "--heads", "4", "--d-k", "4", "--blocks", "1",
                 "--ffn-hidden", "16", "--seed", "11", "--out", str(run)]
            ) == 0
            assert main(
                ["unmix", "--cube", str(ds / "cube.hsic"),
                 "--checkpoint", str(run / "checkpoint.params"), "--out", str(inf)]
            ) == 0
            return {
                "cube": sha(ds / "cube.hsic"),
                "truth": sha(ds / "abundance_true.hsic"),
                "ckpt": sha(run / "checkpoint.params"),
                "loss": sha(run / "loss_history.csv"),
                "est": sha(inf / "abundance_est.hsic"),
            }

        first = pipeline(tmp_path / "one")
        second = pipeline(tmp_path / "two")
        assert first == second
