import json

import numpy as np
import pytest

from unmixlab import io
from unmixlab.core import AbundanceSet, ConfigError, EndmemberMatrix, HsiCube


def test_cube_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.random((4, 5, 3)).astype(np.float32).astype(np.float64)
    cube = HsiCube(values)
    path = tmp_path / "c.hsic"
    io.save_cube(path, cube)
    loaded = io.load_cube(path)
    assert np.array_equal(loaded.values, cube.values)
    # second generation reproduces the same bytes
    path2 = tmp_path / "c2.hsic"
    io.save_cube(path2, loaded)
    assert path.read_bytes() == path2.read_bytes()


def test_save_quantizes_to_f32(tmp_path):
    values = np.full((1, 1, 1), 0.1)  # not representable in f32
    io.save_container(tmp_path / "x.hsic", values, "cube")
    loaded = io.load_container(tmp_path / "x.hsic")
    assert loaded[0, 0, 0] == np.float32(0.1)


def test_header_is_one_json_line(tmp_path):
    io.save_container(tmp_path / "x.hsic", np.zeros((2, 3, 4)), "abundance")
    with open(tmp_path / "x.hsic", "rb") as f:
        header = json.loads(f.readline())
    assert header["magic"] == "HSIC1"
    assert header["rows"] == 2 and header["cols"] == 3 and header["channels"] == 4
    assert header["dtype"] == "f32le"
    assert header["order"] == "row-major-pixel-then-channel"
    assert header["kind"] == "abundance"


def test_kind_mismatch_rejected(tmp_path):
    io.save_container(tmp_path / "x.hsic", np.zeros((2, 2, 2)), "cube")
    with pytest.raises(ConfigError):
        io.load_container(tmp_path / "x.hsic", expect_kind="abundance")


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "x.hsic"
    io.save_container(path, np.zeros((2, 2, 2)), "cube")
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])
    with pytest.raises(Exception):
        io.load_container(path)


def test_abundance_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    raw = rng.dirichlet(np.ones(3), size=12).reshape(3, 4, 3)
    ab = AbundanceSet(raw)
    io.save_abundance(tmp_path / "a.hsic", ab)
    loaded = io.load_abundance(tmp_path / "a.hsic")
    assert loaded.values == pytest.approx(ab.values, abs=1e-7)


def test_endmember_csv_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    m = EndmemberMatrix(rng.random((6, 3)) + 0.01)
    io.save_endmember_csv(tmp_path / "m.csv", m, ["a", "b", "c"])
    loaded, names = io.load_endmember_csv(tmp_path / "m.csv")
    assert names == ["a", "b", "c"]
    assert loaded.spectra == pytest.approx(m.spectra, rel=1e-8)


def test_endmember_csv_requires_band_rows(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\n")
    with pytest.raises(ConfigError):
        io.load_endmember_csv(tmp_path / "bad.csv")


def test_params_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    params = {
        "w": rng.normal(size=(3, 4)),
        "b": rng.normal(size=(1, 4)),
        "scalarish": rng.normal(size=()),
    }
    io.save_params(tmp_path / "p.bin", params, extra={"cfg": {"p": 4}})
    loaded, extra = io.load_params(tmp_path / "p.bin")
    assert extra == {"cfg": {"p": 4}}
    for name, arr in params.items():
        assert np.array_equal(loaded[name], arr)


def test_params_manifest_offsets(tmp_path):
    io.save_params(tmp_path / "p.bin", {"b": np.zeros(2), "a": np.zeros(3)})
    with open(tmp_path / "p.bin", "rb") as f:
        manifest = json.loads(f.readline())
    entries = {e["name"]: e for e in manifest["params"]}
    assert entries["a"]["offset"] == 0  # name-sorted layout
    assert entries["b"]["offset"] == 24
    assert manifest["dtype"] == "f64le"


def test_loss_history_round_trip(tmp_path):
    history = [(0, 0.5, 1.25, 0.125), (1, 0.25, 1.0, 0.1)]
    io.save_loss_history(tmp_path / "h.csv", history)
    assert io.load_loss_history(tmp_path / "h.csv") == history
