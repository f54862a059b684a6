import numpy as np
import pytest

from pivotgen.checkpoint import CheckpointError, load_checkpoint, save_checkpoint


def sample_arrays():
    rng = np.random.default_rng(0)
    return {
        "emb": rng.standard_normal((4, 3)).astype(np.float32),
        "w": rng.standard_normal((3, 2)).astype(np.float32),
        "b": np.zeros(2, dtype=np.float32),
    }


def test_round_trip(tmp_path):
    path = tmp_path / "model.ckpt"
    arrays = sample_arrays()
    save_checkpoint(path, "tagger", {"hidden": 4}, {"word": ["<pad>", "a"]}, arrays)
    ckpt = load_checkpoint(path)
    assert ckpt.kind == "tagger"
    assert ckpt.config == {"hidden": 4}
    assert ckpt.vocabs == {"word": ["<pad>", "a"]}
    for name, arr in arrays.items():
        assert np.array_equal(ckpt.arrays[name], arr)
        assert ckpt.arrays[name].dtype == arr.dtype


def test_byte_identical_rewrites(tmp_path):
    arrays = sample_arrays()
    a = tmp_path / "a.ckpt"
    b = tmp_path / "b.ckpt"
    save_checkpoint(a, "realizer", {"variant": "vanilla"}, {"word": []}, arrays)
    save_checkpoint(b, "realizer", {"variant": "vanilla"}, {"word": []}, arrays)
    assert a.read_bytes() == b.read_bytes()


def test_rejects_foreign_files(tmp_path):
    path = tmp_path / "not.ckpt"
    path.write_bytes(b"something else entirely")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "absent.ckpt")
