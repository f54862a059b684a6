import numpy as np
import pytest

from pivotgen.noise import NoiseConfig, apply_noise, augment_batch, drop_noise, insert_noise


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(p_drop=1.5)
    with pytest.raises(ValueError):
        NoiseConfig(p_insert=-0.1)
    with pytest.raises(ValueError):
        NoiseConfig(apply_to="everything")


def test_drop_zero_probability_identity():
    rng = np.random.default_rng(0)
    seq = ["a", "b", "c"]
    assert drop_noise(seq, 0.0, rng) == seq


def test_drop_all_keeps_exactly_one():
    rng = np.random.default_rng(1)
    for _ in range(50):
        out = drop_noise(["a", "b", "c", "d"], 1.0, rng)
        assert len(out) == 1
        assert out[0] in "abcd"


def test_drop_requires_nonempty():
    with pytest.raises(ValueError):
        drop_noise([], 0.5, np.random.default_rng(0))


def test_drop_preserves_relative_order():
    rng = np.random.default_rng(2)
    seq = list("abcdefghij")
    for _ in range(200):
        out = drop_noise(seq, 0.4, rng)
        positions = [seq.index(t) for t in out]
        assert positions == sorted(positions)


def test_drop_monte_carlo_expectation():
    # 10-token sequence at p=0.1: mean surviving length 9.0 +/- 0.1
    rng = np.random.default_rng(3)
    seq = list("abcdefghij")
    lengths = [len(drop_noise(seq, 0.1, rng)) for _ in range(10_000)]
    assert np.mean(lengths) == pytest.approx(9.0, abs=0.1)


def test_insert_zero_probability_identity():
    rng = np.random.default_rng(4)
    seq = ["a", "b"]
    assert insert_noise(seq, 0.0, [["x"]], rng) == seq


def test_insert_requires_donors():
    with pytest.raises(ValueError):
        insert_noise(["a"], 0.5, [], np.random.default_rng(0))


def test_insert_length_accounting_and_order():
    rng = np.random.default_rng(5)
    seq = ["a", "b", "c", "d"]
    donors = [["x", "y"], ["z"]]
    for _ in range(200):
        out = insert_noise(seq, 0.5, donors, rng)
        inserted = len(out) - len(seq)
        assert inserted >= 0
        kept = [t for t in out if t in seq]
        assert kept == seq  # originals keep their relative order
        assert all(t in ("x", "y", "z") for t in out if t not in seq)
        assert inserted <= len(seq) + 1


def test_insert_monte_carlo_expectation():
    # 4 tokens at p=0.2: 5 gaps -> mean output length 5.0 +/- 0.05
    rng = np.random.default_rng(6)
    seq = ["a", "b", "c", "d"]
    donors = [["x"]]
    lengths = [len(insert_noise(seq, 0.2, donors, rng)) for _ in range(10_000)]
    assert np.mean(lengths) == pytest.approx(5.0, abs=0.05)


def test_augment_batch_zero_noise_unchanged():
    config = NoiseConfig(p_drop=0.0, p_insert=0.0)
    batch = [(["a", "b"], ["t", "u"])]
    assert augment_batch(batch, config, np.random.default_rng(0)) == batch


def test_augment_batch_targets_untouched():
    config = NoiseConfig(p_drop=0.3, p_insert=0.3, donors=[["x"]])
    targets = [["t1", "t2"], ["t3"]]
    batch = [(["a", "b", "c"], targets[0]), (["d", "e"], targets[1])]
    out = augment_batch(batch, config, np.random.default_rng(1))
    assert [tgt for _, tgt in out] == targets
    assert out[0][1] is targets[0]  # same object, byte identical


def test_augment_batch_deterministic_under_seed():
    config = NoiseConfig(p_drop=0.3, p_insert=0.3, donors=[["x", "y"]])
    batch = [(["a", "b", "c", "d"], ["t"])] * 4
    first = augment_batch(batch, config, np.random.default_rng(7))
    second = augment_batch(batch, config, np.random.default_rng(7))
    assert first == second


def test_apply_noise_composes_drop_then_insert():
    config = NoiseConfig(p_drop=1.0, p_insert=1.0, donors=[["x"]])
    out = apply_noise(["a", "b", "c"], config, np.random.default_rng(8))
    survivors = [t for t in out if t != "x"]
    assert len(survivors) == 1  # drop-all retention rule ran first
    assert len(out) == 1 + 2  # one survivor, both its gaps filled
