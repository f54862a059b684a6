import math

import numpy as np
import pytest

from pivotgen.corpus import Record, Table, Vocabulary, build_vocabulary, linearize
from pivotgen.tagger import TaggerConfig, TaggerModel, evaluate_prf

SMALL = dict(hidden_dim=8, word_emb_dim=6, attr_emb_dim=4, pos_emb_dim=2, dropout=0.0)


def small_model(seed=0, dtype="float64", **overrides):
    config = TaggerConfig(seed=seed, dtype=dtype, **{**SMALL, **overrides})
    word_vocab = build_vocabulary([["alpha", "beta", "gamma", "delta"]], cap=100)
    attr_vocab = build_vocabulary([["name", "born"]], cap=100)
    return TaggerModel(config, word_vocab, attr_vocab)


def toy_table():
    return linearize(Table([Record("name", ["alpha", "beta"]), Record("born", ["gamma"])]))


def test_input_dim_concatenates_both_positions():
    config = TaggerConfig()
    assert config.input_dim == 400 + 50 + 2 * 5


def test_embed_shapes():
    model = small_model()
    batch = model.make_batch([toy_table()])
    features = model.embed(batch)
    assert features.data.shape == (1, 3, 6 + 4 + 2 + 2)


def test_embed_unknown_word_uses_unk_row():
    model = small_model()
    table = linearize(Table([Record("name", ["zzz-not-in-vocab"])]))
    batch = model.make_batch([table])
    assert batch.word_ids[0, 0] == 1  # UNK
    assert model.embed(batch).data.shape == (1, 1, 14)


def test_encode_output_dims():
    model = small_model()
    batch = model.make_batch([toy_table()])
    hidden = model.encode(model.embed(batch), batch.mask)
    assert hidden.data.shape == (1, 3, 2 * 8)


def test_encode_single_token():
    model = small_model()
    table = linearize(Table([Record("name", ["alpha"])]))
    batch = model.make_batch([table])
    hidden = model.encode(model.embed(batch), batch.mask)
    assert hidden.data.shape == (1, 1, 16)


def test_encode_zero_parameters_gives_zero_outputs():
    # all-zero LSTM weights: gates are 0.5/0.5/0/0.5, cell stays 0, h stays 0
    model = small_model()
    for name, tensor in model.params.items():
        if name.startswith("encoder."):
            tensor.data = np.zeros_like(tensor.data)
    batch = model.make_batch([toy_table()])
    hidden = model.encode(model.embed(batch), batch.mask)
    assert np.allclose(hidden.data, 0.0)
    assert np.allclose(hidden.data[0, 0], hidden.data[0, 2])


def test_classify_zero_weights_uniform():
    model = small_model()
    model.params["classifier.w"].data[:] = 0.0
    model.params["classifier.b"].data[:] = 0.0
    batch = model.make_batch([toy_table()])
    probs = model.logits(batch).softmax(axis=-1).data
    assert np.allclose(probs, 0.5)


def test_classify_bias_dominates():
    model = small_model()
    model.params["classifier.w"].data[:] = 0.0
    model.params["classifier.b"].data[:] = np.array([0.0, 10.0])
    batch = model.make_batch([toy_table()])
    probs = model.logits(batch).softmax(axis=-1).data
    expected_low = 1.0 / (1.0 + math.exp(10.0))
    assert probs[0, 0, 0] == pytest.approx(expected_low, rel=1e-6)
    assert probs[0, 0, 1] == pytest.approx(1.0 - expected_low, rel=1e-6)


def test_probabilities_normalized_everywhere():
    model = small_model(seed=3)
    tables = [toy_table(), linearize(Table([Record("born", ["delta"])]))]
    batch = model.make_batch(tables)
    probs = model.logits(batch).softmax(axis=-1).data
    assert np.allclose(probs.sum(axis=-1), 1.0, atol=1e-6)


def test_loss_uniform_prediction():
    model = small_model()
    model.params["classifier.w"].data[:] = 0.0
    model.params["classifier.b"].data[:] = 0.0
    table = linearize(Table([Record("name", ["alpha", "beta", "gamma", "delta"])]))
    loss = model.loss([table], [[1, 0, 1, 0]], training=False)
    assert float(loss.data) == pytest.approx(4 * math.log(2), rel=1e-6)


def test_loss_nonnegative_and_mismatch_raises():
    model = small_model(seed=1)
    table = toy_table()
    assert float(model.loss([table], [[1, 0, 1]], training=False).data) >= 0.0
    with pytest.raises(ValueError):
        model.loss([table], [[1, 0]], training=False)


def test_loss_gradient_matches_finite_differences():
    model = small_model(seed=2, dtype="float64")
    table = toy_table()
    labels = [[1, 0, 1]]

    def loss_value():
        return float(model.loss([table], labels, training=False).data)

    model.params.zero_grad()
    model.loss([table], labels, training=False).backward()
    eps = 1e-6
    rng = np.random.default_rng(0)
    for name, tensor in model.params.items():
        flat = tensor.data.reshape(-1)
        grad_flat = (tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)).reshape(-1)
        for i in rng.choice(flat.size, size=min(4, flat.size), replace=False):
            orig = flat[i]
            flat[i] = orig + eps
            plus = loss_value()
            flat[i] = orig - eps
            minus = loss_value()
            flat[i] = orig
            numeric = (plus - minus) / (2 * eps)
            if abs(numeric) < 1e-6 and abs(grad_flat[i]) < 1e-6:
                continue
            denom = max(1e-8, abs(numeric) + abs(grad_flat[i]))
            assert abs(numeric - grad_flat[i]) / denom < 1e-3, name


def test_predict_tie_resolves_to_one():
    model = small_model()
    model.params["classifier.w"].data[:] = 0.0
    model.params["classifier.b"].data[:] = 0.0  # exact 0.5/0.5 everywhere
    prediction = model.predict(toy_table())
    assert prediction.labels == [1, 1, 1]


def test_predict_probabilities_aligned():
    model = small_model(seed=4)
    prediction = model.predict(toy_table())
    assert prediction.probabilities.shape == (3, 2)
    for probs, label in zip(prediction.probabilities, prediction.labels):
        assert label == (1 if probs[1] >= 0.5 else 0)


def test_batch_prediction_equals_per_sample():
    model = small_model(seed=5)
    tables = [
        toy_table(),
        linearize(Table([Record("born", ["delta", "alpha", "beta", "gamma"])])),
        linearize(Table([Record("name", ["gamma"])])),
    ]
    batched = model.predict_batch(tables)
    for table, joint in zip(tables, batched):
        single = model.predict(table)
        assert joint.labels == single.labels
        assert np.allclose(joint.probabilities, single.probabilities, atol=1e-9)


def test_evaluate_prf_hand_counts():
    precision, recall, f1 = evaluate_prf([[1, 1, 1, 0]], [[1, 0, 1, 1]])
    assert precision == pytest.approx(2 / 3)
    assert recall == pytest.approx(2 / 3)
    assert f1 == pytest.approx(2 / 3)


def test_evaluate_prf_perfect_and_degenerate():
    assert evaluate_prf([[1, 0, 1]], [[1, 0, 1]]) == (1.0, 1.0, 1.0)
    assert evaluate_prf([[0, 0]], [[1, 1]]) == (0.0, 0.0, 0.0)


def test_evaluate_prf_macro_mode():
    micro = evaluate_prf([[1, 0], [0, 1]], [[1, 1], [0, 1]], average="micro")
    macro = evaluate_prf([[1, 0], [0, 1]], [[1, 1], [0, 1]], average="macro")
    assert micro[2] == pytest.approx(2 * (2 / 2) * (2 / 3) / ((2 / 2) + (2 / 3)))
    assert macro[2] == pytest.approx((2 * 1 * 0.5 / 1.5 + 1.0) / 2)


def test_checkpoint_round_trip(tmp_path):
    model = small_model(seed=6, dtype="float32")
    path = tmp_path / "tagger.ckpt"
    model.save(path)
    restored = TaggerModel.load(path)
    table = toy_table()
    assert restored.predict(table).labels == model.predict(table).labels
    model.save(tmp_path / "again.ckpt")
    assert (tmp_path / "again.ckpt").read_bytes() == path.read_bytes()
