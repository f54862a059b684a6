"""Finite-difference verification of the autodiff engine in float64."""

import numpy as np
import pytest

from pivotgen.autodiff import Tensor, concat, dropout, embedding, gather_last, stack


def numeric_grad(fn, tensor, eps=1e-6):
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    flat_grad = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        plus = float(fn().data)
        flat[i] = orig - eps
        minus = float(fn().data)
        flat[i] = orig
        flat_grad[i] = (plus - minus) / (2 * eps)
    return grad


def check_grads(fn, tensors, rtol=1e-5):
    for tensor in tensors:
        tensor.grad = None
    out = fn()
    out.backward()
    for tensor in tensors:
        analytic = tensor.grad.copy()
        numeric = numeric_grad(fn, tensor)
        denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
        assert (np.abs(analytic - numeric) / denom).max() < rtol


def rand(shape, seed):
    return Tensor(np.random.default_rng(seed).standard_normal(shape), requires_grad=True)


def test_add_mul_broadcast():
    a = rand((3, 4), 0)
    b = rand((4,), 1)
    check_grads(lambda: ((a + b) * b + a * 2.0).sum(), [a, b])


def test_matmul_2d():
    a = rand((3, 4), 0)
    b = rand((4, 2), 1)
    check_grads(lambda: (a @ b).sum(), [a, b])


def test_matmul_batched_with_shared_weight():
    x = rand((2, 3, 4), 0)
    w = rand((4, 5), 1)
    check_grads(lambda: (x @ w).tanh().sum(), [x, w])


def test_matmul_batched_both_sides():
    a = rand((2, 2, 3, 4), 0)
    b = rand((2, 2, 4, 3), 1)
    check_grads(lambda: (a @ b).sum(), [a, b])


def test_activations():
    x = rand((4, 3), 2)
    check_grads(lambda: x.tanh().sum(), [x])
    check_grads(lambda: x.sigmoid().sum(), [x])
    check_grads(lambda: (x * x).relu().sum(), [x])


def test_pow_scalar():
    x = Tensor(np.abs(np.random.default_rng(0).standard_normal((3, 3))) + 0.5,
               requires_grad=True)
    check_grads(lambda: x.pow(-0.5).sum(), [x])


def test_softmax_and_log_softmax():
    x = rand((3, 5), 3)
    w = rand((5,), 4)
    check_grads(lambda: (x.softmax(axis=-1) * w).sum(), [x, w])
    check_grads(lambda: (x.log_softmax(axis=-1) * w).sum(), [x, w])


def test_softmax_rows_normalized():
    x = rand((6, 9), 5)
    rows = x.softmax(axis=-1).data.sum(axis=-1)
    assert np.allclose(rows, 1.0, atol=1e-12)


def test_reductions_and_reshape():
    x = rand((2, 3, 4), 6)
    check_grads(lambda: x.sum(axis=1).tanh().sum(), [x])
    check_grads(lambda: x.mean(axis=2, keepdims=True).sum(), [x])
    check_grads(lambda: x.reshape(6, 4).tanh().sum(), [x])
    check_grads(lambda: x.transpose((2, 0, 1)).tanh().sum(), [x])


def test_getitem_slice():
    x = rand((4, 6), 7)
    check_grads(lambda: x[:, 2:5].tanh().sum(), [x])


def test_concat_and_stack():
    a = rand((2, 3), 8)
    b = rand((2, 2), 9)
    check_grads(lambda: concat([a, b], axis=1).tanh().sum(), [a, b])
    c = rand((2, 3), 10)
    check_grads(lambda: stack([a, c], axis=1).tanh().sum(), [a, c])


def test_embedding_gradients_accumulate_repeats():
    table = rand((5, 3), 11)
    idx = np.array([[0, 2, 0], [4, 0, 2]])
    check_grads(lambda: embedding(table, idx).tanh().sum(), [table])


def test_gather_last():
    x = rand((3, 4, 6), 12)
    idx = np.array([[0, 5, 2, 2], [1, 1, 3, 0], [4, 2, 0, 5]])
    check_grads(lambda: gather_last(x.log_softmax(axis=-1), idx).sum(), [x])


def test_reused_node_accumulates():
    x = rand((3,), 13)
    check_grads(lambda: (x.tanh() * x.tanh() + x * x).sum(), [x])


def test_no_grad_graph_is_not_recorded():
    x = Tensor(np.ones((2, 2)))
    y = (x @ x).tanh()
    assert not y.requires_grad
    assert y._backward is None


def test_dropout_identity_when_disabled():
    x = rand((4, 4), 14)
    rng = np.random.default_rng(0)
    assert dropout(x, 0.0, rng, training=True) is x
    assert dropout(x, 0.5, rng, training=False) is x


def test_dropout_scales_kept_entries():
    x = Tensor(np.ones((1000,)), requires_grad=True)
    rng = np.random.default_rng(1)
    out = dropout(x, 0.25, rng, training=True)
    kept = out.data[out.data > 0]
    assert np.allclose(kept, 1.0 / 0.75)
    assert abs(kept.size / 1000 - 0.75) < 0.05


def test_backward_requires_scalar():
    x = rand((2, 2), 15)
    with pytest.raises(ValueError):
        x.backward()
