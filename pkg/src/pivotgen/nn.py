"""Neural building blocks: parameter registry, LSTM stacks, attention.

Parameter conventions: linear weights are stored (in_dim, out_dim) so a
batch activates as ``x @ w + b``. Recurrent stacks initialize uniformly
in [-0.1, 0.1]; transformer blocks use fan-in-scaled normals. All
randomness flows through explicit numpy Generators, so a fixed seed
reproduces parameters bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .autodiff import Tensor, concat, constant, dropout, stack

NEG_INF = -1e9


def uniform_init(rng: np.random.Generator, shape, scale: float = 0.1, dtype=np.float32):
    return rng.uniform(-scale, scale, size=shape).astype(dtype)


def fan_in_init(rng: np.random.Generator, shape, dtype=np.float32):
    std = 1.0 / math.sqrt(shape[0])
    return (rng.standard_normal(shape) * std).astype(dtype)


class ParamSet:
    """Ordered name -> Tensor registry shared by a model's layers."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, array: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor = Tensor(array, requires_grad=True)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def tensors(self):
        return list(self._params.values())

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.grad = None

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self._params.items()}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(arrays)
        if missing:
            raise KeyError(f"checkpoint missing parameters: {sorted(missing)}")
        for name, tensor in self._params.items():
            if arrays[name].shape != tensor.data.shape:
                raise ValueError(
                    f"shape mismatch for {name}: {arrays[name].shape} vs {tensor.data.shape}"
                )
            tensor.data = arrays[name].astype(tensor.data.dtype)


class Linear:
    def __init__(self, params, prefix, in_dim, out_dim, rng, init=uniform_init, dtype=np.float32):
        self.w = params.add(f"{prefix}.w", init(rng, (in_dim, out_dim), dtype=dtype))
        self.b = params.add(f"{prefix}.b", np.zeros(out_dim, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.w + self.b


class LayerNorm:
    def __init__(self, params, prefix, dim, dtype=np.float32, eps: float = 1e-5):
        self.gain = params.add(f"{prefix}.gain", np.ones(dim, dtype=dtype))
        self.bias = params.add(f"{prefix}.bias", np.zeros(dim, dtype=dtype))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        centered = x - x.mean(axis=-1, keepdims=True)
        var = (centered * centered).mean(axis=-1, keepdims=True)
        return centered * (var + self.eps).pow(-0.5) * self.gain + self.bias


class LSTM:
    """Single-layer LSTM; gate order in the fused weight is i, f, g, o."""

    def __init__(self, params, prefix, input_dim, hidden_dim, rng, dtype=np.float32):
        self.hidden_dim = hidden_dim
        self.wx = params.add(f"{prefix}.wx", uniform_init(rng, (input_dim, 4 * hidden_dim), dtype=dtype))
        self.wh = params.add(f"{prefix}.wh", uniform_init(rng, (hidden_dim, 4 * hidden_dim), dtype=dtype))
        self.b = params.add(f"{prefix}.b", uniform_init(rng, (4 * hidden_dim,), dtype=dtype))
        self.dtype = dtype

    def initial_state(self, batch: int) -> tuple[Tensor, Tensor]:
        zeros = np.zeros((batch, self.hidden_dim), dtype=self.dtype)
        return constant(zeros), constant(zeros.copy())

    def step(self, x_t: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        hd = self.hidden_dim
        gates = x_t @ self.wx + h @ self.wh + self.b
        i = gates[:, :hd].sigmoid()
        f = gates[:, hd : 2 * hd].sigmoid()
        g = gates[:, 2 * hd : 3 * hd].tanh()
        o = gates[:, 3 * hd :].sigmoid()
        c_next = f * c + i * g
        h_next = o * c_next.tanh()
        return h_next, c_next

    def run(self, xs: Tensor, mask: np.ndarray | None = None, reverse: bool = False,
            state: tuple[Tensor, Tensor] | None = None):
        """Run over a (batch, time, input) tensor.

        ``mask`` (batch, time) freezes the state on padded steps, which
        makes the reverse direction start, effectively, at each sample's
        true last token. Returns (outputs (B,T,H), final_h, final_c).
        """
        batch, steps, _ = xs.data.shape
        h, c = state if state is not None else self.initial_state(batch)
        outputs: list[Tensor | None] = [None] * steps
        order = range(steps - 1, -1, -1) if reverse else range(steps)
        for t in order:
            h_new, c_new = self.step(xs[:, t, :], h, c)
            if mask is not None:
                keep = constant(mask[:, t : t + 1].astype(self.dtype))
                gone = constant(1.0 - mask[:, t : t + 1].astype(self.dtype))
                h = h_new * keep + h * gone
                c = c_new * keep + c * gone
            else:
                h, c = h_new, c_new
            outputs[t] = h
        return stack(outputs, axis=1), h, c


class BiLSTM:
    """Two independent directions, outputs concatenated feature-wise."""

    def __init__(self, params, prefix, input_dim, hidden_dim, rng, dtype=np.float32):
        self.fwd = LSTM(params, f"{prefix}.fwd", input_dim, hidden_dim, rng, dtype)
        self.bwd = LSTM(params, f"{prefix}.bwd", input_dim, hidden_dim, rng, dtype)

    def run(self, xs: Tensor, mask: np.ndarray | None = None):
        out_f, h_f, c_f = self.fwd.run(xs, mask, reverse=False)
        out_b, h_b, c_b = self.bwd.run(xs, mask, reverse=True)
        return concat([out_f, out_b], axis=2), (h_f, c_f), (h_b, c_b)


def sinusoidal_positions(length: int, dim: int, dtype=np.float32) -> np.ndarray:
    positions = np.arange(length, dtype=np.float64)[:, None]
    div = np.exp(np.arange(0, dim, 2, dtype=np.float64) * (-math.log(10000.0) / dim))
    table = np.zeros((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(positions * div)
    table[:, 1::2] = np.cos(positions * div[: (dim - dim // 2)])
    return table.astype(dtype)


def causal_mask(length: int, dtype=np.float32) -> np.ndarray:
    """(1, 1, T, T) additive mask hiding future positions."""
    mask = np.triu(np.full((length, length), NEG_INF, dtype=dtype), k=1)
    return mask[None, None, :, :]


def key_padding_mask(mask: np.ndarray, dtype=np.float32) -> np.ndarray:
    """(B, 1, 1, T) additive mask hiding padded key positions."""
    return np.where(mask.astype(bool), 0.0, NEG_INF).astype(dtype)[:, None, None, :]


class MultiHeadAttention:
    def __init__(self, params, prefix, d_model, heads, rng, dtype=np.float32):
        if d_model % heads != 0:
            raise ValueError(f"model dim {d_model} not divisible by {heads} heads")
        self.heads = heads
        self.head_dim = d_model // heads
        self.scale = 1.0 / math.sqrt(self.head_dim)
        self.wq = Linear(params, f"{prefix}.wq", d_model, d_model, rng, fan_in_init, dtype)
        self.wk = Linear(params, f"{prefix}.wk", d_model, d_model, rng, fan_in_init, dtype)
        self.wv = Linear(params, f"{prefix}.wv", d_model, d_model, rng, fan_in_init, dtype)
        self.wo = Linear(params, f"{prefix}.wo", d_model, d_model, rng, fan_in_init, dtype)

    def __call__(self, query: Tensor, memory: Tensor, mask: np.ndarray | None = None) -> Tensor:
        b, tq, d = query.data.shape
        tk = memory.data.shape[1]

        def split(x: Tensor, t: int) -> Tensor:
            return x.reshape(b, t, self.heads, self.head_dim).transpose((0, 2, 1, 3))

        q = split(self.wq(query), tq)
        k = split(self.wk(memory), tk)
        v = split(self.wv(memory), tk)
        scores = (q @ k.transpose((0, 1, 3, 2))) * self.scale
        if mask is not None:
            scores = scores + constant(mask)
        weights = scores.softmax(axis=-1)
        context = (weights @ v).transpose((0, 2, 1, 3)).reshape(b, tq, d)
        return self.wo(context)


class FeedForward:
    def __init__(self, params, prefix, d_model, d_ff, rng, dtype=np.float32):
        self.inner = Linear(params, f"{prefix}.inner", d_model, d_ff, rng, fan_in_init, dtype)
        self.outer = Linear(params, f"{prefix}.outer", d_ff, d_model, rng, fan_in_init, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(self.inner(x).relu())


class TransformerEncoderBlock:
    """Pre-norm residual block: self-attention then feed-forward."""

    def __init__(self, params, prefix, d_model, d_ff, heads, rng, dtype=np.float32):
        self.ln1 = LayerNorm(params, f"{prefix}.ln1", d_model, dtype)
        self.attn = MultiHeadAttention(params, f"{prefix}.attn", d_model, heads, rng, dtype)
        self.ln2 = LayerNorm(params, f"{prefix}.ln2", d_model, dtype)
        self.ff = FeedForward(params, f"{prefix}.ff", d_model, d_ff, rng, dtype)

    def __call__(self, x, pad_mask, p_drop, rng, training):
        normed = self.ln1(x)
        x = x + dropout(self.attn(normed, normed, pad_mask), p_drop, rng, training)
        x = x + dropout(self.ff(self.ln2(x)), p_drop, rng, training)
        return x


class TransformerDecoderBlock:
    """Pre-norm block: causal self-attention, source attention, feed-forward."""

    def __init__(self, params, prefix, d_model, d_ff, heads, rng, dtype=np.float32):
        self.ln1 = LayerNorm(params, f"{prefix}.ln1", d_model, dtype)
        self.self_attn = MultiHeadAttention(params, f"{prefix}.self", d_model, heads, rng, dtype)
        self.ln2 = LayerNorm(params, f"{prefix}.ln2", d_model, dtype)
        self.cross_attn = MultiHeadAttention(params, f"{prefix}.cross", d_model, heads, rng, dtype)
        self.ln3 = LayerNorm(params, f"{prefix}.ln3", d_model, dtype)
        self.ff = FeedForward(params, f"{prefix}.ff", d_model, d_ff, rng, dtype)

    def __call__(self, x, memory, self_mask, memory_mask, p_drop, rng, training):
        normed = self.ln1(x)
        x = x + dropout(self.self_attn(normed, normed, self_mask), p_drop, rng, training)
        x = x + dropout(self.cross_attn(self.ln2(x), memory, memory_mask), p_drop, rng, training)
        x = x + dropout(self.ff(self.ln3(x)), p_drop, rng, training)
        return x


def global_grad_norm(params: ParamSet) -> float:
    total = 0.0
    for tensor in params.tensors():
        if tensor.grad is not None:
            total += float((tensor.grad.astype(np.float64) ** 2).sum())
    return math.sqrt(total)
