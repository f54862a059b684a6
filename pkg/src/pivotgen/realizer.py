"""Stage 2: generate text from a key-fact token sequence.

Two interchangeable architectures behind one interface: an attention
Seq2Seq (Bi-LSTM encoder, LSTM decoder with bilinear global attention)
and an encoder-decoder Transformer (pre-norm blocks, sinusoidal
positions, causal decoder masking). The encoder sees word embeddings
only; attribute and position features belong to stage 1. Decoding is
greedy: per-step argmax, stopping at EOS or the configured length cap.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .autodiff import Tensor, concat, constant, dropout, embedding, gather_last
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .corpus import BOS_ID, EOS_ID, PAD_ID, UNK_ID, Vocabulary
from .nn import (
    NEG_INF,
    BiLSTM,
    LayerNorm,
    Linear,
    LSTM,
    ParamSet,
    TransformerDecoderBlock,
    TransformerEncoderBlock,
    causal_mask,
    fan_in_init,
    key_padding_mask,
    sinusoidal_positions,
    uniform_init,
)

VARIANTS = ("vanilla", "transformer")


@dataclass
class RealizerConfig:
    variant: str = "vanilla"
    # vanilla dimensions
    hidden_dim: int = 500
    emb_dim: int = 400
    # transformer dimensions
    d_model: int = 512
    d_ff: int = 2048
    heads: int = 8
    blocks: int = 6
    dropout: float = 0.2
    max_decode_len: int = 60
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.d_model % self.heads != 0:
            raise ValueError("transformer model dim must be divisible by head count")


@dataclass
class DecodeResult:
    tokens: list[str]
    terminated_by: str  # "eos" or "max_length"
    distributions: np.ndarray | None = None  # (steps, vocab) when requested


def _pad_ids(sequences: list[list[int]], dtype=np.float32):
    width = max(len(s) for s in sequences)
    ids = np.full((len(sequences), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(sequences), width), dtype=dtype)
    for i, seq in enumerate(sequences):
        ids[i, : len(seq)] = seq
        mask[i, : len(seq)] = 1.0
    return ids, mask


class _RealizerBase:
    config: RealizerConfig
    vocab: Vocabulary
    params: ParamSet

    def encode_sources(self, sources: list[list[str]]):
        ids = [self.vocab.encode(s) if s else [UNK_ID] for s in sources]
        return _pad_ids(ids, self.dtype)

    def encode_targets(self, targets: list[list[str]]):
        """Teacher-forcing pair: BOS-shifted inputs and EOS-closed outputs."""
        dec_in, dec_out = [], []
        for t in targets:
            ids = self.vocab.encode(t)
            dec_in.append([BOS_ID] + ids)
            dec_out.append(ids + [EOS_ID])
        in_ids, mask = _pad_ids(dec_in, self.dtype)
        out_ids, _ = _pad_ids(dec_out, self.dtype)
        return in_ids, out_ids, mask

    def sequence_loss(self, sources, targets, training: bool = True,
                      rng: np.random.Generator | None = None) -> Tensor:
        """Token-summed, batch-averaged NLL under teacher forcing.

        The same mechanics serve parallel pairs (key facts -> text) and
        pseudo pairs (content words -> text).
        """
        if len(sources) != len(targets):
            raise ValueError("source/target batch sizes differ")
        if any(len(t) == 0 for t in targets):
            raise ValueError("targets must be non-empty")
        src_ids, src_mask = self.encode_sources(sources)
        in_ids, out_ids, tgt_mask = self.encode_targets(targets)
        logits = self._teacher_logits(src_ids, src_mask, in_ids, training, rng)
        log_probs = logits.log_softmax(axis=-1)
        picked = gather_last(log_probs, out_ids)
        return -(picked * Tensor(tgt_mask)).sum() / len(sources)

    def greedy_decode(self, sources, max_len: int | None = None,
                      return_distributions: bool = False) -> list[DecodeResult]:
        """Batched per-step argmax; PAD and BOS never appear in the output."""
        max_len = max_len or self.config.max_decode_len
        src_ids, src_mask = self.encode_sources(sources)
        batch = len(sources)
        state = self._decode_init(src_ids, src_mask)
        prev = np.full(batch, BOS_ID, dtype=np.int64)
        emitted = [[] for _ in range(batch)]
        dists = [[] for _ in range(batch)] if return_distributions else None
        done = np.zeros(batch, dtype=bool)
        for _ in range(max_len):
            probs, state = self._decode_step(prev, state)
            masked_probs = probs.copy()
            masked_probs[:, PAD_ID] = -1.0
            masked_probs[:, BOS_ID] = -1.0
            choices = masked_probs.argmax(axis=1)
            for i in range(batch):
                if done[i]:
                    continue
                if return_distributions:
                    dists[i].append(probs[i])
                if choices[i] == EOS_ID:
                    done[i] = True
                else:
                    emitted[i].append(int(choices[i]))
            if done.all():
                break
            prev = np.where(done, PAD_ID, choices)
        results = []
        for i in range(batch):
            results.append(
                DecodeResult(
                    tokens=self.vocab.decode(emitted[i]),
                    terminated_by="eos" if done[i] else "max_length",
                    distributions=np.stack(dists[i]) if return_distributions and dists[i] else None,
                )
            )
        return results

    # subclass hooks ---------------------------------------------------

    def _teacher_logits(self, src_ids, src_mask, in_ids, training, rng) -> Tensor:
        raise NotImplementedError

    def _decode_init(self, src_ids, src_mask):
        raise NotImplementedError

    def _decode_step(self, prev_ids, state):
        raise NotImplementedError

    # persistence --------------------------------------------------------

    def save(self, path) -> None:
        save_checkpoint(
            path,
            kind="realizer",
            config=asdict(self.config),
            vocabs={"word": self.vocab.itos},
            arrays=self.params.state_arrays(),
        )


class VanillaRealizer(_RealizerBase):
    """Bi-LSTM encoder + LSTM decoder with bilinear global attention."""

    def __init__(self, config: RealizerConfig, vocab: Vocabulary):
        assert config.variant == "vanilla"
        self.config = config
        self.vocab = vocab
        self.dtype = np.dtype(config.dtype)
        rng = np.random.default_rng(config.seed)
        params = ParamSet()
        dt, emb, hid = self.dtype, config.emb_dim, config.hidden_dim
        self.src_emb = params.add("src_emb", uniform_init(rng, (len(vocab), emb), dtype=dt))
        self.tgt_emb = params.add("tgt_emb", uniform_init(rng, (len(vocab), emb), dtype=dt))
        self.encoder = BiLSTM(params, "encoder", emb, hid, rng, dt)
        self.bridge_h = Linear(params, "bridge_h", 2 * hid, hid, rng, uniform_init, dt)
        self.bridge_c = Linear(params, "bridge_c", 2 * hid, hid, rng, uniform_init, dt)
        self.decoder = LSTM(params, "decoder", emb, hid, rng, dt)
        # bilinear attention score: (s_t W_a) . h_i
        self.attn_w = params.add("attn_w", uniform_init(rng, (hid, 2 * hid), dtype=dt))
        self.combine = Linear(params, "combine", 3 * hid, hid, rng, uniform_init, dt)
        self.generator = Linear(params, "generator", hid, len(vocab), rng, uniform_init, dt)
        self.params = params

    def encode_source(self, src_ids: np.ndarray, src_mask: np.ndarray,
                      training: bool = False, rng=None):
        """Encoder outputs plus the bridged initial decoder state."""
        emb = dropout(embedding(self.src_emb, src_ids), self.config.dropout, rng, training)
        enc_out, (h_f, c_f), (h_b, c_b) = self.encoder.run(emb, src_mask)
        enc_out = dropout(enc_out, self.config.dropout, rng, training)
        h0 = self.bridge_h(concat([h_f, h_b], axis=1)).tanh()
        c0 = self.bridge_c(concat([c_f, c_b], axis=1)).tanh()
        return enc_out, h0, c0

    def decode_step(self, prev_ids: np.ndarray, h: Tensor, c: Tensor, enc_out: Tensor,
                    src_mask: np.ndarray, training: bool = False, rng=None):
        """One decoder step: LSTM, attention over the source, vocab logits.

        Returns (h, c, v, logits, attention weights).
        """
        b, s, _ = enc_out.data.shape
        y_emb = dropout(embedding(self.tgt_emb, prev_ids), self.config.dropout, rng, training)
        h, c = self.decoder.step(y_emb, h, c)
        query = (h @ self.attn_w).reshape(b, 1, 2 * self.config.hidden_dim)
        scores = (enc_out * query).sum(axis=2)
        additive = np.where(src_mask.astype(bool), 0.0, NEG_INF).astype(self.dtype)
        weights = (scores + constant(additive)).softmax(axis=-1)
        context = (enc_out * weights.reshape(b, s, 1)).sum(axis=1)
        v = self.combine(concat([h, context], axis=1)).tanh()
        v = dropout(v, self.config.dropout, rng, training)
        logits = self.generator(v)
        return h, c, v, logits, weights

    def _teacher_logits(self, src_ids, src_mask, in_ids, training, rng) -> Tensor:
        enc_out, h, c = self.encode_source(src_ids, src_mask, training, rng)
        steps = []
        for t in range(in_ids.shape[1]):
            h, c, _, logits, _ = self.decode_step(
                in_ids[:, t], h, c, enc_out, src_mask, training, rng
            )
            steps.append(logits.reshape(logits.data.shape[0], 1, -1))
        return concat(steps, axis=1)

    def _decode_init(self, src_ids, src_mask):
        enc_out, h, c = self.encode_source(src_ids, src_mask, training=False)
        return {"enc_out": enc_out, "src_mask": src_mask, "h": h, "c": c}

    def _decode_step(self, prev_ids, state):
        h, c, _, logits, _ = self.decode_step(
            prev_ids, state["h"], state["c"], state["enc_out"], state["src_mask"]
        )
        state["h"], state["c"] = h, c
        probs = logits.softmax(axis=-1).data.astype(np.float64)
        return probs, state


class TransformerRealizer(_RealizerBase):
    """Pre-norm encoder-decoder Transformer with sinusoidal positions."""

    def __init__(self, config: RealizerConfig, vocab: Vocabulary):
        assert config.variant == "transformer"
        self.config = config
        self.vocab = vocab
        self.dtype = np.dtype(config.dtype)
        rng = np.random.default_rng(config.seed)
        params = ParamSet()
        dt, d = self.dtype, config.d_model
        self.src_emb = params.add("src_emb", fan_in_init(rng, (len(vocab), d), dtype=dt))
        self.tgt_emb = params.add("tgt_emb", fan_in_init(rng, (len(vocab), d), dtype=dt))
        self.enc_blocks = [
            TransformerEncoderBlock(params, f"enc{i}", d, config.d_ff, config.heads, rng, dt)
            for i in range(config.blocks)
        ]
        self.dec_blocks = [
            TransformerDecoderBlock(params, f"dec{i}", d, config.d_ff, config.heads, rng, dt)
            for i in range(config.blocks)
        ]
        self.enc_norm = LayerNorm(params, "enc_norm", d, dt)
        self.dec_norm = LayerNorm(params, "dec_norm", d, dt)
        self.generator = Linear(params, "generator", d, len(vocab), rng, fan_in_init, dt)
        self.scale = math.sqrt(d)
        self.params = params

    def _embed_positions(self, table: Tensor, ids: np.ndarray, training, rng) -> Tensor:
        x = embedding(table, ids) * self.scale
        pe = sinusoidal_positions(ids.shape[1], self.config.d_model, self.dtype)
        x = x + constant(pe[None, :, :])
        return dropout(x, self.config.dropout, rng, training)

    def encode_source(self, src_ids: np.ndarray, src_mask: np.ndarray,
                      training: bool = False, rng=None) -> Tensor:
        x = self._embed_positions(self.src_emb, src_ids, training, rng)
        pad = key_padding_mask(src_mask, self.dtype)
        for block in self.enc_blocks:
            x = block(x, pad, self.config.dropout, rng, training)
        return self.enc_norm(x)

    def decode_logits(self, in_ids: np.ndarray, memory: Tensor, src_mask: np.ndarray,
                      training: bool = False, rng=None) -> Tensor:
        """Logits for every prefix position under the causal mask."""
        y = self._embed_positions(self.tgt_emb, in_ids, training, rng)
        self_mask = causal_mask(in_ids.shape[1], self.dtype)
        mem_mask = key_padding_mask(src_mask, self.dtype)
        for block in self.dec_blocks:
            y = block(y, memory, self_mask, mem_mask, self.config.dropout, rng, training)
        return self.generator(self.dec_norm(y))

    def step_distribution(self, source: list[str], prefix: list[str]) -> np.ndarray:
        """Next-token distribution after a decoded prefix (single sample)."""
        src_ids, src_mask = self.encode_sources([source])
        memory = self.encode_source(src_ids, src_mask)
        in_ids = np.array([[BOS_ID] + self.vocab.encode(prefix)], dtype=np.int64)
        logits = self.decode_logits(in_ids, memory, src_mask)
        return logits[:, -1, :].softmax(axis=-1).data[0].astype(np.float64)

    def _teacher_logits(self, src_ids, src_mask, in_ids, training, rng) -> Tensor:
        memory = self.encode_source(src_ids, src_mask, training, rng)
        return self.decode_logits(in_ids, memory, src_mask, training, rng)

    def _decode_init(self, src_ids, src_mask):
        memory = self.encode_source(src_ids, src_mask, training=False)
        batch = src_ids.shape[0]
        return {
            "memory": memory,
            "src_mask": src_mask,
            "prefix": np.full((batch, 0), PAD_ID, dtype=np.int64),
        }

    def _decode_step(self, prev_ids, state):
        state["prefix"] = np.concatenate([state["prefix"], prev_ids[:, None]], axis=1)
        logits = self.decode_logits(state["prefix"], state["memory"], state["src_mask"])
        probs = logits[:, -1, :].softmax(axis=-1).data.astype(np.float64)
        return probs, state


def build_realizer(config: RealizerConfig, vocab: Vocabulary) -> _RealizerBase:
    if config.variant == "vanilla":
        return VanillaRealizer(config, vocab)
    return TransformerRealizer(config, vocab)


def load_realizer(path) -> _RealizerBase:
    ckpt = load_checkpoint(path)
    return realizer_from_checkpoint(ckpt)


def realizer_from_checkpoint(ckpt: Checkpoint) -> _RealizerBase:
    if ckpt.kind != "realizer":
        raise ValueError(f"expected a realizer checkpoint, got {ckpt.kind!r}")
    config = RealizerConfig(**ckpt.config)
    model = build_realizer(config, Vocabulary(itos=ckpt.vocabs["word"]))
    model.params.load_state(ckpt.arrays)
    return model
