"""Stage 1: Bi-LSTM key-fact tagger over the linearized table.

Every table token is embedded as the concatenation of a word embedding,
an attribute embedding, and one shared position embedding applied to
both offsets of its position tuple. A single-layer Bi-LSTM encodes the
sequence and an affine + softmax head emits a per-token probability of
being a key fact. Ties at exactly 0.5 resolve to label 1 so borderline
tokens reach stage 2.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tensor, concat, dropout, embedding, gather_last
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .corpus import PAD_ID, LinearizedTable, Vocabulary
from .nn import BiLSTM, Linear, ParamSet, uniform_init


@dataclass
class TaggerConfig:
    hidden_dim: int = 500
    word_emb_dim: int = 400
    attr_emb_dim: int = 50
    pos_emb_dim: int = 5
    word_vocab_cap: int = 20000
    attr_vocab_cap: int = 1000
    max_position: int = 30
    dropout: float = 0.2
    seed: int = 0
    dtype: str = "float32"

    @property
    def input_dim(self) -> int:
        # both p+ and p- are embedded through the shared position table
        return self.word_emb_dim + self.attr_emb_dim + 2 * self.pos_emb_dim

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden_dim


@dataclass
class TaggerPrediction:
    probabilities: np.ndarray  # (tokens, 2), rows sum to 1
    labels: list[int]


@dataclass
class TaggerBatch:
    word_ids: np.ndarray  # (B, T)
    attr_ids: np.ndarray
    pos_fwd: np.ndarray
    pos_bwd: np.ndarray
    mask: np.ndarray  # (B, T) 1.0 at real tokens
    lengths: list[int] = field(default_factory=list)


class TaggerModel:
    def __init__(self, config: TaggerConfig, word_vocab: Vocabulary, attr_vocab: Vocabulary):
        self.config = config
        self.word_vocab = word_vocab
        self.attr_vocab = attr_vocab
        self.dtype = np.dtype(config.dtype)
        rng = np.random.default_rng(config.seed)
        params = ParamSet()
        dt = self.dtype
        self.word_emb = params.add(
            "word_emb", uniform_init(rng, (len(word_vocab), config.word_emb_dim), dtype=dt)
        )
        self.attr_emb = params.add(
            "attr_emb", uniform_init(rng, (len(attr_vocab), config.attr_emb_dim), dtype=dt)
        )
        self.pos_emb = params.add(
            "pos_emb", uniform_init(rng, (config.max_position + 1, config.pos_emb_dim), dtype=dt)
        )
        self.encoder = BiLSTM(params, "encoder", config.input_dim, config.hidden_dim, rng, dt)
        self.classifier = Linear(params, "classifier", config.output_dim, 2, rng, uniform_init, dt)
        self.params = params

    # -- batching ------------------------------------------------------

    def make_batch(self, tables: list[LinearizedTable]) -> TaggerBatch:
        if not tables or any(len(t) == 0 for t in tables):
            raise ValueError("tagger batches require non-empty linearized tables")
        lengths = [len(t) for t in tables]
        width = max(lengths)
        b = len(tables)
        word_ids = np.zeros((b, width), dtype=np.int64)
        attr_ids = np.zeros((b, width), dtype=np.int64)
        pos_fwd = np.zeros((b, width), dtype=np.int64)
        pos_bwd = np.zeros((b, width), dtype=np.int64)
        mask = np.zeros((b, width), dtype=self.dtype)
        clip = self.config.max_position
        for i, table in enumerate(tables):
            for j, tok in enumerate(table):
                word_ids[i, j] = self.word_vocab.index(tok.word)
                attr_ids[i, j] = self.attr_vocab.index(tok.attribute)
                pos_fwd[i, j] = min(tok.pos_fwd, clip)
                pos_bwd[i, j] = min(tok.pos_bwd, clip)
            mask[i, : len(table)] = 1.0
        return TaggerBatch(word_ids, attr_ids, pos_fwd, pos_bwd, mask, lengths)

    # -- forward pieces ------------------------------------------------

    def embed(self, batch: TaggerBatch, training: bool = False,
              rng: np.random.Generator | None = None) -> Tensor:
        """Per-token input features: word + attribute + both position offsets."""
        features = concat(
            [
                embedding(self.word_emb, batch.word_ids),
                embedding(self.attr_emb, batch.attr_ids),
                embedding(self.pos_emb, batch.pos_fwd),
                embedding(self.pos_emb, batch.pos_bwd),
            ],
            axis=2,
        )
        if training:
            features = dropout(features, self.config.dropout, rng, training)
        return features

    def encode(self, features: Tensor, mask: np.ndarray, training: bool = False,
               rng: np.random.Generator | None = None) -> Tensor:
        """Bi-LSTM hidden sequence, forward and backward states concatenated."""
        hidden, _, _ = self.encoder.run(features, mask)
        if training:
            hidden = dropout(hidden, self.config.dropout, rng, training)
        return hidden

    def classify(self, hidden: Tensor) -> Tensor:
        """Per-token 2-way logits."""
        return self.classifier(hidden)

    def logits(self, batch: TaggerBatch, training: bool = False,
               rng: np.random.Generator | None = None) -> Tensor:
        features = self.embed(batch, training, rng)
        hidden = self.encode(features, batch.mask, training, rng)
        return self.classify(hidden)

    # -- loss and inference ---------------------------------------------

    def loss(self, tables: list[LinearizedTable], labels: list[list[int]],
             training: bool = True, rng: np.random.Generator | None = None) -> Tensor:
        """Token-summed, batch-averaged cross entropy; padding masked out."""
        for table, labs in zip(tables, labels):
            if len(table) != len(labs):
                raise ValueError(f"got {len(labs)} labels for {len(table)} tokens")
        batch = self.make_batch(tables)
        width = batch.word_ids.shape[1]
        gold = np.zeros((len(tables), width), dtype=np.int64)
        for i, labs in enumerate(labels):
            gold[i, : len(labs)] = labs
        log_probs = self.logits(batch, training, rng).log_softmax(axis=-1)
        picked = gather_last(log_probs, gold)
        masked = picked * Tensor(batch.mask)
        return -masked.sum() / len(tables)

    def predict(self, table: LinearizedTable) -> TaggerPrediction:
        return self.predict_batch([table])[0]

    def predict_batch(self, tables: list[LinearizedTable]) -> list[TaggerPrediction]:
        batch = self.make_batch(tables)
        probs = self.logits(batch, training=False).softmax(axis=-1).data
        out = []
        for i, length in enumerate(batch.lengths):
            p = probs[i, :length].astype(np.float64)
            labels = [1 if p[t, 1] >= 0.5 else 0 for t in range(length)]
            out.append(TaggerPrediction(p, labels))
        return out

    # -- persistence -----------------------------------------------------

    def save(self, path) -> None:
        save_checkpoint(
            path,
            kind="tagger",
            config=asdict(self.config),
            vocabs={"word": self.word_vocab.itos, "attr": self.attr_vocab.itos},
            arrays=self.params.state_arrays(),
        )

    @classmethod
    def load(cls, path) -> "TaggerModel":
        ckpt = load_checkpoint(path)
        return cls.from_checkpoint(ckpt)

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "TaggerModel":
        if ckpt.kind != "tagger":
            raise ValueError(f"expected a tagger checkpoint, got {ckpt.kind!r}")
        config = TaggerConfig(**ckpt.config)
        model = cls(config, Vocabulary(itos=ckpt.vocabs["word"]), Vocabulary(itos=ckpt.vocabs["attr"]))
        model.params.load_state(ckpt.arrays)
        return model


def evaluate_prf(predicted: list[list[int]], gold: list[list[int]],
                 average: str = "micro") -> tuple[float, float, float]:
    """Precision/recall/F1 over the positive label; 0 on empty denominators.

    Micro pools token counts over the corpus; macro averages the
    per-sequence scores.
    """
    if len(predicted) != len(gold):
        raise ValueError("prediction/gold sequence counts differ")

    def prf(pairs):
        tp = fp = fn = 0
        for p, g in pairs:
            if len(p) != len(g):
                raise ValueError("prediction/gold lengths differ within a sequence")
            for pi, gi in zip(p, g):
                if pi == 1 and gi == 1:
                    tp += 1
                elif pi == 1:
                    fp += 1
                elif gi == 1:
                    fn += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return precision, recall, f1

    if average == "micro":
        return prf(zip(predicted, gold))
    if average == "macro":
        scores = [prf([(p, g)]) for p, g in zip(predicted, gold)]
        if not scores:
            return 0.0, 0.0, 0.0
        return tuple(sum(s[i] for s in scores) / len(scores) for i in range(3))
    raise ValueError(f"unknown averaging mode {average!r}")
