"""Desk-scale experiment harness: parallel-size sweeps and ablations.

For each requested size K the full parallel pool is shuffled, the first
K samples stay parallel, and the remaining samples lose their tables
and join the unlabeled pool. Variants share the tagger per K; rows
report generation metrics on a held-out test split plus the tagger's
test F1. Results land in a TSV stamped with the config hash, and the
curve data is rendered to PNG figures next to it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import ParallelSample, UnlabeledSample, build_vocabulary, linearize
from .keyfacts import StopWordList, annotate
from .metrics import score_corpus
from .noise import NoiseConfig
from .pipeline import end_to_end_pairs, stage2_pairs, two_stage_generate
from .pseudo import LexiconTagger, build_pseudo_corpus
from .realizer import RealizerConfig, build_realizer
from .synth import SynthSpec, generate
from .tagger import TaggerConfig, TaggerModel, evaluate_prf
from .training import OptimizerConfig, TrainPlan, train_realizer, train_tagger

VARIANT_BASES = ("pivot-vanilla", "pivot-transformer", "e2e-vanilla", "e2e-transformer")


@dataclass
class VariantSetting:
    name: str
    two_stage: bool
    arch: str  # "vanilla" or "transformer"
    use_pseudo: bool
    use_noise: bool


def parse_variant(name: str) -> VariantSetting:
    parts = name.split("-")
    if len(parts) < 2 or parts[0] not in ("pivot", "e2e") or parts[1] not in ("vanilla", "transformer"):
        raise ValueError(f"unknown variant {name!r}; bases are {VARIANT_BASES}")
    two_stage = parts[0] == "pivot"
    use_pseudo = two_stage
    use_noise = two_stage
    for flag in parts[2:]:
        if flag == "nopseudo":
            use_pseudo = False
        elif flag == "nonoise":
            use_noise = False
        elif flag == "pseudo":
            use_pseudo = True
        else:
            raise ValueError(f"unknown variant flag {flag!r} in {name!r}")
    return VariantSetting(name, two_stage, parts[1], use_pseudo, use_noise)


@dataclass
class ExperimentSpec:
    parallel_sizes: tuple = (100, 300, 1000, 3000)
    variants: tuple = ("pivot-vanilla", "e2e-vanilla")
    seed: int = 0
    word_vocab_cap: int = 20000
    attr_vocab_cap: int = 1000
    # desk-scale model dimensions; override for full-size runs
    tagger_dims: dict = field(default_factory=lambda: {
        "hidden_dim": 64, "word_emb_dim": 48, "attr_emb_dim": 16, "pos_emb_dim": 4,
    })
    vanilla_dims: dict = field(default_factory=lambda: {"hidden_dim": 96, "emb_dim": 64})
    transformer_dims: dict = field(default_factory=lambda: {
        "d_model": 96, "d_ff": 192, "heads": 4, "blocks": 2,
    })
    dropout: float = 0.2
    tagger_epochs: int = 60
    tagger_min_epochs: int = 20
    realizer_epochs: int = 60
    realizer_min_epochs: int = 12
    realizer_stop_score: float = 0.97  # smoothed valid BLEU ending a phase early
    batch_size: int = 64
    learning_rate: float = 0.003  # desk-scale epochs are tiny; see README
    p_drop: float = 0.1
    p_insert: float = 0.1
    max_decode_len: int = 30
    valid_cap: int = 120
    pseudo_max_target_len: int = 40
    valid_fraction: float = 0.1  # parallel slice held out for early stopping

    def __post_init__(self):
        sizes = tuple(self.parallel_sizes)
        if sizes != tuple(sorted(sizes)):
            raise ValueError("parallel_sizes must be sorted ascending")
        for name in self.variants:
            parse_variant(name)

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class ResultRow:
    k: int
    variant: str
    bleu4: float
    nist4: float
    rouge4_f: float
    tagger_f1: float | None

    def tsv_line(self) -> str:
        f1 = f"{self.tagger_f1 * 100:.2f}" if self.tagger_f1 is not None else "-"
        return (
            f"{self.k}\t{self.variant}\t{self.bleu4 * 100:.2f}"
            f"\t{self.nist4:.4f}\t{self.rouge4_f * 100:.2f}\t{f1}"
        )


def write_results(rows: list[ResultRow], spec: ExperimentSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={spec.config_hash()}\n")
        fh.write(f"# config={json.dumps(asdict(spec), sort_keys=True, default=list)}\n")
        fh.write("k\tvariant\tbleu4\tnist4\trouge4_f\ttagger_f1\n")
        for row in rows:
            fh.write(row.tsv_line() + "\n")


class ExperimentRunner:
    """Runs one spec against a prepared corpus."""

    def __init__(self, spec: ExperimentSpec, train_parallel: list[ParallelSample],
                 test_parallel: list[ParallelSample],
                 extra_unlabeled: list[UnlabeledSample] | None = None,
                 stops: StopWordList | None = None):
        if spec.parallel_sizes and max(spec.parallel_sizes) > len(train_parallel):
            raise ValueError(
                f"largest K {max(spec.parallel_sizes)} exceeds the "
                f"{len(train_parallel)} available parallel samples"
            )
        self.spec = spec
        self.train_parallel = train_parallel
        self.test_parallel = test_parallel
        self.extra_unlabeled = extra_unlabeled or []
        self.stops = stops or StopWordList.default()
        self.pos_backend = LexiconTagger.default()

    # -- resource preparation -------------------------------------------

    def resources_for(self, k: int):
        rng = np.random.default_rng([self.spec.seed, 101, k])
        order = rng.permutation(len(self.train_parallel))
        shuffled = [self.train_parallel[i] for i in order]
        parallel = shuffled[:k]
        leftover = [UnlabeledSample(s.id, s.text) for s in shuffled[k:]]
        n_valid = max(1, int(len(parallel) * self.spec.valid_fraction))
        return parallel[n_valid:], parallel[:n_valid], leftover + self.extra_unlabeled

    def _vocab_for(self, parallel, unlabeled):
        streams = []
        for s in parallel:
            streams.append([tok.word for tok in linearize(s.table)])
            streams.append(s.text)
        for u in unlabeled:
            streams.append(u.text)
        word_vocab = build_vocabulary(streams, self.spec.word_vocab_cap)
        attr_vocab = build_vocabulary(
            [[r.attribute for r in s.table.records] for s in parallel],
            self.spec.attr_vocab_cap,
        )
        return word_vocab, attr_vocab

    # -- stage training ----------------------------------------------------

    def _plan(self, stage: str, max_epochs: int, use_noise: bool) -> TrainPlan:
        noise = None
        if use_noise:
            noise = NoiseConfig(p_drop=self.spec.p_drop, p_insert=self.spec.p_insert,
                                seed=self.spec.seed)
        min_epochs = (self.spec.tagger_min_epochs if stage == "tagger"
                      else self.spec.realizer_min_epochs)
        return TrainPlan(
            stage=stage,
            seed=self.spec.seed,
            max_epochs=max_epochs,
            optimizer=OptimizerConfig(learning_rate=self.spec.learning_rate,
                                      batch_size=self.spec.batch_size),
            noise=noise,
            valid_cap=self.spec.valid_cap,
            min_epochs=min_epochs,
            stop_at_score=self.spec.realizer_stop_score if stage == "realizer" else None,
        )

    def _annotated(self, samples):
        out = []
        for s in samples:
            table = linearize(s.table)
            out.append((table, annotate(table, s.text, self.stops)))
        return out

    def train_tagger_for(self, k: int, use_pseudo: bool = True) -> TaggerModel:
        """Tagger trained on the first-K slice, vocab matching the variant."""
        train_par, valid_par, unlabeled = self.resources_for(k)
        word_vocab, attr_vocab = self._vocab_for(
            train_par + valid_par, unlabeled if use_pseudo else []
        )
        config = TaggerConfig(seed=self.spec.seed, dropout=self.spec.dropout,
                              word_vocab_cap=self.spec.word_vocab_cap,
                              attr_vocab_cap=self.spec.attr_vocab_cap,
                              **self.spec.tagger_dims)
        model = TaggerModel(config, word_vocab, attr_vocab)
        train_tagger(model, self._annotated(train_par), self._annotated(valid_par),
                     self._plan("tagger", self.spec.tagger_epochs, use_noise=False))
        return model

    def tagger_test_f1(self, model: TaggerModel) -> float:
        predicted, gold = [], []
        for start in range(0, len(self.test_parallel), self.spec.batch_size):
            chunk = self.test_parallel[start : start + self.spec.batch_size]
            tables = [linearize(s.table) for s in chunk]
            for pred, table, sample in zip(model.predict_batch(tables), tables, chunk):
                predicted.append(pred.labels)
                gold.append(annotate(table, sample.text, self.stops))
        _, _, f1 = evaluate_prf(predicted, gold)
        return f1

    def _realizer_config(self, arch: str) -> RealizerConfig:
        dims = self.spec.vanilla_dims if arch == "vanilla" else self.spec.transformer_dims
        return RealizerConfig(variant=arch, dropout=self.spec.dropout,
                              max_decode_len=self.spec.max_decode_len,
                              seed=self.spec.seed, **dims)

    def run_variant(self, k: int, variant_name: str, tagger: TaggerModel | None = None):
        setting = parse_variant(variant_name)
        train_par, valid_par, unlabeled = self.resources_for(k)
        vocab_unlabeled = unlabeled if setting.use_pseudo else []
        word_vocab, _ = self._vocab_for(train_par + valid_par, vocab_unlabeled)

        if setting.two_stage:
            train_pairs, _ = stage2_pairs(train_par, self.stops)
            valid_pairs, _ = stage2_pairs(valid_par, self.stops)
        else:
            train_pairs = end_to_end_pairs(train_par)
            valid_pairs = end_to_end_pairs(valid_par)

        pseudo_pairs = []
        if setting.use_pseudo:
            raw_pairs, _ = build_pseudo_corpus(
                unlabeled, self.pos_backend, max_target_len=self.spec.pseudo_max_target_len
            )
            pseudo_pairs = [(p.source, p.target) for p in raw_pairs]

        realizer = build_realizer(self._realizer_config(setting.arch), word_vocab)
        plan = self._plan("realizer", self.spec.realizer_epochs, setting.use_noise)
        train_realizer(realizer, train_pairs, valid_pairs, plan, pseudo_pairs=pseudo_pairs)

        test_tables = [s.table for s in self.test_parallel]
        references = [s.text for s in self.test_parallel]
        if setting.two_stage:
            if tagger is None:
                raise ValueError("two-stage variants need a trained tagger")
            # re-key the shared tagger onto this variant's vocabulary
            hyps = two_stage_generate(self._retag(tagger, word_vocab), realizer, test_tables)
        else:
            sources = [[tok.word for tok in linearize(t)] for t in test_tables]
            hyps = []
            for start in range(0, len(sources), self.spec.batch_size):
                chunk = sources[start : start + self.spec.batch_size]
                for res, src in zip(realizer.greedy_decode(chunk), chunk):
                    hyps.append(res.tokens if res.tokens else list(src))
        report = score_corpus(hyps, references)
        return report, realizer

    @staticmethod
    def _retag(tagger: TaggerModel, word_vocab) -> TaggerModel:
        """Tagger predictions are vocabulary-specific; keep the trained model
        when vocabularies agree, otherwise refuse loudly."""
        if tagger.word_vocab.itos == word_vocab.itos:
            return tagger
        raise ValueError("tagger vocabulary does not match the variant vocabulary")

    def run(self) -> list[ResultRow]:
        rows = []
        for k in self.spec.parallel_sizes:
            taggers: dict[bool, TaggerModel] = {}
            f1_cache: dict[bool, float] = {}
            for variant_name in self.spec.variants:
                setting = parse_variant(variant_name)
                tagger = None
                f1 = None
                if setting.two_stage:
                    if setting.use_pseudo not in taggers:
                        taggers[setting.use_pseudo] = self.train_tagger_for(
                            k, setting.use_pseudo
                        )
                        f1_cache[setting.use_pseudo] = self.tagger_test_f1(
                            taggers[setting.use_pseudo]
                        )
                    tagger = taggers[setting.use_pseudo]
                    f1 = f1_cache[setting.use_pseudo]
                report, _ = self.run_variant(k, variant_name, tagger)
                rows.append(ResultRow(k, variant_name, report.bleu4, report.nist4,
                                      report.rouge4_f, f1))
        return rows


def synth_benchmark(n_samples: int, n_parallel: int, seed: int = 0,
                    test_fraction: float = 0.2):
    """Convenience corpus for harness runs: synthetic train/test + unlabeled.

    Generates ``n_samples`` parallel samples plus enough unlabeled-only
    text that ``n_parallel`` of the parallel block can be kept and the
    rest stripped, then splits off a test set.
    """
    n_test = int(round(n_samples * test_fraction))
    spec = SynthSpec(n_samples=n_samples + n_test, seed=seed)
    corpus = generate(spec)
    train = corpus.parallel[:n_samples]
    test = corpus.parallel[n_samples:]
    return train, test, corpus
