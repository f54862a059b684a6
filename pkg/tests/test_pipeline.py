import numpy as np
import pytest

from pivotgen.corpus import Record, Table, build_vocabulary, linearize
from pivotgen.pipeline import (
    PipelineError,
    check_vocab_compatibility,
    end_to_end_pairs,
    select_keyfacts,
    stage2_pairs,
    two_stage_generate,
)
from pivotgen.realizer import RealizerConfig, build_realizer
from pivotgen.synth import SynthSpec, generate
from pivotgen.tagger import TaggerConfig, TaggerModel


def shared_vocabs():
    corpus = generate(SynthSpec(n_samples=12, seed=0))
    streams = []
    for s in corpus.parallel:
        streams.append([t.word for t in linearize(s.table)])
        streams.append(s.text)
    word_vocab = build_vocabulary(streams, 500)
    attr_vocab = build_vocabulary(
        [[r.attribute for r in s.table.records] for s in corpus.parallel], 50
    )
    return corpus, word_vocab, attr_vocab


def make_models(word_vocab, attr_vocab, seed=0):
    tagger = TaggerModel(
        TaggerConfig(hidden_dim=8, word_emb_dim=6, attr_emb_dim=4, pos_emb_dim=2,
                     dropout=0.0, seed=seed),
        word_vocab, attr_vocab,
    )
    realizer = build_realizer(
        RealizerConfig(variant="vanilla", hidden_dim=8, emb_dim=6, dropout=0.0,
                       max_decode_len=6, seed=seed),
        word_vocab,
    )
    return tagger, realizer


def test_vocab_mismatch_raises():
    corpus, word_vocab, attr_vocab = shared_vocabs()
    tagger, _ = make_models(word_vocab, attr_vocab)
    other_vocab = build_vocabulary([["entirely", "different"]], 10)
    realizer = build_realizer(
        RealizerConfig(variant="vanilla", hidden_dim=8, emb_dim=6, max_decode_len=6),
        other_vocab,
    )
    with pytest.raises(PipelineError):
        check_vocab_compatibility(tagger, realizer)
    with pytest.raises(PipelineError):
        two_stage_generate(tagger, realizer, [corpus.parallel[0].table])


def test_select_keyfacts_fallback_on_all_zero():
    corpus, word_vocab, attr_vocab = shared_vocabs()
    tagger, _ = make_models(word_vocab, attr_vocab)
    # force the classifier to always predict label 0
    tagger.params["classifier.w"].data[:] = 0.0
    tagger.params["classifier.b"].data[:] = np.array([10.0, -10.0])
    tables = [s.table for s in corpus.parallel[:3]]
    selected = select_keyfacts(tagger, tables)
    for facts, table in zip(selected, tables):
        assert len(facts) == 1  # top-1 highest-probability token
        assert facts[0] in [t.word for t in linearize(table)]


def test_two_stage_generate_never_empty():
    corpus, word_vocab, attr_vocab = shared_vocabs()
    tagger, realizer = make_models(word_vocab, attr_vocab)
    tables = [s.table for s in corpus.parallel]
    hyps = two_stage_generate(tagger, realizer, tables)
    assert len(hyps) == len(tables)
    assert all(len(h) >= 1 for h in hyps)


def test_stage2_pairs_skips_zero_keyfact_samples():
    corpus, _, _ = shared_vocabs()
    pairs, skipped = stage2_pairs(corpus.parallel)
    assert skipped == 0
    assert all(src for src, _ in pairs)
    # a sample whose text shares nothing with the table is skipped
    lonely = corpus.parallel[0]
    lonely_variant = type(lonely)(
        id="lonely",
        table=Table([Record("name", ["qqq", "zzz"])]),
        text=["totally", "unrelated", "words"],
    )
    pairs2, skipped2 = stage2_pairs([lonely_variant])
    assert pairs2 == []
    assert skipped2 == 1


def test_stage2_pairs_sources_in_table_order():
    corpus, _, _ = shared_vocabs()
    pairs, _ = stage2_pairs(corpus.parallel)
    for (source, _), sample in zip(pairs, corpus.parallel):
        table_words = [t.word for t in linearize(sample.table)]
        it = iter(table_words)
        assert all(tok in it for tok in source)


def test_end_to_end_pairs_use_all_value_tokens():
    corpus, _, _ = shared_vocabs()
    pairs = end_to_end_pairs(corpus.parallel[:2])
    for (source, target), sample in zip(pairs, corpus.parallel[:2]):
        assert source == [t.word for t in linearize(sample.table)]
        assert target == sample.text
