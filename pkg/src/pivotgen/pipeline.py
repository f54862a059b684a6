"""End-to-end decoding and stage-2 data preparation.

Two-step decoding: the tagger labels the linearized table, label-1
words form the realizer input, and the realizer greedily emits the
description. A table whose predicted labels are all zero falls back to
its single highest-probability token so the realizer never sees an
empty source, and an empty decode falls back to echoing the selected
facts so the pipeline never emits an empty hypothesis.
"""

from __future__ import annotations

import numpy as np

from .corpus import ParallelSample, Table, linearize
from .keyfacts import StopWordList, annotate, extract
from .realizer import _RealizerBase
from .tagger import TaggerModel


class PipelineError(RuntimeError):
    pass


def check_vocab_compatibility(tagger: TaggerModel, realizer: _RealizerBase) -> None:
    if tagger.word_vocab.itos != realizer.vocab.itos:
        raise PipelineError(
            "tagger and realizer checkpoints carry different word vocabularies; "
            "train both stages from the same corpus"
        )


def select_keyfacts(tagger: TaggerModel, tables: list[Table], batch_size: int = 64):
    """Predicted key-fact sequences, with the top-1 token fallback."""
    linearized = [linearize(t) for t in tables]
    selected = []
    for start in range(0, len(linearized), batch_size):
        chunk = linearized[start : start + batch_size]
        for pred, table in zip(tagger.predict_batch(chunk), chunk):
            facts = extract(table, pred.labels)
            if not facts:
                top = int(np.argmax(pred.probabilities[:, 1]))
                facts = [table[top].word]
            selected.append(facts)
    return selected


def two_stage_generate(tagger: TaggerModel, realizer: _RealizerBase,
                       tables: list[Table], batch_size: int = 64) -> list[list[str]]:
    """predict -> extract -> greedy decode for each table."""
    check_vocab_compatibility(tagger, realizer)
    sources = select_keyfacts(tagger, tables, batch_size)
    hypotheses = []
    for start in range(0, len(sources), batch_size):
        chunk = sources[start : start + batch_size]
        for result, source in zip(realizer.greedy_decode(chunk), chunk):
            hypotheses.append(result.tokens if result.tokens else list(source))
    return hypotheses


def stage2_pairs(samples: list[ParallelSample], stops: StopWordList | None = None):
    """Gold (key facts, text) training pairs via automatic annotation.

    Samples whose annotation selects nothing are excluded: an empty
    realizer input is degenerate. Returns (pairs, n_skipped).
    """
    stops = stops or StopWordList.default()
    pairs = []
    skipped = 0
    for sample in samples:
        table = linearize(sample.table)
        facts = extract(table, annotate(table, sample.text, stops))
        if not facts:
            skipped += 1
            continue
        pairs.append((facts, list(sample.text)))
    return pairs, skipped


def end_to_end_pairs(samples: list[ParallelSample]):
    """(all value tokens, text) pairs for the single-stage baseline."""
    return [([tok.word for tok in linearize(s.table)], list(s.text)) for s in samples]
