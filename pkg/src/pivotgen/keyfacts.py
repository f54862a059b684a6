"""Automatic key-fact labeling from table-text co-occurrence.

A table value is a key fact when at least one of its tokens appears in
the paired text and is neither a stop word nor punctuation. Labels are
attribute-level: once a value overlaps, every token of that value gets
label 1. The resulting binary sequence supervises the stage-1 tagger,
and the selected subsequence feeds the stage-2 realizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import LinearizedTable, TextSequence


def is_punctuation(token: str) -> bool:
    """True for tokens made entirely of non-alphanumeric characters."""
    return bool(token) and not any(ch.isalnum() for ch in token)


class StopWordList:
    """Versioned stop-word set; numeric tokens are never stop words."""

    def __init__(self, words):
        self.words = frozenset(w.lower() for w in words)

    @classmethod
    def from_file(cls, path) -> "StopWordList":
        words = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.append(line)
        return cls(words)

    @classmethod
    def default(cls) -> "StopWordList":
        ref = resources.files("pivotgen.data").joinpath("stopwords.txt")
        with resources.as_file(ref) as path:
            return cls.from_file(path)

    def __contains__(self, token: str) -> bool:
        if any(ch.isdigit() for ch in token):
            return False
        return token.lower() in self.words

    def __len__(self):
        return len(self.words)


# Labels aligned one-to-one with a linearized table.
KeyFactLabels = list[int]
KeyFactSequence = list[str]


def _token_overlaps(word: str, text_set: set, stops: StopWordList) -> bool:
    return word in text_set and word not in stops and not is_punctuation(word)


def annotate(
    table: LinearizedTable,
    text: TextSequence,
    stops: StopWordList | None = None,
    single_pass: bool = False,
) -> KeyFactLabels:
    """Label each linearized-table token as key fact (1) or not (0).

    Default is two-pass: first collect every attribute with at least one
    overlapping value token, then label all tokens of those attributes.
    ``single_pass=True`` keeps the order-dependent variant in which a
    token only sees attributes selected at earlier positions; it exists
    for comparison and is not used by the pipeline.
    """
    if not table or not text:
        raise ValueError("annotate requires a non-empty table and text")
    if stops is None:
        stops = StopWordList.default()
    text_set = set(text)

    if single_pass:
        selected: set = set()
        labels = []
        for tok in table:
            if _token_overlaps(tok.word, text_set, stops):
                selected.add(tok.attribute)
            labels.append(1 if tok.attribute in selected else 0)
        return labels

    selected = {
        tok.attribute for tok in table if _token_overlaps(tok.word, text_set, stops)
    }
    return [1 if tok.attribute in selected else 0 for tok in table]


def extract(table: LinearizedTable, labels: KeyFactLabels) -> KeyFactSequence:
    """Ordered subsequence of table words whose label is 1."""
    if len(table) != len(labels):
        raise ValueError(f"got {len(labels)} labels for {len(table)} table tokens")
    return [tok.word for tok, lab in zip(table, labels) if lab == 1]


@dataclass
class CoverageStats:
    """Corpus-level annotation statistics.

    Selected tokens and selected attributes are both reported because the
    per-token and per-attribute views of overlap differ whenever a value
    is longer than one token.
    """

    samples: int
    mean_selected_tokens: float
    mean_selected_attributes: float
    zero_fact_fraction: float


def coverage_stats(annotated) -> CoverageStats:
    """Aggregate stats over (LinearizedTable, KeyFactLabels) pairs."""
    n = 0
    token_total = 0
    attr_total = 0
    zero = 0
    for table, labels in annotated:
        if len(table) != len(labels):
            raise ValueError("misaligned labels in annotated dataset")
        n += 1
        selected_tokens = sum(labels)
        token_total += selected_tokens
        attr_total += len({tok.attribute for tok, lab in zip(table, labels) if lab == 1})
        if selected_tokens == 0:
            zero += 1
    if n == 0:
        return CoverageStats(0, 0.0, 0.0, 0.0)
    return CoverageStats(n, token_total / n, attr_total / n, zero / n)
