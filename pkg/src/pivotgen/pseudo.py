"""Pseudo-parallel pair construction from unlabeled text.

Each unlabeled sentence yields a training pair whose source is the
sentence's content words (nouns, adjectives, cardinal numbers, foreign
words by POS tag) and whose target is the full sentence. POS backends
are pluggable through a one-function interface (tokens in, tags out);
the package ships a deterministic lexicon + suffix-rule tagger so tests
need no external toolkit, plus an adapter for externally pre-tagged
files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import TextSequence, UnlabeledSample
from .keyfacts import is_punctuation

# POS tags whose words survive the content filter.
DEFAULT_CONTENT_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS", "JJ", "JJR", "JJS", "CD", "FW"})

_PUNCT_TAGS = {".": ".", ",": ",", "(": "-LRB-", ")": "-RRB-", "-lrb-": "-LRB-", "-rrb-": "-RRB-"}


class TaggingError(RuntimeError):
    pass


@dataclass
class PosTaggedText:
    tokens: TextSequence
    tags: list[str]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError(f"{len(self.tags)} tags for {len(self.tokens)} tokens")
        if any(not t for t in self.tags):
            raise ValueError("tags must be non-empty strings")


@dataclass
class PseudoPair:
    source: TextSequence  # ordered content-word subsequence of target
    target: TextSequence


@dataclass
class PseudoStats:
    total: int = 0
    kept: int = 0
    dropped_empty_source: int = 0
    dropped_long_target: int = 0


def _is_numeric(token: str) -> bool:
    return any(ch.isdigit() for ch in token) and all(ch.isdigit() or ch in ".,-/" for ch in token)


class LexiconTagger:
    """Deterministic tagger: punctuation map, numerals, lexicon, suffix rules.

    Unknown words fall back through the ordered suffix-rule list and
    finally to NN.
    """

    def __init__(self, lexicon: dict[str, str], suffix_rules: list[tuple[str, str]]):
        self.lexicon = lexicon
        self.suffix_rules = suffix_rules

    @classmethod
    def from_files(cls, lexicon_path, rules_path) -> "LexiconTagger":
        lexicon = {}
        for line in Path(lexicon_path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            token, tag = line.split("\t")
            lexicon[token] = tag
        rules = []
        for line in Path(rules_path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            suffix, tag = line.split("\t")
            rules.append((suffix, tag))
        return cls(lexicon, rules)

    @classmethod
    def default(cls) -> "LexiconTagger":
        data = resources.files("pivotgen.data")
        with resources.as_file(data.joinpath("pos_lexicon.tsv")) as lex_path:
            with resources.as_file(data.joinpath("pos_suffix_rules.tsv")) as rules_path:
                return cls.from_files(lex_path, rules_path)

    def tag_token(self, token: str) -> str:
        if is_punctuation(token):
            return _PUNCT_TAGS.get(token, "SYM")
        if _is_numeric(token):
            return "CD"
        if token in self.lexicon:
            return self.lexicon[token]
        for suffix, tag in self.suffix_rules:
            if len(token) > len(suffix) and token.endswith(suffix):
                return tag
        return "NN"

    def __call__(self, tokens: TextSequence) -> list[str]:
        return [self.tag_token(t) for t in tokens]


class PretaggedLookup:
    """Backend serving tags parsed from a 'token<TAB>tag' file.

    Sentences are separated by blank lines; lookups key on the exact
    token sequence.
    """

    def __init__(self, sentences: dict[tuple, list[str]]):
        self.sentences = sentences

    @classmethod
    def from_file(cls, path) -> "PretaggedLookup":
        sentences = {}
        tokens: list[str] = []
        tags: list[str] = []
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                if tokens:
                    sentences[tuple(tokens)] = tags
                    tokens, tags = [], []
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TaggingError(f"{path}: line {line_no} is not 'token<TAB>tag'")
            tokens.append(parts[0])
            tags.append(parts[1])
        if tokens:
            sentences[tuple(tokens)] = tags
        return cls(sentences)

    def __call__(self, tokens: TextSequence) -> list[str]:
        key = tuple(tokens)
        if key not in self.sentences:
            raise TaggingError(f"no pre-tagged entry for: {' '.join(tokens)[:80]}")
        return self.sentences[key]


def pos_tag(text: TextSequence, backend) -> PosTaggedText:
    """Tag a token sequence with the given backend."""
    if not text:
        raise ValueError("pos_tag requires non-empty text")
    return PosTaggedText(list(text), list(backend(text)))


def filter_content(tagged: PosTaggedText, tags=DEFAULT_CONTENT_TAGS) -> TextSequence:
    """Ordered subsequence of tokens whose tag is in the content set."""
    return [tok for tok, tag in zip(tagged.tokens, tagged.tags) if tag in tags]


def build_pseudo_corpus(
    unlabeled: list[UnlabeledSample],
    backend=None,
    tags=DEFAULT_CONTENT_TAGS,
    max_target_len: int = 60,
) -> tuple[list[PseudoPair], PseudoStats]:
    """One (content words, sentence) pair per sample; degenerates dropped."""
    if backend is None:
        backend = LexiconTagger.default()
    stats = PseudoStats()
    pairs = []
    for sample in unlabeled:
        stats.total += 1
        if len(sample.text) > max_target_len:
            stats.dropped_long_target += 1
            continue
        try:
            tagged = pos_tag(sample.text, backend)
        except Exception as exc:
            raise TaggingError(f"POS backend failed on sample {sample.id}: {exc}") from exc
        source = filter_content(tagged, tags)
        if not source:
            stats.dropped_empty_source += 1
            continue
        stats.kept += 1
        pairs.append(PseudoPair(source, list(sample.text)))
    return pairs, stats


def save_pseudo(pairs: list[PseudoPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps({"source": pair.source, "target": pair.target}) + "\n")


def load_pseudo(path) -> list[PseudoPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "source" not in obj or "target" not in obj:
                raise ValueError(f"line {line_no}: pseudo pairs need 'source' and 'target'")
            pairs.append(PseudoPair(list(obj["source"]), list(obj["target"])))
    return pairs
