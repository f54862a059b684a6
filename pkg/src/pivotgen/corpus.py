"""Data model, file ingestion, table linearization, vocabularies, splits.

A table is an ordered list of attribute-value records. For the neural
models it is flattened into one token sequence where every value token
carries its attribute name and a (pos_fwd, pos_bwd) position tuple: the
1-based offsets of the token counted from the start and from the end of
its value. Two occurrences of the same word therefore never share a
feature tuple within a record.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Reserved vocabulary symbols, fixed at indices 0-3.
PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<bos>", "<eos>"
PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3
RESERVED = [PAD, UNK, BOS, EOS]

# A tokenized text is a plain list of token strings.
TextSequence = list[str]


class CorpusFormatError(ValueError):
    """Raised when a dataset file violates its documented format."""


@dataclass
class Record:
    attribute: str
    value: list[str]

    def __post_init__(self):
        if not self.attribute:
            raise ValueError("record attribute must be non-empty")
        if not self.value:
            raise ValueError(f"record {self.attribute!r} has an empty value")


@dataclass
class Table:
    records: list[Record]

    def __post_init__(self):
        if not self.records:
            raise ValueError("table must contain at least one record")


@dataclass
class ParallelSample:
    id: str
    table: Table
    text: TextSequence


@dataclass
class UnlabeledSample:
    id: str
    text: TextSequence


@dataclass
class LinearizedToken:
    word: str
    attribute: str
    pos_fwd: int  # 1-based offset from the start of the value
    pos_bwd: int  # 1-based offset from the end of the value


# Flattened table: value tokens in record order, contiguous per record.
LinearizedTable = list[LinearizedToken]


def tokenize(raw: str) -> TextSequence:
    """Lowercase and split on whitespace; empty input yields []."""
    return raw.lower().split()


def linearize(table: Table) -> LinearizedTable:
    """Flatten a table into per-token (word, attribute, p+, p-) features."""
    out: LinearizedTable = []
    for record in table.records:
        n = len(record.value)
        for i, word in enumerate(record.value):
            out.append(LinearizedToken(word, record.attribute, i + 1, n - i))
    return out


def _parse_table(raw_table, line_no: int) -> Table:
    if not isinstance(raw_table, list) or not raw_table:
        raise CorpusFormatError(f"line {line_no}: 'table' must be a non-empty array")
    records = []
    for j, entry in enumerate(raw_table):
        if not isinstance(entry, dict) or "attribute" not in entry or "value" not in entry:
            raise CorpusFormatError(
                f"line {line_no}: table entry {j} needs 'attribute' and 'value' keys"
            )
        attribute = str(entry["attribute"]).lower().strip()
        value = tokenize(str(entry["value"]))
        if not attribute or " " in attribute:
            raise CorpusFormatError(
                f"line {line_no}: bad attribute {entry['attribute']!r} in entry {j}"
            )
        if not value:
            raise CorpusFormatError(f"line {line_no}: empty value for attribute {attribute!r}")
        records.append(Record(attribute, value))
    return Table(records)


def _load_parallel_jsonl(path: Path) -> list[ParallelSample]:
    samples = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            for key in ("id", "table", "text"):
                if key not in obj:
                    raise CorpusFormatError(f"line {line_no}: missing key {key!r}")
            sample_id = str(obj["id"])
            if sample_id in seen_ids:
                raise CorpusFormatError(f"line {line_no}: duplicate id {sample_id!r}")
            seen_ids.add(sample_id)
            text = tokenize(str(obj["text"]))
            if not text:
                raise CorpusFormatError(f"line {line_no}: empty text for id {sample_id!r}")
            samples.append(ParallelSample(sample_id, _parse_table(obj["table"], line_no), text))
    return samples


def _parse_infobox_line(line: str, line_no: int) -> Table:
    """Parse one 'attr_index:token ...' infobox line into a Table.

    Fields of one value must appear consecutively with 1-based contiguous
    indices; a field whose token is '<none>' is dropped.
    """
    records: list[Record] = []
    current_attr = None
    current_value: list[str] = []

    def flush():
        nonlocal current_attr, current_value
        if current_attr is not None and current_value:
            records.append(Record(current_attr, current_value))
        current_attr, current_value = None, []

    for raw_field in line.split():
        head, sep, token = raw_field.partition(":")
        if not sep:
            raise CorpusFormatError(f"line {line_no}: field {raw_field!r} has no ':'")
        attr, sep, index_str = head.rpartition("_")
        if not sep or not attr:
            raise CorpusFormatError(f"line {line_no}: field {raw_field!r} has no '_index' part")
        try:
            index = int(index_str)
        except ValueError:
            raise CorpusFormatError(
                f"line {line_no}: non-integer index in field {raw_field!r}"
            ) from None
        if index < 1:
            raise CorpusFormatError(f"line {line_no}: index must be >= 1 in {raw_field!r}")
        attr = attr.lower()
        if attr != current_attr or index == 1:
            flush()
            current_attr = attr
        if token == "<none>":
            continue
        expected = len(current_value) + 1
        if index != expected:
            raise CorpusFormatError(
                f"line {line_no}: field {raw_field!r} expected index {expected}"
            )
        current_value.append(token.lower())
    flush()
    if not records:
        raise CorpusFormatError(f"line {line_no}: no usable records")
    return Table(records)


def _load_parallel_infobox(path: Path) -> list[ParallelSample]:
    """Import a .box file; texts come from the sibling file with suffix .text."""
    text_path = path.with_suffix(".text")
    if not text_path.exists():
        raise CorpusFormatError(f"infobox import needs sibling text file {text_path}")
    box_lines = path.read_text(encoding="utf-8").splitlines()
    text_lines = text_path.read_text(encoding="utf-8").splitlines()
    if len(box_lines) != len(text_lines):
        raise CorpusFormatError(
            f"{path.name} has {len(box_lines)} lines but {text_path.name} has {len(text_lines)}"
        )
    samples = []
    for line_no, (box_line, text_line) in enumerate(zip(box_lines, text_lines), start=1):
        if not box_line.strip():
            continue
        text = tokenize(text_line)
        if not text:
            raise CorpusFormatError(f"line {line_no}: empty text")
        samples.append(ParallelSample(str(line_no), _parse_infobox_line(box_line, line_no), text))
    return samples


def load_parallel(path, fmt: str = "jsonl") -> list[ParallelSample]:
    """Load a parallel dataset file; fmt is 'jsonl' or 'infobox'."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "jsonl":
        return _load_parallel_jsonl(path)
    if fmt == "infobox":
        return _load_parallel_infobox(path)
    raise ValueError(f"unknown parallel format {fmt!r}")


def save_parallel(samples: list[ParallelSample], path) -> None:
    """Write samples in the canonical JSONL form (stable key order)."""
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            obj = {
                "id": sample.id,
                "table": [
                    {"attribute": r.attribute, "value": " ".join(r.value)}
                    for r in sample.table.records
                ],
                "text": " ".join(sample.text),
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_unlabeled(path) -> list[UnlabeledSample]:
    """Load one raw text per line; blank lines are skipped with a warning."""
    import logging

    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = tokenize(line)
            if not text:
                if line.strip("\n"):
                    continue
                logging.getLogger(__name__).warning("%s: skipping blank line %d", path, line_no)
                continue
            samples.append(UnlabeledSample(str(line_no), text))
    return samples


def save_unlabeled(samples: list[UnlabeledSample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(" ".join(sample.text) + "\n")


@dataclass
class Vocabulary:
    """Frequency-ranked token table with PAD/UNK/BOS/EOS pinned at 0-3."""

    itos: list[str] = field(default_factory=lambda: list(RESERVED))
    stoi: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.stoi:
            self.stoi = {tok: i for i, tok in enumerate(self.itos)}

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def index(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.itos[idx]

    def encode(self, tokens: TextSequence) -> list[int]:
        return [self.index(t) for t in tokens]

    def decode(self, ids) -> TextSequence:
        return [self.itos[i] for i in ids]


def build_vocabulary(corpus, cap: int) -> Vocabulary:
    """Top-cap tokens by corpus frequency; ties break lexicographically."""
    if cap < 1:
        raise ValueError("vocabulary cap must be >= 1")
    freq = Counter()
    for tokens in corpus:
        freq.update(tokens)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    itos = list(RESERVED) + [tok for tok, _ in ranked[:cap]]
    return Vocabulary(itos=itos)


def split_dataset(samples, fractions=(0.8, 0.1, 0.1), seed: int = 0):
    """Deterministic shuffled (train, valid, test) partition."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    if len(fractions) != 3:
        raise ValueError("expected exactly three fractions (train, valid, test)")
    order = np.random.default_rng(seed).permutation(len(samples))
    shuffled = [samples[i] for i in order]
    n_train = int(round(fractions[0] * len(samples)))
    n_valid = int(round(fractions[1] * len(samples)))
    return (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_valid],
        shuffled[n_train + n_valid :],
    )
