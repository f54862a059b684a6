from importlib import resources

import pytest

from pivotgen.corpus import UnlabeledSample
from pivotgen.pseudo import (
    DEFAULT_CONTENT_TAGS,
    LexiconTagger,
    PosTaggedText,
    PretaggedLookup,
    PseudoPair,
    TaggingError,
    build_pseudo_corpus,
    filter_content,
    load_pseudo,
    pos_tag,
    save_pseudo,
)

TAGGER = LexiconTagger.default()


def test_default_content_tag_set():
    assert DEFAULT_CONTENT_TAGS == {"NN", "NNS", "NNP", "NNPS", "JJ", "JJR", "JJS", "CD", "FW"}


def test_lexicon_example_verified_against_rule_file():
    # the shipped lexicon itself must carry these two entries
    data = resources.files("pivotgen.data")
    lexicon_lines = data.joinpath("pos_lexicon.tsv").read_text().splitlines()
    entries = dict(
        line.split("\t") for line in lexicon_lines if line and not line.startswith("#")
    )
    assert entries["john"] == "NNP"
    assert entries["runs"] == "VBZ"
    assert TAGGER(["john", "runs"]) == ["NNP", "VBZ"]


def test_tagger_numerals_and_punctuation():
    assert TAGGER(["1955", ",", "24", "(", ")"]) == ["CD", ",", "CD", "-LRB-", "-RRB-"]


def test_tagger_suffix_rules_match_rule_file():
    data = resources.files("pivotgen.data")
    rule_lines = [
        line.split("\t")
        for line in data.joinpath("pos_suffix_rules.tsv").read_text().splitlines()
        if line and not line.startswith("#")
    ]
    rules = dict((s, t) for s, t in rule_lines)
    assert TAGGER(["quickly"]) == [rules["ly"]]
    assert TAGGER(["zorbing"]) == [rules["ing"]]
    assert TAGGER(["flembification"]) == [rules["tion"]]
    assert TAGGER(["blorps"]) == [rules["s"]]


def test_tagger_unknown_word_defaults_nn():
    assert TAGGER(["qwxz"]) == ["NN"]


def test_pos_tag_alignment_and_empty():
    tagged = pos_tag(["john", "runs", "."], TAGGER)
    assert len(tagged.tokens) == len(tagged.tags) == 3
    with pytest.raises(ValueError):
        pos_tag([], TAGGER)


def test_pos_tagged_text_invariants():
    with pytest.raises(ValueError):
        PosTaggedText(["a"], ["NN", "VB"])
    with pytest.raises(ValueError):
        PosTaggedText(["a"], [""])


def test_filter_content_hand_example():
    tagged = PosTaggedText(
        ["denise", "is", "an", "australian", "comedian"],
        ["NNP", "VBZ", "DT", "JJ", "NN"],
    )
    assert filter_content(tagged) == ["denise", "australian", "comedian"]


def test_filter_content_identity_and_empty():
    all_content = PosTaggedText(["a", "b"], ["NN", "JJ"])
    assert filter_content(all_content) == ["a", "b"]
    none_content = PosTaggedText(["a", "b"], ["DT", "VBZ"])
    assert filter_content(none_content) == []


def test_build_pseudo_corpus_counts_and_subsequence():
    samples = [
        UnlabeledSample("1", ["john", "runs", "fast", "."]),
        UnlabeledSample("2", ["is", "the", "of"]),  # only function words
        UnlabeledSample("3", ["maria", "is", "a", "pilot", "."]),
    ]
    pairs, stats = build_pseudo_corpus(samples, TAGGER)
    assert stats.total == 3
    assert stats.kept == 2
    assert stats.dropped_empty_source == 1
    for pair in pairs:
        it = iter(pair.target)
        assert all(tok in it for tok in pair.source)  # order-preserving containment


def test_build_pseudo_corpus_drops_long_targets():
    samples = [UnlabeledSample("1", ["john"] * 100)]
    pairs, stats = build_pseudo_corpus(samples, TAGGER, max_target_len=60)
    assert pairs == []
    assert stats.dropped_long_target == 1


def test_build_pseudo_corpus_backend_failure_names_sample():
    def broken(tokens):
        raise RuntimeError("backend down")

    with pytest.raises(TaggingError, match="sample 7"):
        build_pseudo_corpus([UnlabeledSample("7", ["x"])], broken)


def test_source_ratio_strictly_between_zero_and_one():
    samples = [
        UnlabeledSample(str(i), ["maria", "is", "a", "pilot", "from", "oslo", "."])
        for i in range(20)
    ]
    pairs, _ = build_pseudo_corpus(samples, TAGGER)
    ratios = [len(p.source) / len(p.target) for p in pairs]
    assert 0.0 < sum(ratios) / len(ratios) < 1.0


def test_pretagged_lookup_round_trip(tmp_path):
    path = tmp_path / "tags.tsv"
    path.write_text("john\tNNP\nruns\tVBZ\n\nmaria\tNNP\n")
    backend = PretaggedLookup.from_file(path)
    assert backend(["john", "runs"]) == ["NNP", "VBZ"]
    assert backend(["maria"]) == ["NNP"]
    with pytest.raises(TaggingError):
        backend(["unknown", "sentence"])


def test_pretagged_lookup_rejects_malformed(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("john NNP\n")
    with pytest.raises(TaggingError):
        PretaggedLookup.from_file(path)


def test_pseudo_jsonl_round_trip(tmp_path):
    pairs = [PseudoPair(["a", "b"], ["a", "x", "b"]), PseudoPair(["c"], ["c", "."])]
    path = tmp_path / "pseudo.jsonl"
    save_pseudo(pairs, path)
    assert load_pseudo(path) == pairs


def test_synth_pools_covered_by_lexicon():
    # pool words must carry content tags so pseudo sources mirror key facts
    from pivotgen import synth

    for word in synth.FIRST_NAMES + synth.LAST_NAMES + synth.CITIES + synth.MONTHS:
        assert TAGGER([word]) == ["NNP"], word
    for word in synth.OCCUPATIONS + synth.HOBBIES:
        assert TAGGER([word]) == ["NN"], word
    for word in synth.NATIONALITIES:
        assert TAGGER([word]) == ["JJ"], word
