"""Corpus-level BLEU-4, NIST-4, and ROUGE-4 (F-measure) scorers.

All scorers take parallel lists of tokenized segments with exactly one
reference per hypothesis, are deterministic, and return values on the
natural scale (BLEU and ROUGE in [0, 1], NIST unbounded above). CLI
reporting rescales BLEU/ROUGE by 100.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

MAX_ORDER = 4

# NIST brevity factor: exp(beta * ln(L_hyp/L_ref)^2) for L_hyp < L_ref,
# with beta chosen so the factor is 0.5 when the ratio is 2/3.
_NIST_BETA = math.log(0.5) / math.log(2.0 / 3.0) ** 2


@dataclass
class MetricReport:
    bleu4: float
    nist4: float
    rouge4_f: float
    segments: int

    def tsv_line(self) -> str:
        """Paper-style precision: BLEU/ROUGE x100 at 2 decimals, NIST raw at 4."""
        return f"{self.bleu4 * 100:.2f}\t{self.nist4:.4f}\t{self.rouge4_f * 100:.2f}"


def _check_corpora(hypotheses, references):
    if len(hypotheses) != len(references):
        raise ValueError(
            f"segment count mismatch: {len(hypotheses)} hypotheses vs "
            f"{len(references)} references"
        )


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(hypotheses, references, smooth: bool = False) -> float:
    """Corpus BLEU with orders 1-4 and the standard brevity penalty.

    Unsmoothed by default: any zero modified precision makes the corpus
    score 0. ``smooth=True`` applies add-one smoothing to orders >= 2,
    useful as a training signal on tiny corpora.
    """
    _check_corpora(hypotheses, references)
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, MAX_ORDER + 1):
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    if hyp_len == 0:
        return 0.0
    log_precision = 0.0
    for n in range(MAX_ORDER):
        m, t = matches[n], totals[n]
        if smooth and n >= 1:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_precision += math.log(m / t) / MAX_ORDER
    brevity = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    return brevity * math.exp(log_precision)


def nist4(hypotheses, references) -> float:
    """Information-weighted n-gram co-occurrence score over orders 1-4.

    Information weights come from the reference-corpus n-gram counts:
    info(w1..wn) = log2(count(w1..wn-1) / count(w1..wn)), with the total
    reference word count as the order-1 numerator. Each order contributes
    (sum of matched info) / (hypothesis n-gram count), matches clipped per
    segment; the sum over orders is scaled by the NIST brevity factor.
    """
    _check_corpora(hypotheses, references)
    ref_counts = [Counter() for _ in range(MAX_ORDER + 1)]
    total_ref_words = 0
    for ref in references:
        total_ref_words += len(ref)
        for n in range(1, MAX_ORDER + 1):
            ref_counts[n].update(_ngrams(ref, n))
    if total_ref_words == 0:
        return 0.0

    def info(gram) -> float:
        n = len(gram)
        denom = ref_counts[n][gram]
        numer = total_ref_words if n == 1 else ref_counts[n - 1][gram[:-1]]
        if denom == 0 or numer == 0:
            return 0.0
        return math.log2(numer / denom)

    score = 0.0
    hyp_len = 0
    ref_len = 0
    for n in range(1, MAX_ORDER + 1):
        weighted = 0.0
        total = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_counts = _ngrams(hyp, n)
            seg_ref_counts = _ngrams(ref, n)
            total += sum(hyp_counts.values())
            for gram, count in hyp_counts.items():
                clipped = min(count, seg_ref_counts[gram])
                if clipped:
                    weighted += clipped * info(gram)
        if total:
            score += weighted / total
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        return 0.0
    ratio = min(hyp_len / ref_len, 1.0)
    brevity = math.exp(_NIST_BETA * math.log(ratio) ** 2) if ratio < 1.0 else 1.0
    return score * brevity


def rouge4_f(hypotheses, references) -> float:
    """Macro-averaged 4-gram F1 between hypothesis and reference segments.

    Segments where neither side has any 4-gram are skipped; segments
    where exactly one side has none contribute F = 0.
    """
    _check_corpora(hypotheses, references)
    scores = []
    for hyp, ref in zip(hypotheses, references):
        hyp_counts = _ngrams(hyp, MAX_ORDER)
        ref_counts = _ngrams(ref, MAX_ORDER)
        hyp_total = sum(hyp_counts.values())
        ref_total = sum(ref_counts.values())
        if hyp_total == 0 and ref_total == 0:
            continue
        if hyp_total == 0 or ref_total == 0:
            scores.append(0.0)
            continue
        overlap = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        precision = overlap / hyp_total
        recall = overlap / ref_total
        if precision + recall == 0:
            scores.append(0.0)
        else:
            scores.append(2 * precision * recall / (precision + recall))
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


def score_corpus(hypotheses, references) -> MetricReport:
    """Run all three scorers and bundle the result."""
    return MetricReport(
        bleu4=bleu4(hypotheses, references),
        nist4=nist4(hypotheses, references),
        rouge4_f=rouge4_f(hypotheses, references),
        segments=len(hypotheses),
    )
