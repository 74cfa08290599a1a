"""Self-contained machine-translation metrics: BLEU-1..4, METEOR, ROUGE-L.

All scorers take token lists (single reference per candidate) and return
values in [0, 1]. BLEU is corpus-level (clipped counts pooled over the whole
corpus, brevity penalty on pooled lengths); METEOR and ROUGE-L are computed
per pair and averaged over the corpus.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, asdict

from .tokens import normalize

ROUGE_BETA = 1.2


@dataclass(frozen=True)
class MetricReport:
    bleu_1: float
    bleu_2: float
    bleu_3: float
    bleu_4: float
    meteor: float
    rouge_l: float
    n_examples: int

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def columns(self) -> tuple[str, ...]:
        return ("bleu_1", "bleu_2", "bleu_3", "bleu_4", "meteor", "rouge_l")

    def values(self) -> tuple[float, ...]:
        return (self.bleu_1, self.bleu_2, self.bleu_3, self.bleu_4, self.meteor, self.rouge_l)


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(candidates: list[list[str]], references: list[list[str]], n: int) -> float:
    """Corpus BLEU with modified n-gram precision and brevity penalty.

    Clipped matches and totals are summed over the corpus before taking the
    geometric mean of p_1..p_n; the score is 0 when any pooled p_k is 0.
    No smoothing (see bleu_sentence_smoothed for the diagnostic variant).
    """
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    if len(candidates) != len(references):
        raise ValueError("candidate/reference lists differ in length")
    if not candidates:
        raise ValueError("empty corpus")

    cand_len = sum(len(c) for c in candidates)
    ref_len = sum(len(r) for r in references)
    if cand_len == 0:
        warnings.warn("all candidates empty; BLEU is 0")
        return 0.0

    log_p_sum = 0.0
    for k in range(1, n + 1):
        matched = 0
        total = 0
        for cand, ref in zip(candidates, references):
            cand_counts = _ngram_counts(cand, k)
            ref_counts = _ngram_counts(ref, k)
            matched += sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
            total += max(0, len(cand) - k + 1)
        if matched == 0 or total == 0:
            return 0.0
        log_p_sum += math.log(matched / total)

    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_p_sum / n)


def bleu_sentence_smoothed(candidate: list[str], reference: list[str], n: int = 4) -> float:
    """Sentence-level diagnostic BLEU with add-one smoothing on orders >= 2.

    Non-canonical: useful for inspecting single predictions, never used for
    the corpus reports.
    """
    if not candidate:
        return 0.0
    log_p_sum = 0.0
    for k in range(1, n + 1):
        cand_counts = _ngram_counts(candidate, k)
        ref_counts = _ngram_counts(reference, k)
        matched = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        total = max(0, len(candidate) - k + 1)
        if k >= 2:
            matched += 1
            total += 1
        if matched == 0 or total == 0:
            return 0.0
        log_p_sum += math.log(matched / total)
    bp = 1.0 if len(candidate) > len(reference) else math.exp(1.0 - len(reference) / max(1, len(candidate)))
    return bp * math.exp(log_p_sum / n)


def _lcs_length(a: list[str], b: list[str]) -> int:
    # One-row DP; O(len(a) * len(b)).
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: list[str], reference: list[str], beta: float = ROUGE_BETA) -> float:
    """LCS F-measure for one pair; beta > 1 leans toward recall."""
    if not candidate or not reference:
        warnings.warn("empty side in ROUGE-L; scoring 0")
        return 0.0
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    recall = lcs / len(reference)
    precision = lcs / len(candidate)
    b2 = beta * beta
    return (1 + b2) * recall * precision / (recall + b2 * precision)


def _align_unigrams(candidate: list[str], reference: list[str]) -> list[tuple[int, int]]:
    """Leftmost maximal one-to-one exact unigram alignment (cand idx, ref idx)."""
    used = [False] * len(reference)
    pairs: list[tuple[int, int]] = []
    for ci, w in enumerate(candidate):
        for ri, rw in enumerate(reference):
            if not used[ri] and rw == w:
                used[ri] = True
                pairs.append((ci, ri))
                break
    return pairs


def meteor(candidate: list[str], reference: list[str]) -> float:
    """Exact-match METEOR: harmonic mean weighted 9:1 toward recall, with a
    fragmentation penalty of 0.5 * (chunks / matches)^3."""
    if not candidate or not reference:
        warnings.warn("empty side in METEOR; scoring 0")
        return 0.0
    pairs = _align_unigrams(candidate, reference)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(candidate)
    recall = m / len(reference)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    chunks = 1
    for (pc, pr), (c, r) in zip(pairs, pairs[1:]):
        if c != pc + 1 or r != pr + 1:
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)


def evaluate_corpus(
    outputs: list[str], references: list[str], tokenize=normalize
) -> MetricReport:
    """Tokenize both sides with the shared normalization and score everything."""
    if len(outputs) != len(references):
        raise ValueError(
            f"got {len(outputs)} outputs but {len(references)} references"
        )
    cand_tokens = [tokenize(t) for t in outputs]
    ref_tokens = [tokenize(t) for t in references]
    bleus = [bleu_n(cand_tokens, ref_tokens, k) for k in (1, 2, 3, 4)]
    meteor_mean = sum(meteor(c, r) for c, r in zip(cand_tokens, ref_tokens)) / len(outputs)
    rouge_mean = sum(rouge_l(c, r) for c, r in zip(cand_tokens, ref_tokens)) / len(outputs)
    return MetricReport(
        bleu_1=bleus[0],
        bleu_2=bleus[1],
        bleu_3=bleus[2],
        bleu_4=bleus[3],
        meteor=meteor_mean,
        rouge_l=rouge_mean,
        n_examples=len(outputs),
    )
