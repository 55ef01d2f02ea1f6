"""Interpolated modified Kneser-Ney n-gram language models.

Counting pads each line with one sentence-start token and one terminal:
``a b`` at order 3 yields the trigrams (<s>, a, b) and (a, b, </s>), plus
every lower-order window.  Estimation follows the usual scheme:

  * highest order uses raw counts;
  * lower orders use continuation counts (distinct left extensions), except
    sentence-start patterns, which have no left extension and keep their
    raw counts;
  * each order carries three discounts D1, D2, D3+ from its count-of-count
    statistics: Y = n1/(n1 + 2*n2) and Dk = k - (k+1)*Y*n(k+1)/nk, clamped
    to [0, k], falling back to 0.5 when n1 or n2 is zero;
  * the discounted mass of each context is spread over the next lower
    order, down to a uniform 1/(V+1) share at the bottom, which is also the
    unknown token's share of the unigram interpolation mass.

Models serialize to the ARPA text format with fully interpolated
probabilities, so the standard backoff walk reproduces the interpolated
scores exactly.
"""
from __future__ import annotations

import enum
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

NEG_INF = float("-inf")

# log10 placeholder for the never-predicted sentence-start token
BOS_LOG10 = -99.0


class ArpaError(ValueError):
    """Malformed ARPA file; the message carries line numbers or the order."""


class OovPolicy(enum.Enum):
    SCORE_AS_UNK = "score_as_unk"
    EXCLUDE = "exclude"


@dataclass(frozen=True)
class NgramCounts:
    order: int
    counts: Mapping[tuple[str, ...], int]
    vocabulary: frozenset[str]
    count_of_counts: Mapping[int, Mapping[int, int]]


def _tokenize(line: str | Sequence[str]) -> list[str]:
    return line.split() if isinstance(line, str) else list(line)


def count_ngrams(corpus: Iterable[str | Sequence[str]], order: int) -> NgramCounts:
    """Count all 1..order grams over padded lines; blank lines are skipped."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    counts: Counter[tuple[str, ...]] = Counter()
    vocabulary: set[str] = set()
    nonempty = 0
    for line in corpus:
        tokens = _tokenize(line)
        if not tokens:
            continue
        nonempty += 1
        vocabulary.update(tokens)
        padded = [BOS] + tokens + [EOS]
        for m in range(1, order + 1):
            for i in range(len(padded) - m + 1):
                counts[tuple(padded[i : i + m])] += 1
    if not nonempty:
        raise ValueError("empty corpus: no non-blank lines")
    coc: dict[int, Counter[int]] = {m: Counter() for m in range(1, order + 1)}
    for gram, c in counts.items():
        coc[len(gram)][c] += 1
    return NgramCounts(order, dict(counts), frozenset(vocabulary), {m: dict(c) for m, c in coc.items()})


def estimate_discounts(counts: NgramCounts) -> dict[int, tuple[float, float, float]]:
    """Per-order (D1, D2, D3+) from the count-of-count statistics."""
    out = {}
    for order, coc in counts.count_of_counts.items():
        n = [coc.get(k, 0) for k in (1, 2, 3, 4)]
        if n[0] == 0 or n[1] == 0:
            out[order] = (0.5, 0.5, 0.5)
            continue
        y = n[0] / (n[0] + 2 * n[1])
        ds = []
        for k in (1, 2, 3):
            # empty bucket k: the formula's correction term vanishes
            d = k - (k + 1) * y * n[k] / n[k - 1] if n[k - 1] > 0 else float(k)
            ds.append(min(max(d, 0.0), float(k)))
        out[order] = tuple(ds)
    return out


@dataclass(frozen=True)
class KneserNeyModel:
    order: int
    probabilities: Mapping[tuple[str, ...], float]  # log10, fully interpolated
    backoffs: Mapping[tuple[str, ...], float]  # log10 per stored context
    words: frozenset[str]  # real words: no <s>, </s> or <unk>
    discounts: Mapping[int, tuple[float, float, float]] | None = None

    @property
    def vocabulary(self) -> frozenset[str]:
        return self.words | {EOS, UNK}

    def logprob(self, word: str, context: Sequence[str] = ()) -> float:
        """log10 p(word | context) via the backoff walk; unknown words
        score as the unknown token."""
        w = word if word in self.words or word == EOS else UNK
        ctx = tuple(context)[max(0, len(context) - (self.order - 1)) :]
        lp = 0.0
        while True:
            gram = ctx + (w,)
            if gram in self.probabilities:
                return lp + self.probabilities[gram]
            if not ctx:
                return lp + self.probabilities[(UNK,)]
            lp += self.backoffs.get(ctx, 0.0)
            ctx = ctx[1:]


def _bucket(value: int, d: tuple[float, float, float]) -> float:
    if value <= 0:
        return 0.0
    if value == 1:
        return d[0]
    if value == 2:
        return d[1]
    return d[2]


def train_kn(counts: NgramCounts) -> KneserNeyModel:
    """Estimate an interpolated modified Kneser-Ney model from counts."""
    n = counts.order
    if n < 2:
        raise ValueError(f"model order must be >= 2, got {n}")
    raw = counts.counts
    by_len: dict[int, list[tuple[str, ...]]] = defaultdict(list)
    for gram in raw:
        by_len[len(gram)].append(gram)
    if not by_len.get(n):
        raise ValueError(f"corpus has no {n}-grams; lower the order or add longer lines")
    discounts = estimate_discounts(counts)

    # continuation counts: distinct one-token left extensions
    cont: Counter[tuple[str, ...]] = Counter()
    for m in range(2, n + 1):
        for gram in by_len[m]:
            cont[gram[1:]] += 1

    prob: dict[tuple[str, ...], float] = {}  # linear while building
    bow: dict[tuple[str, ...], float] = {}

    # unigrams: continuation counts, normalized by the bigram type total,
    # interpolated with the uniform distribution over vocab + unknown
    entries = sorted(g for g in by_len[1] if g != (BOS,))
    d1 = discounts[1]
    total = sum(cont[g] for g in entries)
    gamma = sum(_bucket(cont[g], d1) for g in entries) / total
    uniform = 1.0 / (len(entries) + 1)
    for g in entries:
        prob[g] = (cont[g] - _bucket(cont[g], d1)) / total + gamma * uniform
    prob[(UNK,)] = gamma * uniform

    for m in range(2, n + 1):
        dm = discounts[m]
        top = m == n
        contexts: dict[tuple[str, ...], list[tuple[tuple[str, ...], int]]] = defaultdict(list)
        for gram in by_len[m]:
            value = raw[gram] if top or gram[0] == BOS else cont[gram]
            contexts[gram[:-1]].append((gram, value))
        for ctx, members in contexts.items():
            total = sum(v for _, v in members)
            gamma = sum(_bucket(v, dm) for _, v in members) / total
            for gram, value in members:
                prob[gram] = (value - _bucket(value, dm)) / total + gamma * prob[gram[1:]]
            bow[ctx] = gamma

    log_prob = {g: (math.log10(p) if p > 0 else NEG_INF) for g, p in prob.items()}
    log_prob[(BOS,)] = BOS_LOG10
    log_bow = {c: (math.log10(g) if g > 0 else NEG_INF) for c, g in bow.items()}
    return KneserNeyModel(
        order=n,
        probabilities=log_prob,
        backoffs=log_bow,
        words=counts.vocabulary,
        discounts=discounts,
    )


def _line_events(
    model: KneserNeyModel, tokens: Sequence[str]
) -> list[tuple[tuple[str, ...], str, bool]]:
    """(context, target, is_oov) for each token plus the terminal event."""
    mapped = [t if t in model.words else UNK for t in tokens]
    padded = [BOS] + mapped
    span = model.order - 1
    events = []
    for j, raw in enumerate(tokens):
        ctx = tuple(padded[max(0, j + 1 - span) : j + 1])
        events.append((ctx, mapped[j], raw != mapped[j]))
    events.append((tuple(padded[max(0, len(padded) - span) :]), EOS, False))
    return events


def score_sequence(model: KneserNeyModel, tokens: Sequence[str]) -> float:
    """Total log10 probability of a token sequence, terminal included."""
    return sum(model.logprob(t, ctx) for ctx, t, _ in _line_events(model, tokens))


@dataclass(frozen=True)
class EvalStats:
    perplexity: float
    log10_total: float
    token_count: int
    scored_tokens: int
    oov_tokens: int
    oov_rate: float


def perplexity(
    model: KneserNeyModel,
    test: Iterable[str | Sequence[str]],
    oov_policy: OovPolicy = OovPolicy.SCORE_AS_UNK,
) -> EvalStats:
    """Perplexity and OOV rate of a test text.

    Terminal events are always scored but never count as tokens or OOVs.
    Under EXCLUDE, out-of-vocabulary tokens are skipped instead of scored
    as the unknown token (they still shape later contexts).
    """
    log10_total = 0.0
    token_count = 0
    scored = 0
    oov = 0
    for line in test:
        tokens = _tokenize(line)
        if not tokens:
            continue
        token_count += len(tokens)
        for ctx, target, is_oov in _line_events(model, tokens):
            if is_oov:
                oov += 1
                if oov_policy is OovPolicy.EXCLUDE:
                    continue
            log10_total += model.logprob(target, ctx)
            scored += 1
    if token_count == 0:
        raise ValueError("empty test text")
    return EvalStats(
        perplexity=10.0 ** (-log10_total / scored),
        log10_total=log10_total,
        token_count=token_count,
        scored_tokens=scored,
        oov_tokens=oov,
        oov_rate=oov / token_count,
    )


@dataclass(frozen=True)
class StatsSummary:
    macro_perplexity: float
    pooled_perplexity: float
    macro_oov_rate: float
    pooled_oov_rate: float


def combine_stats(stats: Sequence[EvalStats]) -> StatsSummary:
    """Macro (mean of per-set figures) and pooled (merged counts) summaries."""
    if not stats:
        raise ValueError("no evaluation results to combine")
    scored = sum(s.scored_tokens for s in stats)
    tokens = sum(s.token_count for s in stats)
    return StatsSummary(
        macro_perplexity=sum(s.perplexity for s in stats) / len(stats),
        pooled_perplexity=10.0 ** (-sum(s.log10_total for s in stats) / scored),
        macro_oov_rate=sum(s.oov_rate for s in stats) / len(stats),
        pooled_oov_rate=sum(s.oov_tokens for s in stats) / tokens,
    )


def _format_log10(value: float) -> str:
    return "%.7f" % value


def write_arpa(model: KneserNeyModel) -> str:
    """Serialize to the ARPA text format (tab-separated, log10, 7 decimals)."""
    by_len: dict[int, list[tuple[str, ...]]] = defaultdict(list)
    for gram in model.probabilities:
        by_len[len(gram)].append(gram)
    lines = ["\\data\\"]
    for m in range(1, model.order + 1):
        lines.append(f"ngram {m}={len(by_len.get(m, ()))}")
    for m in range(1, model.order + 1):
        lines.append("")
        lines.append(f"\\{m}-grams:")
        for gram in sorted(by_len.get(m, ())):
            row = f"{_format_log10(model.probabilities[gram])}\t{' '.join(gram)}"
            if gram in model.backoffs:
                row += f"\t{_format_log10(model.backoffs[gram])}"
            lines.append(row)
    lines.extend(["", "\\end\\", ""])
    return "\n".join(lines)


def read_arpa(source: str | Path | IO[str]) -> KneserNeyModel:
    """Parse an ARPA file back into a scoring model.

    Declared section sizes must match the entries found; discount metadata
    is not part of the format and comes back as None.
    """
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()

    declared: dict[int, int] = {}
    probabilities: dict[tuple[str, ...], float] = {}
    backoffs: dict[tuple[str, ...], float] = {}
    section: int | None = None
    saw_data = saw_end = False
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        if line == "\\data\\":
            saw_data = True
            continue
        if line == "\\end\\":
            saw_end = True
            break
        if line.startswith("ngram "):
            try:
                spec, count = line[len("ngram ") :].split("=")
                declared[int(spec)] = int(count)
            except ValueError:
                raise ArpaError(f"line {lineno}: bad count declaration {line!r}") from None
            continue
        if line.startswith("\\") and line.endswith("-grams:"):
            try:
                section = int(line[1 : -len("-grams:")])
            except ValueError:
                raise ArpaError(f"line {lineno}: bad section header {line!r}") from None
            continue
        if section is None:
            raise ArpaError(f"line {lineno}: entry outside any n-gram section")
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ArpaError(f"line {lineno}: expected 2 or 3 tab-separated fields")
        gram = tuple(fields[1].split())
        if len(gram) != section:
            raise ArpaError(
                f"line {lineno}: {len(gram)}-gram {fields[1]!r} in the {section}-gram section"
            )
        try:
            probabilities[gram] = float(fields[0])
            if len(fields) == 3:
                backoffs[gram] = float(fields[2])
        except ValueError:
            raise ArpaError(f"line {lineno}: unparsable score in {line!r}") from None

    if not saw_data:
        raise ArpaError("missing \\data\\ header")
    if not saw_end:
        raise ArpaError("missing \\end\\ terminator")
    found: Counter[int] = Counter(len(g) for g in probabilities)
    for order, count in sorted(declared.items()):
        if found.get(order, 0) != count:
            raise ArpaError(
                f"declared {count} {order}-grams but found {found.get(order, 0)}"
            )
    for order in found:
        if order not in declared:
            raise ArpaError(f"undeclared {order}-gram section")
    words = frozenset(g[0] for g in probabilities if len(g) == 1) - {BOS, EOS, UNK}
    return KneserNeyModel(
        order=max(declared) if declared else 1,
        probabilities=probabilities,
        backoffs=backoffs,
        words=words,
        discounts=None,
    )


@dataclass(frozen=True)
class Hypothesis:
    utterance_id: str
    rank: int
    acoustic_score: float
    text: str


@dataclass(frozen=True)
class RescoredHypothesis:
    hypothesis: Hypothesis
    lm_log10: float
    combined: float


NBEST_COLUMNS = ("utterance_id", "rank", "acoustic_score", "hypothesis")


def load_nbest(source: str | Path | IO[str]) -> dict[str, tuple[Hypothesis, ...]]:
    """Load an n-best TSV keyed by utterance, each list sorted by rank."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or tuple(lines[0].split("\t")) != NBEST_COLUMNS:
        raise ValueError(f"bad n-best header; expected {NBEST_COLUMNS!r}")
    seen: dict[tuple[str, int], int] = {}
    grouped: dict[str, list[Hypothesis]] = defaultdict(list)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError(f"line {lineno}: expected 4 columns, got {len(fields)}")
        utt_id, rank_s, score_s, hyp = fields
        try:
            rank, score = int(rank_s), float(score_s)
        except ValueError:
            raise ValueError(f"line {lineno}: bad rank or score") from None
        key = (utt_id, rank)
        if key in seen:
            raise ValueError(
                f"duplicate rank {rank} for {utt_id!r} on lines {seen[key]} and {lineno}"
            )
        seen[key] = lineno
        grouped[utt_id].append(Hypothesis(utt_id, rank, score, hyp))
    return {u: tuple(sorted(hs, key=lambda h: h.rank)) for u, hs in grouped.items()}


def rescore_nbest(
    model: KneserNeyModel, hypotheses: Sequence[Hypothesis], lm_weight: float
) -> tuple[RescoredHypothesis, ...]:
    """Re-rank by acoustic + lm_weight * LM log10 score; ties keep input order."""
    if not hypotheses:
        raise ValueError("empty hypothesis list")
    rescored = []
    for h in hypotheses:
        lm = score_sequence(model, h.text.split())
        rescored.append(RescoredHypothesis(h, lm, h.acoustic_score + lm_weight * lm))
    return tuple(sorted(rescored, key=lambda r: -r.combined))
